# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.
#
# This source code is licensed under the BSD-style license found in the
# LICENSE file in the root directory of this source tree.

from torchselector.adversaries import AdversaryKind, make_adversary
from torchselector.field import FieldElement, PrimeField, Rng
from torchselector.instance import SuccinctInstance, brute_force_VPhi, honest_oracle
from torchselector.selector import (
    SelectorOutcome,
    SelectorParams,
    select_det_dsr,
    select_from_checker,
    select_nonadaptive_lexmax,
    select_prob_expnp,
    tournament,
)

__all__ = (
    "AdversaryKind",
    "FieldElement",
    "PrimeField",
    "Rng",
    "SelectorOutcome",
    "SelectorParams",
    "SuccinctInstance",
    "brute_force_VPhi",
    "honest_oracle",
    "make_adversary",
    "select_det_dsr",
    "select_from_checker",
    "select_nonadaptive_lexmax",
    "select_prob_expnp",
    "tournament",
)
