# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.
#
# This source code is licensed under the BSD-style license found in the
# LICENSE file in the root directory of this source tree.

"""
Errors
======

Exception types raised by torchselector.

Protocol verdicts (test rejections, sum-check failures, trust decisions) are
never raised; they are returned as values. The exceptions below cover misuse
of the API, budget violations and oracles that fail to answer.
"""

import traceback
from typing import Optional


class SelectorError(Exception):
    """
    Base class for every error raised by torchselector.
    """


class DivisionByZero(SelectorError, ZeroDivisionError):
    """
    Raised when inverting the zero element of a prime field.
    """


class FieldMismatch(SelectorError, TypeError):
    """
    Raised when combining elements or polynomials of two different fields.
    """


class DegenerateInterpolation(SelectorError, ValueError):
    """
    Raised when interpolation points share an x-coordinate.
    """


class ArityError(SelectorError, ValueError):
    """
    Raised when an argument has the wrong length, dimension or count.
    """


class ConfigError(SelectorError, ValueError):
    """
    Raised when a configuration (field modulus, trial config, advice demo
    config, instance file) is malformed or violates its invariants.
    """


class InstanceTooLarge(SelectorError):
    """
    Raised when brute force is requested beyond the desk-scale budget.
    """


class SelfReductionViolation(SelectorError):
    """
    Raised when a downward self-reduction issues a query that is not strictly
    smaller than its input.
    """


class AdversaryConstructionError(SelectorError, ValueError):
    """
    Raised when an adversary is requested with invalid parameters.
    """


class OracleFailure(SelectorError):
    """
    Raised when an oracle does not answer a query.

    The original exception and its formatted stack trace are kept so the
    failure can be reported from the selector session that observed it.

    Args:
        query: the query the oracle failed to answer
        e: the exception raised by the oracle
    """

    def __init__(self, query: object, e: Optional[BaseException] = None) -> None:
        self.query = query
        self.original_exception = e
        self.stack_trace: str = traceback.format_exc() if e is not None else ""
        msg = f"oracle failed to answer {query!r}"
        if e is not None:
            msg += f": {e}\n{self.stack_trace}"
        super().__init__(msg)
