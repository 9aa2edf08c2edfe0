# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.
#
# This source code is licensed under the BSD-style license found in the
# LICENSE file in the root directory of this source tree.

"""
Adversaries
===========

Dishonest oracle strategies that exercise every rejection path of the
selectors.

Every adversary answers every query kind and is returned wrapped in a
:class:`~torchselector.oracle.MemoizedOracle`, so its answers are consistent
within a session. Point values that must look random (non-multilinear answers,
sparse corruption) are derived by hashing the point with a per-adversary salt,
which keeps them independent of query order.
"""

import hashlib
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Set, Tuple, Union

from torchselector.errors import AdversaryConstructionError, ArityError
from torchselector.field import FieldElement, PrimeField, Rng, UniPoly
from torchselector.instance import (
    AssignmentTable,
    SuccinctInstance,
    brute_force_VPhi,
    satisfying_tables,
)
from torchselector.lowdegree import (
    CallablePointFunction,
    MleTable,
    PointFunction,
    TablePointFunction,
    mle_eval,
)
from torchselector.oracle import (
    ConstantOracle,
    ConstraintKind,
    DecisionBit,
    LexmaxQuery,
    MemoizedOracle,
    MlePoint,
    Oracle,
    SumcheckCoeffs,
)
from torchselector.sumcheck import HonestProver, honest_round_poly

logger: logging.Logger = logging.getLogger(__name__)

MAX_CORRUPTION: float = 0.1


class AdversaryKind(Enum):
    FLIP_AT_TARGET = "flip_at_target"
    SMALLER_SATISFYING = "smaller_satisfying"
    LARGER_NON_SATISFYING = "larger_non_satisfying"
    NON_MULTILINEAR = "non_multilinear"
    NON_BOOLEAN = "non_boolean"
    SPARSE_CORRUPTION = "sparse_corruption"
    CHEATING_PROVER = "cheating_prover"
    ALWAYS_ZERO = "always_zero"
    ALWAYS_ONE = "always_one"


@dataclass(frozen=True)
class AdversarySpec:
    """
    An adversary kind with its parameters.

    Args:
        kind: the strategy
        delta: corrupted fraction for ``SPARSE_CORRUPTION``
    """

    kind: AdversaryKind
    delta: float = 0.01

    def label(self) -> str:
        if self.kind == AdversaryKind.SPARSE_CORRUPTION:
            return f"{self.kind.value}:{self.delta:g}"
        return self.kind.value


def parse_adversary(text: str) -> AdversarySpec:
    """
    Parses ``kind`` or ``sparse_corruption:<delta>``.
    """
    name, _, param = text.strip().partition(":")
    try:
        kind = AdversaryKind(name)
    except ValueError:
        valid = ", ".join(k.value for k in AdversaryKind)
        raise AdversaryConstructionError(f"unknown adversary {name!r}, expected one of {valid}")
    if param:
        if kind != AdversaryKind.SPARSE_CORRUPTION:
            raise AdversaryConstructionError(f"{name} takes no parameter")
        try:
            return AdversarySpec(kind, float(param))
        except ValueError as e:
            raise AdversaryConstructionError(f"bad delta {param!r}") from e
    return AdversarySpec(kind)


def _hash_int(salt: int, label: str, x: Sequence[int]) -> int:
    h = hashlib.blake2b(digest_size=16)
    h.update(salt.to_bytes(8, "little"))
    h.update(label.encode())
    h.update(",".join(str(v) for v in x).encode())
    return int.from_bytes(h.digest(), "little")


def hashed_function(field: PrimeField, n: int, salt: int) -> PointFunction:
    """
    A fixed pseudorandom function ``F**n -> F``; not multilinear with
    overwhelming probability.
    """
    return CallablePointFunction(
        field, n, lambda x: _hash_int(salt, "value", x) % field.p
    )


class GreedyCheatingProver:
    """
    Sum-check prover for a false claim.

    Each round it takes the exact round polynomial of its own assignment and
    shifts it by the constant that makes ``g_i(0) + g_i(1)`` equal the claim
    carried over from the previous round (0 in round 1). Optionally the first
    round whose bound allows it is bent by ``c * x * (x - 1)``, which keeps
    that round consistent while committing to false values afterwards.

    Args:
        base: exact prover for the adversary's own assignment
        field: the field
        perturb_salt: when set, perturb as described above
    """

    def __init__(
        self, base: HonestProver, field: PrimeField, perturb_salt: Optional[int] = None
    ) -> None:
        self.base = base
        self.field = field
        self.perturb_salt = perturb_salt
        self._cache: Dict[Tuple[Any, ...], UniPoly] = {}

    def _perturbation(
        self, kind: ConstraintKind, t: Sequence[int], round: int
    ) -> Optional[UniPoly]:
        if self.perturb_salt is None:
            return None
        c = self.base.constraint(kind)
        first = next((i + 1 for i, b in enumerate(c.round_bounds) if b >= 2), None)
        if round != first:
            return None
        p = self.field.p
        coef = 1 + _hash_int(self.perturb_salt, kind.value, list(t)) % (p - 1)
        # coef * (x^2 - x)
        return UniPoly(self.field, (0, -coef, coef))

    def round_poly(
        self,
        kind: ConstraintKind,
        t: Sequence[int],
        r_prefix: Sequence[int],
        round: int,
    ) -> UniPoly:
        key = (kind, tuple(t), tuple(r_prefix), round)
        if key in self._cache:
            return self._cache[key]
        p = self.field.p
        honest = honest_round_poly(self.base.constraint(kind), t, r_prefix, round)
        if round == 1:
            target = 0
        else:
            prev = self.round_poly(kind, t, r_prefix[:-1], round - 1)
            target = prev(r_prefix[-1])
        shift = (target - honest(0) - honest(1)) * self.field.inv(2) % p
        poly = honest + shift
        bend = self._perturbation(kind, t, round)
        if bend is not None:
            poly = poly + bend
        self._cache[key] = poly
        return poly


class ClaimOracle(Oracle):
    """
    Oracle committed to a claimed table, with configurable point answers and
    sum-check prover.

    Args:
        inst: the instance
        decision: table answering :class:`DecisionBit` queries
        points: function answering :class:`MlePoint` queries
        prover: prover answering :class:`SumcheckCoeffs` queries
    """

    def __init__(
        self,
        inst: SuccinctInstance,
        decision: AssignmentTable,
        points: PointFunction,
        prover: Any,
    ) -> None:
        self.inst = inst
        self.decision = decision
        self.points = points
        self.prover = prover

    def answer(self, query: object) -> Any:
        if isinstance(query, DecisionBit):
            return self.decision[query.b]
        if isinstance(query, MlePoint):
            return FieldElement(self.points.evaluate(list(query.x)), self.inst.field)
        if isinstance(query, SumcheckCoeffs):
            return self.prover.round_poly(
                query.target, query.t, query.r_prefix, query.round
            )
        raise TypeError(f"unsupported query {query!r}")


def _claim_for_table(
    inst: SuccinctInstance, values: Sequence[int], decision: AssignmentTable, greedy: bool
) -> ClaimOracle:
    mle = MleTable(inst.field, tuple(values))
    fn = TablePointFunction(mle)
    base = HonestProver(inst, fn)
    prover = GreedyCheatingProver(base, inst.field) if greedy else base
    return ClaimOracle(inst, decision, fn, prover)


def _flip(inst: SuccinctInstance, V: AssignmentTable) -> ClaimOracle:
    table = V.flipped(inst.b_in_index)
    return _claim_for_table(inst, table.values, table, greedy=False)


def _pick(rng: Rng, options: List[AssignmentTable]) -> AssignmentTable:
    return options[rng.randrange(len(options))]


def _smaller_satisfying(
    inst: SuccinctInstance, V: AssignmentTable, rng: Rng, notes: List[str]
) -> Oracle:
    sats = satisfying_tables(inst)
    smaller = [T for T in sats if T.as_int() < V.as_int()]
    if len(sats) < 2 or not smaller:
        notes.append(
            f"smaller_satisfying: {len(sats)} satisfying tables, fell back to flip_at_target"
        )
        return _flip(inst, V)
    target = inst.b_in_index
    preferred = [T for T in smaller if T[target] != V[target]]
    table = _pick(rng, preferred or smaller)
    return _claim_for_table(inst, table.values, table, greedy=False)


def _larger_non_satisfying(
    inst: SuccinctInstance, V: AssignmentTable, rng: Rng, notes: List[str]
) -> Oracle:
    N = inst.table_size
    target = inst.b_in_index
    zeros = [j for j in range(N) if V[j] == 0]
    if not zeros:
        notes.append("larger_non_satisfying: V is all ones, fell back to flip_at_target")
        return _flip(inst, V)
    if V[target] == 0:
        pivot = target
    else:
        before = [j for j in zeros if j < target]
        if before:
            pivot = before[rng.randrange(len(before))]
        else:
            notes.append("larger_non_satisfying: cannot differ at b_in, differs later")
            pivot = zeros[rng.randrange(len(zeros))]
    values = list(V.values[:pivot]) + [1]
    values += [rng.rand_bit() for _ in range(pivot + 1, N)]
    if pivot < target and V[target] == 1:
        values[target] = 0
    table = AssignmentTable(tuple(values))
    assert table.as_int() > V.as_int(), "claimed table must be larger"
    return _claim_for_table(inst, table.values, table, greedy=True)


def _non_boolean(inst: SuccinctInstance, V: AssignmentTable, rng: Rng) -> Oracle:
    target = inst.b_in_index
    p = inst.field.p
    values = list(V.values)
    values[target] = 2 + rng.randrange(p - 2)
    return _claim_for_table(inst, values, V.flipped(target), greedy=True)


def _non_multilinear(inst: SuccinctInstance, V: AssignmentTable, rng: Rng) -> Oracle:
    table = V.flipped(inst.b_in_index)
    fn = hashed_function(inst.field, inst.n, rng.randrange(2**63))
    prover = GreedyCheatingProver(
        HonestProver(inst, TablePointFunction(table.mle(inst.field))), inst.field
    )
    return ClaimOracle(inst, table, fn, prover)


def _sparse_corruption(
    inst: SuccinctInstance, V: AssignmentTable, rng: Rng, delta: float
) -> Oracle:
    field = inst.field
    mle = V.mle(field)
    salt = rng.randrange(2**63)

    def corrupted(x: Tuple[int, ...]) -> int:
        honest = int(mle_eval(mle, x))
        if _hash_int(salt, "mask", x) % 2**64 < delta * 2**64:
            noise = 1 + _hash_int(salt, "noise", x) % (field.p - 1)
            return (honest + noise) % field.p
        return honest

    fn = CallablePointFunction(field, inst.n, corrupted)
    return ClaimOracle(inst, V, fn, HonestProver(inst, TablePointFunction(mle)))


def _cheating_prover(inst: SuccinctInstance, V: AssignmentTable, rng: Rng) -> Oracle:
    fn = TablePointFunction(V.mle(inst.field))
    prover = GreedyCheatingProver(
        HonestProver(inst, fn), inst.field, perturb_salt=rng.randrange(2**63)
    )
    return ClaimOracle(inst, V, fn, prover)


def make_adversary(
    kind: Union[AdversaryKind, AdversarySpec],
    inst: SuccinctInstance,
    rng: Rng,
    honest_table: Optional[AssignmentTable] = None,
) -> MemoizedOracle:
    """
    Builds a dishonest oracle for ``inst``.

    Args:
        kind: the strategy, optionally with parameters
        inst: the instance
        rng: randomness for the construction
        honest_table: precomputed ``V_Phi``, computed if omitted
    """
    spec = kind if isinstance(kind, AdversarySpec) else AdversarySpec(kind)
    k = spec.kind
    notes: List[str] = []
    if k == AdversaryKind.ALWAYS_ZERO:
        return MemoizedOracle(ConstantOracle(0), name=spec.label())
    if k == AdversaryKind.ALWAYS_ONE:
        return MemoizedOracle(ConstantOracle(1), name=spec.label())
    if k == AdversaryKind.SPARSE_CORRUPTION and not 0 < spec.delta <= MAX_CORRUPTION:
        raise AdversaryConstructionError(
            f"delta must be in (0, {MAX_CORRUPTION}], got {spec.delta}"
        )

    V = honest_table if honest_table is not None else brute_force_VPhi(inst)
    if k == AdversaryKind.FLIP_AT_TARGET:
        inner: Oracle = _flip(inst, V)
    elif k == AdversaryKind.SMALLER_SATISFYING:
        inner = _smaller_satisfying(inst, V, rng, notes)
    elif k == AdversaryKind.LARGER_NON_SATISFYING:
        inner = _larger_non_satisfying(inst, V, rng, notes)
    elif k == AdversaryKind.NON_MULTILINEAR:
        inner = _non_multilinear(inst, V, rng)
    elif k == AdversaryKind.NON_BOOLEAN:
        inner = _non_boolean(inst, V, rng)
    elif k == AdversaryKind.SPARSE_CORRUPTION:
        inner = _sparse_corruption(inst, V, rng, spec.delta)
    elif k == AdversaryKind.CHEATING_PROVER:
        inner = _cheating_prover(inst, V, rng)
    else:
        raise AdversaryConstructionError(f"unhandled adversary {k}")
    for note in notes:
        logger.info(note)
    return MemoizedOracle(inner, name=spec.label(), notes=notes)


class LyingOracle(Oracle):
    """
    Honest except on a set of queries, where the bit answer is negated.

    Args:
        honest: the honest oracle
        lies: queries to lie on
    """

    def __init__(self, honest: Oracle, lies: Set[object]) -> None:
        self.honest = honest
        self.lies = set(lies)

    def answer(self, query: object) -> Any:
        ans = self.honest.answer(query)
        if query in self.lies:
            return 1 - int(ans)
        return ans


class ClaimedAssignmentOracle(Oracle):
    """
    Answers lex-max SAT bit queries from a fixed claimed assignment, and
    honestly from ``fallback`` for formulas of other arity.

    Args:
        claim: the claimed assignment
        fallback: oracle for queries the claim does not cover
    """

    def __init__(self, claim: Sequence[int], fallback: Optional[Oracle] = None) -> None:
        self.claim = tuple(int(b) for b in claim)
        self.fallback = fallback

    def answer(self, query: object) -> Any:
        if not isinstance(query, LexmaxQuery):
            raise TypeError(f"unsupported query {query!r}")
        if query.phi.num_vars == len(self.claim):
            return self.claim[query.j - 1]
        if self.fallback is None:
            raise ArityError(
                f"claim of length {len(self.claim)} for {query.phi.num_vars} variables"
            )
        return self.fallback.answer(query)


def lie_at(honest: Oracle, queries: Sequence[object]) -> MemoizedOracle:
    return MemoizedOracle(LyingOracle(honest, set(queries)), name="single_lie")


def constant_oracle(value: int) -> MemoizedOracle:
    return MemoizedOracle(ConstantOracle(value), name=f"always_{value}")
