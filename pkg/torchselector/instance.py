# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.
#
# This source code is licensed under the BSD-style license found in the
# LICENSE file in the root directory of this source tree.

"""
Instance
========

Succinct instances of the lexicographically maximum oracle-3-satisfying
assignment problem, their brute force ground truth and the honest oracle.

An instance ``(m, n, Phi, b_in)`` asks for bit ``b_in`` of the greatest
assignment table ``X: {0,1}^n -> {0,1}`` such that

    Phi(y, b1, b2, b3, X(b1), X(b2), X(b3)) = 1   for all y, b1, b2, b3

Tables are read as ``2**n``-bit integers with ``b = 0...0`` most significant.
The formula's inputs are laid out as ``y`` (``m`` slots), ``b1``, ``b2``,
``b3`` (``n`` slots each) and then the three table values.

Brute force runs on torch tensors: the truth table of ``Phi`` is reduced over
``y`` to an ``allowed[b1, b2, b3, X1 X2 X3]`` tensor once, and candidate
tables are checked against it in chunks.
"""

import json
import logging
from dataclasses import dataclass, field as dataclass_field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import torch

from torchselector.boolean import (
    Const,
    Formula,
    Node,
    Not,
    Var,
    bits_to_index,
    conj,
    disj,
    formula_from_dict,
    formula_to_dict,
    index_to_bits,
    lexmax_sat,
    literal,
    random_formula,
    satisfiable,
    truth_table,
)
from torchselector.errors import ArityError, ConfigError, InstanceTooLarge
from torchselector.field import DEFAULT_MODULUS, PrimeField, Rng
from torchselector.lowdegree import MleTable, TablePointFunction, mle_eval
from torchselector.oracle import (
    DecisionBit,
    LanguageOracle,
    LexmaxQuery,
    MemoizedOracle,
    Membership,
    MlePoint,
    Oracle,
    SumcheckCoeffs,
)
from torchselector.sumcheck import HonestProver

logger: logging.Logger = logging.getLogger(__name__)

MAX_N: int = 4
MAX_CLAUSE_BITS: int = 18
_TABLE_CHUNK: int = 256


@dataclass(frozen=True)
class SuccinctInstance:
    """
    One lexicographically maximum oracle-3-satisfying assignment problem.

    Args:
        m: width of the free variable block ``y``
        n: width of the assignment index
        phi: formula over ``m + 3n + 3`` slots
        b_in: the queried index, ``n`` bits
        field: the field used by the protocols
    """

    m: int
    n: int
    phi: Formula
    b_in: Tuple[int, ...]
    field: PrimeField = dataclass_field(default_factory=PrimeField)

    def __post_init__(self) -> None:
        object.__setattr__(self, "b_in", tuple(int(b) for b in self.b_in))
        if self.n < 1 or self.m < 0:
            raise ArityError(f"need n >= 1 and m >= 0, got n={self.n} m={self.m}")
        if self.phi.num_vars != self.m + 3 * self.n + 3:
            raise ArityError(
                f"phi has {self.phi.num_vars} slots, expected m + 3n + 3 = {self.m + 3 * self.n + 3}"
            )
        if len(self.b_in) != self.n or any(b not in (0, 1) for b in self.b_in):
            raise ArityError(f"b_in must be {self.n} bits, got {self.b_in}")

    @property
    def clause_bits(self) -> int:
        return self.m + 3 * self.n

    @property
    def table_size(self) -> int:
        return 2**self.n

    @property
    def b_in_index(self) -> int:
        return bits_to_index(self.b_in)

    def x_slot(self, k: int) -> int:
        return self.m + 3 * self.n + k

    def b_slot(self, k: int, i: int) -> int:
        return self.m + k * self.n + i

    def check_budget(self) -> None:
        if self.n > MAX_N or self.clause_bits > MAX_CLAUSE_BITS:
            raise InstanceTooLarge(
                f"instance n={self.n} m={self.m} exceeds budget n <= {MAX_N}, m + 3n <= {MAX_CLAUSE_BITS}"
            )

    def with_b_in(self, b_in: Sequence[int]) -> "SuccinctInstance":
        return SuccinctInstance(self.m, self.n, self.phi, tuple(b_in), self.field)


@dataclass(frozen=True)
class AssignmentTable:
    """
    An assignment ``X: {0,1}^n -> {0,1}`` stored as ``2**n`` bits, indexed by
    hypercube point read as an integer.

    Args:
        values: the bits
    """

    values: Tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        size = len(self.values)
        if size == 0 or size & (size - 1):
            raise ArityError(f"table length {size} is not a power of two")

    @classmethod
    def from_int(cls, value: int, n: int) -> "AssignmentTable":
        return cls(index_to_bits(value, 2**n))

    @classmethod
    def zeros(cls, n: int) -> "AssignmentTable":
        return cls((0,) * 2**n)

    @property
    def n(self) -> int:
        return len(self.values).bit_length() - 1

    def as_int(self) -> int:
        return bits_to_index(self.values)

    def __getitem__(self, b) -> int:
        if isinstance(b, int):
            return self.values[b]
        return self.values[bits_to_index(b)]

    def __len__(self) -> int:
        return len(self.values)

    def mle(self, field: PrimeField) -> MleTable:
        return MleTable(field, self.values)

    def flipped(self, index: int) -> "AssignmentTable":
        values = list(self.values)
        values[index] = 1 - values[index]
        return AssignmentTable(tuple(values))

    def bitstring(self) -> str:
        return "".join(str(v) for v in self.values)


def _allowed(inst: SuccinctInstance) -> torch.Tensor:
    """
    ``allowed[b1, b2, b3, 4 X1 + 2 X2 + X3]`` is true iff the formula holds for
    every ``y``.
    """
    inst.check_budget()
    N = inst.table_size
    tt = truth_table(inst.phi).reshape(2**inst.m, N, N, N, 8)
    return tt.all(dim=0)


def _triple_index(tables: torch.Tensor) -> torch.Tensor:
    # tables: (C, N) int64 bits -> (C, N, N, N) values of 4 X(b1) + 2 X(b2) + X(b3)
    return (
        tables[:, :, None, None] * 4 + tables[:, None, :, None] * 2 + tables[:, None, None, :]
    )


def _satisfied(allowed: torch.Tensor, tables: torch.Tensor) -> torch.Tensor:
    N = allowed.shape[0]
    flat = allowed.reshape(-1)
    base = torch.arange(N**3, dtype=torch.int64).reshape(N, N, N) * 8
    idx = base.unsqueeze(0) + _triple_index(tables)
    return flat[idx].reshape(tables.shape[0], -1).all(dim=1)


def _tables_desc(N: int, start: int, count: int) -> torch.Tensor:
    values = torch.arange(start, start - count, -1, dtype=torch.int64)
    shifts = torch.arange(N - 1, -1, -1, dtype=torch.int64)
    return (values[:, None] >> shifts[None, :]) & 1


def eval_F_Phi(inst: SuccinctInstance, X: AssignmentTable) -> int:
    """
    1 iff ``X`` satisfies the instance formula for every ``(y, b1, b2, b3)``.
    """
    if len(X) != inst.table_size:
        raise ArityError(f"table of length {len(X)} for n={inst.n}")
    allowed = _allowed(inst)
    tables = torch.tensor([X.values], dtype=torch.int64)
    return int(_satisfied(allowed, tables)[0])


def _scan(inst: SuccinctInstance, first_only: bool) -> List[AssignmentTable]:
    allowed = _allowed(inst)
    N = inst.table_size
    top = 2**N - 1
    found: List[AssignmentTable] = []
    start = top
    while start >= 0:
        count = min(_TABLE_CHUNK, start + 1)
        tables = _tables_desc(N, start, count)
        ok = _satisfied(allowed, tables)
        for row in torch.nonzero(ok).flatten().tolist():
            found.append(AssignmentTable(tuple(tables[row].tolist())))
            if first_only:
                return found
        start -= count
    return found


def brute_force_VPhi(inst: SuccinctInstance) -> AssignmentTable:
    """
    The lexicographically greatest satisfying table, or all zeros if none
    exists.
    """
    found = _scan(inst, first_only=True)
    if not found:
        return AssignmentTable.zeros(inst.n)
    return found[0]


def satisfying_tables(inst: SuccinctInstance) -> List[AssignmentTable]:
    """
    Every satisfying table, in decreasing lexicographic order.
    """
    return _scan(inst, first_only=False)


class TableOracle(Oracle):
    """
    Answers every query kind consistently with one assignment table: decision
    bits from the table, points from its multilinear extension and sum-check
    rounds from the exact round polynomials of that extension.

    Args:
        inst: the instance
        table: the table to answer from
    """

    def __init__(self, inst: SuccinctInstance, table: AssignmentTable) -> None:
        if len(table) != inst.table_size:
            raise ArityError(f"table of length {len(table)} for n={inst.n}")
        self.inst = inst
        self.table = table
        self.mle: MleTable = table.mle(inst.field)
        self.prover = HonestProver(inst, TablePointFunction(self.mle))

    def answer(self, query: object) -> Any:
        if isinstance(query, DecisionBit):
            return self.table[query.b]
        if isinstance(query, MlePoint):
            return mle_eval(self.mle, query.x)
        if isinstance(query, SumcheckCoeffs):
            return self.prover.round_poly(
                query.target, query.t, query.r_prefix, query.round
            )
        raise TypeError(f"unsupported query {query!r}")


class HonestOracle(TableOracle):
    """
    The honest oracle: a :class:`TableOracle` over the brute force ``V_Phi``,
    computed once on construction.

    Args:
        inst: the instance
        table: a precomputed ``V_Phi``, computed if omitted
    """

    def __init__(
        self, inst: SuccinctInstance, table: Optional[AssignmentTable] = None
    ) -> None:
        super().__init__(inst, table if table is not None else brute_force_VPhi(inst))


def honest_oracle(
    inst: SuccinctInstance, table: Optional[AssignmentTable] = None
) -> MemoizedOracle:
    """
    A session-consistent honest oracle for ``inst``.
    """
    return MemoizedOracle(HonestOracle(inst, table), name="honest")


class LexmaxOracle(Oracle):
    """
    Honest oracle for lex-max SAT bit queries, caching one brute force solve
    per formula.
    """

    def __init__(self) -> None:
        self._cache: Dict[Formula, Tuple[int, ...]] = {}

    def answer(self, query: object) -> Any:
        if not isinstance(query, LexmaxQuery):
            raise TypeError(f"unsupported query {query!r}")
        if query.phi not in self._cache:
            self._cache[query.phi] = lexmax_sat(query.phi)
        return self._cache[query.phi][query.j - 1]


class SatOracle(Oracle):
    """
    Honest oracle for SAT membership queries on formulas.
    """

    def answer(self, query: object) -> Any:
        if not isinstance(query, Membership) or not isinstance(query.x, Formula):
            raise TypeError(f"unsupported query {query!r}")
        return int(satisfiable(query.x))


def instance_to_dict(inst: SuccinctInstance) -> Dict[str, Any]:
    return {
        "m": inst.m,
        "n": inst.n,
        "phi": formula_to_dict(inst.phi),
        "b_in": "".join(str(b) for b in inst.b_in),
        "p": inst.field.p,
    }


def instance_from_dict(data: Dict[str, Any], allow_small: bool = False) -> SuccinctInstance:
    try:
        m = int(data["m"])
        n = int(data["n"])
        b_in = tuple(int(ch) for ch in str(data["b_in"]))
        p = int(data.get("p", DEFAULT_MODULUS))
        phi = formula_from_dict(data["phi"])
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"malformed instance: {e}") from e
    try:
        field = PrimeField(p, allow_small=allow_small)
        return SuccinctInstance(m, n, phi, b_in, field)
    except ArityError as e:
        raise ConfigError(str(e)) from e


def instance_to_json(inst: SuccinctInstance) -> str:
    return json.dumps(instance_to_dict(inst), sort_keys=True, indent=2)


def instance_from_json(text: str, allow_small: bool = False) -> SuccinctInstance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid instance JSON: {e}") from e
    return instance_from_dict(data, allow_small=allow_small)


def _membership(slots: Sequence[int], members: Sequence[int]) -> Node:
    # true iff the bits in `slots` spell one of `members`
    n = len(slots)
    terms = [
        conj([literal(s, b) for s, b in zip(slots, index_to_bits(v, n))])
        for v in sorted(set(members))
    ]
    return disj(terms)


def _differ_in_one(left: Sequence[int], right: Sequence[int]) -> Node:
    terms = []
    for i in range(len(left)):
        parts: List[Node] = []
        for j in range(len(left)):
            a, b = Var(left[j]), Var(right[j])
            if i == j:
                parts.append(disj([conj([a, Not(b)]), conj([Not(a), b])]))
            else:
                parts.append(disj([conj([a, b]), conj([Not(a), Not(b)])]))
        terms.append(conj(parts))
    return disj(terms)


def _equal_bits(left: Sequence[int], right: Sequence[int]) -> Node:
    return conj(
        [
            disj([conj([Var(a), Var(b)]), conj([Not(Var(a)), Not(Var(b))])])
            for a, b in zip(left, right)
        ]
    )


def _template_root(
    name: str, m: int, n: int, rng: Rng, members: Optional[Sequence[int]]
) -> Node:
    total = m + 3 * n + 3
    x1, x2, x3 = m + 3 * n, m + 3 * n + 1, m + 3 * n + 2
    b1 = [m + i for i in range(n)]
    b2 = [m + n + i for i in range(n)]
    N = 2**n

    def pick() -> List[int]:
        if members is not None:
            return list(members)
        return [v for v in range(N) if rng.rand_bit()]

    if name == "tautology":
        return Const(1)
    if name == "contradiction":
        return Const(0)
    if name == "last_input":
        return Var(x3)
    if name == "not_first_input":
        return Not(Var(x1))
    if name == "pattern":
        # X(b1) = 1 only on the member set
        return disj([Not(Var(x1)), _membership(b1, pick())])
    if name == "parity":
        even = [v for v in range(N) if bin(v).count("1") % 2 == 0]
        return disj([Not(Var(x1)), _membership(b1, even)])
    if name == "independent_set":
        # no two hypercube neighbours both set
        return disj([Not(_differ_in_one(b1, b2)), Not(Var(x1)), Not(Var(x2))])
    if name == "pinned_pairs":
        # X constant on pairs differing in the last index bit, zero on the member set
        pair = _equal_bits(b1[:-1], b2[:-1])
        same = disj([conj([Var(x1), Var(x2)]), conj([Not(Var(x1)), Not(Var(x2))])])
        return conj(
            [
                disj([Not(pair), same]),
                disj([Not(Var(x1)), Not(_membership(b1, pick()))]),
            ]
        )
    if name == "y_guarded":
        if m < 1:
            raise ConfigError("y_guarded needs m >= 1")
        first, second = pick(), pick()
        y0 = Var(0)
        return disj(
            [
                Not(Var(x1)),
                conj(
                    [
                        disj([y0, _membership(b1, first)]),
                        disj([Not(y0), _membership(b1, second)]),
                    ]
                ),
            ]
        )
    if name == "random":
        return random_formula(rng, total, depth=3).root
    raise ConfigError(f"unknown template {name!r}")


TEMPLATES: Tuple[str, ...] = (
    "tautology",
    "contradiction",
    "last_input",
    "not_first_input",
    "pattern",
    "parity",
    "independent_set",
    "pinned_pairs",
    "y_guarded",
    "random",
)


def template(
    name: str,
    m: int,
    n: int,
    b_in: Optional[Sequence[int]] = None,
    field: Optional[PrimeField] = None,
    rng: Optional[Rng] = None,
    members: Optional[Sequence[int]] = None,
) -> SuccinctInstance:
    """
    Builds a named template instance.

    Args:
        name: one of ``TEMPLATES``
        m: free variable block width
        n: index width
        b_in: queried index, all zeros if omitted
        field: the field, the default field if omitted
        rng: randomness for the ``pattern``, ``pinned_pairs``, ``y_guarded``
            and ``random`` templates
        members: explicit member set for the set-based templates
    """
    rng = rng or Rng(0)
    root = _template_root(name, m, n, rng, members)
    phi = Formula(root, m + 3 * n + 3)
    return SuccinctInstance(
        m, n, phi, tuple(b_in) if b_in is not None else (0,) * n, field or PrimeField()
    )


def instance_suite(field: Optional[PrimeField] = None) -> List[Tuple[str, SuccinctInstance]]:
    """
    The fixed instance suite used by the main selector experiments: every
    instance has ``n <= 3`` and ``m <= 4``, and both answer bits occur.
    """
    field = field or PrimeField()
    specs = [
        ("tautology", 0, 1, (1,), None),
        ("contradiction", 0, 1, (0,), None),
        ("last_input", 1, 2, (1, 0), None),
        ("not_first_input", 0, 2, (0, 1), None),
        ("pattern", 0, 2, (0, 1), (0, 2)),
        ("pattern", 1, 2, (1, 0), (0, 2)),
        ("parity", 0, 3, (0, 1, 1), None),
        ("independent_set", 0, 2, (0, 1), None),
        ("independent_set", 0, 2, (1, 1), None),
        ("pinned_pairs", 0, 2, (1, 0), (1,)),
        ("y_guarded", 2, 2, (0, 0), (0, 1, 3)),
        ("pattern", 4, 3, (1, 0, 1), (1, 5, 6)),
    ]
    suite = []
    for name, m, n, b_in, members in specs:
        inst = template(name, m, n, b_in, field, Rng(len(suite)), members)
        bits = "".join(str(b) for b in b_in)
        suite.append((f"{name}_m{m}_n{n}_b{bits}", inst))
    return suite


def language_oracle_for(fn: Callable[[Any], int]) -> Oracle:
    """
    Honest membership oracle for a language given by its decision function.
    """
    def answer(query: object) -> int:
        if not isinstance(query, Membership):
            raise TypeError(f"unsupported query {query!r}")
        return int(fn(query.x))

    return LanguageOracle(answer, name="membership")
