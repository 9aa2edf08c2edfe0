# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.
#
# This source code is licensed under the BSD-style license found in the
# LICENSE file in the root directory of this source tree.

"""
Sum-check
=========

Arithmetization of the succinct formula, the two constraint polynomials and
the sum-check protocol that verifies they vanish on the Boolean cube.

For an assignment function ``f`` the constraints are::

    G1(y, b1, b2, b3) = 1 - Phi~(y, b1, b2, b3, f(b1), f(b2), f(b3))
    G2(b)             = f(b) * (1 - f(b))

A polynomial ``g`` on ``F**l`` vanishes on ``{0,1}**l`` iff (with high
probability over a random ``t``) the weighted sum

    sum_{w in {0,1}**l} h_t(w),   h_t(w) = g(w) * prod_i (w_i t_i + 1 - w_i)

is zero. The verifier checks this sum round by round: the prover sends the
univariate ``g_i(x)`` summing ``h_t(r_1..r_{i-1}, x, suffix)`` over Boolean
suffixes, the verifier checks consistency with the previous round and finally
evaluates ``h_t(r)`` itself using the raw assignment function.
"""

import json
import logging
from dataclasses import dataclass, field as dataclass_field
from enum import Enum
from typing import (
    TYPE_CHECKING,
    Any,
    Dict,
    List,
    Optional,
    Protocol,
    Sequence,
    Tuple,
    Union,
)

import torch

from torchselector.boolean import (
    And,
    Const,
    Formula,
    Node,
    Not,
    Var,
    cube_bits,
    fold_nodes,
)
from torchselector.errors import ArityError, FieldMismatch, InstanceTooLarge, OracleFailure
from torchselector.field import (
    MAX_INTERPOLATION_POINTS,
    FieldElement,
    IntLike,
    PrimeField,
    Rng,
    UniPoly,
    interpolate,
)
from torchselector.lowdegree import PointFunction
from torchselector.oracle import ConstraintKind, Oracle, SumcheckCoeffs

if TYPE_CHECKING:
    from torchselector.instance import SuccinctInstance

logger: logging.Logger = logging.getLogger(__name__)

# largest number of Boolean suffix variables summed by the honest prover
MAX_SUFFIX_BITS: int = 20
_CHUNK_ROWS: int = 2**14


def _node_degrees(root: Node, k: int) -> List[int]:
    def visit(node: Node, args: List[List[int]]) -> List[int]:
        out = [0] * k
        if isinstance(node, Var):
            out[node.index] = 1
        for child in args:
            for i, d in enumerate(child):
                out[i] += d
        return out

    return fold_nodes(root, visit)


def _eval_scalar(root: Node, inputs: Sequence[int], p: int) -> int:
    def visit(node: Node, args: List[int]) -> int:
        if isinstance(node, Var):
            return inputs[node.index] % p
        if isinstance(node, Const):
            return node.value
        if isinstance(node, Not):
            return (1 - args[0]) % p
        acc = 1
        if isinstance(node, And):
            for v in args:
                acc = acc * v % p
            return acc
        for v in args:
            acc = acc * (1 - v) % p
        return (1 - acc) % p

    return fold_nodes(root, visit)


def _eval_tensor(root: Node, inputs: torch.Tensor, p: int) -> torch.Tensor:
    def visit(node: Node, args: List[torch.Tensor]) -> torch.Tensor:
        if isinstance(node, Var):
            return inputs[:, node.index] % p
        if isinstance(node, Const):
            return torch.full((inputs.shape[0],), node.value, dtype=torch.int64)
        if isinstance(node, Not):
            return (1 - args[0]) % p
        if isinstance(node, And):
            acc = args[0]
            for t in args[1:]:
                acc = acc * t % p
            return acc
        acc = torch.ones(inputs.shape[0], dtype=torch.int64)
        for t in args:
            acc = acc * ((1 - t) % p) % p
        return (1 - acc) % p

    return fold_nodes(root, visit)


@dataclass(frozen=True)
class ArithFormula:
    """
    The arithmetization of a Boolean formula.

    Args:
        source: the Boolean formula
        per_var_degree: structural degree bound of each input slot
    """

    source: Formula
    per_var_degree: Tuple[int, ...]

    @property
    def num_vars(self) -> int:
        return self.source.num_vars

    def evaluate(self, inputs: Sequence[IntLike], p: int) -> int:
        if len(inputs) != self.num_vars:
            raise ArityError(f"{len(inputs)} inputs for {self.num_vars} slots")
        return _eval_scalar(self.source.root, [int(v) for v in inputs], p)

    def evaluate_batch(self, inputs: torch.Tensor, p: int) -> torch.Tensor:
        if inputs.dim() != 2 or inputs.shape[1] != self.num_vars:
            raise ArityError(f"inputs of shape {tuple(inputs.shape)}")
        return _eval_tensor(self.source.root, inputs, p)


def arithmetize(phi: Formula) -> ArithFormula:
    """
    Arithmetizes ``phi``: ``Not(e) -> 1 - e``, ``And -> product``,
    ``Or(e_1..e_k) -> 1 - prod(1 - e_i)``.
    """
    return ArithFormula(phi, tuple(_node_degrees(phi.root, phi.num_vars)))


class ConstraintPoly:
    """
    One of the constraint polynomials G1 or G2 for an instance and an
    assignment function.

    ``degree_bounds`` bounds the degree of the constraint in each variable
    assuming ``assignment_fn`` is multilinear; ``round_bounds`` adds one for
    the ``h_t`` weight and is what the verifier enforces.

    Args:
        kind: G1 or G2
        instance: the succinct instance
        assignment_fn: the function used in place of the assignment table
        arith: arithmetization of the instance formula, computed if omitted
    """

    def __init__(
        self,
        kind: ConstraintKind,
        instance: "SuccinctInstance",
        assignment_fn: PointFunction,
        arith: Optional[ArithFormula] = None,
    ) -> None:
        if assignment_fn.n != instance.n:
            raise ArityError(
                f"assignment function of dimension {assignment_fn.n} for n={instance.n}"
            )
        if assignment_fn.field != instance.field:
            raise FieldMismatch(f"{assignment_fn.field} vs {instance.field}")
        self.kind = kind
        self.instance = instance
        self.assignment_fn = assignment_fn
        self.field: PrimeField = instance.field
        self.arith: ArithFormula = arith or arithmetize(instance.phi)

        m, n = instance.m, instance.n
        if kind == ConstraintKind.G1:
            self.l: int = m + 3 * n
            d = self.arith.per_var_degree
            bounds = list(d[:m])
            for k in range(3):
                x_slot = m + 3 * n + k
                for i in range(n):
                    bounds.append(d[m + k * n + i] + d[x_slot])
            self.degree_bounds: Tuple[int, ...] = tuple(bounds)
        else:
            self.l = n
            self.degree_bounds = (2,) * n
        self.round_bounds: Tuple[int, ...] = tuple(d + 1 for d in self.degree_bounds)

    def max_round_bound(self) -> int:
        return max(self.round_bounds) if self.round_bounds else 0

    def _split(self, w: Sequence[int]) -> List[Sequence[int]]:
        m, n = self.instance.m, self.instance.n
        return [w[m + k * n : m + (k + 1) * n] for k in range(3)]

    def evaluate(self, w: Sequence[int]) -> int:
        if len(w) != self.l:
            raise ArityError(f"point of length {len(w)} for {self.kind.value} with l={self.l}")
        p = self.field.p
        f = self.assignment_fn
        if self.kind == ConstraintKind.G1:
            xs = [f.evaluate(list(b)) for b in self._split(w)]
            return (1 - self.arith.evaluate(list(w) + xs, p)) % p
        v = f.evaluate(list(w))
        return v * ((1 - v) % p) % p

    def evaluate_batch(self, W: torch.Tensor) -> torch.Tensor:
        if W.dim() != 2 or W.shape[1] != self.l:
            raise ArityError(f"points of shape {tuple(W.shape)} for l={self.l}")
        p = self.field.p
        f = self.assignment_fn
        if self.kind == ConstraintKind.G1:
            m, n = self.instance.m, self.instance.n
            xs = [
                f.evaluate_batch(W[:, m + k * n : m + (k + 1) * n]).unsqueeze(1)
                for k in range(3)
            ]
            inputs = torch.cat([W] + xs, dim=1)
            return (1 - self.arith.evaluate_batch(inputs, p)) % p
        v = f.evaluate_batch(W)
        return v * ((1 - v) % p) % p

    def ht_batch(self, t: torch.Tensor, W: torch.Tensor) -> torch.Tensor:
        p = self.field.p
        weight = torch.ones(W.shape[0], dtype=torch.int64)
        for i in range(self.l):
            col = W[:, i]
            weight = weight * ((col * t[i] + 1 - col) % p) % p
        return self.evaluate_batch(W) * weight % p

    def __repr__(self) -> str:
        return f"ConstraintPoly({self.kind.value}, l={self.l})"


def eval_constraint(c: ConstraintPoly, w: Sequence[IntLike]) -> FieldElement:
    """
    Evaluates the constraint polynomial at ``w``.
    """
    p = c.field.p
    return FieldElement(c.evaluate([int(v) % p for v in w]), c.field)


def ht_eval(
    c: ConstraintPoly, t: Sequence[IntLike], w: Sequence[IntLike]
) -> FieldElement:
    """
    ``h_t(w) = g(w) * prod_i (w_i t_i + 1 - w_i)``.
    """
    if len(t) != c.l or len(w) != c.l:
        raise ArityError(f"t and w must have length {c.l}")
    p = c.field.p
    wv = [int(v) % p for v in w]
    weight = 1
    for wi, ti in zip(wv, t):
        weight = weight * ((wi * int(ti) + 1 - wi) % p) % p
    return FieldElement(c.evaluate(wv) * weight, c.field)


def honest_round_poly(
    c: ConstraintPoly,
    t: Sequence[IntLike],
    r_prefix: Sequence[IntLike],
    round: int,
    samples: Optional[int] = None,
) -> UniPoly:
    """
    The exact round polynomial
    ``g_i(x) = sum_{suffix} h_t(r_1..r_{i-1}, x, suffix)``, obtained by
    summing at ``round_bound + 1`` sample points and interpolating.

    Args:
        c: the constraint
        t: the weight vector
        r_prefix: challenges of the previous rounds
        round: 1-based round index
        samples: number of sample points, ``round_bound + 1`` by default
    """
    l = c.l
    if not 1 <= round <= l:
        raise ArityError(f"round {round} out of range 1..{l}")
    if len(r_prefix) != round - 1:
        raise ArityError(f"round {round} needs {round - 1} challenges, got {len(r_prefix)}")
    if len(t) != l:
        raise ArityError(f"t must have length {l}")
    suffix_len = l - round
    if suffix_len > MAX_SUFFIX_BITS:
        raise InstanceTooLarge(
            f"round {round} sums over 2**{suffix_len} points, budget 2**{MAX_SUFFIX_BITS}"
        )
    if samples is None:
        samples = c.round_bounds[round - 1] + 1
    if samples > MAX_INTERPOLATION_POINTS:
        raise InstanceTooLarge(f"round polynomial needs {samples} samples")

    p = c.field.p
    t_tensor = torch.tensor([int(v) % p for v in t], dtype=torch.int64)
    prefix = torch.tensor([int(v) % p for v in r_prefix], dtype=torch.int64).reshape(
        1, round - 1
    )
    suffix = cube_bits(suffix_len)
    rows = suffix.shape[0]

    points = []
    for x in range(samples):
        total = 0
        for start in range(0, rows, _CHUNK_ROWS):
            chunk = suffix[start : start + _CHUNK_ROWS]
            B = chunk.shape[0]
            W = torch.cat(
                [
                    prefix.expand(B, round - 1),
                    torch.full((B, 1), x, dtype=torch.int64),
                    chunk,
                ],
                dim=1,
            )
            total = (total + int(c.ht_batch(t_tensor, W).sum())) % p
        points.append((x, total))
    return interpolate(points, c.field)


class SumcheckFailure(Enum):
    CONSISTENCY_TEST = "ConsistencyTest"
    FINAL_TEST = "FinalTest"
    DEGREE_BOUND = "DegreeBound"


@dataclass
class RoundRecord:
    round: int
    coeffs: List[int]
    degree_bound: int
    challenge: int


@dataclass
class SumcheckTranscript:
    """
    Everything exchanged in one sum-check run, in order.

    Args:
        kind: the constraint checked
        t: the weight vector
        r: the challenges
        rounds: one record per answered round
    """

    kind: ConstraintKind
    t: List[int]
    r: List[int]
    rounds: List[RoundRecord] = dataclass_field(default_factory=list)
    final_value: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "t": list(self.t),
            "r": list(self.r),
            "rounds": [
                {
                    "round": rec.round,
                    "coeffs": list(rec.coeffs),
                    "degree_bound": rec.degree_bound,
                    "challenge": rec.challenge,
                }
                for rec in self.rounds
            ],
            "final_value": self.final_value,
        }


@dataclass
class SumcheckVerdict:
    """
    Outcome of one sum-check run.

    Args:
        accepted: whether every test passed
        failure: the failed test, if any
        failed_round: 1-based round of a consistency or degree failure
        transcript: the run's transcript
    """

    accepted: bool
    failure: Optional[SumcheckFailure]
    failed_round: Optional[int]
    transcript: SumcheckTranscript

    def __post_init__(self) -> None:
        assert self.accepted != (self.failure is not None), "accepted xor failure"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "accepted": self.accepted,
            "failure": self.failure.value if self.failure else None,
            "failed_round": self.failed_round,
            "transcript": self.transcript.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


class CoeffProvider(Protocol):
    def round_poly(
        self,
        kind: ConstraintKind,
        t: Sequence[int],
        r_prefix: Sequence[int],
        round: int,
    ) -> UniPoly:
        ...


def to_unipoly(answer: Any, field: PrimeField) -> UniPoly:
    """
    Reads an oracle's coefficient answer, a UniPoly or a coefficient list.
    """
    if isinstance(answer, UniPoly):
        if answer.field != field:
            raise FieldMismatch(f"{answer.field} vs {field}")
        return answer
    if isinstance(answer, (list, tuple)):
        return UniPoly(field, tuple(int(c) for c in answer))
    raise TypeError(f"cannot read polynomial from {type(answer).__name__}")


class HonestProver:
    """
    Prover computing exact round polynomials for the constraints of an
    instance with a given (multilinear, tensor-evaluable) assignment function.

    Args:
        instance: the succinct instance
        assignment_fn: the assignment function, usually a table's extension
    """

    def __init__(
        self, instance: "SuccinctInstance", assignment_fn: PointFunction
    ) -> None:
        self.instance = instance
        self.assignment_fn = assignment_fn
        self._constraints: Dict[ConstraintKind, ConstraintPoly] = {}

    def constraint(self, kind: ConstraintKind) -> ConstraintPoly:
        if kind not in self._constraints:
            self._constraints[kind] = ConstraintPoly(
                kind, self.instance, self.assignment_fn
            )
        return self._constraints[kind]

    def round_poly(
        self,
        kind: ConstraintKind,
        t: Sequence[int],
        r_prefix: Sequence[int],
        round: int,
    ) -> UniPoly:
        return honest_round_poly(self.constraint(kind), t, r_prefix, round)


class OracleCoeffProvider:
    """
    Asks an oracle for round polynomials through :class:`SumcheckCoeffs`
    queries.

    Args:
        oracle: the oracle acting as prover
        field: the field of the coefficients
    """

    def __init__(self, oracle: Oracle, field: PrimeField) -> None:
        self.oracle = oracle
        self.field = field

    def round_poly(
        self,
        kind: ConstraintKind,
        t: Sequence[int],
        r_prefix: Sequence[int],
        round: int,
    ) -> UniPoly:
        query = SumcheckCoeffs(kind, tuple(t), tuple(r_prefix), round)
        answer = self.oracle.answer(query)
        try:
            return to_unipoly(answer, self.field)
        except (TypeError, ValueError) as e:
            raise OracleFailure(query, e) from e


def sumcheck_verify(
    c: ConstraintPoly,
    coeff_provider: Union[CoeffProvider, Oracle],
    rng: Rng,
) -> SumcheckVerdict:
    """
    Runs the sum-check verifier for ``c``.

    Draws ``t`` and ``r`` uniformly, sets ``g_0 = 0`` and for each round asks
    for ``g_i``, rejecting on a degree above the round bound or on
    ``g_{i-1}(r_{i-1}) != g_i(0) + g_i(1)``. Finally rejects if
    ``g_l(r_l) != h_t(r)``, evaluated with ``c.assignment_fn``.

    Args:
        c: the constraint, built on the raw assignment function
        coeff_provider: the prover, or an oracle answering SumcheckCoeffs
        rng: randomness
    """
    if isinstance(coeff_provider, Oracle):
        coeff_provider = OracleCoeffProvider(coeff_provider, c.field)
    field = c.field
    p = field.p
    l = c.l
    t = rng.rand_values(field, l)
    r = rng.rand_values(field, l)
    transcript = SumcheckTranscript(c.kind, t, r)

    claim = 0
    poly: Optional[UniPoly] = None
    for i in range(1, l + 1):
        try:
            poly = coeff_provider.round_poly(c.kind, t, r[: i - 1], i)
        except OracleFailure:
            raise
        except Exception as e:
            raise OracleFailure(
                SumcheckCoeffs(c.kind, tuple(t), tuple(r[: i - 1]), i), e
            ) from e
        bound = c.round_bounds[i - 1]
        transcript.rounds.append(RoundRecord(i, poly.to_list(), bound, r[i - 1]))
        if poly.degree > bound:
            logger.info(
                f"sum-check {c.kind.value} round {i}: degree {poly.degree} > {bound}"
            )
            return SumcheckVerdict(False, SumcheckFailure.DEGREE_BOUND, i, transcript)
        if (poly(0) + poly(1)) % p != claim:
            logger.info(f"sum-check {c.kind.value} round {i}: consistency test failed")
            return SumcheckVerdict(
                False, SumcheckFailure.CONSISTENCY_TEST, i, transcript
            )
        claim = poly(r[i - 1])

    final = int(ht_eval(c, t, r))
    transcript.final_value = final
    if claim != final:
        logger.info(f"sum-check {c.kind.value}: final test failed")
        return SumcheckVerdict(False, SumcheckFailure.FINAL_TEST, None, transcript)
    return SumcheckVerdict(True, None, None, transcript)


def run_constraint_checks(
    instance: "SuccinctInstance",
    assignment_fn: PointFunction,
    coeff_provider: Union[CoeffProvider, Oracle],
    rng: Rng,
) -> Dict[ConstraintKind, SumcheckVerdict]:
    """
    Runs sum-check for G1 and G2 with independent randomness. The assignment
    is trusted only if both accept.
    """
    verdicts = {}
    for kind in (ConstraintKind.G1, ConstraintKind.G2):
        c = ConstraintPoly(kind, instance, assignment_fn)
        verdicts[kind] = sumcheck_verify(c, coeff_provider, rng.spawn(kind.value))
    return verdicts
