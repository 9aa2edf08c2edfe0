# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.
#
# This source code is licensed under the BSD-style license found in the
# LICENSE file in the root directory of this source tree.

"""
Low Degree
==========

Multilinear extensions, polynomial identity testing, the multilinearity test
and self-correction.

A table ``V`` of ``2**n`` field values indexed by hypercube points (first
coordinate most significant) has a unique multilinear extension. It is
evaluated by folding one variable at a time::

    V'(rest) = V(0, rest) + x_1 * (V(1, rest) - V(0, rest))

Scalar evaluation folds over Python ints; batched evaluation folds a
``(B, 2**n)`` int64 tensor.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import torch

from torchselector.errors import ArityError
from torchselector.field import FieldElement, IntLike, PrimeField, Rng, interpolate
from torchselector.oracle import MlePoint, Oracle

logger: logging.Logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MleTable:
    """
    Values of a function on {0,1}^n, identified with its multilinear extension.

    Args:
        field: the field of the values
        values: ``2**n`` canonical representatives, hypercube order
    """

    field: PrimeField
    values: Tuple[int, ...]

    def __post_init__(self) -> None:
        size = len(self.values)
        if size == 0 or size & (size - 1):
            raise ArityError(f"table length {size} is not a power of two")
        p = self.field.p
        object.__setattr__(self, "values", tuple(int(v) % p for v in self.values))

    @property
    def n(self) -> int:
        return len(self.values).bit_length() - 1

    def tensor(self) -> torch.Tensor:
        return torch.tensor(self.values, dtype=torch.int64)

    def __getitem__(self, index: int) -> int:
        return self.values[index]


def _fold(values: Sequence[int], x: Sequence[int], p: int) -> int:
    vals = list(values)
    for xi in x:
        half = len(vals) // 2
        vals = [
            (v0 + xi * (v1 - v0)) % p for v0, v1 in zip(vals[:half], vals[half:])
        ]
    return vals[0]


def mle_eval(V: MleTable, x: Sequence[IntLike]) -> FieldElement:
    """
    Evaluates the multilinear extension of ``V`` at ``x``.

    Args:
        V: the table
        x: a point of ``F**n``
    """
    if len(x) != V.n:
        raise ArityError(f"point of dimension {len(x)} for table of dimension {V.n}")
    p = V.field.p
    return FieldElement(_fold(V.values, [int(xi) % p for xi in x], p), V.field)


def mle_eval_batch(V: MleTable, xs: torch.Tensor) -> torch.Tensor:
    """
    Evaluates the multilinear extension of ``V`` at every row of the
    ``(B, n)`` int64 tensor ``xs``.
    """
    if xs.dim() != 2 or xs.shape[1] != V.n:
        raise ArityError(f"points of shape {tuple(xs.shape)} for dimension {V.n}")
    p = V.field.p
    vals = V.tensor().unsqueeze(0).expand(xs.shape[0], -1)
    for j in range(V.n):
        half = vals.shape[1] // 2
        v0, v1 = vals[:, :half], vals[:, half:]
        xj = xs[:, j : j + 1] % p
        vals = (v0 + xj * ((v1 - v0) % p)) % p
    return vals[:, 0].contiguous()


def mle_fix_first(V: MleTable, b: int) -> MleTable:
    """
    The half table whose extension is ``V~(b, .)``.
    """
    if V.n == 0:
        raise ArityError("cannot fix a variable of a 0-dimensional table")
    half = len(V.values) // 2
    values = V.values[half:] if b else V.values[:half]
    return MleTable(V.field, values)


class PointFunction(ABC):
    """
    A total function ``F**n -> F``.

    Args:
        field: the field
        n: the dimension
    """

    def __init__(self, field: PrimeField, n: int) -> None:
        self.field = field
        self.n = n

    @abstractmethod
    def evaluate(self, x: Sequence[int]) -> int:
        """
        Evaluates at a point given as canonical representatives.

        Args:
            x: the point, length ``n``
        """
        ...

    def evaluate_batch(self, xs: torch.Tensor) -> torch.Tensor:
        out = [self.evaluate([int(v) for v in row]) for row in xs.tolist()]
        return torch.tensor(out, dtype=torch.int64)

    def __call__(self, x: Sequence[IntLike]) -> FieldElement:
        if len(x) != self.n:
            raise ArityError(f"point of dimension {len(x)} for dimension {self.n}")
        return FieldElement(self.evaluate([int(v) % self.field.p for v in x]), self.field)


class TablePointFunction(PointFunction):
    """
    The multilinear extension of a table.

    Args:
        table: the table
    """

    def __init__(self, table: MleTable) -> None:
        super().__init__(table.field, table.n)
        self.table = table

    def evaluate(self, x: Sequence[int]) -> int:
        return _fold(self.table.values, x, self.field.p)

    def evaluate_batch(self, xs: torch.Tensor) -> torch.Tensor:
        return mle_eval_batch(self.table, xs)


class OraclePointFunction(PointFunction):
    """
    The function answered by an oracle's :class:`MlePoint` queries. Answers
    are reduced into the field.

    Args:
        oracle: the oracle to query
        field: the field
        n: the dimension
    """

    def __init__(self, oracle: Oracle, field: PrimeField, n: int) -> None:
        super().__init__(field, n)
        self.oracle = oracle

    def evaluate(self, x: Sequence[int]) -> int:
        return int(self.oracle.answer(MlePoint(tuple(x)))) % self.field.p


class CallablePointFunction(PointFunction):
    """
    Wraps a plain function of a point.

    Args:
        field: the field
        n: the dimension
        fn: maps a tuple of canonical representatives to an integer
    """

    def __init__(
        self, field: PrimeField, n: int, fn: Callable[[Tuple[int, ...]], int]
    ) -> None:
        super().__init__(field, n)
        self._fn = fn

    def evaluate(self, x: Sequence[int]) -> int:
        return int(self._fn(tuple(x))) % self.field.p


@dataclass(frozen=True)
class Disagree:
    point: Tuple[int, ...]


@dataclass(frozen=True)
class LikelyEqual:
    pass


def pit_disagree(
    f: PointFunction, g: PointFunction, rng: Rng
) -> Union[Disagree, LikelyEqual]:
    """
    Compares ``f`` and ``g`` at one uniform point.
    """
    if f.n != g.n:
        raise ArityError(f"dimensions differ: {f.n} vs {g.n}")
    u = rng.rand_values(f.field, f.n)
    if f.evaluate(u) != g.evaluate(u):
        return Disagree(tuple(u))
    return LikelyEqual()


@dataclass(frozen=True)
class LineWitness:
    """
    Three points on an axis-parallel line whose values are not collinear.
    """

    axis: int
    base: Tuple[int, ...]
    a: int
    b: int
    c: int
    values: Tuple[int, int, int]


@dataclass(frozen=True)
class Accept:
    pass


@dataclass(frozen=True)
class Reject:
    witness: LineWitness


def default_ml_test_reps(n: int) -> int:
    return 32 * n


def multilinearity_test(
    f: PointFunction, n: int, reps: Optional[int], rng: Rng
) -> Union[Accept, Reject]:
    """
    Axis-parallel line test. Each repetition picks a random axis, a random
    base point and three distinct values for that coordinate, and rejects if
    the three function values are not collinear. Multilinear functions are
    accepted with probability 1.

    Args:
        f: the function under test
        n: its dimension
        reps: number of repetitions, ``32 * n`` if None
        rng: randomness
    """
    if reps is None:
        reps = default_ml_test_reps(n)
    if reps < 1 and n > 0:
        raise ArityError(f"reps must be >= 1, got {reps}")
    if n == 0:
        return Accept()
    field = f.field
    p = field.p
    for _ in range(reps):
        axis = rng.randrange(n)
        base = rng.rand_values(field, n)
        a, b, c = rng.rand_distinct(field, 3)
        pts = []
        for v in (a, b, c):
            x = list(base)
            x[axis] = v
            pts.append(f.evaluate(x))
        fa, fb, fc = pts
        expected = (fa + (c - a) * (fb - fa) % p * field.inv(b - a)) % p
        if fc != expected:
            witness = LineWitness(axis, tuple(base), a, b, c, (fa, fb, fc))
            logger.debug(f"multilinearity test rejected on axis {axis}")
            return Reject(witness)
    return Accept()


def self_correct(
    f: PointFunction, x: Sequence[IntLike], rng: Rng
) -> FieldElement:
    """
    Recovers the value at ``x`` of the multilinear function closest to ``f``.

    Interpolates the degree ``<= n`` restriction of ``f`` to the random line
    ``x + a * y`` from the offsets ``a = 1..n+1`` and returns its value at
    ``a = 0``. ``f`` is never read at ``x`` itself.

    Args:
        f: the function
        x: the point to correct at
        rng: randomness
    """
    n = f.n
    field = f.field
    p = field.p
    if len(x) != n:
        raise ArityError(f"point of dimension {len(x)} for dimension {n}")
    assert n + 1 < p, f"field {field} too small for {n + 1} distinct offsets"
    base = [int(v) % p for v in x]
    y = rng.rand_values(field, n)
    points = []
    for a in range(1, n + 2):
        point = [(bi + a * yi) % p for bi, yi in zip(base, y)]
        points.append((a, f.evaluate(point)))
    line = interpolate(points, field)
    return FieldElement(line(0), field)
