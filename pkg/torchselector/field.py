# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.
#
# This source code is licensed under the BSD-style license found in the
# LICENSE file in the root directory of this source tree.

"""
Field
=====

Prime field arithmetic, univariate polynomials, Lagrange interpolation and the
seeded random number generator shared by every protocol.

Protocol code works on canonical integer representatives in ``[0, p)`` and on
``torch.int64`` tensors of them. :class:`FieldElement` is the typed wrapper used
at the public API boundary. Since ``p * p < 2**63`` every product of two
canonical representatives fits in an int64 before reduction.
"""

import hashlib
import logging
from dataclasses import dataclass, field as dataclass_field
from enum import Enum
from functools import total_ordering
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import torch
from sympy import isprime

from torchselector.errors import (
    ArityError,
    ConfigError,
    DegenerateInterpolation,
    DivisionByZero,
    FieldMismatch,
)

logger: logging.Logger = logging.getLogger(__name__)

DEFAULT_MODULUS: int = 2**31 - 1
MIN_MODULUS: int = 2**20
# largest p with p * p < 2**63
MAX_MODULUS: int = 3037000499
MAX_INTERPOLATION_POINTS: int = 64

_MASK64: int = 2**64 - 1

IntLike = Union[int, "FieldElement"]


@dataclass(frozen=True)
class PrimeField:
    """
    The prime field GF(p).

    Arithmetic methods accept Python ints or int64 tensors holding canonical
    representatives and return the same kind.

    Args:
        p: the prime modulus
        allow_small: permit moduli below ``MIN_MODULUS``, used by the soundness
            degradation experiments and by hand-checkable examples
    """

    p: int = DEFAULT_MODULUS
    allow_small: bool = dataclass_field(default=False, compare=False)

    def __post_init__(self) -> None:
        if not isinstance(self.p, int) or self.p < 2:
            raise ConfigError(f"modulus must be an integer >= 2, got {self.p!r}")
        if self.p > MAX_MODULUS:
            raise ConfigError(
                f"modulus {self.p} too large, products must fit in int64 (max {MAX_MODULUS})"
            )
        if not isprime(self.p):
            raise ConfigError(f"modulus {self.p} is not prime")
        if self.p < MIN_MODULUS and not self.allow_small:
            raise ConfigError(
                f"modulus {self.p} below {MIN_MODULUS}, pass allow_small=True for experiments"
            )

    def __repr__(self) -> str:
        return f"GF({self.p})"

    def elem(self, value: int) -> "FieldElement":
        return FieldElement(value, self)

    @property
    def zero(self) -> "FieldElement":
        return FieldElement(0, self)

    @property
    def one(self) -> "FieldElement":
        return FieldElement(1, self)

    def reduce(self, a):
        return a % self.p

    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def mul(self, a, b):
        return (a * b) % self.p

    def neg(self, a):
        return (-a) % self.p

    def inv(self, a: int) -> int:
        a = int(a) % self.p
        if a == 0:
            raise DivisionByZero(f"inverse of 0 in {self}")
        return pow(a, self.p - 2, self.p)

    def pow(self, a: int, e: int) -> int:
        if e < 0:
            return pow(self.inv(a), -e, self.p)
        return pow(int(a) % self.p, e, self.p)

    def tensor(self, values: Sequence[IntLike]) -> torch.Tensor:
        return torch.tensor([int(v) for v in values], dtype=torch.int64) % self.p


@total_ordering
@dataclass(frozen=True)
class FieldElement:
    """
    An element of a prime field, stored as its canonical representative.

    Elements order by their canonical integer representative. This is the
    order used when comparing self-corrected oracle values.

    Args:
        value: any integer, reduced mod p on construction
        field: the field the element belongs to
    """

    value: int
    field: PrimeField

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", int(self.value) % self.field.p)

    def _coerce(self, other: IntLike) -> int:
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise FieldMismatch(f"{self.field} vs {other.field}")
            return other.value
        if isinstance(other, (int, np.integer)):
            return int(other)
        return NotImplemented

    def __int__(self) -> int:
        return self.value

    def __index__(self) -> int:
        return self.value

    def __add__(self, other: IntLike) -> "FieldElement":
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return FieldElement(self.value + o, self.field)

    __radd__ = __add__

    def __sub__(self, other: IntLike) -> "FieldElement":
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return FieldElement(self.value - o, self.field)

    def __rsub__(self, other: IntLike) -> "FieldElement":
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return FieldElement(o - self.value, self.field)

    def __mul__(self, other: IntLike) -> "FieldElement":
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return FieldElement(self.value * o, self.field)

    __rmul__ = __mul__

    def __neg__(self) -> "FieldElement":
        return FieldElement(-self.value, self.field)

    def inverse(self) -> "FieldElement":
        return FieldElement(self.field.inv(self.value), self.field)

    def __truediv__(self, other: IntLike) -> "FieldElement":
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return FieldElement(self.value * self.field.inv(o), self.field)

    def __lt__(self, other: "FieldElement") -> bool:
        if not isinstance(other, FieldElement):
            return NotImplemented
        if other.field != self.field:
            raise FieldMismatch(f"{self.field} vs {other.field}")
        return self.value < other.value

    def __repr__(self) -> str:
        return f"{self.value} (mod {self.field.p})"


class FieldOp(Enum):
    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    INV = "inv"
    NEG = "neg"


def field_arith(
    a: FieldElement, b: Optional[FieldElement], op: FieldOp
) -> FieldElement:
    """
    Applies a field operation. ``inv`` and ``neg`` ignore ``b``.

    Args:
        a: the first operand
        b: the second operand for binary operations
        op: the operation to apply

    Returns:
        the result in the operands' field
    """
    if op == FieldOp.INV:
        return a.inverse()
    if op == FieldOp.NEG:
        return -a
    if b is None:
        raise ArityError(f"{op.value} needs two operands")
    if a.field != b.field:
        raise FieldMismatch(f"{a.field} vs {b.field}")
    if op == FieldOp.ADD:
        return a + b
    if op == FieldOp.SUB:
        return a - b
    return a * b


@dataclass(frozen=True)
class UniPoly:
    """
    A univariate polynomial over a prime field, lowest degree coefficient first.

    Coefficients are canonical representatives and trailing zeros are trimmed,
    so the zero polynomial has no coefficients and degree -1.

    Args:
        field: the coefficient field
        coeffs: coefficients, lowest degree first
    """

    field: PrimeField
    coeffs: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        p = self.field.p
        coeffs = [int(c) % p for c in self.coeffs]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        object.__setattr__(self, "coeffs", tuple(coeffs))

    @classmethod
    def constant(cls, field: PrimeField, c: IntLike) -> "UniPoly":
        return cls(field, (int(c),))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def elements(self) -> List[FieldElement]:
        return [FieldElement(c, self.field) for c in self.coeffs]

    def to_list(self) -> List[int]:
        return list(self.coeffs)

    def __call__(self, x: IntLike) -> int:
        p = self.field.p
        x = int(x) % p
        acc = 0
        for c in reversed(self.coeffs):
            acc = (acc * x + c) % p
        return acc

    def _check(self, other: "UniPoly") -> None:
        if other.field != self.field:
            raise FieldMismatch(f"{self.field} vs {other.field}")

    def __add__(self, other: Union["UniPoly", int]) -> "UniPoly":
        if isinstance(other, int):
            other = UniPoly.constant(self.field, other)
        self._check(other)
        size = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (0,) * (size - len(self.coeffs))
        b = other.coeffs + (0,) * (size - len(other.coeffs))
        return UniPoly(self.field, tuple(x + y for x, y in zip(a, b)))

    def __neg__(self) -> "UniPoly":
        return UniPoly(self.field, tuple(-c for c in self.coeffs))

    def __sub__(self, other: Union["UniPoly", int]) -> "UniPoly":
        if isinstance(other, int):
            other = UniPoly.constant(self.field, other)
        return self + (-other)

    def __mul__(self, other: Union["UniPoly", int]) -> "UniPoly":
        if isinstance(other, int):
            return UniPoly(self.field, tuple(c * other for c in self.coeffs))
        self._check(other)
        if self.is_zero() or other.is_zero():
            return UniPoly(self.field)
        p = self.field.p
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] = (out[i + j] + a * b) % p
        return UniPoly(self.field, tuple(out))

    def __repr__(self) -> str:
        return f"UniPoly({list(self.coeffs)} mod {self.field.p})"


def eval_unipoly(q: UniPoly, x: IntLike) -> FieldElement:
    """
    Evaluates ``q`` at ``x`` with Horner's rule.
    """
    return FieldElement(q(x), q.field)


def interpolate(
    points: Sequence[Tuple[IntLike, IntLike]], field: Optional[PrimeField] = None
) -> UniPoly:
    """
    Lagrange interpolation: the unique polynomial of degree < len(points)
    passing through every point.

    Args:
        points: (x, y) pairs with distinct x-coordinates
        field: the field, required unless the points carry FieldElements

    Returns:
        the interpolating polynomial
    """
    if not 1 <= len(points) <= MAX_INTERPOLATION_POINTS:
        raise ArityError(
            f"interpolation needs 1..{MAX_INTERPOLATION_POINTS} points, got {len(points)}"
        )
    if field is None:
        for x, y in points:
            for v in (x, y):
                if isinstance(v, FieldElement):
                    field = v.field
                    break
            if field is not None:
                break
        if field is None:
            raise ArityError("interpolate needs a field when given plain integers")
    for x, y in points:
        for v in (x, y):
            if isinstance(v, FieldElement) and v.field != field:
                raise FieldMismatch(f"{v.field} vs {field}")

    p = field.p
    xs = [int(x) % p for x, _ in points]
    ys = [int(y) % p for _, y in points]
    k = len(xs)
    if len(set(xs)) != k:
        raise DegenerateInterpolation(f"duplicate x-coordinates in {xs}")

    # master = prod_j (x - xs[j])
    master = [1]
    for xj in xs:
        nxt = [0] * (len(master) + 1)
        for d, c in enumerate(master):
            nxt[d] = (nxt[d] - xj * c) % p
            nxt[d + 1] = (nxt[d + 1] + c) % p
        master = nxt

    result = [0] * k
    for i, xi in enumerate(xs):
        # synthetic division of master by (x - xi)
        q = [0] * k
        carry = 0
        for d in range(k, 0, -1):
            carry = (master[d] + carry * xi) % p
            q[d - 1] = carry
        denom = 1
        for j, xj in enumerate(xs):
            if j != i:
                denom = denom * (xi - xj) % p
        scale = ys[i] * pow(denom, p - 2, p) % p
        for d in range(k):
            result[d] = (result[d] + scale * q[d]) % p
    return UniPoly(field, tuple(result))


class Rng:
    """
    Seeded, replayable random source built on numpy's counter-based Philox
    generator.

    Per-trial substreams are derived as ``seed ^ trial`` and labelled
    substreams with :meth:`spawn`, so independent trials share no state.

    Args:
        seed: 64-bit seed
        stream: 64-bit stream id, combined with the seed into the Philox key
    """

    def __init__(self, seed: int, stream: int = 0) -> None:
        self.seed: int = int(seed) & _MASK64
        self.stream: int = int(stream) & _MASK64
        self._gen = np.random.Generator(
            np.random.Philox(key=self.seed | (self.stream << 64))
        )

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, stream={self.stream})"

    def trial(self, index: int) -> "Rng":
        return Rng(self.seed ^ index, self.stream)

    def spawn(self, label: str) -> "Rng":
        digest = hashlib.blake2b(
            f"{self.stream}:{label}".encode(), digest_size=8
        ).digest()
        return Rng(self.seed, int.from_bytes(digest, "little"))

    def randrange(self, high: int) -> int:
        if high < 1:
            raise ArityError(f"randrange needs high >= 1, got {high}")
        return int(self._gen.integers(0, high))

    def rand_bit(self) -> int:
        return self.randrange(2)

    def random(self) -> float:
        return float(self._gen.random())

    def rand_value(self, field: PrimeField) -> int:
        return self.randrange(field.p)

    def rand_values(self, field: PrimeField, k: int) -> List[int]:
        if k == 0:
            return []
        return [int(v) for v in self._gen.integers(0, field.p, size=k)]

    def rand_nonzero(self, field: PrimeField) -> int:
        return 1 + self.randrange(field.p - 1)

    def rand_distinct(self, field: PrimeField, k: int) -> List[int]:
        if not 0 <= k <= field.p:
            raise ArityError(f"cannot draw {k} distinct elements from {field}")
        out: List[int] = []
        while len(out) < k:
            v = self.rand_value(field)
            if v not in out:
                out.append(v)
        return out

    def rand_elem(self, field: PrimeField) -> FieldElement:
        return FieldElement(self.rand_value(field), field)

    def rand_point(self, field: PrimeField, n: int) -> List[FieldElement]:
        return [FieldElement(v, field) for v in self.rand_values(field, n)]

    def rand_tensor(self, field: PrimeField, shape: Tuple[int, ...]) -> torch.Tensor:
        return torch.from_numpy(
            self._gen.integers(0, field.p, size=shape, dtype=np.int64)
        )

    def rand_bits(self, shape: Tuple[int, ...]) -> np.ndarray:
        return self._gen.integers(0, 2, size=shape, dtype=np.int64)

    def permutation(self, k: int) -> List[int]:
        return [int(v) for v in self._gen.permutation(k)]


def rand_elem(rng: Rng, field: PrimeField) -> FieldElement:
    """
    Draws a uniform element of ``field``.
    """
    return rng.rand_elem(field)


def rand_point(rng: Rng, field: PrimeField, n: int) -> List[FieldElement]:
    """
    Draws a uniform point of ``field ** n``.
    """
    return rng.rand_point(field, n)
