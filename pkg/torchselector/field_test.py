# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.
#
# This source code is licensed under the BSD-style license found in the
# LICENSE file in the root directory of this source tree.

from unittest import TestCase

import torch
from parameterized import parameterized

from torchselector.errors import (
    ArityError,
    ConfigError,
    DegenerateInterpolation,
    DivisionByZero,
    FieldMismatch,
)
from torchselector.field import (
    DEFAULT_MODULUS,
    FieldElement,
    FieldOp,
    PrimeField,
    Rng,
    UniPoly,
    eval_unipoly,
    field_arith,
    interpolate,
    rand_elem,
    rand_point,
)

F101 = PrimeField(101, allow_small=True)
F7 = PrimeField(7, allow_small=True)


class PrimeFieldTest(TestCase):
    def test_default_modulus(self) -> None:
        self.assertEqual(PrimeField().p, DEFAULT_MODULUS)

    @parameterized.expand(
        [
            ("not_prime", 100),
            ("too_large", 2**62 - 57),
            ("one", 1),
        ]
    )
    def test_invalid_modulus(self, _name: str, p: int) -> None:
        with self.assertRaises(ConfigError):
            PrimeField(p, allow_small=True)

    def test_small_modulus_needs_opt_in(self) -> None:
        with self.assertRaisesRegex(ConfigError, "allow_small"):
            PrimeField(101)
        self.assertEqual(PrimeField(101, allow_small=True).p, 101)

    def test_equality_ignores_allow_small(self) -> None:
        self.assertEqual(PrimeField(2**31 - 1, allow_small=True), PrimeField())

    def test_tensor_ops(self) -> None:
        a = F7.tensor([3, 5, 6])
        b = F7.tensor([4, 4, 1])
        self.assertEqual(F7.add(a, b).tolist(), [0, 2, 0])
        self.assertEqual(F7.sub(a, b).tolist(), [6, 1, 5])
        self.assertEqual(F7.mul(a, b).tolist(), [5, 6, 6])
        self.assertEqual(F7.neg(a).tolist(), [4, 2, 1])

    def test_inv_and_pow(self) -> None:
        self.assertEqual(F7.inv(3), 5)
        self.assertEqual(F7.pow(3, -1), 5)
        self.assertEqual(F7.pow(2, 3), 1)
        with self.assertRaises(DivisionByZero):
            F7.inv(0)

    def test_large_products_fit_int64(self) -> None:
        f = PrimeField()
        a = torch.tensor([f.p - 1], dtype=torch.int64)
        self.assertEqual(f.mul(a, a).tolist(), [1])


class FieldElementTest(TestCase):
    def test_normalizes(self) -> None:
        self.assertEqual(int(FieldElement(-1, F7)), 6)
        self.assertEqual(FieldElement(9, F7), FieldElement(2, F7))

    def test_arithmetic(self) -> None:
        a = FieldElement(3, F7)
        b = FieldElement(5, F7)
        self.assertEqual(a + b, FieldElement(1, F7))
        self.assertEqual(a - b, FieldElement(5, F7))
        self.assertEqual(a * b, FieldElement(1, F7))
        self.assertEqual(-a, FieldElement(4, F7))
        self.assertEqual(a / b, FieldElement(2, F7))
        self.assertEqual(2 + a, FieldElement(5, F7))
        self.assertEqual(1 - a, FieldElement(5, F7))

    def test_zero_division(self) -> None:
        with self.assertRaises(DivisionByZero):
            FieldElement(3, F7) / 0
        with self.assertRaises(ZeroDivisionError):
            F7.zero.inverse()

    def test_mismatch(self) -> None:
        with self.assertRaises(FieldMismatch):
            FieldElement(1, F7) + FieldElement(1, F101)
        with self.assertRaises(FieldMismatch):
            FieldElement(1, F7) < FieldElement(1, F101)

    def test_ordering_by_representative(self) -> None:
        self.assertLess(FieldElement(2, F7), FieldElement(6, F7))
        self.assertGreater(FieldElement(-1, F7), FieldElement(5, F7))

    @parameterized.expand(
        [
            (FieldOp.ADD, 3, 5, 1),
            (FieldOp.SUB, 3, 5, 5),
            (FieldOp.MUL, 3, 5, 1),
            (FieldOp.INV, 3, None, 5),
            (FieldOp.NEG, 3, None, 4),
        ]
    )
    def test_field_arith(self, op: FieldOp, a: int, b, expected: int) -> None:
        rhs = FieldElement(b, F7) if b is not None else None
        self.assertEqual(int(field_arith(FieldElement(a, F7), rhs, op)), expected)

    def test_field_arith_needs_operand(self) -> None:
        with self.assertRaises(ArityError):
            field_arith(F7.one, None, FieldOp.ADD)


class UniPolyTest(TestCase):
    def test_trims_and_degree(self) -> None:
        q = UniPoly(F7, (1, 2, 0, 7))
        self.assertEqual(q.coeffs, (1, 2))
        self.assertEqual(q.degree, 1)
        self.assertEqual(UniPoly(F7).degree, -1)
        self.assertTrue(UniPoly(F7, (0, 0)).is_zero())

    def test_eval(self) -> None:
        q = UniPoly(F7, (1, 2, 3))
        self.assertEqual(q(2), (1 + 4 + 12) % 7)
        self.assertEqual(eval_unipoly(q, 2), FieldElement(3, F7))

    def test_arithmetic(self) -> None:
        a = UniPoly(F7, (1, 1))
        b = UniPoly(F7, (6, 1))
        self.assertEqual((a * b).coeffs, (6, 0, 1))
        self.assertEqual((a + b).coeffs, (0, 2))
        self.assertEqual((a - a).coeffs, ())
        self.assertEqual((a + 3).coeffs, (4, 1))
        with self.assertRaises(FieldMismatch):
            a + UniPoly(F101, (1,))


class InterpolateTest(TestCase):
    def test_recovers_polynomial(self) -> None:
        q = UniPoly(F101, (5, 0, 3, 7))
        points = [(x, q(x)) for x in (1, 2, 3, 4)]
        self.assertEqual(interpolate(points, F101), q)

    def test_single_point(self) -> None:
        self.assertEqual(interpolate([(3, 9)], F101).coeffs, (9,))

    def test_field_from_elements(self) -> None:
        points = [(F101.elem(0), F101.elem(1)), (F101.elem(1), F101.elem(3))]
        self.assertEqual(interpolate(points).coeffs, (1, 2))

    def test_errors(self) -> None:
        with self.assertRaises(DegenerateInterpolation):
            interpolate([(1, 2), (1, 3)], F101)
        with self.assertRaises(DegenerateInterpolation):
            interpolate([(1, 2), (102, 3)], F101)
        with self.assertRaises(ArityError):
            interpolate([], F101)
        with self.assertRaises(ArityError):
            interpolate([(x, 0) for x in range(65)], F101)
        with self.assertRaises(ArityError):
            interpolate([(1, 2)])

    def test_random_high_degree(self) -> None:
        field = PrimeField()
        rng = Rng(3)
        q = UniPoly(field, tuple(rng.rand_values(field, 20)))
        xs = rng.rand_distinct(field, 20)
        self.assertEqual(interpolate([(x, q(x)) for x in xs], field), q)


class RngTest(TestCase):
    def test_replayable(self) -> None:
        field = PrimeField()
        a = Rng(42).rand_values(field, 8)
        b = Rng(42).rand_values(field, 8)
        self.assertEqual(a, b)
        self.assertNotEqual(a, Rng(43).rand_values(field, 8))

    def test_substreams_differ(self) -> None:
        field = PrimeField()
        base = Rng(7)
        self.assertNotEqual(
            base.spawn("a").rand_values(field, 4), base.spawn("b").rand_values(field, 4)
        )
        self.assertEqual(base.trial(5).seed, 7 ^ 5)
        self.assertEqual(
            Rng(7).spawn("a").rand_values(field, 4), Rng(7).spawn("a").rand_values(field, 4)
        )

    def test_draw_ranges(self) -> None:
        rng = Rng(0)
        for _ in range(100):
            self.assertIn(rng.rand_bit(), (0, 1))
            self.assertNotEqual(rng.rand_nonzero(F7), 0)
            self.assertTrue(0 <= rng.random() < 1)
        distinct = rng.rand_distinct(F7, 7)
        self.assertEqual(sorted(distinct), list(range(7)))
        self.assertEqual(sorted(rng.permutation(5)), list(range(5)))
        with self.assertRaises(ArityError):
            rng.randrange(0)

    def test_distinct_rejects_oversized_draw(self) -> None:
        with self.assertRaises(ArityError):
            Rng(0).rand_distinct(F7, 8)
        with self.assertRaises(ArityError):
            Rng(0).rand_distinct(F7, -1)

    def test_tensor_draws(self) -> None:
        t = Rng(1).rand_tensor(F7, (3, 4))
        self.assertEqual(t.dtype, torch.int64)
        self.assertEqual(tuple(t.shape), (3, 4))
        self.assertTrue(bool(((t >= 0) & (t < 7)).all()))

    def test_rand_point(self) -> None:
        point = rand_point(Rng(1), F101, 3)
        self.assertEqual(len(point), 3)
        self.assertTrue(all(p.field == F101 for p in point))

    def test_rand_elem_covers_small_field(self) -> None:
        rng = Rng(5)
        seen = {rand_elem(rng, F7).value for _ in range(200)}
        self.assertEqual(seen, set(range(7)))
        self.assertEqual(rand_elem(Rng(9), F101), rand_elem(Rng(9), F101))
