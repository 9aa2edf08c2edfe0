# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.
#
# This source code is licensed under the BSD-style license found in the
# LICENSE file in the root directory of this source tree.

from unittest import TestCase

from parameterized import parameterized

from torchselector.adversaries import (
    AdversaryKind,
    AdversarySpec,
    ClaimedAssignmentOracle,
    GreedyCheatingProver,
    constant_oracle,
    lie_at,
    make_adversary,
    parse_adversary,
)
from torchselector.boolean import Const, Formula, Var, index_to_bits
from torchselector.errors import AdversaryConstructionError, ArityError
from torchselector.field import Rng
from torchselector.instance import (
    AssignmentTable,
    LexmaxOracle,
    brute_force_VPhi,
    eval_F_Phi,
    honest_oracle,
    template,
)
from torchselector.lowdegree import (
    OraclePointFunction,
    Reject,
    TablePointFunction,
    multilinearity_test,
)
from torchselector.oracle import (
    ConstraintKind,
    DecisionBit,
    LexmaxQuery,
    MlePoint,
)
from torchselector.sumcheck import (
    ConstraintPoly,
    HonestProver,
    OracleCoeffProvider,
    SumcheckFailure,
    sumcheck_verify,
)


def pattern_instance():
    return template("pattern", 0, 2, (0, 1), members=(0, 2))


def claimed_table(oracle, n: int) -> AssignmentTable:
    return AssignmentTable(
        tuple(int(oracle.answer(DecisionBit(index_to_bits(i, n)))) for i in range(2**n))
    )


class ParseAdversaryTest(TestCase):
    def test_parse(self) -> None:
        self.assertEqual(
            parse_adversary("flip_at_target"), AdversarySpec(AdversaryKind.FLIP_AT_TARGET)
        )
        spec = parse_adversary("sparse_corruption:0.05")
        self.assertEqual(spec.delta, 0.05)
        self.assertEqual(spec.label(), "sparse_corruption:0.05")

    @parameterized.expand(
        [
            ("unknown", "bogus"),
            ("unexpected_param", "always_one:3"),
            ("bad_delta", "sparse_corruption:abc"),
        ]
    )
    def test_invalid(self, _name: str, text: str) -> None:
        with self.assertRaises(AdversaryConstructionError):
            parse_adversary(text)


class MakeAdversaryTest(TestCase):
    def test_flip_at_target(self) -> None:
        inst = pattern_instance()
        oracle = make_adversary(AdversaryKind.FLIP_AT_TARGET, inst, Rng(0))
        self.assertEqual(oracle.answer(DecisionBit(inst.b_in)), 1)
        self.assertEqual(oracle.name, "flip_at_target")

    def test_smaller_satisfying(self) -> None:
        inst = pattern_instance()
        V = brute_force_VPhi(inst)
        for seed in range(5):
            oracle = make_adversary(AdversaryKind.SMALLER_SATISFYING, inst, Rng(seed))
            claim = claimed_table(oracle, inst.n)
            self.assertLess(claim.as_int(), V.as_int())
            self.assertEqual(eval_F_Phi(inst, claim), 1)
            self.assertEqual(oracle.notes, [])

    def test_smaller_satisfying_falls_back(self) -> None:
        inst = template("contradiction", 0, 1, (0,))
        oracle = make_adversary(AdversaryKind.SMALLER_SATISFYING, inst, Rng(0))
        self.assertEqual(oracle.answer(DecisionBit((0,))), 1)
        self.assertEqual(len(oracle.notes), 1)
        self.assertIn("fell back", oracle.notes[0])

    def test_larger_non_satisfying(self) -> None:
        inst = pattern_instance()
        V = brute_force_VPhi(inst)
        for seed in range(5):
            oracle = make_adversary(AdversaryKind.LARGER_NON_SATISFYING, inst, Rng(seed))
            claim = claimed_table(oracle, inst.n)
            self.assertGreater(claim.as_int(), V.as_int())
            self.assertEqual(eval_F_Phi(inst, claim), 0)
            self.assertNotEqual(claim[inst.b_in_index], V[inst.b_in_index])

    def test_non_boolean(self) -> None:
        inst = pattern_instance()
        oracle = make_adversary(AdversaryKind.NON_BOOLEAN, inst, Rng(0))
        value = int(oracle.answer(MlePoint(inst.b_in)))
        self.assertGreaterEqual(value, 2)

    def test_non_multilinear_fails_line_test(self) -> None:
        inst = pattern_instance()
        oracle = make_adversary(AdversaryKind.NON_MULTILINEAR, inst, Rng(0))
        fn = OraclePointFunction(oracle, inst.field, inst.n)
        self.assertIsInstance(multilinearity_test(fn, inst.n, None, Rng(1)), Reject)

    def test_sparse_corruption_bounds(self) -> None:
        inst = pattern_instance()
        with self.assertRaises(AdversaryConstructionError):
            make_adversary(AdversarySpec(AdversaryKind.SPARSE_CORRUPTION, 0.5), inst, Rng(0))
        with self.assertRaises(AdversaryConstructionError):
            make_adversary(AdversarySpec(AdversaryKind.SPARSE_CORRUPTION, 0.0), inst, Rng(0))

    def test_sparse_corruption_is_mostly_honest(self) -> None:
        inst = pattern_instance()
        spec = AdversarySpec(AdversaryKind.SPARSE_CORRUPTION, 0.05)
        oracle = make_adversary(spec, inst, Rng(0))
        honest = honest_oracle(inst)
        rng = Rng(5)
        points = [tuple(rng.rand_values(inst.field, inst.n)) for _ in range(200)]
        wrong = sum(
            int(oracle.answer(MlePoint(x))) != int(honest.answer(MlePoint(x)))
            for x in points
        )
        self.assertLess(wrong, 40)
        self.assertEqual(oracle.answer(DecisionBit(inst.b_in)), 0)

    def test_cheating_prover_is_caught(self) -> None:
        inst = pattern_instance()
        oracle = make_adversary(AdversaryKind.CHEATING_PROVER, inst, Rng(0))
        fn = OraclePointFunction(oracle, inst.field, inst.n)
        provider = OracleCoeffProvider(oracle, inst.field)
        for kind in ConstraintKind:
            c = ConstraintPoly(kind, inst, fn)
            verdict = sumcheck_verify(c, provider, Rng(2))
            self.assertEqual(verdict.failure, SumcheckFailure.FINAL_TEST, kind)

    @parameterized.expand([(AdversaryKind.ALWAYS_ZERO, 0), (AdversaryKind.ALWAYS_ONE, 1)])
    def test_constant(self, kind: AdversaryKind, value: int) -> None:
        oracle = make_adversary(kind, pattern_instance(), Rng(0))
        self.assertEqual(oracle.answer(DecisionBit((0, 0))), value)
        self.assertEqual(oracle.answer(MlePoint((5, 6))), value)

    def test_consistent_within_session(self) -> None:
        inst = pattern_instance()
        oracle = make_adversary(AdversaryKind.NON_MULTILINEAR, inst, Rng(0))
        self.assertEqual(oracle.answer(MlePoint((3, 4))), oracle.answer(MlePoint((3, 4))))


class GreedyCheatingProverTest(TestCase):
    def test_consistent_until_final_round(self) -> None:
        inst = pattern_instance()
        table = AssignmentTable((1, 1, 1, 1))
        fn = TablePointFunction(table.mle(inst.field))
        prover = GreedyCheatingProver(HonestProver(inst, fn), inst.field)
        c = ConstraintPoly(ConstraintKind.G1, inst, fn)
        verdict = sumcheck_verify(c, prover, Rng(0))
        self.assertEqual(verdict.failure, SumcheckFailure.FINAL_TEST)
        self.assertEqual(len(verdict.transcript.rounds), c.l)


class LyingOracleTest(TestCase):
    def test_lie_at(self) -> None:
        inst = pattern_instance()
        honest = honest_oracle(inst)
        liar = lie_at(honest, [DecisionBit((0, 0))])
        self.assertEqual(liar.answer(DecisionBit((0, 0))), 0)
        self.assertEqual(liar.answer(DecisionBit((1, 0))), 1)
        self.assertEqual(liar.name, "single_lie")

    def test_constant_oracle(self) -> None:
        self.assertEqual(constant_oracle(1).name, "always_1")


class ClaimedAssignmentOracleTest(TestCase):
    def test_answers_from_claim(self) -> None:
        phi = Formula(Var(0), 2)
        oracle = ClaimedAssignmentOracle((0, 1))
        self.assertEqual(oracle.answer(LexmaxQuery(phi, 2)), 1)
        small = Formula(Const(1), 1)
        with self.assertRaises(ArityError):
            oracle.answer(LexmaxQuery(small, 1))
        with_fallback = ClaimedAssignmentOracle((0, 1), LexmaxOracle())
        self.assertEqual(with_fallback.answer(LexmaxQuery(small, 1)), 1)
