# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.
#
# This source code is licensed under the BSD-style license found in the
# LICENSE file in the root directory of this source tree.

from unittest import TestCase
from unittest.mock import Mock

from torchselector.errors import OracleFailure
from torchselector.oracle import (
    ConstantOracle,
    ConstraintKind,
    DecisionBit,
    LanguageOracle,
    MemoizedOracle,
    Membership,
    MlePoint,
    SumcheckCoeffs,
    memoize,
    query_kind,
)


class MemoizedOracleTest(TestCase):
    def test_repeated_queries_hit_cache(self) -> None:
        inner = Mock()
        inner.answer.side_effect = [1, 0]
        oracle = MemoizedOracle(inner, name="mock")

        self.assertEqual(oracle.answer(DecisionBit((0, 1))), 1)
        self.assertEqual(oracle.answer(DecisionBit((0, 1))), 1)
        self.assertEqual(oracle.answer(DecisionBit((1, 1))), 0)
        self.assertEqual(inner.answer.call_count, 2)
        self.assertEqual(oracle.query_counts(), {"DecisionBit": 3})
        self.assertEqual(oracle.log, [DecisionBit((0, 1)), DecisionBit((1, 1))])

    def test_counts_per_kind(self) -> None:
        oracle = memoize(ConstantOracle(0), "zero")
        oracle.answer(MlePoint((1, 2)))
        oracle.answer(Membership("x"))
        oracle.answer(MlePoint((3, 4)))
        self.assertEqual(oracle.query_counts(), {"Membership": 1, "MlePoint": 2})

    def test_wraps_failures(self) -> None:
        def broken(query: object) -> int:
            raise RuntimeError("boom")

        oracle = memoize(LanguageOracle(broken), "broken")
        with self.assertLogs("torchselector.oracle", level="ERROR"):
            with self.assertRaises(OracleFailure) as cm:
                oracle.answer(Membership(3))
        self.assertEqual(cm.exception.query, Membership(3))
        self.assertIsInstance(cm.exception.original_exception, RuntimeError)
        self.assertIn("boom", cm.exception.stack_trace)

    def test_memoize_is_idempotent(self) -> None:
        oracle = memoize(ConstantOracle(1), "one")
        self.assertIs(memoize(oracle, "other"), oracle)
        self.assertEqual(oracle.name, "one")


class ConstantOracleTest(TestCase):
    def test_answers(self) -> None:
        oracle = ConstantOracle(1)
        self.assertEqual(oracle.answer(DecisionBit((0,))), 1)
        self.assertEqual(
            oracle.answer(SumcheckCoeffs(ConstraintKind.G1, (1,), (), 1)), [1]
        )

    def test_query_kind(self) -> None:
        self.assertEqual(query_kind(MlePoint(())), "MlePoint")
