# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.
#
# This source code is licensed under the BSD-style license found in the
# LICENSE file in the root directory of this source tree.

import json
from unittest import TestCase

from parameterized import parameterized

from torchselector.boolean import Const, Formula, Var
from torchselector.errors import ArityError, ConfigError, InstanceTooLarge
from torchselector.field import PrimeField, Rng
from torchselector.instance import (
    TEMPLATES,
    AssignmentTable,
    SatOracle,
    SuccinctInstance,
    brute_force_VPhi,
    eval_F_Phi,
    honest_oracle,
    instance_from_dict,
    instance_from_json,
    instance_suite,
    instance_to_dict,
    instance_to_json,
    language_oracle_for,
    satisfying_tables,
    template,
)
from torchselector.lowdegree import Accept, OraclePointFunction, multilinearity_test
from torchselector.oracle import DecisionBit, Membership, MlePoint


class SuccinctInstanceTest(TestCase):
    def test_validation(self) -> None:
        with self.assertRaises(ArityError):
            SuccinctInstance(0, 0, Formula(Const(1), 3), ())
        with self.assertRaises(ArityError):
            SuccinctInstance(0, 1, Formula(Const(1), 5), (0,))
        with self.assertRaises(ArityError):
            SuccinctInstance(0, 1, Formula(Const(1), 6), (2,))

    def test_budget(self) -> None:
        inst = template("tautology", 0, 5)
        with self.assertRaises(InstanceTooLarge):
            brute_force_VPhi(inst)

    def test_with_b_in(self) -> None:
        inst = template("tautology", 0, 2)
        self.assertEqual(inst.with_b_in((1, 1)).b_in_index, 3)


class AssignmentTableTest(TestCase):
    def test_int_roundtrip(self) -> None:
        table = AssignmentTable.from_int(0b1010, 2)
        self.assertEqual(table.values, (1, 0, 1, 0))
        self.assertEqual(table.as_int(), 10)
        self.assertEqual(table[(1, 0)], 1)
        self.assertEqual(table.flipped(1).bitstring(), "1110")

    def test_power_of_two(self) -> None:
        with self.assertRaises(ArityError):
            AssignmentTable((1, 0, 1))


class BruteForceTest(TestCase):
    @parameterized.expand(
        [
            ("tautology_m0_n1_b1", "11", 1),
            ("contradiction_m0_n1_b0", "00", 0),
            ("last_input_m1_n2_b10", "1111", 1),
            ("not_first_input_m0_n2_b01", "0000", 0),
            ("pattern_m0_n2_b01", "1010", 0),
            ("pattern_m1_n2_b10", "1010", 1),
            ("parity_m0_n3_b011", "10010110", 1),
            ("independent_set_m0_n2_b01", "1001", 0),
            ("independent_set_m0_n2_b11", "1001", 1),
            ("pinned_pairs_m0_n2_b10", "0011", 1),
            ("y_guarded_m2_n2_b00", "1101", 1),
            ("pattern_m4_n3_b101", "01000110", 1),
        ]
    )
    def test_suite_ground_truth(self, name: str, table: str, bit: int) -> None:
        inst = dict(instance_suite())[name]
        V = brute_force_VPhi(inst)
        self.assertEqual(V.bitstring(), table)
        self.assertEqual(V[inst.b_in], bit)

    def test_suite_has_both_answers(self) -> None:
        bits = {brute_force_VPhi(inst)[inst.b_in] for _, inst in instance_suite()}
        self.assertEqual(bits, {0, 1})

    def test_satisfying_tables_descending(self) -> None:
        inst = template("pattern", 0, 2, members=(0, 2))
        tables = [t.bitstring() for t in satisfying_tables(inst)]
        self.assertEqual(tables, ["1010", "1000", "0010", "0000"])
        for t in satisfying_tables(inst):
            self.assertEqual(eval_F_Phi(inst, t), 1)
        self.assertEqual(eval_F_Phi(inst, AssignmentTable.from_int(0b0100, 2)), 0)

    def test_random_lexmax_is_maximal(self) -> None:
        rng = Rng(17)
        for _ in range(5):
            inst = template("random", 0, 2, rng=rng)
            sats = satisfying_tables(inst)
            V = brute_force_VPhi(inst)
            if sats:
                self.assertEqual(V, sats[0])
                self.assertEqual(V.as_int(), max(t.as_int() for t in sats))
            else:
                self.assertEqual(V, AssignmentTable.zeros(2))


class HonestOracleTest(TestCase):
    def test_answers_consistently(self) -> None:
        inst = template("pattern", 0, 2, (0, 0), members=(0, 2))
        oracle = honest_oracle(inst)
        self.assertEqual(oracle.name, "honest")
        self.assertEqual(oracle.answer(DecisionBit((0, 0))), 1)
        self.assertEqual(int(oracle.answer(MlePoint((1, 0)))), 1)
        fn = OraclePointFunction(oracle, inst.field, inst.n)
        self.assertEqual(multilinearity_test(fn, inst.n, 8, Rng(0)), Accept())

    def test_membership_oracles(self) -> None:
        self.assertEqual(SatOracle().answer(Membership(Formula(Var(0), 1))), 1)
        self.assertEqual(SatOracle().answer(Membership(Formula(Const(0), 1))), 0)
        parity = language_oracle_for(lambda x: sum(x) % 2)
        self.assertEqual(parity.answer(Membership((1, 1, 1))), 1)
        with self.assertRaises(TypeError):
            parity.answer(DecisionBit((0,)))


class SerializationTest(TestCase):
    def test_roundtrip(self) -> None:
        inst = template("independent_set", 0, 2, (1, 1))
        data = json.loads(instance_to_json(inst))
        self.assertEqual(data["b_in"], "11")
        self.assertEqual(data["p"], PrimeField().p)
        self.assertEqual(instance_from_json(instance_to_json(inst)), inst)
        self.assertEqual(instance_from_dict(instance_to_dict(inst)), inst)

    def test_small_field_needs_opt_in(self) -> None:
        field = PrimeField(101, allow_small=True)
        data = instance_to_dict(template("tautology", 0, 1, field=field))
        with self.assertRaises(ConfigError):
            instance_from_dict(data)
        self.assertEqual(instance_from_dict(data, allow_small=True).field.p, 101)

    @parameterized.expand(
        [
            ("missing_phi", {"m": 0, "n": 1, "b_in": "1"}),
            ("bad_b_in", {"m": 0, "n": 1, "b_in": "12", "phi": {"num_vars": 6, "root": {"op": "const", "value": 1}}}),
            ("wrong_width", {"m": 0, "n": 2, "b_in": "1", "phi": {"num_vars": 6, "root": {"op": "const", "value": 1}}}),
        ]
    )
    def test_malformed(self, _name: str, data: dict) -> None:
        with self.assertRaises(ConfigError):
            instance_from_dict(data)

    def test_invalid_json(self) -> None:
        with self.assertRaises(ConfigError):
            instance_from_json("{")


class TemplateTest(TestCase):
    def test_every_template_builds(self) -> None:
        for name in TEMPLATES:
            inst = template(name, 1, 2, rng=Rng(3), members=(0, 3))
            self.assertEqual(inst.phi.num_vars, 1 + 3 * 2 + 3)

    def test_unknown(self) -> None:
        with self.assertRaises(ConfigError):
            template("nope", 0, 1)
        with self.assertRaises(ConfigError):
            template("y_guarded", 0, 2)
