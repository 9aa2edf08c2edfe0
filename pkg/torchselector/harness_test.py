# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.
#
# This source code is licensed under the BSD-style license found in the
# LICENSE file in the root directory of this source tree.

import csv
import io
import json
from unittest import TestCase

from parameterized import parameterized

from torchselector.errors import ConfigError
from torchselector.harness import (
    HONEST,
    AdviceDemoConfig,
    AdviceMachine,
    TrialConfig,
    TrialRow,
    demo_advice_removal,
    parity,
    run_trials,
    wilson_interval,
)
from torchselector.selector import AmplifiedSelector, ExpNpSelector


def small_config(**overrides) -> dict:
    data = {
        "instances": [
            {"template": "pattern", "m": 0, "n": 2, "b_in": "01", "members": [0, 2]}
        ],
        "adversaries": [HONEST, "flip_at_target", "always_one"],
        "trials": 3,
        "seed": 7,
    }
    data.update(overrides)
    return data


class WilsonIntervalTest(TestCase):
    def test_bounds(self) -> None:
        self.assertEqual(wilson_interval(0, 0), (0.0, 1.0))
        low, high = wilson_interval(10, 10)
        self.assertAlmostEqual(high, 1.0)
        self.assertAlmostEqual(low, 0.7225, places=3)
        low, high = wilson_interval(5, 10)
        self.assertAlmostEqual(low + high, 1.0)

    def test_row_interval(self) -> None:
        row = TrialRow("i", "a", "expnp", 0, 200, 190, {})
        self.assertAlmostEqual(row.rate, 0.95)
        self.assertGreater(row.interval[0], 2 / 3)


class TrialConfigTest(TestCase):
    def test_defaults(self) -> None:
        config = TrialConfig.from_dict({})
        self.assertEqual(len(config.instances), 12)
        self.assertEqual(config.adversaries[0], HONEST)
        self.assertEqual(len(config.adversaries), 10)
        self.assertEqual(config.trials, 200)
        self.assertIsInstance(config.build_selector(), ExpNpSelector)

    def test_template_entry(self) -> None:
        config = TrialConfig.from_dict(small_config())
        name, inst = config.instances[0]
        self.assertEqual(name, "pattern_m0_n2_b01")
        self.assertEqual(inst.b_in, (0, 1))

    def test_inline_entry(self) -> None:
        config = TrialConfig.from_dict(small_config())
        echoed = config.to_dict()["instances"]
        again = TrialConfig.from_dict(small_config(instances=echoed))
        self.assertEqual(again.instances, config.instances)

    def test_amplified_selector(self) -> None:
        config = TrialConfig.from_dict(small_config(amplification_reps=3))
        self.assertIsInstance(config.build_selector(), AmplifiedSelector)

    @parameterized.expand(
        [
            ("unknown_key", {"bogus": 1}),
            ("selector", {"selector": "magic"}),
            ("trials", {"trials": 0}),
            ("workers", {"workers": 0}),
            ("adversary", {"adversaries": ["nobody"]}),
            ("delta", {"adversaries": ["sparse_corruption:0.5"]}),
            ("even_reps", {"amplification_reps": 2}),
            ("modulus", {"modulus": 100}),
            ("small_modulus", {"modulus": 101}),
            ("instances", {"instances": []}),
            ("template", {"instances": [{"template": "nope", "m": 0, "n": 1}]}),
            ("missing_n", {"instances": [{"template": "pattern", "m": 0}]}),
        ]
    )
    def test_invalid(self, _name: str, override: dict) -> None:
        with self.assertRaises(ConfigError):
            TrialConfig.from_dict(small_config(**override))

    def test_small_modulus_opt_in(self) -> None:
        config = TrialConfig.from_dict(small_config(modulus=101, allow_small=True))
        self.assertEqual(config.instances[0][1].field.p, 101)

    def test_invalid_json(self) -> None:
        with self.assertRaises(ConfigError):
            TrialConfig.from_json("[")


class RunTrialsTest(TestCase):
    def test_rows(self) -> None:
        report = run_trials(TrialConfig.from_dict(small_config()))
        cells = [(r.adversary, r.honest_slot) for r in report.rows]
        self.assertEqual(
            cells,
            [
                (HONEST, 0),
                ("flip_at_target", 0),
                ("flip_at_target", 1),
                ("always_one", 0),
                ("always_one", 1),
            ],
        )
        for row in report.rows:
            self.assertEqual(row.successes, 3, row)
        self.assertEqual(report.mean_rate(), 1.0)
        self.assertIn("pattern_m0_n2_b01", report.budget)

    def test_deterministic_across_workers(self) -> None:
        serial = run_trials(TrialConfig.from_dict(small_config()))
        threaded = run_trials(TrialConfig.from_dict(small_config(workers=3)))
        self.assertEqual(serial.to_json(), threaded.to_json())

    def test_json_and_csv(self) -> None:
        report = run_trials(
            TrialConfig.from_dict(small_config(adversaries=["always_one"], record_timing=True))
        )
        data = json.loads(report.to_json())
        self.assertEqual(len(data["rows"]), 2)
        self.assertIn("wilson_low", data["rows"][0])
        self.assertIn("mean_wall_time", data["rows"][0])
        rows = list(csv.DictReader(io.StringIO(report.to_csv())))
        self.assertEqual(len(rows), 2)
        self.assertIn("queries_SumcheckCoeffs", rows[0])
        self.assertIn("queries_MlePoint", rows[0])
        self.assertEqual(rows[0]["successes"], "3")

    def test_failing_rows(self) -> None:
        report = run_trials(TrialConfig.from_dict(small_config(adversaries=[HONEST])))
        # 3/3 has a Wilson lower bound below 2/3
        self.assertFalse(report.meets())
        self.assertEqual(len(report.failing_rows()), 1)
        self.assertTrue(report.meets(0.4))


class AdviceDemoTest(TestCase):
    def test_config_validation(self) -> None:
        with self.assertRaises(ConfigError):
            AdviceDemoConfig(advice_bits=4)
        with self.assertRaises(ConfigError):
            AdviceDemoConfig(inner="magic")
        with self.assertRaises(ConfigError):
            AdviceDemoConfig(checker_error=0.4)
        with self.assertRaises(ConfigError):
            AdviceDemoConfig.from_dict({"colour": "blue"})

    def test_machine(self) -> None:
        machine = AdviceMachine(AdviceDemoConfig())
        self.assertEqual(len(machine.strings), 31)
        self.assertGreaterEqual(machine.good_fraction, 5 / 6)
        for r in range(2**machine.cfg.random_bits):
            a = int(machine.good_advice[r])
            if a >= 0:
                for s in machine.strings:
                    self.assertEqual(machine.answer(s, r, a), parity(s))

    def test_machine_rejects_low_fraction(self) -> None:
        with self.assertRaises(ConfigError):
            AdviceMachine(AdviceDemoConfig(good_fraction=0.5))

    def test_dsr_removal(self) -> None:
        report = demo_advice_removal(AdviceDemoConfig(draws=40, seed=3))
        self.assertEqual(report.honest_present_successes, report.honest_present)
        self.assertGreaterEqual(report.rate, 2 / 3)
        data = json.loads(report.to_json())
        self.assertEqual(data["draws"], 40)

    def test_checker_removal(self) -> None:
        report = demo_advice_removal(AdviceDemoConfig(draws=60, inner="checker", seed=1))
        self.assertGreaterEqual(report.rate, 0.6)
