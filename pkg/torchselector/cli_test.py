# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.
#
# This source code is licensed under the BSD-style license found in the
# LICENSE file in the root directory of this source tree.

import json
import os
import tempfile
from unittest import TestCase
from unittest.mock import patch

from torchselector.cli import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_THRESHOLD,
    EXIT_TOO_LARGE,
    SEED_ENV,
    run_cli,
)
from torchselector.instance import instance_from_json


class CliTest(TestCase):
    def setUp(self) -> None:
        self._tmp = tempfile.TemporaryDirectory()
        self.dir: str = self._tmp.name

    def tearDown(self) -> None:
        self._tmp.cleanup()

    def path(self, name: str) -> str:
        return os.path.join(self.dir, name)

    def write_json(self, name: str, data: object) -> str:
        path = self.path(name)
        with open(path, "w") as f:
            json.dump(data, f)
        return path

    def gen_pattern(self) -> str:
        out = self.path("inst.json")
        code = run_cli(
            [
                "gen-instance",
                "--template",
                "pattern",
                "--n",
                "2",
                "--b-in",
                "01",
                "--members",
                "0,2",
                "--out",
                out,
            ]
        )
        self.assertEqual(code, EXIT_OK)
        return out

    def test_gen_instance(self) -> None:
        out = self.gen_pattern()
        with open(out) as f:
            inst = instance_from_json(f.read())
        self.assertEqual((inst.m, inst.n, inst.b_in), (0, 2, (0, 1)))

    def test_gen_instance_small_modulus(self) -> None:
        out = self.path("small.json")
        args = ["gen-instance", "--template", "tautology", "--n", "1", "--modulus", "101"]
        self.assertEqual(run_cli(args + ["--out", out]), EXIT_CONFIG)
        self.assertEqual(run_cli(args + ["--allow-small", "--out", out]), EXIT_OK)

    def test_verify_sumcheck(self) -> None:
        inst = self.gen_pattern()
        transcript = self.path("transcript.json")
        code = run_cli(
            ["verify-sumcheck", "--instance", inst, "--transcript", transcript, "--seed", "3"]
        )
        self.assertEqual(code, EXIT_OK)
        with open(transcript) as f:
            data = json.load(f)
        self.assertTrue(data["g1"]["accepted"])
        self.assertTrue(data["g2"]["accepted"])

    def test_verify_sumcheck_adversary(self) -> None:
        inst = self.gen_pattern()
        transcript = self.path("transcript.json")
        code = run_cli(
            [
                "verify-sumcheck",
                "--instance",
                inst,
                "--adversary",
                "flip_at_target",
                "--transcript",
                transcript,
            ]
        )
        self.assertEqual(code, EXIT_OK)
        with open(transcript) as f:
            data = json.load(f)
        self.assertFalse(data["g1"]["accepted"])
        self.assertEqual(data["g1"]["failure"], "ConsistencyTest")

    def test_verify_sumcheck_bad_adversary(self) -> None:
        inst = self.gen_pattern()
        code = run_cli(["verify-sumcheck", "--instance", inst, "--adversary", "nobody"])
        self.assertEqual(code, EXIT_CONFIG)

    def test_run(self) -> None:
        config = self.write_json(
            "config.json",
            {
                "instances": [
                    {"template": "pattern", "m": 0, "n": 2, "b_in": "01", "members": [0, 2]}
                ],
                "adversaries": ["always_one"],
                "trials": 2,
            },
        )
        out = self.path("report.json")
        # 2/2 has a Wilson lower bound below 2/3
        self.assertEqual(run_cli(["run", "--config", config, "--out", out]), EXIT_THRESHOLD)
        code = run_cli(["run", "--config", config, "--out", out, "--threshold", "0.1"])
        self.assertEqual(code, EXIT_OK)
        with open(out) as f:
            report = json.load(f)
        self.assertEqual(len(report["rows"]), 2)
        self.assertEqual(report["config"]["trials"], 2)

    def test_run_csv_and_overrides(self) -> None:
        config = self.write_json(
            "config.json",
            {
                "instances": [{"template": "tautology", "m": 0, "n": 1, "b_in": "1"}],
                "adversaries": ["honest"],
                "trials": 50,
            },
        )
        out = self.path("report.csv")
        code = run_cli(
            ["run", "--config", config, "--trials", "1", "--format", "csv", "--out", out]
        )
        self.assertEqual(code, EXIT_THRESHOLD)
        with open(out) as f:
            lines = f.read().splitlines()
        self.assertTrue(lines[0].startswith("instance,adversary,selector"))
        self.assertEqual(len(lines), 2)

    def test_run_errors(self) -> None:
        missing = self.path("missing.json")
        self.assertEqual(run_cli(["run", "--config", missing]), EXIT_CONFIG)
        bad = self.write_json("bad.json", {"trials": 0})
        self.assertEqual(run_cli(["run", "--config", bad]), EXIT_CONFIG)
        large = self.write_json(
            "large.json",
            {
                "instances": [{"template": "tautology", "m": 0, "n": 5}],
                "adversaries": ["honest"],
                "trials": 1,
            },
        )
        self.assertEqual(run_cli(["run", "--config", large]), EXIT_TOO_LARGE)

    def test_seed_env(self) -> None:
        with patch.dict(os.environ, {SEED_ENV: "abc"}):
            self.assertEqual(
                run_cli(["gen-instance", "--template", "tautology", "--n", "1"]), EXIT_CONFIG
            )
        with patch.dict(os.environ, {SEED_ENV: "5"}):
            out = self.path("seeded.json")
            code = run_cli(
                ["gen-instance", "--template", "random", "--n", "1", "--out", out]
            )
            self.assertEqual(code, EXIT_OK)

    def test_preset(self) -> None:
        out = self.path("preset.json")
        self.assertEqual(run_cli(["preset", "dsr", "--out", out]), EXIT_OK)
        with open(out) as f:
            results = json.load(f)
        self.assertEqual(results[0]["name"], "dsr")
        self.assertTrue(results[0]["passed"])

    def test_demo_advice(self) -> None:
        config = self.write_json("advice.json", {"draws": 20, "good_fraction": 1.0})
        out = self.path("advice_report.json")
        code = run_cli(["demo-advice", "--config", config, "--seed", "2", "--out", out])
        self.assertEqual(code, EXIT_OK)
        with open(out) as f:
            report = json.load(f)
        self.assertEqual(report["draws"], 20)
        self.assertEqual(report["config"]["seed"], 2)

    def test_demo_advice_bad_config(self) -> None:
        config = self.write_json("advice.json", {"advice_bits": 9})
        self.assertEqual(run_cli(["demo-advice", "--config", config]), EXIT_CONFIG)
