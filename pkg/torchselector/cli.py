# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.
#
# This source code is licensed under the BSD-style license found in the
# LICENSE file in the root directory of this source tree.

"""
Command line entry point ``selector``.

Exit codes: 0 on success, 1 when a success threshold is missed, 2 on a
configuration error and 3 when an instance exceeds the brute force budget.
``SELECTOR_SEED`` overrides ``--seed``.
"""

import argparse
import json
import logging
import os
import sys
from typing import List, Optional

from torchselector.adversaries import make_adversary, parse_adversary
from torchselector.errors import ConfigError, InstanceTooLarge, SelectorError
from torchselector.field import DEFAULT_MODULUS, PrimeField, Rng
from torchselector.harness import (
    SUCCESS_THRESHOLD,
    AdviceDemoConfig,
    TrialConfig,
    demo_advice_removal,
    run_trials,
)
from torchselector.instance import (
    TEMPLATES,
    brute_force_VPhi,
    honest_oracle,
    instance_from_json,
    instance_to_json,
    template,
)
from torchselector.lowdegree import OraclePointFunction
from torchselector.presets import PRESETS, PresetOptions, run_preset
from torchselector.sumcheck import OracleCoeffProvider, run_constraint_checks

logger: logging.Logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_THRESHOLD = 1
EXIT_CONFIG = 2
EXIT_TOO_LARGE = 3

SEED_ENV = "SELECTOR_SEED"


def _seed(arg: Optional[int]) -> Optional[int]:
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError as e:
            raise ConfigError(f"{SEED_ENV}={env!r} is not an integer") from e
    return arg


def _read(path: str) -> str:
    try:
        with open(path) as f:
            return f.read()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e


def _write(text: str, path: Optional[str]) -> None:
    if path is None:
        print(text)
        return
    with open(path, "w") as f:
        f.write(text if text.endswith("\n") else text + "\n")
    logger.info(f"wrote {path}")


def _load_json(path: str) -> dict:
    try:
        return json.loads(_read(path))
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON in {path}: {e}") from e


def _cmd_run(args: argparse.Namespace) -> int:
    data = _load_json(args.config)
    if not isinstance(data, dict):
        raise ConfigError("trial config must be a JSON object")
    seed = _seed(args.seed)
    if seed is not None:
        data["seed"] = seed
    if args.trials is not None:
        data["trials"] = args.trials
    if args.workers is not None:
        data["workers"] = args.workers
    report = run_trials(TrialConfig.from_dict(data))
    _write(report.to_csv() if args.format == "csv" else report.to_json(), args.out)
    failing = report.failing_rows(args.threshold)
    for row in failing:
        logger.warning(
            f"{row.instance} vs {row.adversary} (honest slot {row.honest_slot}) "
            f"below threshold: {row.successes}/{row.trials}"
        )
    return EXIT_THRESHOLD if failing else EXIT_OK


def _cmd_demo_advice(args: argparse.Namespace) -> int:
    data = _load_json(args.config) if args.config else {}
    seed = _seed(args.seed)
    if seed is not None:
        data["seed"] = seed
    report = demo_advice_removal(AdviceDemoConfig.from_dict(data))
    _write(report.to_json(), args.out)
    return EXIT_OK if report.rate >= SUCCESS_THRESHOLD else EXIT_THRESHOLD


def _cmd_gen_instance(args: argparse.Namespace) -> int:
    seed = _seed(args.seed) or 0
    field = PrimeField(args.modulus, allow_small=args.allow_small)
    b_in = tuple(int(ch) for ch in args.b_in) if args.b_in else None
    members = [int(v) for v in args.members.split(",")] if args.members else None
    inst = template(args.template, args.m, args.n, b_in, field, Rng(seed), members)
    _write(instance_to_json(inst), args.out)
    return EXIT_OK


def _cmd_verify_sumcheck(args: argparse.Namespace) -> int:
    inst = instance_from_json(_read(args.instance), allow_small=args.allow_small)
    rng = Rng(_seed(args.seed) or 0)
    V = brute_force_VPhi(inst)
    if args.adversary == "honest":
        oracle = honest_oracle(inst, V)
    else:
        oracle = make_adversary(parse_adversary(args.adversary), inst, rng.spawn("adversary"), V)
    fn = OraclePointFunction(oracle, inst.field, inst.n)
    verdicts = run_constraint_checks(
        inst, fn, OracleCoeffProvider(oracle, inst.field), rng.spawn("verifier")
    )
    for kind, verdict in verdicts.items():
        state = "accepted" if verdict.accepted else f"rejected ({verdict.failure.value})"
        logger.info(f"{kind.value}: {state}")
    out = {kind.value: v.to_dict() for kind, v in verdicts.items()}
    _write(json.dumps(out, sort_keys=True, indent=2), args.transcript)
    return EXIT_OK


def _cmd_preset(args: argparse.Namespace) -> int:
    opts = PresetOptions(trials=args.trials, seed=_seed(args.seed) or 0, workers=args.workers)
    results = run_preset(args.name, opts)
    text = json.dumps([r.to_dict() for r in results], sort_keys=True, indent=2)
    _write(text, args.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_THRESHOLD


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="selector", description="selector experiments"
    )
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run trials from a JSON config")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--trials", type=int)
    run.add_argument("--workers", type=int)
    run.add_argument("--out")
    run.add_argument("--format", choices=("json", "csv"), default="json")
    run.add_argument("--threshold", type=float, default=SUCCESS_THRESHOLD)
    run.set_defaults(func=_cmd_run)

    demo = sub.add_parser("demo-advice", help="advice removal demonstration")
    demo.add_argument("--config")
    demo.add_argument("--seed", type=int)
    demo.add_argument("--out")
    demo.set_defaults(func=_cmd_demo_advice)

    gen = sub.add_parser("gen-instance", help="write a template instance")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--m", type=int, default=0)
    gen.add_argument("--template", choices=TEMPLATES, required=True)
    gen.add_argument("--b-in")
    gen.add_argument("--members", help="comma separated member indices")
    gen.add_argument("--seed", type=int)
    gen.add_argument("--modulus", type=int, default=DEFAULT_MODULUS)
    gen.add_argument("--allow-small", action="store_true")
    gen.add_argument("--out")
    gen.set_defaults(func=_cmd_gen_instance)

    verify = sub.add_parser("verify-sumcheck", help="run sum-check against one oracle")
    verify.add_argument("--instance", required=True)
    verify.add_argument("--adversary", default="honest")
    verify.add_argument("--transcript")
    verify.add_argument("--seed", type=int)
    verify.add_argument("--allow-small", action="store_true")
    verify.set_defaults(func=_cmd_verify_sumcheck)

    preset = sub.add_parser("preset", help="run a named acceptance preset")
    preset.add_argument("name", choices=sorted(PRESETS) + ["all"])
    preset.add_argument("--trials", type=int)
    preset.add_argument("--seed", type=int)
    preset.add_argument("--workers", type=int, default=1)
    preset.add_argument("--out")
    preset.set_defaults(func=_cmd_preset)
    return parser


def run_cli(argv: List[str]) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO)
    try:
        return args.func(args)
    except InstanceTooLarge as e:
        logger.error(f"instance too large: {e}")
        return EXIT_TOO_LARGE
    except ConfigError as e:
        logger.error(f"config error: {e}")
        return EXIT_CONFIG
    except SelectorError as e:
        if isinstance(e, ValueError):
            logger.error(f"invalid input: {e}")
            return EXIT_CONFIG
        raise


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
