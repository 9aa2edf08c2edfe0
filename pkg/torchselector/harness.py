# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.
#
# This source code is licensed under the BSD-style license found in the
# LICENSE file in the root directory of this source tree.

"""
Harness
=======

Monte-Carlo experiments over selector sessions.

:func:`run_trials` duels the honest oracle against each configured adversary
on each configured instance, in both oracle slots, and scores every session
against the brute force ground truth. Trial ``t`` draws all of its randomness
from ``Rng(seed).trial(t)``, so reports are deterministic functions of the
configuration and can be computed on a thread pool without changing a byte.

:func:`demo_advice_removal` runs the tournament over the ``2**a`` oracles
obtained by fixing each advice string of a toy randomized machine with advice.

Usage:

.. code-block:: python

    from torchselector.harness import TrialConfig, run_trials

    config = TrialConfig.from_dict({"instances": "suite", "trials": 50})
    report = run_trials(config)
    print(report.to_json())
"""

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dataclass_field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from torchselector.adversaries import (
    AdversaryKind,
    MAX_CORRUPTION,
    AdversarySpec,
    make_adversary,
    parse_adversary,
)
from torchselector.errors import ArityError, ConfigError, SelectorError
from torchselector.field import DEFAULT_MODULUS, PrimeField, Rng
from torchselector.instance import (
    AssignmentTable,
    SuccinctInstance,
    brute_force_VPhi,
    honest_oracle,
    instance_from_dict,
    instance_suite,
    instance_to_dict,
    template,
)
from torchselector.oracle import Membership, Oracle
from torchselector.selector import (
    CheckerSelector,
    DsrSelector,
    ExactChecker,
    ExpNpSelector,
    NoisyChecker,
    ParitySelfReduction,
    Selector,
    SelectorParams,
    amplify,
    instance_budget,
    reps_for,
    tournament,
)

logger: logging.Logger = logging.getLogger(__name__)

HONEST: str = "honest"
SELECTORS: Tuple[str, ...] = ("expnp",)
SUCCESS_THRESHOLD: float = 2 / 3
GOOD_ADVICE_FRACTION: float = 5 / 6
_Z95: float = 1.959963984540054


def wilson_interval(successes: int, trials: int, z: float = _Z95) -> Tuple[float, float]:
    """
    Wilson score interval for a binomial proportion.

    Args:
        successes: number of successes
        trials: number of trials
        z: normal quantile, 95% by default
    """
    if trials == 0:
        return (0.0, 1.0)
    phat = successes / trials
    denom = 1 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def _default_adversaries() -> List[str]:
    return [HONEST] + [k.value for k in AdversaryKind]


def _parse_instances(
    entries: Any, field: PrimeField, allow_small: bool
) -> List[Tuple[str, SuccinctInstance]]:
    if entries == "suite":
        return instance_suite(field)
    if not isinstance(entries, list) or not entries:
        raise ConfigError("instances must be \"suite\" or a non-empty list")
    out = []
    for i, entry in enumerate(entries):
        if entry == "suite":
            out.extend(instance_suite(field))
            continue
        if not isinstance(entry, dict):
            raise ConfigError(f"instance entry {i} must be an object")
        try:
            if "instance" in entry:
                data = dict(entry["instance"])
                data.setdefault("p", field.p)
                inst = instance_from_dict(data, allow_small=allow_small)
                name = entry.get("name", f"inline{i}")
            else:
                b_in = entry.get("b_in")
                members = entry.get("members")
                inst = template(
                    entry["template"],
                    int(entry["m"]),
                    int(entry["n"]),
                    tuple(int(ch) for ch in str(b_in)) if b_in is not None else None,
                    field,
                    Rng(int(entry.get("seed", i))),
                    members,
                )
                bits = "".join(str(b) for b in inst.b_in)
                default = f"{entry['template']}_m{inst.m}_n{inst.n}_b{bits}"
                name = entry.get("name", default)
        except KeyError as e:
            raise ConfigError(f"instance entry {i} is missing {e}") from e
        except (ArityError, TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"instance entry {i}: {e}") from e
        out.append((name, inst))
    return out


@dataclass
class TrialConfig:
    """
    Configuration of :func:`run_trials`.

    Args:
        instances: named instances
        adversaries: adversary labels, ``"honest"`` for an honest second oracle
        selector: the selector under test
        trials: trials per (instance, adversary, honest slot)
        seed: base seed, trial ``t`` uses ``seed ^ t``
        modulus: field size
        ml_test_reps: multilinearity test repetitions, ``32 * n`` if None
        amplification_reps: odd majority-vote repetitions per session
        workers: worker threads
        record_timing: record mean wall time per row
    """

    instances: List[Tuple[str, SuccinctInstance]]
    adversaries: List[str] = dataclass_field(default_factory=_default_adversaries)
    selector: str = "expnp"
    trials: int = 200
    seed: int = 0
    modulus: int = DEFAULT_MODULUS
    ml_test_reps: Optional[int] = None
    amplification_reps: int = 1
    workers: int = 1
    record_timing: bool = False

    def __post_init__(self) -> None:
        if self.selector not in SELECTORS:
            raise ConfigError(f"unknown selector {self.selector!r}, expected one of {SELECTORS}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if not self.instances:
            raise ConfigError("no instances configured")
        for label in self.adversaries:
            self.spec_for(label)
        try:
            self.params()
        except ArityError as e:
            raise ConfigError(str(e)) from e

    @staticmethod
    def spec_for(label: str) -> Optional[AdversarySpec]:
        if label == HONEST:
            return None
        try:
            spec = parse_adversary(label)
        except SelectorError as e:
            raise ConfigError(str(e)) from e
        if spec.kind == AdversaryKind.SPARSE_CORRUPTION and not 0 < spec.delta <= MAX_CORRUPTION:
            raise ConfigError(f"delta must be in (0, {MAX_CORRUPTION}], got {spec.delta}")
        return spec

    def build_selector(self) -> Selector:
        params = self.params()
        inner = ExpNpSelector(params)
        if params.amplification_reps > 1:
            return amplify(inner, params.amplification_reps)
        return inner

    def params(self) -> SelectorParams:
        return SelectorParams(
            ml_test_reps=self.ml_test_reps,
            amplification_reps=self.amplification_reps,
            field=PrimeField(self.modulus, allow_small=True),
            seed=self.seed,
        )

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TrialConfig":
        if not isinstance(data, dict):
            raise ConfigError("trial config must be a JSON object")
        known = {
            "instances",
            "adversaries",
            "selector",
            "trials",
            "seed",
            "modulus",
            "ml_test_reps",
            "amplification_reps",
            "workers",
            "record_timing",
            "allow_small",
        }
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        try:
            allow_small = bool(data.get("allow_small", False))
            field = PrimeField(int(data.get("modulus", DEFAULT_MODULUS)), allow_small=allow_small)
            instances = _parse_instances(data.get("instances", "suite"), field, allow_small)
            ml = data.get("ml_test_reps")
            return cls(
                instances=instances,
                adversaries=[str(a) for a in data.get("adversaries", _default_adversaries())],
                selector=str(data.get("selector", "expnp")),
                trials=int(data.get("trials", 200)),
                seed=int(data.get("seed", 0)),
                modulus=field.p,
                ml_test_reps=int(ml) if ml is not None else None,
                amplification_reps=int(data.get("amplification_reps", 1)),
                workers=int(data.get("workers", 1)),
                record_timing=bool(data.get("record_timing", False)),
            )
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"malformed trial config: {e}") from e

    @classmethod
    def from_json(cls, text: str) -> "TrialConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid config JSON: {e}") from e
        return cls.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "instances": [
                {"name": name, "instance": instance_to_dict(inst)}
                for name, inst in self.instances
            ],
            "adversaries": list(self.adversaries),
            "selector": self.selector,
            "trials": self.trials,
            "seed": self.seed,
            "modulus": self.modulus,
            "ml_test_reps": self.ml_test_reps,
            "amplification_reps": self.amplification_reps,
            "record_timing": self.record_timing,
        }


@dataclass
class TrialResult:
    success: bool
    queries: Dict[str, int]
    wall_time: Optional[float] = None


@dataclass
class TrialRow:
    """
    Aggregate of the trials of one (instance, adversary, selector, honest slot)
    cell.
    """

    instance: str
    adversary: str
    selector: str
    honest_slot: int
    trials: int
    successes: int
    mean_queries: Dict[str, float]
    mean_wall_time: Optional[float] = None

    def __post_init__(self) -> None:
        assert 0 <= self.successes <= self.trials, "successes out of range"

    @property
    def rate(self) -> float:
        return self.successes / self.trials

    @property
    def interval(self) -> Tuple[float, float]:
        return wilson_interval(self.successes, self.trials)

    def to_dict(self) -> Dict[str, Any]:
        low, high = self.interval
        out: Dict[str, Any] = {
            "instance": self.instance,
            "adversary": self.adversary,
            "selector": self.selector,
            "honest_slot": self.honest_slot,
            "trials": self.trials,
            "successes": self.successes,
            "rate": self.rate,
            "wilson_low": low,
            "wilson_high": high,
            "mean_queries": self.mean_queries,
        }
        if self.mean_wall_time is not None:
            out["mean_wall_time"] = self.mean_wall_time
        return out


@dataclass
class TrialReport:
    """
    Result of :func:`run_trials`.

    Args:
        config: echo of the configuration
        rows: one row per cell
        budget: failure-budget terms per instance
    """

    config: Dict[str, Any]
    rows: List[TrialRow]
    budget: Dict[str, Dict[str, float]]

    def mean_rate(self) -> float:
        total = sum(r.trials for r in self.rows)
        return sum(r.successes for r in self.rows) / total if total else 0.0

    def meets(self, threshold: float = SUCCESS_THRESHOLD) -> bool:
        return all(r.interval[0] >= threshold for r in self.rows)

    def failing_rows(self, threshold: float = SUCCESS_THRESHOLD) -> List[TrialRow]:
        return [r for r in self.rows if r.interval[0] < threshold]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config,
            "rows": [r.to_dict() for r in self.rows],
            "mean_rate": self.mean_rate(),
            "budget": self.budget,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_csv(self) -> str:
        kinds = sorted({k for r in self.rows for k in r.mean_queries})
        columns = [
            "instance",
            "adversary",
            "selector",
            "honest_slot",
            "trials",
            "successes",
            "rate",
            "wilson_low",
            "wilson_high",
        ] + [f"queries_{k}" for k in kinds]
        if any(r.mean_wall_time is not None for r in self.rows):
            columns.append("mean_wall_time")
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            d = row.to_dict()
            flat = {c: d[c] for c in columns if c in d}
            for k in kinds:
                flat[f"queries_{k}"] = row.mean_queries.get(k, 0.0)
            writer.writerow(flat)
        return buf.getvalue()


@dataclass(frozen=True)
class _Cell:
    name: str
    inst: SuccinctInstance
    table: AssignmentTable
    adversary: str
    spec: Optional[AdversarySpec]
    honest_slot: int

    @property
    def truth(self) -> int:
        return self.table[self.inst.b_in_index]


def _run_trial(
    cell: _Cell, config: TrialConfig, selector: Selector, trial: int
) -> TrialResult:
    rng = Rng(config.seed).trial(trial)
    start = time.perf_counter() if config.record_timing else None
    honest = honest_oracle(cell.inst, cell.table)
    if cell.spec is None:
        other = honest_oracle(cell.inst, cell.table)
    else:
        other = make_adversary(cell.spec, cell.inst, rng.spawn("adversary"), cell.table)
    pair = (honest, other) if cell.honest_slot == 0 else (other, honest)
    outcome = selector.select(cell.inst, pair[0], pair[1], rng.spawn("selector"))
    queries: Dict[str, int] = {}
    for counts in outcome.queries_made.values():
        for kind, count in counts.items():
            queries[kind] = queries.get(kind, 0) + count
    wall = time.perf_counter() - start if start is not None else None
    return TrialResult(outcome.answer == cell.truth, queries, wall)


def _cells(config: TrialConfig) -> List[_Cell]:
    cells = []
    for name, inst in config.instances:
        table = brute_force_VPhi(inst)
        for label in config.adversaries:
            spec = config.spec_for(label)
            slots = (0,) if spec is None else (0, 1)
            for slot in slots:
                cells.append(_Cell(name, inst, table, label, spec, slot))
    return cells


def _aggregate(cell: _Cell, selector: str, results: Sequence[TrialResult]) -> TrialRow:
    n = len(results)
    kinds = sorted({k for r in results for k in r.queries})
    mean_queries = {k: sum(r.queries.get(k, 0) for r in results) / n for k in kinds}
    walls = [r.wall_time for r in results if r.wall_time is not None]
    return TrialRow(
        instance=cell.name,
        adversary=cell.adversary,
        selector=selector,
        honest_slot=cell.honest_slot,
        trials=n,
        successes=sum(1 for r in results if r.success),
        mean_queries=mean_queries,
        mean_wall_time=sum(walls) / len(walls) if walls else None,
    )


def run_trials(config: TrialConfig) -> TrialReport:
    """
    Runs every configured cell for ``config.trials`` trials.

    Raises:
        InstanceTooLarge: an instance is beyond the brute force budget
    """
    selector = config.build_selector()
    cells = _cells(config)
    jobs = [(c, t) for c in range(len(cells)) for t in range(config.trials)]
    logger.info(
        f"running {len(jobs)} sessions over {len(cells)} cells with {config.workers} workers"
    )

    def work(job: Tuple[int, int]) -> TrialResult:
        c, t = job
        return _run_trial(cells[c], config, selector, t)

    if config.workers == 1:
        results = [work(job) for job in jobs]
    else:
        with ThreadPoolExecutor(
            max_workers=config.workers, thread_name_prefix="trial"
        ) as executor:
            results = list(executor.map(work, jobs))

    rows = []
    for c, cell in enumerate(cells):
        chunk = results[c * config.trials : (c + 1) * config.trials]
        row = _aggregate(cell, config.selector, chunk)
        logger.info(
            f"{row.instance} vs {row.adversary} (honest slot {row.honest_slot}): "
            f"{row.successes}/{row.trials}"
        )
        rows.append(row)
    budget = {name: instance_budget(inst) for name, inst in config.instances}
    return TrialReport(config.to_dict(), rows, budget)


def parity(x: Sequence[int]) -> int:
    return sum(x) % 2


INNER_SELECTORS: Tuple[str, ...] = ("dsr", "checker")


@dataclass
class AdviceDemoConfig:
    """
    A toy randomized machine with advice deciding parity.

    For a ``good_fraction`` share of the random strings ``r`` exactly one advice
    string makes the machine correct on every input of length at most
    ``input_bits``; every other (r, advice) pair is wrong on one input.

    Args:
        advice_bits: advice length ``a``
        input_bits: input length ``n``
        random_bits: random string length ``t``
        good_fraction: share of random strings with a good advice string
        draws: number of (r, selector coin) draws
        inner: two-oracle selector used by the tournament, ``dsr`` or
            ``checker``
        checker_error: error of the noisy checker
        seed: base seed
    """

    advice_bits: int = 2
    input_bits: int = 4
    random_bits: int = 6
    good_fraction: float = GOOD_ADVICE_FRACTION
    draws: int = 200
    inner: str = "dsr"
    checker_error: float = 0.2
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.advice_bits <= 3:
            raise ConfigError(f"advice_bits must be in 0..3, got {self.advice_bits}")
        if not 1 <= self.input_bits <= 6:
            raise ConfigError(f"input_bits must be in 1..6, got {self.input_bits}")
        if not 1 <= self.random_bits <= 12:
            raise ConfigError(f"random_bits must be in 1..12, got {self.random_bits}")
        if not 0 <= self.good_fraction <= 1:
            raise ConfigError(f"good_fraction must be in [0, 1], got {self.good_fraction}")
        if self.draws < 1:
            raise ConfigError(f"draws must be >= 1, got {self.draws}")
        if self.inner not in INNER_SELECTORS:
            raise ConfigError(f"inner must be one of {INNER_SELECTORS}, got {self.inner!r}")
        if not 0 <= self.checker_error < 1 / 3:
            raise ConfigError(f"checker_error must be in [0, 1/3), got {self.checker_error}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AdviceDemoConfig":
        if not isinstance(data, dict):
            raise ConfigError("advice demo config must be a JSON object")
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(f"malformed advice demo config: {e}") from e

    def to_dict(self) -> Dict[str, Any]:
        return {
            "advice_bits": self.advice_bits,
            "input_bits": self.input_bits,
            "random_bits": self.random_bits,
            "good_fraction": self.good_fraction,
            "draws": self.draws,
            "inner": self.inner,
            "checker_error": self.checker_error,
            "seed": self.seed,
        }


class AdviceMachine:
    """
    The machine table ``M[x, r, advice]`` over every string of length at
    most ``input_bits``, checked exhaustively on construction.

    Args:
        cfg: the demo configuration
    """

    def __init__(self, cfg: AdviceDemoConfig) -> None:
        self.cfg = cfg
        self.strings: List[Tuple[int, ...]] = [
            tuple((v >> (length - 1 - i)) & 1 for i in range(length))
            for length in range(cfg.input_bits + 1)
            for v in range(2**length)
        ]
        self.index: Dict[Tuple[int, ...], int] = {s: i for i, s in enumerate(self.strings)}
        S = len(self.strings)
        R = 2**cfg.random_bits
        A = 2**cfg.advice_bits
        rng = Rng(cfg.seed).spawn("machine")

        self.truth: np.ndarray = np.array([parity(s) for s in self.strings], dtype=np.int64)
        table = np.broadcast_to(self.truth[:, None, None], (S, R, A)).copy()
        good_count = math.ceil(cfg.good_fraction * R - 1e-9)
        good_r = set(rng.permutation(R)[:good_count])
        self.good_advice: np.ndarray = np.full(R, -1, dtype=np.int64)
        for r in range(R):
            if r in good_r:
                self.good_advice[r] = rng.randrange(A)
            for a in range(A):
                if a != self.good_advice[r]:
                    table[rng.randrange(S), r, a] ^= 1
        self.table: np.ndarray = table

        correct = (table == self.truth[:, None, None]).all(axis=0)
        self.good: np.ndarray = correct.any(axis=1)
        fraction = float(self.good.mean())
        if fraction < GOOD_ADVICE_FRACTION - 1e-12:
            raise ConfigError(
                f"good advice exists for only {fraction:.3f} of random strings, need >= 5/6"
            )
        self.good_fraction: float = fraction

    def answer(self, x: Sequence[int], r: int, advice: int) -> int:
        return int(self.table[self.index[tuple(x)], r, advice])


class AdviceOracle(Oracle):
    """
    ``A_i(q) = M(q, r, i)``: the machine with its random string and advice
    fixed.
    """

    def __init__(self, machine: AdviceMachine, r: int, advice: int) -> None:
        self.machine = machine
        self.r = r
        self.advice = advice

    def answer(self, query: object) -> Any:
        if not isinstance(query, Membership):
            raise TypeError(f"unsupported query {query!r}")
        return self.machine.answer(query.x, self.r, self.advice)


@dataclass
class AdviceReport:
    config: Dict[str, Any]
    draws: int
    successes: int
    honest_present: int
    honest_present_successes: int
    good_r_fraction: float

    @property
    def rate(self) -> float:
        return self.successes / self.draws

    def to_dict(self) -> Dict[str, Any]:
        low, high = wilson_interval(self.successes, self.draws)
        return {
            "config": self.config,
            "draws": self.draws,
            "successes": self.successes,
            "rate": self.rate,
            "wilson_low": low,
            "wilson_high": high,
            "honest_present": self.honest_present,
            "honest_present_successes": self.honest_present_successes,
            "good_r_fraction": self.good_r_fraction,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def advice_inner_selector(cfg: AdviceDemoConfig) -> Selector:
    if cfg.inner == "dsr":
        return DsrSelector(ParitySelfReduction())
    checker = NoisyChecker(ExactChecker(parity), cfg.checker_error)
    m = 2**cfg.advice_bits
    return amplify(CheckerSelector(checker), reps_for(1 - cfg.checker_error, 1 / (3 * m)))


def demo_advice_removal(cfg: AdviceDemoConfig) -> AdviceReport:
    """
    Removes the advice of the toy machine with a tournament.

    Each draw samples ``r`` and an input ``x``, builds one oracle per advice
    string and scores the tournament's answer against parity.

    Raises:
        ConfigError: fewer than 5/6 of the random strings have good advice
    """
    machine = AdviceMachine(cfg)
    inner = advice_inner_selector(cfg)
    A = 2**cfg.advice_bits
    successes = present = present_successes = 0
    for d in range(cfg.draws):
        rng = Rng(cfg.seed).trial(d)
        r = rng.randrange(2**cfg.random_bits)
        x = tuple(rng.rand_bit() for _ in range(cfg.input_bits))
        oracles = [AdviceOracle(machine, r, a) for a in range(A)]
        outcome = tournament(inner, x, oracles, rng=rng.spawn("tournament"))
        ok = outcome.answer == parity(x)
        successes += ok
        if machine.good[r]:
            present += 1
            present_successes += ok
    logger.info(f"advice removal: {successes}/{cfg.draws} correct")
    return AdviceReport(
        cfg.to_dict(), cfg.draws, successes, present, present_successes, machine.good_fraction
    )
