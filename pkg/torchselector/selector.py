# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.
#
# This source code is licensed under the BSD-style license found in the
# LICENSE file in the root directory of this source tree.

"""
Selector
========

Selectors compute a language given two oracles of which at least one is
honest. This module implements:

* :class:`ExpNpSelector`, the probabilistic selector for the lex-max
  oracle-3-satisfying assignment problem. It combines the multilinearity
  test, self-correction, a binary search for the first disagreement and
  sum-check.
* :class:`NonadaptiveLexmaxSelector`, the deterministic nonadaptive selector
  for lex-max SAT.
* :class:`DsrSelector`, the deterministic selector for downward
  self-reducible languages.
* :class:`CheckerSelector`, the selector obtained from an instance checker.
* :class:`AmplifiedSelector` (majority vote) and :func:`tournament`, which
  reduces ``m`` oracles to pairwise duels.

Every selector returns a :class:`SelectorOutcome`. Test rejections and trust
decisions are recorded in its diagnostics and never raised.
"""

import itertools
import json
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field as dataclass_field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from torchselector.boolean import Formula, encoded_size, eval_formula, restrict
from torchselector.errors import ArityError, ConfigError, SelfReductionViolation
from torchselector.field import FieldElement, PrimeField, Rng
from torchselector.instance import SuccinctInstance
from torchselector.lowdegree import (
    CallablePointFunction,
    OraclePointFunction,
    PointFunction,
    Reject,
    default_ml_test_reps,
    multilinearity_test,
    self_correct,
)
from torchselector.oracle import (
    ConstraintKind,
    DecisionBit,
    LexmaxQuery,
    MemoizedOracle,
    Membership,
    Oracle,
    memoize,
)
from torchselector.sumcheck import ConstraintPoly, OracleCoeffProvider, run_constraint_checks

logger: logging.Logger = logging.getLogger(__name__)

_SESSION_IDS = itertools.count()


class Trust(Enum):
    ORACLE0 = "Oracle0"
    ORACLE1 = "Oracle1"
    AGREEMENT = "Agreement"
    NO_HONEST_DETECTED = "NoHonestDetected"
    # tournaments: trusted_index names the surviving oracle
    TOURNAMENT = "Tournament"

    @staticmethod
    def of(index: int) -> "Trust":
        return Trust.ORACLE0 if index == 0 else Trust.ORACLE1


@dataclass
class ProtocolEvent:
    stage: str
    detail: str

    def to_dict(self) -> Dict[str, str]:
        return {"stage": self.stage, "detail": self.detail}


@dataclass
class SelectorOutcome:
    """
    The result of one selector session.

    Args:
        answer: the output bit
        trusted: which oracle the selector trusted
        diagnostics: protocol events in order
        queries_made: query counts per oracle and query kind
        trusted_index: index of the trusted oracle, when there is one
        eliminated: oracles eliminated by a tournament, in order
        sumcheck: serialized sum-check verdicts
    """

    answer: int
    trusted: Trust
    diagnostics: List[ProtocolEvent] = dataclass_field(default_factory=list)
    queries_made: Dict[str, Dict[str, int]] = dataclass_field(default_factory=dict)
    trusted_index: Optional[int] = None
    eliminated: List[int] = dataclass_field(default_factory=list)
    sumcheck: List[Dict[str, Any]] = dataclass_field(default_factory=list)

    def events(self, stage: str) -> List[ProtocolEvent]:
        return [e for e in self.diagnostics if e.stage == stage]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "answer": self.answer,
            "trusted": self.trusted.value,
            "trusted_index": self.trusted_index,
            "diagnostics": [e.to_dict() for e in self.diagnostics],
            "queries_made": self.queries_made,
            "eliminated": list(self.eliminated),
            "sumcheck": self.sumcheck,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


@dataclass
class SelectorParams:
    """
    Parameters of the probabilistic selectors.

    Args:
        ml_test_reps: multilinearity test repetitions, ``32 * n`` if None
        self_correct_retries: retries when self-corrected values tie at the
            disagreement point
        amplification_reps: odd number of majority-vote repetitions
        field: the field
        seed: base seed
    """

    ml_test_reps: Optional[int] = None
    self_correct_retries: int = 3
    amplification_reps: int = 1
    field: PrimeField = dataclass_field(default_factory=PrimeField)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.amplification_reps < 1 or self.amplification_reps % 2 == 0:
            raise ArityError(
                f"amplification_reps must be odd and positive, got {self.amplification_reps}"
            )
        if self.ml_test_reps is not None and self.ml_test_reps < 1:
            raise ConfigError(f"ml_test_reps must be >= 1, got {self.ml_test_reps}")
        if self.self_correct_retries < 0:
            raise ConfigError("self_correct_retries must be >= 0")

    def reps_for(self, n: int) -> int:
        return self.ml_test_reps if self.ml_test_reps is not None else default_ml_test_reps(n)


def failure_budget(
    n: int, l: int, d: int, p: int, delta: Optional[float] = None
) -> Dict[str, float]:
    """
    The slack terms bounding the main selector's failure probability, with
    ``delta = n**2 / p`` unless given.

    Args:
        n: index width
        l: number of sum-check variables
        d: largest per-round degree bound
        p: field size
        delta: distance to the nearest multilinear function
    """
    if delta is None:
        delta = n * n / p
    terms = {
        "delta": delta,
        "binary_search_self_correction": delta * n * (n + 1),
        "binary_search_identity": n * n / p,
        "sumcheck_degree": d * l / p,
        "sumcheck_raw_evaluation": 3 * delta,
        "sumcheck_weighting": l / p,
    }
    terms["total"] = sum(v for k, v in terms.items() if k != "delta")
    return terms


def instance_budget(inst: SuccinctInstance, delta: Optional[float] = None) -> Dict[str, float]:
    """
    :func:`failure_budget` for an instance, using the larger sum-check.
    """
    fn = CallablePointFunction(inst.field, inst.n, lambda x: 0)
    g1 = ConstraintPoly(ConstraintKind.G1, inst, fn)
    return failure_budget(inst.n, g1.l, g1.max_round_bound(), inst.field.p, delta)


class _SessionLogger:
    def __init__(self, selector: str) -> None:
        self._logger: logging.Logger = logging.getLogger(__name__)
        self._selector = selector
        self._session: int = next(_SESSION_IDS)
        self.stage = "start"

    def prefix(self) -> str:
        return f"[{self._selector}/{self._session} - {self.stage}]"

    def debug(self, msg: str) -> None:
        self._logger.debug(f"{self.prefix()} {msg}")

    def info(self, msg: str) -> None:
        self._logger.info(f"{self.prefix()} {msg}")

    def warn(self, msg: str) -> None:
        self._logger.warning(f"{self.prefix()} {msg}")


class _Session:
    def __init__(self, selector: str, oracles: Sequence[Oracle]) -> None:
        self.log = _SessionLogger(selector)
        self.oracles: List[MemoizedOracle] = [
            memoize(o, f"A{i}") for i, o in enumerate(oracles)
        ]
        self.events: List[ProtocolEvent] = []
        for i, o in enumerate(self.oracles):
            for note in o.notes:
                self.event("construction", f"A{i}: {note}")

    def event(self, stage: str, detail: str) -> None:
        self.log.stage = stage
        self.log.debug(detail)
        self.events.append(ProtocolEvent(stage, detail))

    def outcome(self, answer: int, trusted: Trust, **kwargs: Any) -> SelectorOutcome:
        if trusted in (Trust.ORACLE0, Trust.ORACLE1) and "trusted_index" not in kwargs:
            kwargs["trusted_index"] = 0 if trusted == Trust.ORACLE0 else 1
        self.log.stage = "done"
        self.log.info(f"answer {answer}, trusted {trusted.value}")
        return SelectorOutcome(
            answer=answer,
            trusted=trusted,
            diagnostics=self.events,
            queries_made={
                f"A{i}": o.query_counts() for i, o in enumerate(self.oracles)
            },
            **kwargs,
        )


def _bit(answer: Any) -> int:
    return 1 if int(answer) else 0


class Selector(ABC):
    """
    A selector for some language: given an input and two oracles of which
    one is honest, compute membership of the input.
    """

    name: str = "selector"
    deterministic: bool = False

    @abstractmethod
    def select(self, x: Any, a0: Oracle, a1: Oracle, rng: Rng) -> SelectorOutcome:
        """
        Runs one selector session.

        Args:
            x: the input
            a0: the first oracle
            a1: the second oracle
            rng: randomness, ignored by deterministic selectors
        """
        ...

    @abstractmethod
    def claim(self, oracle: Oracle, x: Any) -> int:
        """
        The oracle's own answer at ``x``, used to split oracles in a
        tournament.

        Args:
            oracle: the oracle to ask
            x: the input
        """
        ...


def _to_bit(value: FieldElement, session: _Session, label: str) -> int:
    v = int(value)
    if v in (0, 1):
        return v
    session.event("answer", f"{label} value {v} is not Boolean, mapped to 1")
    return 1


def binary_search_disagreement(
    f0: PointFunction,
    f1: PointFunction,
    n: int,
    params: SelectorParams,
    rng: Rng,
) -> Tuple[int, ...]:
    """
    Finds the first hypercube point where the multilinear functions closest
    to ``f0`` and ``f1`` differ.

    Fixes one coordinate per step: with the prefix ``z`` found so far, it
    compares the self-corrected values at ``(z, 0, u)`` for a fresh random
    ``u`` and sets the next bit to 0 iff they differ.

    Args:
        f0: the first function
        f1: the second function
        n: the dimension
        params: selector parameters
        rng: randomness
    """
    if f0.n != n or f1.n != n:
        raise ArityError(f"functions of dimension {f0.n}, {f1.n} for n={n}")
    field = f0.field
    z: List[int] = []
    for j in range(1, n + 1):
        u = rng.rand_values(field, n - j)
        x = z + [0] + u
        v0 = self_correct(f0, x, rng)
        v1 = self_correct(f1, x, rng)
        z.append(0 if v0 != v1 else 1)
    return tuple(z)


class ExpNpSelector(Selector):
    """
    Probabilistic selector for the lex-max oracle-3-satisfying assignment
    problem.

    Args:
        params: selector parameters
    """

    name = "expnp"

    def __init__(self, params: Optional[SelectorParams] = None) -> None:
        self.params: SelectorParams = params or SelectorParams()

    def claim(self, oracle: Oracle, x: SuccinctInstance) -> int:
        return _bit(oracle.answer(DecisionBit(x.b_in)))

    def select(
        self, x: SuccinctInstance, a0: Oracle, a1: Oracle, rng: Rng
    ) -> SelectorOutcome:
        inst = x
        params = self.params
        field = inst.field
        n = inst.n
        session = _Session(self.name, [a0, a1])
        oracles = session.oracles
        f = [OraclePointFunction(o, field, n) for o in oracles]

        reps = params.reps_for(n)
        failed = []
        for i in (0, 1):
            verdict = multilinearity_test(f[i], n, reps, rng)
            if isinstance(verdict, Reject):
                w = verdict.witness
                session.event(
                    "multilinearity",
                    f"A{i} rejected on axis {w.axis} at offsets ({w.a}, {w.b}, {w.c})",
                )
                failed.append(i)
        if len(failed) == 2:
            session.log.warn("both oracles failed the multilinearity test")
            return session.outcome(
                self.claim(oracles[0], inst), Trust.NO_HONEST_DETECTED
            )
        if len(failed) == 1:
            trusted = 1 - failed[0]
            return session.outcome(self.claim(oracles[trusted], inst), Trust.of(trusted))

        v = [self_correct(f[i], inst.b_in, rng) for i in (0, 1)]
        if v[0] == v[1]:
            session.event("self_correction", f"values agree at b_in: {int(v[0])}")
            return session.outcome(_to_bit(v[0], session, "agreed"), Trust.AGREEMENT)
        session.event(
            "self_correction", f"values differ at b_in: {int(v[0])} vs {int(v[1])}"
        )

        z = binary_search_disagreement(f[0], f[1], n, params, rng)
        session.event("binary_search", f"first disagreement z={''.join(map(str, z))}")
        vz: List[FieldElement] = []
        for attempt in range(params.self_correct_retries + 1):
            vz = [self_correct(f[i], z, rng) for i in (0, 1)]
            if vz[0] != vz[1]:
                break
            session.event("binary_search", f"tie at z on attempt {attempt + 1}")
        else:
            session.log.warn("self-corrected values tie at z, no claimant")
            return session.outcome(self.claim(oracles[0], inst), Trust.NO_HONEST_DETECTED)

        claimant = 0 if int(vz[0]) > int(vz[1]) else 1
        other = 1 - claimant
        session.event(
            "claim", f"A{claimant} claims the larger assignment ({int(vz[claimant])} at z)"
        )
        verdicts = run_constraint_checks(
            inst, f[claimant], OracleCoeffProvider(oracles[claimant], field), rng
        )
        accepted = True
        for kind, verdict in verdicts.items():
            if verdict.accepted:
                session.event("sumcheck", f"{kind.value} accepted")
            else:
                accepted = False
                where = f" round {verdict.failed_round}" if verdict.failed_round else ""
                session.event(
                    "sumcheck",
                    f"{kind.value} rejected: {verdict.failure.value}{where}",
                )
        trusted = claimant if accepted else other
        return session.outcome(
            _to_bit(v[trusted], session, f"A{trusted}"),
            Trust.of(trusted),
            sumcheck=[
                dict(kind=k.value, **vd.to_dict()) for k, vd in verdicts.items()
            ],
        )


def select_prob_expnp(
    inst: SuccinctInstance,
    A0: Oracle,
    A1: Oracle,
    params: Optional[SelectorParams] = None,
    rng: Optional[Rng] = None,
) -> SelectorOutcome:
    """
    Runs :class:`ExpNpSelector` once.
    """
    params = params or SelectorParams(field=inst.field)
    rng = rng or Rng(params.seed)
    return ExpNpSelector(params).select(inst, A0, A1, rng)


@dataclass(frozen=True)
class LexmaxInput:
    """
    Bit ``k`` (1-based) of the lex-max satisfying assignment of ``phi``.
    """

    phi: Formula
    k: int


def query_set(phi: Formula, k: int) -> List[LexmaxQuery]:
    """
    The queries the nonadaptive selector asks each oracle, computed without
    running it.
    """
    if not 1 <= k <= phi.num_vars:
        raise ArityError(f"k={k} out of range 1..{phi.num_vars}")
    return [LexmaxQuery(phi, j) for j in range(1, phi.num_vars + 1)]


class NonadaptiveLexmaxSelector(Selector):
    """
    Deterministic nonadaptive selector for lex-max SAT.

    Both oracles reveal their whole claimed assignment. If the claims differ
    at ``k``, the lexicographically larger claim is trusted iff it satisfies
    the formula.
    """

    name = "nonadaptive_lexmax"
    deterministic = True

    def claim(self, oracle: Oracle, x: LexmaxInput) -> int:
        return _bit(oracle.answer(LexmaxQuery(x.phi, x.k)))

    def select(
        self, x: LexmaxInput, a0: Oracle, a1: Oracle, rng: Optional[Rng] = None
    ) -> SelectorOutcome:
        queries = query_set(x.phi, x.k)
        session = _Session(self.name, [a0, a1])
        claims = [
            tuple(_bit(o.answer(q)) for q in queries) for o in session.oracles
        ]
        allowed = set(queries)
        for o in session.oracles:
            assert all(q in allowed for q in o.log), "query outside the query set"
        k = x.k - 1
        if claims[0][k] == claims[1][k]:
            return session.outcome(claims[0][k], Trust.AGREEMENT)
        larger = 0 if claims[0] > claims[1] else 1
        satisfied = eval_formula(x.phi, claims[larger])
        session.event(
            "claim",
            f"A{larger} claims the larger assignment, which "
            + ("satisfies" if satisfied else "does not satisfy")
            + " the formula",
        )
        trusted = larger if satisfied else 1 - larger
        return session.outcome(claims[trusted][k], Trust.of(trusted))


def select_nonadaptive_lexmax(
    phi: Formula, k: int, A0: Oracle, A1: Oracle
) -> SelectorOutcome:
    return NonadaptiveLexmaxSelector().select(LexmaxInput(phi, k), A0, A1)


class DownwardSelfReduction(ABC):
    """
    Decides membership of an input from membership answers on strictly
    smaller inputs.
    """

    @abstractmethod
    def size(self, x: Any) -> Any:
        """
        The size of ``x``; queries must be strictly smaller than the input.

        Args:
            x: an input
        """
        ...

    @abstractmethod
    def run(self, x: Any, ask: Callable[[Any], int]) -> int:
        """
        Decides ``x``.

        Args:
            x: the input
            ask: membership oracle for smaller inputs
        """
        ...


class SatSelfReduction(DownwardSelfReduction):
    """
    SAT: a formula is satisfiable iff one of its two restrictions on the
    first variable is.
    """

    def size(self, x: Formula) -> Tuple[int, int]:
        return encoded_size(x)

    def run(self, x: Formula, ask: Callable[[Any], int]) -> int:
        if x.num_vars == 0:
            return eval_formula(x, ())
        left = ask(restrict(x, 0, 0))
        right = ask(restrict(x, 0, 1))
        return 1 if left or right else 0


class ParitySelfReduction(DownwardSelfReduction):
    """
    Parity of a bit string: the first bit xor the parity of the rest.
    """

    def size(self, x: Tuple[int, ...]) -> int:
        return len(x)

    def run(self, x: Tuple[int, ...], ask: Callable[[Any], int]) -> int:
        if not x:
            return 0
        return (x[0] + ask(tuple(x[1:]))) % 2


class DsrSelector(Selector):
    """
    Deterministic selector for a downward self-reducible language.

    Keeps an input ``y`` on which the oracles disagree and runs the
    self-reduction on ``y`` against each oracle. If both runs produce the same
    value, the oracle agreeing with it at ``y`` is honest; otherwise ``y``
    moves to the first query where the oracles disagree, which is strictly
    smaller.

    Args:
        dsr: the downward self-reduction
    """

    name = "dsr"
    deterministic = True

    def __init__(self, dsr: DownwardSelfReduction) -> None:
        self.dsr = dsr

    def claim(self, oracle: Oracle, x: Any) -> int:
        return _bit(oracle.answer(Membership(x)))

    def select(
        self, x: Any, a0: Oracle, a1: Oracle, rng: Optional[Rng] = None
    ) -> SelectorOutcome:
        session = _Session(self.name, [a0, a1])
        oracles = session.oracles

        def member(i: int, y: Any) -> int:
            return self.claim(oracles[i], y)

        answers = [member(0, x), member(1, x)]
        if answers[0] == answers[1]:
            return session.outcome(answers[0], Trust.AGREEMENT)

        y = x
        while True:
            size_y = self.dsr.size(y)
            results = []
            for i in (0, 1):
                asked: List[Any] = []

                def ask(q: Any, i: int = i, asked: List[Any] = asked) -> int:
                    if not self.dsr.size(q) < size_y:
                        raise SelfReductionViolation(
                            f"query of size {self.dsr.size(q)} not below {size_y}"
                        )
                    asked.append(q)
                    return member(i, q)

                results.append((self.dsr.run(y, ask), asked))
            (b0, asked0), (b1, asked1) = results
            if b0 == b1:
                trusted = 0 if member(0, y) == b0 else 1
                session.event("dsr", f"runs agree on {b0} at size {size_y}")
                return session.outcome(answers[trusted], Trust.of(trusted))
            nxt = next(
                (q for q in asked0 + asked1 if member(0, q) != member(1, q)), None
            )
            if nxt is None:
                raise SelfReductionViolation("runs differ without a differing query")
            session.event("dsr", f"descending from size {size_y}")
            y = nxt


def select_det_dsr(
    dsr: DownwardSelfReduction, x: Any, A0: Oracle, A1: Oracle
) -> SelectorOutcome:
    return DsrSelector(dsr).select(x, A0, A1)


class InstanceChecker(ABC):
    """
    Probabilistic checker of one oracle's answer at one input.
    """

    @abstractmethod
    def check(self, x: Any, oracle: Oracle, rng: Rng) -> bool:
        """
        Accepts iff the oracle's answer at ``x`` is believed correct.

        Args:
            x: the input
            oracle: the oracle under check
            rng: randomness
        """
        ...


class ExactChecker(InstanceChecker):
    """
    Checker that decides the language directly.

    Args:
        decide: the language's decision function
    """

    def __init__(self, decide: Callable[[Any], int]) -> None:
        self.decide = decide

    def check(self, x: Any, oracle: Oracle, rng: Rng) -> bool:
        return _bit(oracle.answer(Membership(x))) == _bit(self.decide(x))


class NoisyChecker(InstanceChecker):
    """
    Wraps a checker and flips its verdict with probability ``error``.

    Args:
        base: the wrapped checker
        error: flip probability, below 1/3
    """

    def __init__(self, base: InstanceChecker, error: float) -> None:
        if not 0 <= error < 1 / 3:
            raise ConfigError(f"checker error must be in [0, 1/3), got {error}")
        self.base = base
        self.error = error

    def check(self, x: Any, oracle: Oracle, rng: Rng) -> bool:
        verdict = self.base.check(x, oracle, rng)
        if rng.random() < self.error:
            return not verdict
        return verdict


class CheckerSelector(Selector):
    """
    Selector from an instance checker: trust the first oracle iff the checker
    accepts it.

    Args:
        checker: the instance checker
    """

    name = "checker"

    def __init__(self, checker: InstanceChecker) -> None:
        self.checker = checker

    def claim(self, oracle: Oracle, x: Any) -> int:
        return _bit(oracle.answer(Membership(x)))

    def select(self, x: Any, a0: Oracle, a1: Oracle, rng: Rng) -> SelectorOutcome:
        session = _Session(self.name, [a0, a1])
        accepted = self.checker.check(x, session.oracles[0], rng)
        session.event("checker", "accepted A0" if accepted else "rejected A0")
        trusted = 0 if accepted else 1
        return session.outcome(self.claim(session.oracles[trusted], x), Trust.of(trusted))


def select_from_checker(
    checker: InstanceChecker, x: Any, A0: Oracle, A1: Oracle, rng: Rng
) -> SelectorOutcome:
    return CheckerSelector(checker).select(x, A0, A1, rng)


def majority_failure(p_success: float, reps: int) -> float:
    """
    Exact probability that a majority of ``reps`` independent runs, each
    correct with probability ``p_success``, is wrong.
    """
    return sum(
        math.comb(reps, k) * p_success**k * (1 - p_success) ** (reps - k)
        for k in range(reps // 2 + 1)
    )


def reps_for(p_success: float, max_failure: float) -> int:
    """
    Smallest odd repetition count whose majority fails with probability at
    most ``max_failure``.
    """
    if p_success <= 0.5:
        raise ConfigError(f"cannot amplify success probability {p_success}")
    reps = 1
    while majority_failure(p_success, reps) > max_failure:
        reps += 2
    return reps


class AmplifiedSelector(Selector):
    """
    Majority vote of independent runs of an inner selector.

    Args:
        inner: the selector to amplify
        reps: odd number of runs
    """

    def __init__(self, inner: Selector, reps: int) -> None:
        if reps < 1 or reps % 2 == 0:
            raise ArityError(f"reps must be odd and positive, got {reps}")
        self.inner = inner
        self.reps = reps
        self.name = f"{inner.name}x{reps}"
        self.deterministic = inner.deterministic

    def claim(self, oracle: Oracle, x: Any) -> int:
        return self.inner.claim(oracle, x)

    def select(self, x: Any, a0: Oracle, a1: Oracle, rng: Rng) -> SelectorOutcome:
        runs = 1 if self.deterministic else self.reps
        salt = rng.randrange(2**62)
        outcomes = [
            self.inner.select(x, a0, a1, rng.spawn(f"rep{i}:{salt}")) for i in range(runs)
        ]
        ones = sum(o.answer for o in outcomes)
        answer = 1 if 2 * ones > runs else 0
        winner = next(o for o in outcomes if o.answer == answer)
        totals: Dict[str, Dict[str, int]] = {}
        for o in outcomes:
            for key, counts in o.queries_made.items():
                bucket = totals.setdefault(key, {})
                for kind, count in counts.items():
                    bucket[kind] = bucket.get(kind, 0) + count
        events = [ProtocolEvent("amplify", f"{ones} of {runs} runs answered 1")]
        return SelectorOutcome(
            answer=answer,
            trusted=winner.trusted,
            diagnostics=events + winner.diagnostics,
            queries_made=totals,
            trusted_index=winner.trusted_index,
        )


def amplify(inner: Selector, reps: int) -> AmplifiedSelector:
    return AmplifiedSelector(inner, reps)


def tournament(
    inner: Selector,
    x: Any,
    oracles: Sequence[Oracle],
    params: Optional[SelectorParams] = None,
    rng: Optional[Rng] = None,
) -> SelectorOutcome:
    """
    Selects among ``m`` oracles of which at least one is honest.

    Oracles are split by their own answer at ``x``. While both sides are
    nonempty, the lowest-indexed oracles of each side duel with ``inner`` and
    the loser is eliminated. The output is 1 iff an oracle answering 1
    survives.

    Args:
        inner: two-oracle selector, amplified by ``params.amplification_reps``
            unless already amplified
        x: the input
        oracles: the oracles
        params: selector parameters
        rng: randomness
    """
    if not oracles:
        raise ArityError("tournament needs at least one oracle")
    params = params or SelectorParams()
    rng = rng or Rng(params.seed)
    if params.amplification_reps > 1 and not isinstance(inner, AmplifiedSelector):
        inner = amplify(inner, params.amplification_reps)
    log = _SessionLogger(f"tournament/{inner.name}")
    mem = [memoize(o, f"A{i}") for i, o in enumerate(oracles)]
    claims = [inner.claim(o, x) for o in mem]
    sides: Dict[int, List[int]] = {
        0: [i for i, c in enumerate(claims) if c == 0],
        1: [i for i, c in enumerate(claims) if c == 1],
    }
    events: List[ProtocolEvent] = []
    eliminated: List[int] = []
    duels = 0
    while sides[0] and sides[1]:
        j, k = sides[0][0], sides[1][0]
        duel = inner.select(x, mem[j], mem[k], rng)
        duels += 1
        loser = k if duel.answer == 0 else j
        sides[claims[loser]].remove(loser)
        eliminated.append(loser)
        events.append(ProtocolEvent("duel", f"A{j} vs A{k}: eliminated A{loser}"))
        log.stage = f"duel {duels}"
        log.debug(f"A{j} vs A{k}, eliminated A{loser}")
    answer = 1 if sides[1] else 0
    survivor = sides[answer][0]
    log.stage = "done"
    log.info(f"answer {answer} after {duels} duels")
    return SelectorOutcome(
        answer=answer,
        trusted=Trust.AGREEMENT if duels == 0 else Trust.TOURNAMENT,
        diagnostics=events,
        queries_made={f"A{i}": o.query_counts() for i, o in enumerate(mem)},
        trusted_index=survivor,
        eliminated=eliminated,
    )
