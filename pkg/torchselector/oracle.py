# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.
#
# This source code is licensed under the BSD-style license found in the
# LICENSE file in the root directory of this source tree.

"""
Oracle
======

The typed query/answer interface shared by honest oracles and adversaries.

A selector talks to its two oracles only through :meth:`Oracle.answer`. Query
kinds:

* :class:`DecisionBit` asks for one bit of the assignment table.
* :class:`MlePoint` asks for the multilinear extension at a field point.
* :class:`SumcheckCoeffs` asks for one round polynomial of a sum-check.
* :class:`LexmaxQuery` asks for one bit of a formula's lex-max assignment.
* :class:`Membership` asks whether an input belongs to a language.

Every oracle used by a selector session is wrapped in a
:class:`MemoizedOracle`, which makes repeated queries return identical answers,
counts queries per kind and turns oracle crashes into :class:`OracleFailure`.
"""

import logging
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Dict, Hashable, List, Optional, Tuple

from torchselector.boolean import Formula
from torchselector.errors import OracleFailure

logger: logging.Logger = logging.getLogger(__name__)


class ConstraintKind(Enum):
    """
    The two constraint polynomials checked by sum-check: G1 checks every
    clause of the succinct formula, G2 checks that the assignment is Boolean.
    """

    G1 = "g1"
    G2 = "g2"


@dataclass(frozen=True)
class DecisionBit:
    b: Tuple[int, ...]


@dataclass(frozen=True)
class MlePoint:
    x: Tuple[int, ...]


@dataclass(frozen=True)
class SumcheckCoeffs:
    target: ConstraintKind
    t: Tuple[int, ...]
    r_prefix: Tuple[int, ...]
    round: int


@dataclass(frozen=True)
class LexmaxQuery:
    """
    Bit ``j`` (1-based) of the lexicographically maximum satisfying assignment
    of ``phi``.
    """

    phi: Formula
    j: int


@dataclass(frozen=True)
class Membership:
    x: Hashable


def query_kind(query: object) -> str:
    return type(query).__name__


class Oracle(ABC):
    """
    An oracle answers every syntactically valid query. Dishonest oracles may
    answer arbitrarily but must answer.
    """

    @abstractmethod
    def answer(self, query: object) -> Any:
        """
        Answers a single query.

        Args:
            query: one of the query dataclasses of this module
        """
        ...


class LanguageOracle(Oracle):
    """
    Oracle backed by a plain function of the query.

    Args:
        fn: maps a query to its answer
        name: label used in logs
    """

    def __init__(self, fn: Callable[[object], Any], name: str = "language") -> None:
        self._fn = fn
        self.name = name

    def answer(self, query: object) -> Any:
        return self._fn(query)

    def __repr__(self) -> str:
        return f"LanguageOracle({self.name})"


class ConstantOracle(Oracle):
    """
    Answers every query with ``value``. For :class:`SumcheckCoeffs` queries the
    answer is the coefficient list ``[value]``.

    Args:
        value: the constant answer
    """

    def __init__(self, value: int) -> None:
        self.value = value

    def answer(self, query: object) -> Any:
        if isinstance(query, SumcheckCoeffs):
            return [self.value]
        return self.value


class MemoizedOracle(Oracle):
    """
    Wraps an oracle for one selector session.

    Identical queries get identical answers, which makes even randomized
    adversaries session-consistent. Queries are counted per kind and logged in
    the order they were first asked.

    Args:
        inner: the wrapped oracle
        name: label used in logs and reports
        notes: construction diagnostics, reported with the session outcome
    """

    def __init__(
        self, inner: Oracle, name: str = "", notes: Optional[List[str]] = None
    ) -> None:
        self.inner = inner
        self.name: str = name or type(inner).__name__
        self.notes: List[str] = list(notes or [])
        self._cache: Dict[object, Any] = {}
        self.counts: Counter = Counter()
        self.log: List[object] = []

    def answer(self, query: object) -> Any:
        self.counts[query_kind(query)] += 1
        if query in self._cache:
            return self._cache[query]
        try:
            ans = self.inner.answer(query)
        except OracleFailure:
            raise
        except Exception as e:
            logger.exception(f"oracle {self.name} failed on {query!r}")
            raise OracleFailure(query, e) from e
        self._cache[query] = ans
        self.log.append(query)
        return ans

    def query_counts(self) -> Dict[str, int]:
        return dict(sorted(self.counts.items()))

    def __repr__(self) -> str:
        return f"MemoizedOracle({self.name})"


def memoize(oracle: Oracle, name: str = "") -> MemoizedOracle:
    if isinstance(oracle, MemoizedOracle):
        return oracle
    return MemoizedOracle(oracle, name=name)
