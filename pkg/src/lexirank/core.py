"""Domain types, relevance projection, and imputation.

Everything downstream (metrics, preferences, robustness oracles) consumes a
single representation: the sorted vector of 1-based rank positions of the
relevant items in a ranking, held by :class:`RelevantPositions`. This module
turns raw system output plus binary judgments into that vector, filling in
positions of unretrieved relevant items either pessimistically (bottom of the
corpus) or optimistically (directly below the retrieved prefix).

All types are immutable after construction and all functions are pure, so
values can be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .errors import UnevaluableRequestError, ValidationError


class Imputation(str, Enum):
    """Placement rule for relevant items missing from the retrieved prefix."""

    PESSIMISTIC = "pessimistic"
    OPTIMISTIC = "optimistic"
    NONE = "none"


class JudgmentSource(str, Enum):
    BINARY = "binary"
    BINARIZED_FROM_GRADES = "binarized_from_grades"


@dataclass(frozen=True)
class RankedList:
    """One system's ordered item ids for a request, top first.

    ``corpus_size`` is the total number of rankable items and is always an
    explicit input; it is never inferred from the list because imputation
    depends on it.
    """

    request_id: str
    items: tuple[str, ...]
    corpus_size: int
    system_tag: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))
        if self.corpus_size < 1:
            raise ValidationError(f"corpus_size must be positive, got {self.corpus_size}")
        k = len(self.items)
        if k < 1:
            raise ValidationError(f"ranking for {self.request_id!r} is empty")
        if k > self.corpus_size:
            raise ValidationError(
                f"ranking for {self.request_id!r} has {k} items, "
                f"more than corpus_size {self.corpus_size}"
            )
        if len(set(self.items)) != k:
            raise ValidationError(f"ranking for {self.request_id!r} contains duplicate items")

    @property
    def depth(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class JudgmentSet:
    """The set of items judged relevant for a request.

    An empty set is representable (it happens with strict binarization
    thresholds) but such requests are unevaluable and must be skipped by
    callers; :func:`project_and_impute` raises on them.
    """

    request_id: str
    relevant_ids: frozenset[str]
    source: JudgmentSource = JudgmentSource.BINARY

    def __post_init__(self) -> None:
        object.__setattr__(self, "relevant_ids", frozenset(self.relevant_ids))

    @property
    def m(self) -> int:
        return len(self.relevant_ids)

    @property
    def evaluable(self) -> bool:
        return self.m > 0


@dataclass(frozen=True)
class RelevantPositions:
    """Sorted 1-based positions of the relevant items in one ranking.

    ``retrieved_count`` says how many of the positions came from the actual
    retrieved prefix; the remaining trailing entries were imputed according
    to ``imputation``. ``ids_at_levels``, when present, aligns item ids with
    positions (the inverse projection).
    """

    positions: tuple[int, ...]
    corpus_size: int
    retrieved_count: int
    imputation: Imputation = Imputation.NONE
    ids_at_levels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "positions", tuple(int(p) for p in self.positions))
        pos = self.positions
        D = self.corpus_size
        if D < 1:
            raise ValidationError(f"corpus_size must be positive, got {D}")
        m = len(pos)
        prev = 0
        for p in pos:
            if p <= prev:
                raise ValidationError(f"positions must be strictly increasing, got {pos}")
            prev = p
        if m and pos[-1] > D:
            raise ValidationError(f"last position {pos[-1]} exceeds corpus_size {D}")
        if not 0 <= self.retrieved_count <= m:
            raise ValidationError(
                f"retrieved_count {self.retrieved_count} outside [0, {m}]"
            )
        if self.imputation is Imputation.PESSIMISTIC:
            missing = m - self.retrieved_count
            for j in range(missing):
                expected = D - missing + 1 + j
                if pos[self.retrieved_count + j] != expected:
                    raise ValidationError(
                        "pessimistic tail must occupy the bottom positions "
                        f"{D - missing + 1}..{D}, got {pos}"
                    )
        elif self.imputation is Imputation.NONE and self.retrieved_count != m:
            raise ValidationError("without imputation every position must be retrieved")
        if self.ids_at_levels is not None:
            object.__setattr__(self, "ids_at_levels", tuple(self.ids_at_levels))
            if len(self.ids_at_levels) != m:
                raise ValidationError("ids_at_levels must align with positions")

    @property
    def m(self) -> int:
        return len(self.positions)

    @classmethod
    def from_positions(
        cls, positions: Iterable[int], corpus_size: int
    ) -> "RelevantPositions":
        """Wrap a fully observed position vector (no imputation needed)."""
        pos = tuple(positions)
        return cls(pos, corpus_size, len(pos), Imputation.NONE)

    @classmethod
    def worst_case(cls, m: int, corpus_size: int) -> "RelevantPositions":
        """Positions for a request with no retrieved output at all.

        Every relevant item is imputed to the bottom of the corpus. Used to
        score runs that are missing a request entirely.
        """
        if not 1 <= m <= corpus_size:
            raise ValidationError(f"need 1 <= m <= corpus_size, got m={m}, D={corpus_size}")
        pos = tuple(range(corpus_size - m + 1, corpus_size + 1))
        return cls(pos, corpus_size, 0, Imputation.PESSIMISTIC)


class ExposureKind(str, Enum):
    RECIPROCAL = "reciprocal"
    LOG2 = "log2"
    GEOMETRIC = "geometric"
    LINEAR = "linear"


@dataclass(frozen=True)
class ExposureModel:
    """Strictly decreasing position discount.

    Four families: ``reciprocal`` 1/i, ``log2`` 1/log2(i+1), ``geometric``
    (1-gamma)*gamma^(i-1), and ``linear`` 1 - i/D. The geometric family
    underflows to 0.0 in float64 at deep positions (around i=3340 for
    gamma=0.8); real-valued strict monotonicity degrades to non-increasing
    there.
    """

    kind: ExposureKind
    gamma: float | None = None
    corpus_size: int | None = None

    def __post_init__(self) -> None:
        if self.kind is ExposureKind.GEOMETRIC:
            if self.gamma is None or not 0.0 < self.gamma < 1.0:
                raise ValidationError(f"geometric exposure needs gamma in (0,1), got {self.gamma}")
        if self.kind is ExposureKind.LINEAR:
            if self.corpus_size is None or self.corpus_size < 1:
                raise ValidationError("linear exposure needs a positive corpus_size")

    @classmethod
    def reciprocal(cls) -> "ExposureModel":
        return cls(ExposureKind.RECIPROCAL)

    @classmethod
    def log2(cls) -> "ExposureModel":
        return cls(ExposureKind.LOG2)

    @classmethod
    def geometric(cls, gamma: float) -> "ExposureModel":
        return cls(ExposureKind.GEOMETRIC, gamma=gamma)

    @classmethod
    def linear(cls, corpus_size: int) -> "ExposureModel":
        return cls(ExposureKind.LINEAR, corpus_size=corpus_size)

    def at(self, position: int) -> float:
        """Exposure of a 1-based rank position."""
        if position < 1:
            raise ValidationError(f"positions are 1-based, got {position}")
        kind = self.kind
        if kind is ExposureKind.RECIPROCAL:
            return 1.0 / position
        if kind is ExposureKind.LOG2:
            return 1.0 / math.log2(position + 1)
        if kind is ExposureKind.GEOMETRIC:
            return (1.0 - self.gamma) * self.gamma ** (position - 1)
        if position > self.corpus_size:
            raise ValidationError(
                f"linear exposure undefined beyond corpus_size {self.corpus_size}, got {position}"
            )
        return 1.0 - position / self.corpus_size

    @property
    def label(self) -> str:
        if self.kind is ExposureKind.GEOMETRIC:
            return f"geometric({self.gamma:g})"
        if self.kind is ExposureKind.LINEAR:
            return f"linear({self.corpus_size})"
        return self.kind.value


def exposure_at(model: ExposureModel, position: int) -> float:
    """Functional form of :meth:`ExposureModel.at`."""
    return model.at(position)


class PreferenceOutcome(Enum):
    PREFER_FIRST = 1
    PREFER_SECOND = -1
    TIE = 0


@dataclass(frozen=True)
class Preference:
    """Three-valued outcome of comparing two rankings.

    ``deciding_level`` is the recall level at which a positional comparison
    was decided; whole-metric comparisons carry no level.
    """

    outcome: PreferenceOutcome
    deciding_level: int | None = None

    def __post_init__(self) -> None:
        if self.deciding_level is not None:
            if self.outcome is PreferenceOutcome.TIE:
                raise ValidationError("a tie has no deciding level")
            if self.deciding_level < 1:
                raise ValidationError("deciding_level is 1-based")

    @classmethod
    def first(cls, deciding_level: int | None = None) -> "Preference":
        return cls(PreferenceOutcome.PREFER_FIRST, deciding_level)

    @classmethod
    def second(cls, deciding_level: int | None = None) -> "Preference":
        return cls(PreferenceOutcome.PREFER_SECOND, deciding_level)

    @classmethod
    def tie(cls) -> "Preference":
        return cls(PreferenceOutcome.TIE)

    @property
    def sign(self) -> int:
        return self.outcome.value

    @property
    def is_tie(self) -> bool:
        return self.outcome is PreferenceOutcome.TIE

    def flipped(self) -> "Preference":
        if self.is_tie:
            return self
        flipped = (
            PreferenceOutcome.PREFER_SECOND
            if self.outcome is PreferenceOutcome.PREFER_FIRST
            else PreferenceOutcome.PREFER_FIRST
        )
        return Preference(flipped, self.deciding_level)


def project_and_impute(
    ranked_list: RankedList,
    judgments: JudgmentSet,
    mode: Imputation = Imputation.PESSIMISTIC,
) -> RelevantPositions:
    """Project judgments onto a ranking and impute unretrieved positions.

    Retrieved relevant items keep their 1-based ranks. Unretrieved relevant
    items go to the very bottom of the corpus (pessimistic, the default) or
    directly below the retrieved prefix (optimistic). ``mode=NONE`` keeps
    only the retrieved positions.

    Raises :class:`UnevaluableRequestError` when the judgment set is empty
    and :class:`ValidationError` when the imputed block cannot fit.
    """
    if ranked_list.request_id != judgments.request_id:
        raise ValidationError(
            f"ranking is for {ranked_list.request_id!r} but judgments are for "
            f"{judgments.request_id!r}"
        )
    if not judgments.evaluable:
        raise UnevaluableRequestError(
            f"request {judgments.request_id!r} has no relevant items"
        )
    D = ranked_list.corpus_size
    m = judgments.m
    if m > D:
        raise ValidationError(f"{m} relevant items cannot fit in a corpus of {D}")

    relevant = judgments.relevant_ids
    ranks: list[int] = []
    ids: list[str] = []
    for rank, item in enumerate(ranked_list.items, start=1):
        if item in relevant:
            ranks.append(rank)
            ids.append(item)
    retrieved = len(ranks)
    missing = m - retrieved
    k = ranked_list.depth

    if mode is Imputation.PESSIMISTIC:
        if missing > D - k:
            raise ValidationError(
                f"cannot impute {missing} items below a prefix of {k} in a corpus of {D}"
            )
        tail = range(D - missing + 1, D + 1)
    elif mode is Imputation.OPTIMISTIC:
        if k + missing > D:
            raise ValidationError(
                f"cannot place {missing} items after a prefix of {k} in a corpus of {D}"
            )
        tail = range(k + 1, k + missing + 1)
    else:
        tail = range(0)

    # Unretrieved ids are appended in sorted order purely for determinism;
    # their relative order within the imputed block is unobservable.
    unretrieved = sorted(relevant.difference(ids))
    positions = tuple(ranks) + tuple(tail)
    ids_at_levels = tuple(ids) + tuple(unretrieved[: len(tail)])
    return RelevantPositions(
        positions=positions,
        corpus_size=D,
        retrieved_count=retrieved,
        imputation=mode,
        ids_at_levels=ids_at_levels,
    )
