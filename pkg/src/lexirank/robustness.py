"""Brute-force population oracles for worst-case evaluation.

A request with m relevant items conceals up to 2^m - 1 possible users (every
non-empty subset of the relevant items could be the set someone actually
wants) and the same family of possible providers. These enumerators score a
ranking for every member of those populations so that the cheap worst-case
shortcuts used elsewhere can be checked against an exhaustive minimum.

Enumeration caps keep the oracles usable in test suites: the subset
population is capped at m = 20 and the optimal-ranking analysis at m = 8.
All functions are pure and deterministic, so results never depend on any
parallel schedule a caller might choose.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple

from .core import ExposureModel, RelevantPositions
from .errors import EnumerationBudgetError, ValidationError
from .metrics import NormalizationModel

_SUBSET_M_CAP = 20
_ARRANGEMENT_M_CAP = 8


@dataclass(frozen=True)
class UserSubset:
    """A population member, identified by the recall levels it cares about."""

    levels: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "levels", tuple(int(v) for v in self.levels))
        lv = self.levels
        if not lv:
            raise ValidationError("a user must care about at least one relevant item")
        prev = 0
        for v in lv:
            if v <= prev:
                raise ValidationError(f"levels must be strictly increasing and 1-based, got {lv}")
            prev = v

    def __len__(self) -> int:
        return len(self.levels)


def enumerate_users(m: int) -> list[UserSubset]:
    """All non-empty level subsets of [1..m], ordered by size then lexicographically."""
    if m < 1:
        raise ValidationError(f"m must be positive, got {m}")
    if m > _SUBSET_M_CAP:
        raise EnumerationBudgetError(
            f"refusing to enumerate 2^{m}-1 subsets; the cap is m={_SUBSET_M_CAP}"
        )
    out: list[UserSubset] = []
    for size in range(1, m + 1):
        for combo in combinations(range(1, m + 1), size):
            out.append(UserSubset(combo))
    return out


def _check_levels(rp: RelevantPositions, subset: UserSubset) -> None:
    if subset.levels[-1] > rp.m:
        raise ValidationError(
            f"subset level {subset.levels[-1]} exceeds the {rp.m} available recall levels"
        )


def user_utility(
    rp: RelevantPositions,
    subset: UserSubset,
    exposure: ExposureModel,
    normalization: NormalizationModel,
) -> float:
    """Score the ranking for one possible user.

    The user's items are the relevant items at the selected recall levels;
    the summation form is evaluated on that sub-vector with recall levels
    renumbered 1..|subset|.
    """
    _check_levels(rp, subset)
    n = len(subset)
    pos = rp.positions
    return sum(
        exposure.at(pos[level - 1]) * normalization.weight(i, n)
        for i, level in enumerate(subset.levels, start=1)
    )


def provider_utility(
    rp: RelevantPositions,
    exposure: ExposureModel,
    subset: UserSubset,
) -> float:
    """Cumulative exposure of a provider owning the items at these levels."""
    _check_levels(rp, subset)
    pos = rp.positions
    return sum(exposure.at(pos[level - 1]) for level in subset.levels)


class WorstCase(NamedTuple):
    value: float
    witness: UserSubset


def _weight_rows(normalization: NormalizationModel, m: int) -> list[tuple[float, ...]]:
    # rows[n] holds N(1..n, n); row 0 is a placeholder.
    return [()] + [
        tuple(normalization.weight(i, n) for i in range(1, n + 1)) for n in range(1, m + 1)
    ]


def _min_over_subsets(
    gains: list[float], weight_rows: list[tuple[float, ...]] | None
) -> tuple[float, tuple[int, ...]]:
    """Exhaustive minimum over all non-empty index subsets.

    Ties at the minimum resolve to the lexicographically smallest witness.
    ``weight_rows=None`` means plain summation (the provider population).
    """
    m = len(gains)
    best_value: float | None = None
    best_combo: tuple[int, ...] = ()
    for size in range(1, m + 1):
        row = weight_rows[size] if weight_rows is not None else None
        for combo in combinations(range(m), size):
            total = 0.0
            if row is None:
                for idx in combo:
                    total += gains[idx]
            else:
                for i, idx in enumerate(combo):
                    total += gains[idx] * row[i]
            if (
                best_value is None
                or total < best_value
                or (total == best_value and combo < best_combo)
            ):
                best_value = total
                best_combo = combo
    return best_value, best_combo


def _require_population_budget(m: int) -> None:
    if m < 1:
        raise ValidationError("need at least one relevant item")
    if m > _SUBSET_M_CAP:
        raise EnumerationBudgetError(
            f"refusing to minimize over 2^{m}-1 subsets; the cap is m={_SUBSET_M_CAP}. "
            "The bottom-position exposure gives the same value directly."
        )


def worst_case_user(
    rp: RelevantPositions,
    exposure: ExposureModel,
    normalization: NormalizationModel,
) -> WorstCase:
    """Brute-force minimum of user utility over the whole user population."""
    m = rp.m
    _require_population_budget(m)
    gains = [exposure.at(p) for p in rp.positions]
    value, combo = _min_over_subsets(gains, _weight_rows(normalization, m))
    return WorstCase(value, UserSubset(tuple(i + 1 for i in combo)))


def worst_case_provider(rp: RelevantPositions, exposure: ExposureModel) -> WorstCase:
    """Brute-force minimum of provider exposure over all provider subsets."""
    m = rp.m
    _require_population_budget(m)
    gains = [exposure.at(p) for p in rp.positions]
    value, combo = _min_over_subsets(gains, None)
    return WorstCase(value, UserSubset(tuple(i + 1 for i in combo)))


class OptimalRankerWorstCase(NamedTuple):
    deterministic: float
    stochastic: float


def optimal_ranker_worst_case(
    exposure: ExposureModel,
    normalization: NormalizationModel,
    corpus_size: int,
    m: int,
) -> OptimalRankerWorstCase:
    """Worst-case user value of fixed versus uniformly sampled optimal rankings.

    An optimal ranking puts the m relevant items in the top m positions. A
    deterministic optimal ranker commits to one of the m! arrangements; its
    worst-off user is the one wanting only the item at position m. A
    stochastic optimal ranker samples an arrangement uniformly, so a user
    holding c items sees its items land on a uniformly random size-c subset
    of the top m; the mean utility is averaged over those arrangements
    (arrangements are grouped by the position subset they induce, an exact
    regrouping of the m!-term average). The minimum over users of that mean
    is the stochastic worst case.
    """
    if not 1 <= m <= corpus_size:
        raise ValidationError(f"need 1 <= m <= corpus_size, got m={m}, D={corpus_size}")
    if m > _ARRANGEMENT_M_CAP:
        raise EnumerationBudgetError(
            f"refusing to average over {m}! arrangements; the cap is m={_ARRANGEMENT_M_CAP}"
        )
    ideal = RelevantPositions.from_positions(range(1, m + 1), corpus_size)
    deterministic = worst_case_user(ideal, exposure, normalization).value

    gains = [exposure.at(p) for p in range(1, m + 1)]
    weight_rows = _weight_rows(normalization, m)
    stochastic = None
    for size in range(1, m + 1):
        row = weight_rows[size]
        total = 0.0
        count = 0
        for placement in combinations(range(m), size):
            total += sum(gains[idx] * row[i] for i, idx in enumerate(placement))
            count += 1
        mean = total / count
        if stochastic is None or mean < stochastic:
            stochastic = mean
    return OptimalRankerWorstCase(deterministic, stochastic)
