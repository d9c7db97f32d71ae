"""Preference relations between two rankings of the same request.

Four comparison routes with increasing resolution:

* ``tse_compare`` looks only at the lowest-ranked relevant item;
* ``lexirecall_compare`` breaks its ties by scanning positions bottom-up;
* ``leximin_compare`` is the generic bottom-up rule over any sorted
  utility vectors (used by the robustness oracles);
* ``metric_compare`` reduces any scalar metric to a preference with an
  explicit tie tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .core import ExposureModel, Preference, RelevantPositions
from .errors import ValidationError
from .metrics import MetricId, exact_value

DEFAULT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class UtilityVector:
    """Utility values sorted in decreasing order."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(self.values))
        vals = self.values
        if any(v < 0 for v in vals):
            raise ValidationError("utilities must be non-negative")
        if any(vals[i] < vals[i + 1] for i in range(len(vals) - 1)):
            raise ValidationError("utilities must be sorted in decreasing order")

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "UtilityVector":
        return cls(tuple(sorted(values, reverse=True)))

    def __len__(self) -> int:
        return len(self.values)


def leximin_compare(x: UtilityVector, y: UtilityVector) -> Preference:
    """Compare two sorted vectors from the worst-off element upward.

    The first index (scanning from the bottom) where the values differ
    decides; the larger value wins. ``deciding_level`` is the 1-based index
    of that element counted from the top.
    """
    if len(x) != len(y):
        raise ValidationError(f"vector lengths differ: {len(x)} vs {len(y)}")
    xv, yv = x.values, y.values
    for i in range(len(xv) - 1, -1, -1):
        a, b = xv[i], yv[i]
        if a != b:
            level = i + 1
            return Preference.first(level) if a > b else Preference.second(level)
    return Preference.tie()


def _check_same_request(rpx: RelevantPositions, rpy: RelevantPositions) -> None:
    if rpx.m != rpy.m:
        raise ValidationError(
            f"rankings judge different relevant sets: m={rpx.m} vs m={rpy.m}"
        )
    if rpx.corpus_size != rpy.corpus_size:
        raise ValidationError(
            f"rankings come from different corpora: D={rpx.corpus_size} vs D={rpy.corpus_size}"
        )


def lexirecall_compare(rpx: RelevantPositions, rpy: RelevantPositions) -> Preference:
    """Bottom-up lexicographic comparison of relevant-item positions.

    Scans recall levels from the deepest one upward; at the first level where
    the positions differ, the ranking holding the relevant item higher (the
    smaller position) wins. Identical vectors tie. Only rankings for the same
    request and judgment set are comparable, hence the m and D checks.
    """
    _check_same_request(rpx, rpy)
    px, py = rpx.positions, rpy.positions
    for i in range(len(px) - 1, -1, -1):
        a, b = px[i], py[i]
        if a != b:
            level = i + 1
            return Preference.first(level) if a < b else Preference.second(level)
    return Preference.tie()


def tse_compare(
    rpx: RelevantPositions,
    rpy: RelevantPositions,
    exposure: ExposureModel | None = None,
) -> Preference:
    """Worst-case preference: compare the exposure of the deepest relevant item.

    Exposure is strictly decreasing, so comparing the bottom positions
    directly is exact for every exposure model; the model never changes the
    outcome. Rankings sharing the bottom position tie, which is what makes
    this preference coarse.
    """
    del exposure  # order is exposure-model independent; kept for signature parity
    _check_same_request(rpx, rpy)
    a, b = rpx.positions[-1], rpy.positions[-1]
    if a == b:
        return Preference.tie()
    return Preference.first(rpx.m) if a < b else Preference.second(rpx.m)


def metric_compare(
    metric: MetricId,
    rpx: RelevantPositions,
    rpy: RelevantPositions,
    tolerance: float = DEFAULT_TOLERANCE,
) -> Preference:
    """Reduce a scalar metric to a preference with an absolute tie tolerance.

    Values within ``tolerance`` of each other tie. Effort metrics (ESL3,
    recall error) are oriented so that the better ranking is still reported
    as preferred. The exact-arithmetic metric is compared as a rational, so
    ``tolerance=0`` is meaningful there.
    """
    if tolerance < 0:
        raise ValidationError(f"tolerance must be non-negative, got {tolerance}")
    _check_same_request(rpx, rpy)
    a = exact_value(metric, rpx)
    b = exact_value(metric, rpy)
    diff = a - b
    tol = Fraction(tolerance) if isinstance(diff, Fraction) else tolerance
    if abs(diff) <= tol:
        return Preference.tie()
    better_first = (diff > 0) == metric.higher_is_better
    return Preference.first() if better_first else Preference.second()


PreferenceFn = Callable[[RelevantPositions, RelevantPositions], Preference]


def make_method(
    spec: str | MetricId,
    tolerance: float = DEFAULT_TOLERANCE,
    exposure: ExposureModel | None = None,
    corpus_size: int | None = None,
) -> tuple[str, PreferenceFn]:
    """Resolve a comparison-method spec into a labelled preference function.

    Accepts ``"lexirecall"``, ``"tse"``, a :class:`MetricId`, or a string of
    the form ``metric:<name>`` (bare metric names are also accepted).
    """
    if isinstance(spec, MetricId):
        return spec.label, lambda x, y: metric_compare(spec, x, y, tolerance)
    name = spec.strip()
    low = name.lower()
    if low == "lexirecall":
        return "lexirecall", lexirecall_compare
    if low == "tse":
        exp = exposure or ExposureModel.reciprocal()
        return "tse", lambda x, y: tse_compare(x, y, exp)
    if low.startswith("metric:"):
        name = name.split(":", 1)[1]
    metric = MetricId.parse(name, corpus_size=corpus_size)
    return metric.label, lambda x, y: metric_compare(metric, x, y, tolerance)
