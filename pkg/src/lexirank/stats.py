"""Statistical sensitivity pipeline for comparing sets of runs.

Per-pair significance comes from a paired t-test (score-based methods) or an
exact binomial sign test (preference-based methods), corrected across run
pairs with the step-down Holm-Bonferroni rule, or jointly via Tukey's
honestly-significant-difference test on a two-way (run, request) model.

The t CDF is computed through the regularized incomplete beta function and
the studentized-range CDF by direct double integration (outer integral over
the chi-distributed scale, inner over the range of standard normals), both
implemented here; scipy supplies only the vectorized normal CDF primitive.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from .errors import UndefinedResultError, ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    """Per-run, per-request metric scores on a rectangular grid."""

    runs: tuple[str, ...]
    requests: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "runs", tuple(self.runs))
        object.__setattr__(self, "requests", tuple(self.requests))
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.shape != (len(self.runs), len(self.requests)):
            raise ValidationError(
                f"values shape {values.shape} does not match "
                f"{len(self.runs)} runs x {len(self.requests)} requests"
            )
        if np.isnan(values).any():
            raise ValidationError("score matrix has missing cells")

    def row(self, tag: str) -> np.ndarray:
        return self.values[self.runs.index(tag)]


@dataclass(frozen=True, eq=False)
class PreferenceTallies:
    """Win/loss/tie counts for every ordered run pair, one tally per request."""

    runs: tuple[str, ...]
    wins: np.ndarray  # wins[i, j] = requests where run i strictly beats run j
    ties: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "runs", tuple(self.runs))
        wins = np.asarray(self.wins, dtype=int)
        ties = np.asarray(self.ties, dtype=int)
        object.__setattr__(self, "wins", wins)
        object.__setattr__(self, "ties", ties)
        n = len(self.runs)
        if wins.shape != (n, n) or ties.shape != (n, n):
            raise ValidationError("tally matrices must be runs x runs")

    def pair(self, i: int, j: int) -> tuple[int, int, int]:
        return int(self.wins[i, j]), int(self.wins[j, i]), int(self.ties[i, j])


# --- elementary distribution machinery -------------------------------------

def _betacf(a: float, b: float, x: float) -> float:
    # Continued fraction for the incomplete beta function (Lentz's method).
    max_iter = 300
    eps = 3e-14
    fpmin = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError("incomplete beta continued fraction failed to converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if not 0.0 <= x <= 1.0:
        raise ValidationError(f"x must lie in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return x
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, df: int) -> float:
    """Two-sided tail probability of Student's t via the incomplete beta."""
    if df < 1:
        raise ValidationError(f"degrees of freedom must be positive, got {df}")
    if math.isinf(t):
        return 0.0
    x = df / (df + t * t)
    return regularized_incomplete_beta(df / 2.0, 0.5, x)


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> float:
    """Two-sided paired t-test p-value.

    Degenerate zero-variance differences resolve to p = 1 when the means
    are equal and to the p = 0 floor when they are not (an infinite-t
    sentinel rather than a numerical blowup).
    """
    av = np.asarray(a, dtype=float)
    bv = np.asarray(b, dtype=float)
    if av.shape != bv.shape:
        raise ValidationError(f"paired samples differ in length: {av.shape} vs {bv.shape}")
    n = av.size
    if n < 2:
        raise ValidationError(f"need at least 2 paired observations, got {n}")
    d = av - bv
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        return 1.0 if mean == 0.0 else 0.0
    t = mean / (sd / math.sqrt(n))
    return t_two_sided_p(t, n - 1)


def binomial_sign_test(wins_first: int, wins_second: int) -> float:
    """Exact two-sided binomial test at p = 1/2 over decisive pairs.

    Callers drop ties before invoking this; a comparison with no decisive
    pairs has no defined p-value.
    """
    if wins_first < 0 or wins_second < 0:
        raise ValidationError("win counts must be non-negative")
    n = wins_first + wins_second
    if n == 0:
        raise UndefinedResultError("no decisive pairs to test")
    lo = min(wins_first, wins_second)
    tail = sum(math.comb(n, i) for i in range(lo + 1))
    # p = min(1, 2 * tail / 2^n), kept exact until the final division.
    num = 2 * tail
    den = 1 << n
    return 1.0 if num >= den else num / den


def holm_bonferroni(p_values: Sequence[float]) -> list[float]:
    """Step-down Holm adjustment, returned in the original order."""
    ps = list(p_values)
    for p in ps:
        if not 0.0 <= p <= 1.0:
            raise ValidationError(f"p-values must lie in [0, 1], got {p}")
    order = sorted(range(len(ps)), key=lambda i: ps[i])
    adjusted = [0.0] * len(ps)
    running = 0.0
    n = len(ps)
    for rank, idx in enumerate(order):
        scaled = min(1.0, ps[idx] * (n - rank))
        running = max(running, scaled)
        adjusted[idx] = running
    return adjusted


# --- studentized range ------------------------------------------------------

def _gauss_legendre(lo: float, hi: float, panels: int, order: int = 16) -> tuple[np.ndarray, np.ndarray]:
    base_x, base_w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = (edges[1:] - edges[:-1]) / 2.0
    mid = (edges[1:] + edges[:-1]) / 2.0
    nodes = (mid[:, None] + half[:, None] * base_x[None, :]).ravel()
    weights = (half[:, None] * base_w[None, :]).ravel()
    return nodes, weights


_Z_NODES, _Z_WEIGHTS = _gauss_legendre(-8.5, 8.5, 24)
_Z_PHI = np.exp(-0.5 * _Z_NODES**2) / math.sqrt(2.0 * math.pi)
_Z_CDF = ndtr(_Z_NODES)


def _normal_range_cdf(x: np.ndarray, groups: int) -> np.ndarray:
    """P(range of `groups` iid standard normals <= x), vectorized over x."""
    x = np.asarray(x, dtype=float)[:, None]
    inner = _Z_CDF[None, :] - ndtr(_Z_NODES[None, :] - x)
    np.clip(inner, 0.0, None, out=inner)
    vals = groups * np.sum(_Z_WEIGHTS * _Z_PHI * inner ** (groups - 1), axis=1)
    return np.clip(vals, 0.0, 1.0)


def studentized_range_cdf(q: float, groups: int, df: int) -> float:
    """CDF of the studentized range statistic by double integration.

    The scale s = sqrt(chi2_df / df) is integrated over a grid concentrated
    around 1 (width shrinks as 1/sqrt(df)); at each scale node the inner
    integral is the CDF of the plain normal range at q*s. Absolute accuracy
    is well below 1e-6 across published-table territory.
    """
    if groups < 2:
        raise ValidationError(f"need at least 2 groups, got {groups}")
    if df < 1:
        raise ValidationError(f"degrees of freedom must be positive, got {df}")
    if q <= 0.0:
        return 0.0
    spread = 12.0 / math.sqrt(df)
    lo = max(1e-9, 1.0 - spread)
    hi = min(8.0, 1.0 + spread) if df >= 4 else 8.0
    s_nodes, s_weights = _gauss_legendre(lo, hi, 48)
    half_df = df / 2.0
    ln_norm = math.log(2.0) + half_df * math.log(half_df) - math.lgamma(half_df)
    log_density = ln_norm + (df - 1) * np.log(s_nodes) - half_df * s_nodes**2
    density = np.exp(log_density)
    inner = _normal_range_cdf(q * s_nodes, groups)
    return float(min(1.0, np.sum(s_weights * density * inner)))


def studentized_range_critical(alpha: float, groups: int, df: int) -> float:
    """Upper critical value q with P(Q > q) = alpha, found by bisection."""
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    target = 1.0 - alpha
    lo, hi = 1e-6, 100.0
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if studentized_range_cdf(mid, groups, df) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-7:
            break
    return (lo + hi) / 2.0


def tukey_hsd(matrix: ScoreMatrix) -> np.ndarray:
    """Pairwise p-values from Tukey's HSD on a two-way (run, request) model.

    Residual variance comes from the additive run + request decomposition
    with (R-1)(Q-1) degrees of freedom. Zero residual variance degenerates
    cleanly: equal run means give p = 1, unequal means give p = 0.
    """
    values = matrix.values
    n_runs, n_requests = values.shape
    if n_runs < 2 or n_requests < 2:
        raise ValidationError("Tukey HSD needs at least 2 runs and 2 requests")
    run_means = values.mean(axis=1)
    request_means = values.mean(axis=0)
    grand = values.mean()
    resid = values - run_means[:, None] - request_means[None, :] + grand
    df = (n_runs - 1) * (n_requests - 1)
    mse = float((resid**2).sum()) / df
    p = np.ones((n_runs, n_runs))
    if mse <= 0.0:
        logger.warning("zero residual variance; HSD p-values are degenerate")
        for i in range(n_runs):
            for j in range(i + 1, n_runs):
                p[i, j] = p[j, i] = 1.0 if run_means[i] == run_means[j] else 0.0
        return p
    se = math.sqrt(mse / n_requests)
    for i in range(n_runs):
        for j in range(i + 1, n_runs):
            q = abs(run_means[i] - run_means[j]) / se
            p[i, j] = p[j, i] = 1.0 - studentized_range_cdf(q, n_runs, df)
    return p


# --- discriminative power ---------------------------------------------------

def _pair_indices(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def discriminative_power(
    data: ScoreMatrix | PreferenceTallies,
    method: str,
    alpha: float = 0.05,
) -> float:
    """Fraction of run pairs reported significantly different at level alpha.

    ``holm_t`` runs paired t-tests over a score matrix, ``holm_binomial``
    exact sign tests over preference tallies (pairs with no decisive
    requests count as insignificant), both Holm-corrected across all run
    pairs; ``hsd`` uses the Tukey grid, which handles multiplicity itself.
    """
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    if method == "holm_t":
        if not isinstance(data, ScoreMatrix):
            raise ValidationError("holm_t needs a ScoreMatrix")
        pairs = _pair_indices(len(data.runs))
        if not pairs:
            raise ValidationError("need at least two runs")
        ps = [paired_t_test(data.values[i], data.values[j]) for i, j in pairs]
        adjusted = holm_bonferroni(ps)
        return sum(p < alpha for p in adjusted) / len(pairs)
    if method == "holm_binomial":
        if not isinstance(data, PreferenceTallies):
            raise ValidationError("holm_binomial needs PreferenceTallies")
        pairs = _pair_indices(len(data.runs))
        if not pairs:
            raise ValidationError("need at least two runs")
        ps = []
        for i, j in pairs:
            w_i, w_j, _ties = data.pair(i, j)
            try:
                ps.append(binomial_sign_test(w_i, w_j))
            except UndefinedResultError:
                logger.warning(
                    "no decisive requests for pair (%s, %s); counted as insignificant",
                    data.runs[i],
                    data.runs[j],
                )
                ps.append(1.0)
        adjusted = holm_bonferroni(ps)
        return sum(p < alpha for p in adjusted) / len(pairs)
    if method == "hsd":
        if not isinstance(data, ScoreMatrix):
            raise ValidationError("hsd needs a ScoreMatrix")
        grid = tukey_hsd(data)
        pairs = _pair_indices(len(data.runs))
        return sum(grid[i, j] < alpha for i, j in pairs) / len(pairs)
    raise ValidationError(f"unknown method {method!r}; use holm_t, holm_binomial, or hsd")
