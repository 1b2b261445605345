"""Self-contained statistics for comparing score samples.

Everything here is exact or numerically derived in-module: Student-t
quantiles come from the regularized incomplete beta function
(continued fraction plus bisection), and the Mann-Whitney
significance flag uses the exact null distribution of U for small
samples. No scipy at runtime; the test suite cross-checks these
routines against scipy as an independent reference.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cache
from math import comb, copysign, erf, exp, fsum, inf, isnan, lgamma, log, nan, sqrt
from typing import Sequence

from .scoring import Coefficients

__all__ = [
    "GridEntry",
    "MannWhitneyResult",
    "SampleSet",
    "SensitivityGrid",
    "WelchResult",
    "cohens_d",
    "default_triples",
    "describe",
    "mann_whitney",
    "mean_std_ci",
    "sensitivity_grid",
    "student_t_cdf",
    "student_t_quantile",
    "welch_t_test",
]


@dataclass(frozen=True)
class SampleSet:
    """A labelled sample of episode scores with summary moments."""

    label: str
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.values) < 1:
            raise ValueError("SampleSet needs at least one value")

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def mean(self) -> float:
        return fsum(self.values) / self.n

    @property
    def std(self) -> float:
        """Sample standard deviation (n - 1 in the denominator)."""
        if self.n < 2:
            raise ValueError("sample std needs n >= 2")
        m = self.mean
        return sqrt(fsum((v - m) ** 2 for v in self.values) / (self.n - 1))


def describe(
    s: SampleSet, level: float = 0.95
) -> tuple[float, float | None, tuple[float, float] | None]:
    """(mean, sample std, CI); std and CI are None for a single value."""
    if s.n < 2:
        return (s.mean, None, None)
    return (s.mean, s.std, mean_std_ci(s.mean, s.std, s.n, level))


# ---------------------------------------------------------------------------
# Student-t distribution


def _beta_cf(x: float, a: float, b: float) -> float:
    # Lentz's continued fraction for the incomplete beta function,
    # as in the classic betacf formulation.
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    return h


def _reg_inc_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta I_x(a, b) for x in [0, 1]."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = lgamma(a + b) - lgamma(a) - lgamma(b) + a * log(x) + b * log(1.0 - x)
    front = exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(x, a, b) / a
    return 1.0 - front * _beta_cf(1.0 - x, b, a) / b


def student_t_cdf(t: float, df: float) -> float:
    if df <= 0:
        raise ValueError("df must be positive")
    if t == 0.0:
        return 0.5
    x = df / (df + t * t)
    tail = 0.5 * _reg_inc_beta(x, df / 2.0, 0.5)
    return 1.0 - tail if t > 0 else tail


def student_t_quantile(p: float, df: float) -> float:
    """Inverse CDF by bisection on the analytic CDF."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly inside (0, 1)")
    if df <= 0:
        raise ValueError("df must be positive")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -student_t_quantile(1.0 - p, df)
    hi = 1.0
    while student_t_cdf(hi, df) < p:
        hi *= 2.0
        if hi > 1e12:
            raise ArithmeticError("t quantile search failed to bracket")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if student_t_cdf(mid, df) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def mean_std_ci(
    mean: float, std: float, n: int, level: float = 0.95
) -> tuple[float, float]:
    """Two-sided t interval for a mean from summary statistics."""
    if n < 2:
        raise ValueError("confidence interval needs n >= 2")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie strictly inside (0, 1)")
    q = student_t_quantile(0.5 + level / 2.0, n - 1)
    half_width = q * std / sqrt(n)
    return (mean - half_width, mean + half_width)


# ---------------------------------------------------------------------------
# Two-sample comparisons


@dataclass(frozen=True)
class WelchResult:
    t: float
    df: float
    p_value: float
    mean_difference: float

    @property
    def degenerate(self) -> bool:
        """True when both samples had zero variance (t pinned to 0 or inf)."""
        return isnan(self.df)


def _require_spread(s: SampleSet) -> None:
    if s.n < 2:
        raise ValueError(f"sample {s.label!r} needs n >= 2")


def welch_t_test(a: SampleSet, b: SampleSet) -> WelchResult:
    """Welch's unequal-variance t test with Welch-Satterthwaite df.

    Two zero-variance samples give a degenerate result: t is 0 for
    equal means and signed infinity otherwise, with df marked NaN.
    """
    _require_spread(a)
    _require_spread(b)
    va, vb = a.std**2 / a.n, b.std**2 / b.n
    diff = a.mean - b.mean
    if va + vb == 0.0:
        t = 0.0 if diff == 0.0 else copysign(inf, diff)
        return WelchResult(
            t=t,
            df=nan,
            p_value=1.0 if diff == 0.0 else 0.0,
            mean_difference=diff,
        )
    t = diff / sqrt(va + vb)
    # Satterthwaite df via normalized ratios: squaring va/vb directly
    # underflows for tiny variances even though their sum is nonzero.
    ra, rb = va / (va + vb), vb / (va + vb)
    df = 1.0 / (ra**2 / (a.n - 1) + rb**2 / (b.n - 1))
    p = 2.0 * (1.0 - student_t_cdf(abs(t), df))
    return WelchResult(t=t, df=df, p_value=p, mean_difference=diff)


def cohens_d(a: SampleSet, b: SampleSet) -> float:
    """Mean difference over the root mean of the two sample variances.

    Zero pooled spread degenerates the same way: 0 for equal means,
    signed infinity otherwise.
    """
    _require_spread(a)
    _require_spread(b)
    pooled = sqrt((a.std**2 + b.std**2) / 2.0)
    diff = a.mean - b.mean
    if pooled == 0.0:
        return 0.0 if diff == 0.0 else copysign(inf, diff)
    return diff / pooled


@cache
def _u_count(i: int, j: int, u: int) -> int:
    # Number of orderings of i X's and j Y's whose U statistic for X
    # equals u, by conditioning on whether the largest value is an X.
    if u < 0:
        return 0
    if i == 0 or j == 0:
        return 1 if u == 0 else 0
    return _u_count(i - 1, j, u - j) + _u_count(i, j - 1, u)


def _exact_u_cdf(m: int, n: int, u: int) -> float:
    u = min(u, m * n)
    if u < 0:
        return 0.0
    total = comb(m + n, m)
    return sum(_u_count(m, n, k) for k in range(u + 1)) / total


EXACT_LIMIT = 20


@dataclass(frozen=True)
class MannWhitneyResult:
    u_a: float
    u_b: float
    p_value: float
    significant: bool  # two-tailed at the 0.01 level
    exact: bool


def mann_whitney(a: SampleSet, b: SampleSet, alpha: float = 0.01) -> MannWhitneyResult:
    """Rank-sum comparison with midranks for ties.

    For samples of at most 20 each the p value comes from the exact
    null distribution of U (which assumes no ties, so with heavy ties
    the flag errs conservative). Larger samples use the normal
    approximation with tie correction.
    """
    pooled = sorted(
        [(v, 0) for v in a.values] + [(v, 1) for v in b.values]
    )
    ranks: list[float] = [0.0] * len(pooled)
    i = 0
    while i < len(pooled):
        j = i
        while j + 1 < len(pooled) and pooled[j + 1][0] == pooled[i][0]:
            j += 1
        midrank = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[k] = midrank
        i = j + 1
    rank_sum_a = sum(r for r, (_, who) in zip(ranks, pooled) if who == 0)
    u_a = rank_sum_a - a.n * (a.n + 1) / 2.0
    u_b = a.n * b.n - u_a
    u_min = min(u_a, u_b)

    if a.n <= EXACT_LIMIT and b.n <= EXACT_LIMIT:
        p = min(1.0, 2.0 * _exact_u_cdf(a.n, b.n, int(u_min)))
        exact = True
    else:
        n_total = a.n + b.n
        tie_sizes: list[int] = []
        i = 0
        values = [v for v, _ in pooled]
        while i < n_total:
            j = i
            while j + 1 < n_total and values[j + 1] == values[i]:
                j += 1
            if j > i:
                tie_sizes.append(j - i + 1)
            i = j + 1
        tie_term = sum(t**3 - t for t in tie_sizes) / (n_total * (n_total - 1))
        var = a.n * b.n / 12.0 * ((n_total + 1) - tie_term)
        if var <= 0.0:
            raise ValueError("all pooled values identical")
        z = (u_min - a.n * b.n / 2.0 + 0.5) / sqrt(var)
        p = min(1.0, 2.0 * 0.5 * (1.0 + erf(z / sqrt(2.0))))
        exact = False
    return MannWhitneyResult(
        u_a=u_a, u_b=u_b, p_value=p, significant=p <= alpha, exact=exact
    )


# ---------------------------------------------------------------------------
# Coefficient sensitivity


DEFAULT_ALPHAS = (0.4, 0.5, 0.6)
DEFAULT_BETAS = (0.2, 0.3, 0.4)
DEFAULT_GAMMAS = (0.1, 0.2, 0.3)


def default_triples() -> tuple[Coefficients, ...]:
    """The 27-combination grid: each default weight varied one step
    up and down while the others range too."""
    return tuple(
        Coefficients(alpha=a, beta=b, gamma=g)
        for a, b, g in itertools.product(DEFAULT_ALPHAS, DEFAULT_BETAS, DEFAULT_GAMMAS)
    )


@dataclass(frozen=True)
class GridEntry:
    coefficients: Coefficients
    scores: dict[str, float]
    ranking: tuple[str, ...]  # labels, best score first


@dataclass(frozen=True)
class SensitivityGrid:
    entries: tuple[GridEntry, ...]

    @property
    def triples(self) -> tuple[Coefficients, ...]:
        return tuple(e.coefficients for e in self.entries)

    @property
    def consistent(self) -> bool:
        """True when every triple produced the same label order."""
        first = self.entries[0].ranking
        return all(e.ranking == first for e in self.entries)

    @property
    def reference_ranking(self) -> tuple[str, ...]:
        return self.entries[0].ranking


def sensitivity_grid(
    components: dict[str, tuple[float, float, float]],
    triples: Sequence[Coefficients] | None = None,
) -> SensitivityGrid:
    """Re-score mean (P, V, C) triples under every coefficient
    combination and rank the labels per combination. Ties in score
    break by label so the ranking is deterministic."""
    if not components:
        raise ValueError("sensitivity_grid needs at least one labelled triple")
    chosen = tuple(triples) if triples is not None else default_triples()
    if not chosen:
        raise ValueError("sensitivity_grid needs at least one coefficient triple")
    from .scoring import stability_score

    entries: list[GridEntry] = []
    for coeffs in chosen:
        scores = {
            label: stability_score(p, v, c, coeffs)
            for label, (p, v, c) in components.items()
        }
        ranking = tuple(sorted(scores, key=lambda lab: (-scores[lab], lab)))
        entries.append(GridEntry(coefficients=coeffs, scores=scores, ranking=ranking))
    return SensitivityGrid(entries=tuple(entries))
