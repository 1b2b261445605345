"""Plain-text and JSON reporting over analyzed episode logs.

Every table has a JSON mirror carrying the same numbers, so reports
diff cleanly and downstream tooling never parses the text.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt
from statistics import fmean

from .scoring import (
    BEHAVIOR_CLASSES,
    Coefficients,
    DEFAULT_COEFFICIENTS,
    TrajectoryMetrics,
    stability_score,
)
from .stats import (
    SampleSet,
    SensitivityGrid,
    cohens_d,
    mann_whitney,
    mean_std_ci,
    sensitivity_grid,
    welch_t_test,
)

__all__ = [
    "LabelSummary",
    "PairwiseComparison",
    "behavior_table",
    "decomposition_table",
    "pairwise_comparisons",
    "pairwise_table",
    "performance_table",
    "render_report",
    "report_json",
    "sensitivity_section",
    "summarize_label",
]


@dataclass(frozen=True)
class LabelSummary:
    label: str
    n: int
    scores: tuple[float, ...]
    mean: float
    std: float | None  # None with a single episode
    ci: tuple[float, float] | None
    components: tuple[float, float, float]  # mean (P, V, C)
    behavior: dict[str, float]  # mean fraction per class
    mean_survivors: float
    mean_conflict_attempts: float

    @property
    def sample(self) -> SampleSet | None:
        if self.n < 2:
            return None
        return SampleSet(label=self.label, values=self.scores)


def summarize_label(
    label: str,
    metrics: list[TrajectoryMetrics],
    level: float = 0.95,
) -> LabelSummary:
    if not metrics:
        raise ValueError(f"no episodes for label {label!r}")
    scores = tuple(m.score for m in metrics)
    n = len(scores)
    mean = fmean(scores)
    std = None
    ci = None
    if n >= 2:
        std = sqrt(sum((s - mean) ** 2 for s in scores) / (n - 1))
        ci = mean_std_ci(mean, std, n, level)
    components = (
        fmean(m.productivity for m in metrics),
        fmean(m.survival for m in metrics),
        fmean(m.conflict for m in metrics),
    )
    behavior = {
        c: fmean(m.behavior.fractions[c] for m in metrics) for c in BEHAVIOR_CLASSES
    }
    return LabelSummary(
        label=label,
        n=n,
        scores=scores,
        mean=mean,
        std=std,
        ci=ci,
        components=components,
        behavior=behavior,
        mean_survivors=fmean(m.survivors for m in metrics),
        mean_conflict_attempts=fmean(m.conflict_attempts for m in metrics),
    )


# ---------------------------------------------------------------------------
# Table rendering


def _table(headers: list[str], rows: list[list[str]], title: str) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def line(cells: list[str]) -> str:
        return "  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(cells, widths)))
    rule = "  ".join("-" * w for w in widths)
    body = "\n".join(line(r) for r in rows)
    return f"{title}\n{line(headers)}\n{rule}\n{body}\n"


def _fmt(value: float | None, places: int = 3) -> str:
    return "n/a" if value is None else f"{value:.{places}f}"


def performance_table(summaries: list[LabelSummary], level: float = 0.95) -> str:
    rows = []
    for s in sorted(summaries, key=lambda s: -s.mean):
        lo, hi = s.ci if s.ci else (None, None)
        rows.append(
            [s.label, str(s.n), _fmt(s.mean), _fmt(s.std), _fmt(lo), _fmt(hi)]
        )
    pct = f"{level:.0%}"
    return _table(
        ["label", "n", "mean", "std", f"ci{pct} lo", f"ci{pct} hi"],
        rows,
        "Score by constitution",
    )


def decomposition_table(
    summaries: list[LabelSummary],
    coefficients: Coefficients = DEFAULT_COEFFICIENTS,
) -> str:
    rows = []
    for s in sorted(summaries, key=lambda s: -s.mean):
        p, v, c = s.components
        rows.append(
            [
                s.label,
                _fmt(p),
                _fmt(v),
                _fmt(c),
                _fmt(coefficients.alpha * p),
                _fmt(coefficients.beta * v),
                _fmt(-coefficients.gamma * c),
                _fmt(stability_score(p, v, c, coefficients)),
            ]
        )
    return _table(
        ["label", "P", "V", "C", "aP", "bV", "-gC", "score(mean)"],
        rows,
        "Component decomposition (episode means)",
    )


def behavior_table(summaries: list[LabelSummary]) -> str:
    rows = [
        [s.label] + [_fmt(s.behavior[c]) for c in BEHAVIOR_CLASSES]
        for s in sorted(summaries, key=lambda s: -s.mean)
    ]
    return _table(
        ["label", *BEHAVIOR_CLASSES], rows, "Behavior profile (fraction of actions)"
    )


@dataclass(frozen=True)
class PairwiseComparison:
    label_a: str
    label_b: str
    t: float
    df: float
    p_value: float
    d: float
    u: float
    mw_p: float
    mw_significant: bool


def pairwise_comparisons(summaries: list[LabelSummary]) -> list[PairwiseComparison]:
    """Welch t, Cohen's d, and Mann-Whitney for every label pair with
    at least two episodes each, higher-mean label first."""
    usable = [s for s in sorted(summaries, key=lambda s: -s.mean) if s.sample]
    out: list[PairwiseComparison] = []
    for i, a in enumerate(usable):
        for b in usable[i + 1 :]:
            welch = welch_t_test(a.sample, b.sample)
            mw = mann_whitney(a.sample, b.sample)
            out.append(
                PairwiseComparison(
                    label_a=a.label,
                    label_b=b.label,
                    t=welch.t,
                    df=welch.df,
                    p_value=welch.p_value,
                    d=cohens_d(a.sample, b.sample),
                    u=mw.u_a,
                    mw_p=mw.p_value,
                    mw_significant=mw.significant,
                )
            )
    return out


def pairwise_table(comparisons: list[PairwiseComparison]) -> str:
    rows = [
        [
            f"{c.label_a} vs {c.label_b}",
            _fmt(c.t, 2),
            _fmt(c.df, 2),
            _fmt(c.p_value, 4),
            _fmt(c.d, 2),
            _fmt(c.u, 1),
            _fmt(c.mw_p, 4),
            "yes" if c.mw_significant else "no",
        ]
        for c in comparisons
    ]
    return _table(
        ["pair", "t", "df", "p", "d", "U", "mw p", "mw sig@.01"],
        rows,
        "Pairwise comparisons (Welch; Mann-Whitney two-tailed at 0.01)",
    )


def sensitivity_section(summaries: list[LabelSummary]) -> tuple[str, SensitivityGrid]:
    components = {s.label: s.components for s in summaries}
    grid = sensitivity_grid(components)
    orderings: dict[tuple[str, ...], int] = {}
    for e in grid.entries:
        orderings[e.ranking] = orderings.get(e.ranking, 0) + 1
    lines = [
        f"Coefficient sensitivity ({len(grid.entries)} weight combinations)",
    ]
    for ranking, count in sorted(orderings.items(), key=lambda kv: -kv[1]):
        lines.append(f"  {' > '.join(ranking)}  [{count}/{len(grid.entries)}]")
    lines.append(
        "Ranking is stable across the grid."
        if grid.consistent
        else "Ranking CHANGES across the grid."
    )
    return "\n".join(lines) + "\n", grid


def render_report(
    summaries: list[LabelSummary],
    coefficients: Coefficients = DEFAULT_COEFFICIENTS,
    level: float = 0.95,
) -> str:
    sections = [
        performance_table(summaries, level),
        decomposition_table(summaries, coefficients),
        behavior_table(summaries),
    ]
    comparisons = pairwise_comparisons(summaries)
    if comparisons:
        sections.append(pairwise_table(comparisons))
    if len(summaries) >= 2:
        text, _ = sensitivity_section(summaries)
        sections.append(text)
    return "\n".join(sections)


def report_json(
    summaries: list[LabelSummary],
    coefficients: Coefficients = DEFAULT_COEFFICIENTS,
) -> dict:
    """Same numbers as the text report, machine-readable."""
    payload: dict = {
        "coefficients": {
            "alpha": coefficients.alpha,
            "beta": coefficients.beta,
            "gamma": coefficients.gamma,
        },
        "labels": {},
        "pairwise": [],
        "sensitivity": None,
    }
    for s in summaries:
        payload["labels"][s.label] = {
            "n": s.n,
            "mean": s.mean,
            "std": s.std,
            "ci": list(s.ci) if s.ci else None,
            "components": {
                "productivity": s.components[0],
                "survival": s.components[1],
                "conflict": s.components[2],
            },
            "behavior": dict(s.behavior),
            "mean_survivors": s.mean_survivors,
            "mean_conflict_attempts": s.mean_conflict_attempts,
        }
    for c in pairwise_comparisons(summaries):
        payload["pairwise"].append(
            {
                "pair": [c.label_a, c.label_b],
                "welch_t": c.t,
                "welch_df": c.df,
                "welch_p": c.p_value,
                "cohens_d": c.d,
                "mann_whitney_u": c.u,
                "mann_whitney_p": c.mw_p,
                "mann_whitney_significant": c.mw_significant,
            }
        )
    if len(summaries) >= 2:
        _, grid = sensitivity_section(summaries)
        payload["sensitivity"] = {
            "consistent": grid.consistent,
            "entries": [
                {
                    "alpha": e.coefficients.alpha,
                    "beta": e.coefficients.beta,
                    "gamma": e.coefficients.gamma,
                    "scores": dict(e.scores),
                    "ranking": list(e.ranking),
                }
                for e in grid.entries
            ],
        }
    return payload
