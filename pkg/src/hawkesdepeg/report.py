"""Plain-text parameter tables, one row per percentile band."""

from __future__ import annotations

from typing import Optional, Sequence

from .optimizer import BOUND_UPPER, FitResult


def default_labels(m: int) -> list[str]:
    # stablecoin / cryptocurrency for the two-series case
    return ["s", "c"] if m == 2 else [str(i + 1) for i in range(m)]


def parameter_names(m: int, labels: Optional[Sequence[str]] = None) -> list[str]:
    """Column names in packed order: alpha row-major, beta row-major, mu."""
    labels = list(labels) if labels is not None else default_labels(m)
    if len(labels) != m:
        raise ValueError(f"need {m} labels, got {len(labels)}")
    sep = "" if all(len(x) == 1 for x in labels) else ","

    def pair(j, k):
        return labels[j] if j == k else f"{labels[j]}{sep}{labels[k]}"

    names = [f"alpha_{pair(j, k)}" for j in range(m) for k in range(m)]
    names += [f"beta_{pair(j, k)}" for j in range(m) for k in range(m)]
    names += [f"mu_{labels[j]}" for j in range(m)]
    return names


def format_value(value: float, flag: str, upper_bound: float) -> str:
    """Three decimals; estimates pinned at the upper bound print as e.g. ``10.0+``."""
    if flag == BOUND_UPPER:
        return f"{upper_bound:.1f}+"
    return f"{value:.3f}"


def render_table(rows: Sequence[tuple[str, Optional[FitResult]]],
                 labels: Optional[Sequence[str]] = None) -> str:
    """Render ``(band label, result)`` rows; a ``None`` result marks a skipped band."""
    fitted = [r for _, r in rows if r is not None]
    if fitted:
        m = fitted[0].model.dim
    elif labels is not None:
        m = len(labels)
    else:
        m = 2
    header = ["Percentile Range", "log-Likelihood"] + parameter_names(m, labels)
    body = []
    for band, res in rows:
        if res is None:
            body.append([band, "skipped"] + [""] * (len(header) - 2))
            continue
        upper = res.config.upper_bound if res.config is not None else float("inf")
        theta = list(res.model.alpha.ravel()) + list(res.model.beta.ravel()) + list(res.model.mu)
        cells = [format_value(v, f, upper) for v, f in zip(theta, res.bound_hits)]
        body.append([band, f"{res.log_likelihood:.2f}"] + cells)
    widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
    lines = [" | ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    lines.append("-+-".join("-" * w for w in widths))
    for r in body:
        lines.append(" | ".join(c.rjust(w) if i else c.ljust(w)
                                for i, (c, w) in enumerate(zip(r, widths))).rstrip())
    return "\n".join(lines) + "\n"
