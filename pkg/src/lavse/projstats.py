"""Projection-statistics baseline for leverage identification.

Each row is scored by the largest standardized projection of the row cloud
onto a set of candidate directions, then compared against a chi-square
cutoff whose degrees of freedom come from the row's sparsity.  This is the
classical robust-statistics screen the inequality-based detector is
benchmarked against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import InvalidArgument
from .model import MeasurementModel

# Consistency factor making the MAD estimate the Gaussian sigma.
_MAD_SCALE = 1.4826

PS_VARIANT = (
    "directions h_k - coordinatewise-median; |proj - median| / (1.4826 * MAD); "
    "statistic squared for chi-square comparability; cutoff chi2(dof, 0.975)"
)


@dataclass(frozen=True)
class PSReport:
    """Projection statistics per row with chi-square classification.

    ps holds the squared maximal standardized projection so that it lives
    on the same scale as the chi-square cutoff;  flagged is exactly
    ps > cutoff.  Directions whose projection spread (MAD) vanishes carry
    no information and are skipped; if every direction degenerates the
    statistics are undefined (NaN) and ``degenerate`` is set.
    """

    ps: np.ndarray
    dof: np.ndarray
    cutoff: np.ndarray
    flagged: np.ndarray
    variant: str
    directions_used: int
    directions_skipped: int
    degenerate: bool

    def to_dict(self) -> dict:
        return {
            "ps": [float(x) for x in self.ps],
            "dof": [int(d) for d in self.dof],
            "cutoff": [float(c) for c in self.cutoff],
            "flagged": [bool(f) for f in self.flagged],
            "variant": self.variant,
            "directions_used": self.directions_used,
            "directions_skipped": self.directions_skipped,
            "degenerate": self.degenerate,
        }

    def render_table(self, labels=None) -> str:
        m = len(self.ps)
        labels = labels or [f"m{i + 1}" for i in range(m)]
        width = max(len(str(s)) for s in list(labels) + ["measurement"])
        lines = [f"{'measurement':<{width}}  {'PS':>10}  {'chi2':>8}  {'d':>2}  flagged"]
        for i in range(m):
            lines.append(
                f"{labels[i]:<{width}}  {self.ps[i]:>10.4g}  {self.cutoff[i]:>8.4g}"
                f"  {self.dof[i]:>2d}  {'yes' if self.flagged[i] else 'no'}"
            )
        if self.degenerate:
            lines.append("all projection directions degenerate: statistics undefined")
        return "\n".join(lines)


def chi2_quantile(d: int, p: float = 0.975) -> float:
    """p-quantile of the chi-square distribution with d degrees of freedom.

    Computed through the inverse of the regularized incomplete gamma
    function.
    """
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise InvalidArgument(f"degrees of freedom must be a positive integer, got {d!r}")
    if not 0.0 < p < 1.0:
        raise InvalidArgument(f"quantile level must lie in (0, 1), got {p!r}")
    return float(2.0 * special.gammaincinv(d / 2.0, p))


def compute_ps(model: MeasurementModel, quantile: float = 0.975) -> PSReport:
    """Projection statistics of the model rows.

    Candidate directions are the rows recentred at the coordinatewise
    median; projections along each direction are standardized by the
    scaled median absolute deviation, and each row keeps the square of its
    worst standardized projection.
    """
    h = model.h
    m = model.m
    if m < 2:
        raise InvalidArgument("projection statistics need at least two rows")

    center = np.median(h, axis=0)
    directions = h - center
    norms = np.linalg.norm(directions, axis=1)
    scale = norms.max()

    best = np.zeros(m)
    used = 0
    skipped = 0
    for k in range(m):
        if scale == 0.0 or norms[k] <= scale * 1e-12:
            skipped += 1
            continue
        u = directions[k] / norms[k]
        proj = h @ u
        med = np.median(proj)
        dev = np.abs(proj - med)
        mad = np.median(dev)
        if mad <= max(np.abs(proj).max(), 1.0) * 1e-12:
            skipped += 1
            continue
        used += 1
        np.maximum(best, dev / (_MAD_SCALE * mad), out=best)

    dof = np.count_nonzero(h, axis=1)
    cutoff = np.array([chi2_quantile(int(d), quantile) for d in dof])
    degenerate = used == 0
    ps = np.full(m, np.nan) if degenerate else best**2
    flagged = np.zeros(m, dtype=bool) if degenerate else ps > cutoff
    return PSReport(
        ps=ps,
        dof=dof,
        cutoff=cutoff,
        flagged=flagged,
        variant=PS_VARIANT,
        directions_used=used,
        directions_skipped=skipped,
        degenerate=degenerate,
    )
