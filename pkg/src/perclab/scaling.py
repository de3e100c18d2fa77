"""Power-law exponent extraction and the reference exponent table.

Fits use weighted least squares on (ln n, ln f) with delta-method weights
(stderr/estimate)^-2 and a Gaussian-perturbation bootstrap for the
confidence interval.  The sign convention is f(n) = A * n^(-alpha).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np


@dataclass(frozen=True)
class SeriesPoint:
    n: float
    estimate: float
    stderr: float = 0.0

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("stderr must be >= 0")


@dataclass
class ExponentFit:
    alpha: float
    amplitude: float
    ci_low: float
    ci_high: float
    r_squared: float
    method: str
    n_points: int

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "amplitude": self.amplitude,
                "ci_low": self.ci_low, "ci_high": self.ci_high,
                "r_squared": self.r_squared, "method": self.method,
                "n_points": self.n_points}


def _clean(series) -> list[SeriesPoint]:
    out = []
    for pt in series:
        if pt.estimate <= 0:
            warnings.warn(f"dropping nonpositive estimate at n={pt.n}")
            continue
        out.append(pt)
    return out


def _wls(x: np.ndarray, y: np.ndarray, w: np.ndarray) -> tuple[float, float]:
    sw = w.sum()
    sx = (w * x).sum()
    sy = (w * y).sum()
    sxx = (w * x * x).sum()
    sxy = (w * x * y).sum()
    denom = sw * sxx - sx * sx
    if denom == 0:
        raise ValueError("degenerate scales: at least two distinct n required")
    slope = (sw * sxy - sx * sy) / denom
    intercept = (sy - slope * sx) / sw
    return slope, intercept


def fit_power_law(series, bootstrap_b: int = 400, rng_seed: int = 0) -> ExponentFit:
    """Fit f(n) = A n^(-alpha) by weighted log-log least squares.

    Relative errors stderr/estimate set the weights; exact (zero-stderr)
    series fall back to an unweighted fit and a degenerate CI.
    """
    pts = _clean(series)
    if len(pts) < 3:
        raise ValueError("need at least 3 positive points")
    if len({pt.n for pt in pts}) != len(pts):
        raise ValueError("duplicate scales in series")
    x = np.log([pt.n for pt in pts])
    y = np.log([pt.estimate for pt in pts])
    rel = np.array([pt.stderr / pt.estimate for pt in pts])
    exact = not rel.any()
    w = np.ones_like(x) if exact else 1.0 / np.where(rel > 0, rel, rel[rel > 0].min()) ** 2

    slope, intercept = _wls(x, y, w)
    alpha = -slope
    amp = math.exp(intercept)

    resid = y - (slope * x + intercept)
    ybar = (w * y).sum() / w.sum()
    ss_tot = (w * (y - ybar) ** 2).sum()
    ss_res = (w * resid ** 2).sum()
    r2 = 1.0 if ss_tot == 0 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))

    if exact or bootstrap_b <= 0:
        lo = hi = alpha
    else:
        rng = np.random.default_rng(rng_seed)
        est = np.array([pt.estimate for pt in pts])
        se = np.array([pt.stderr for pt in pts])
        alphas = []
        while len(alphas) < bootstrap_b:
            pert = est + rng.normal(0.0, 1.0, len(pts)) * se
            if (pert <= 0).any():
                continue
            s, _ = _wls(x, np.log(pert), w)
            alphas.append(-s)
        lo, hi = np.percentile(alphas, [2.5, 97.5])
        lo, hi = min(lo, alpha), max(hi, alpha)
    return ExponentFit(alpha=alpha, amplitude=amp, ci_low=float(lo), ci_high=float(hi),
                       r_squared=float(r2), method="weighted-log-log", n_points=len(pts))


@dataclass
class RatioExponent:
    n: float
    alpha: float
    stderr: float


def ratio_exponent(series, base: int = 2) -> list[RatioExponent]:
    """Local exponents log_base f(n)/f(base*n) from scale pairs in the series.

    A flat profile across pairs indicates clean power-law scaling.
    """
    pts = {pt.n: pt for pt in _clean(series)}
    lb = math.log(base)
    out = []
    for n in sorted(pts):
        m = base * n
        if m not in pts:
            continue
        a, b = pts[n], pts[m]
        alpha = math.log(a.estimate / b.estimate) / lb
        var = (a.stderr / a.estimate) ** 2 + (b.stderr / b.estimate) ** 2
        out.append(RatioExponent(n=n, alpha=alpha, stderr=math.sqrt(var) / lb))
    if not out:
        raise ValueError(f"series contains no (n, {base}n) scale pairs")
    return out


# ---------------------------------------------------------------------
# Reference exponents
# ---------------------------------------------------------------------

@dataclass(frozen=True)
class TargetExponent:
    tag: str
    formula: str               # display form, in terms of d where relevant
    _value: object
    conjectural: bool
    description: str

    def value(self, d: int) -> float:
        return float(self._value(d)) if callable(self._value) else float(self._value)


_TARGETS = [
    TargetExponent("pi", "2", 2, False, "full-space one-arm decay"),
    TargetExponent("pi_H", "3", 3, False, "half-space one-arm decay"),
    TargetExponent("tau_bulk", "d-2", lambda d: d - 2, False,
                   "two-point decay, both endpoints macroscopically interior "
                   "(box- or lattice-restricted)"),
    TargetExponent("tau_H_one_bdry", "d-1", lambda d: d - 1, False,
                   "half-space two-point decay, one endpoint on the wall"),
    TargetExponent("tau_H_both_bdry", "d", lambda d: d, False,
                   "half-space two-point decay, both endpoints on the wall"),
    TargetExponent("tail_H", "3/4", Fraction(3, 4), False,
                   "half-space cluster-size upper tail"),
    TargetExponent("corner", "2d-2", lambda d: 2 * d - 2, True,
                   "corner-to-corner arm inside the box (conjectured)"),
    TargetExponent("brw_survival", "1", 1, False,
                   "critical branching-process survival (tree one-arm)"),
]

_ALIASES = {
    "one_arm": "pi",
    "half_arm": "pi_H",
    "half_space_arm": "pi_H",
    "tau": "tau_bulk",
    "tau_H": "tau_H_one_bdry",
    "tail": "tail_H",
    "corner_arm": "corner",
}


def target_exponents() -> list[TargetExponent]:
    return list(_TARGETS)


def lookup_target(tag: str, d: int = 11) -> tuple[float, bool]:
    """(exponent value, conjectural flag) for a quantity tag."""
    key = _ALIASES.get(tag, tag)
    for t in _TARGETS:
        if t.tag == key:
            return t.value(d), t.conjectural
    raise KeyError(f"no reference exponent for {tag!r}")
