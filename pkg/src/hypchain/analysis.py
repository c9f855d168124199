"""Correlation fits, entropy curves and dimer-oscillation statistics."""

from __future__ import annotations

import io
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import curve_fit

log = logging.getLogger(__name__)

NOISE_FLOOR = 1e-10
DEFAULT_SKIP = 3


@dataclass(frozen=True, eq=False)
class ObservableSeries:
    x: np.ndarray
    y: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("x and y must be 1-D arrays of equal length")
        if x.size > 1 and np.any(np.diff(x) <= 0):
            raise ValueError("x must be strictly increasing")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("series values must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return self.x.size

    def to_tsv(self, columns: tuple[str, str] = ("x", "y"), extra: dict[str, np.ndarray] | None = None) -> str:
        extra = extra or {}
        buf = io.StringIO()
        buf.write("\t".join([*columns, *extra]) + "\n")
        for i in range(self.x.size):
            x = self.x[i]
            xs = str(int(x)) if float(x).is_integer() else repr(float(x))
            row = [xs, repr(float(self.y[i]))] + [repr(float(v[i])) for v in extra.values()]
            buf.write("\t".join(row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_tsv(cls, text: str, x_col: int = 0, y_col: int = -1) -> "ObservableSeries":
        rows = [line.split("\t") for line in text.strip().splitlines()[1:] if line and not line.startswith("#")]
        x = [float(r[x_col]) for r in rows]
        y = [float(r[y_col]) for r in rows]
        return cls(np.array(x), np.array(y))


@dataclass(frozen=True)
class FitResult:
    xi: float
    amplitude: float
    window: tuple[float, float]
    rms_log_residual: float
    n_points: int

    def to_dict(self) -> dict:
        return {
            "xi": self.xi,
            "amplitude": self.amplitude,
            "window": list(self.window),
            "rms_log_residual": self.rms_log_residual,
            "n_points": self.n_points,
        }


class NoDecayError(ValueError):
    """The fitted log-slope is not negative."""


def fit_exponential(series: ObservableSeries, window: tuple[float, float] | None = None) -> FitResult:
    """Least-squares line through ``ln y`` against ``x``; ``xi = -1/slope``.

    ``window`` is an inclusive ``(x_min, x_max)`` range; all of its points
    must be strictly positive.
    """
    x, y = series.x, series.y
    if window is None:
        window = (float(x.min()), float(x.max())) if x.size else (0.0, 0.0)
    sel = (x >= window[0]) & (x <= window[1])
    xs, ys = x[sel], y[sel]
    if xs.size < 4:
        raise ValueError(f"need at least 4 points in the fit window, got {xs.size}")
    if np.any(ys <= 0):
        raise ValueError("fit window contains non-positive values")
    ly = np.log(ys)
    A = np.column_stack([xs, np.ones_like(xs)])
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    if not slope < 0:
        raise NoDecayError(f"series does not decay (log-slope {slope:.3g})")
    resid = ly - (slope * xs + intercept)
    return FitResult(
        xi=float(-1.0 / slope),
        amplitude=float(math.exp(intercept)),
        window=(float(xs[0]), float(xs[-1])),
        rms_log_residual=float(np.sqrt(np.mean(resid**2))),
        n_points=int(xs.size),
    )


def default_window(series: ObservableSeries, skip: int = DEFAULT_SKIP, floor: float = NOISE_FLOOR) -> tuple[float, float]:
    """Fit window dropping the ``skip`` shortest distances and everything past the noise floor.

    The window ends before the first point that is non-positive or below
    ``floor``.
    """
    x, y = series.x, series.y
    start = min(skip, x.size)
    stop = start
    while stop < x.size and y[stop] > floor:
        stop += 1
    if stop - start < 1:
        raise ValueError("no usable points above the noise floor")
    dropped = np.flatnonzero(y[start:] <= 0)
    if dropped.size:
        log.info("excluding %d points with wrong sign or zero value from x=%g on", x.size - stop, x[stop])
    return float(x[start]), float(x[stop - 1])


def xi_lambda_product(fits: Sequence[tuple[float, FitResult | float]]) -> dict:
    rows = []
    for lam, fit in fits:
        if not lam > 0:
            raise ValueError("lambda must be > 0")
        xi = fit.xi if isinstance(fit, FitResult) else float(fit)
        rows.append((float(lam), xi, xi * lam))
    products = np.array([r[2] for r in rows])
    return {
        "rows": rows,
        "mean": float(products.mean()) if rows else float("nan"),
        "spread": float(products.max() - products.min()) if rows else float("nan"),
    }


def _saturating(lam, s_inf, a, b):
    return s_inf + a * np.exp(-b * lam)


@dataclass(frozen=True)
class EntropyCurve:
    lam: np.ndarray
    entropy: np.ndarray
    verdict: str  # "decreasing", "flat" or "non-monotone"
    plateau: float
    fit: dict | None

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam.tolist(),
            "entropy": self.entropy.tolist(),
            "verdict": self.verdict,
            "plateau": self.plateau,
            "fit": self.fit,
            "log_base": "e",
        }


def entropy_curve(runs: Sequence[tuple[float, float]]) -> EntropyCurve:
    """Entropy against lambda with a large-lambda plateau estimate.

    The plateau is the mean of the two largest-lambda points.  With four or
    more points ``S = S_inf + a exp(-b lam)`` is also fitted.
    """
    if len(runs) < 2:
        raise ValueError("need at least 2 (lambda, S) points")
    runs = sorted(runs)
    lam = np.array([r[0] for r in runs], dtype=float)
    s = np.array([r[1] for r in runs], dtype=float)
    pos = lam > 0
    d = np.diff(s[pos])
    if d.size == 0 or np.all(d == 0):
        verdict = "flat"
    elif np.all(d < 0):
        verdict = "decreasing"
    else:
        verdict = "non-monotone"
    plateau = float(np.mean(s[-2:]))
    fit = None
    if lam.size >= 4:
        try:
            b0 = 1.0 / max(lam[-1] - lam[0], 1e-12)
            p0 = (s[-1], s[0] - s[-1], b0)
            popt, _ = curve_fit(_saturating, lam, s, p0=p0, maxfev=20000)
            fit = {"s_inf": float(popt[0]), "a": float(popt[1]), "b": float(popt[2])}
        except (RuntimeError, ValueError) as exc:
            log.warning("saturating entropy fit failed: %s", exc)
    return EntropyCurve(lam, s, verdict, plateau, fit)


@dataclass(frozen=True)
class OscillationProfile:
    bonds: np.ndarray
    amplitude: np.ndarray
    flatness: float


def oscillation_profile(series: ObservableSeries) -> OscillationProfile:
    """Even-odd alternation amplitude on interior bonds.

    ``a_j = |y_j - (y_{j-1} + y_{j+1})/2| / 2``, the half peak-to-peak swing,
    so a series alternating between ``-1/4`` and ``0`` has amplitude ``1/8``.
    Flatness is the coefficient of variation of the amplitude over the
    central half of the interior bonds.
    """
    y = series.y
    if y.size < 3:
        raise ValueError("need at least 3 bonds")
    amp = 0.5 * np.abs(y[1:-1] - 0.5 * (y[:-2] + y[2:]))
    n = amp.size
    lo, hi = n // 4, n - n // 4
    if hi <= lo:
        lo, hi = 0, n
    central = amp[lo:hi]
    mean = central.mean()
    flatness = float(central.std() / mean) if mean > 0 else 0.0
    return OscillationProfile(series.x[1:-1], amp, flatness)


def report_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)
