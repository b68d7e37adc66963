"""Regression suite for the simulator's scaling laws.

All fits are unweighted ordinary least squares, in log space where the target
law is a power law.  Every result records the window actually used so callers
can pin it explicitly.
"""

from dataclasses import dataclass

import numpy as np

from .errors import FitDataError, InsufficientDecayError


@dataclass
class FitResult:
    value: float  # exponent or rate, depending on the fit
    prefactor: float
    r_squared: float
    window: tuple
    kind: str = ""


def ols_line(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares line y = a x + b; returns (a, b, r^2).

    A constant input is treated as the exact fit a = 0, r^2 = 1 rather than
    an error.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise FitDataError(f"need at least 2 points for a line fit, got {x.size}")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return 0.0, float(y.mean()), 1.0
    xm = x.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0.0:
        raise FitDataError("all x values identical")
    slope = float(np.sum((x - xm) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * xm)
    ss_res = float(np.sum((y - slope * x - intercept) ** 2))
    return slope, intercept, 1.0 - ss_res / ss_tot


def _window_mask(x: np.ndarray, window: tuple | None, default: tuple) -> tuple[np.ndarray, tuple]:
    if window is None:
        window = default
    lo, hi = window
    return (x >= lo) & (x <= hi), (float(lo), float(hi))


def fit_power_law(t, y, window: tuple | None = None, min_points: int = 8) -> FitResult:
    """Exponent of y ~ t^eta from a log-log line fit.

    Default window skips the transient: [t_max/25, t_max].
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    mask, window = _window_mask(t, window, (t.max() / 25.0, t.max()))
    t, y = t[mask], y[mask]
    if t.size < min_points:
        raise FitDataError(f"power-law fit needs >= {min_points} points in window, got {t.size}")
    if np.any(t <= 0) or np.any(y <= 0):
        raise FitDataError("power-law fit requires strictly positive t and y in the window")
    slope, intercept, r2 = ols_line(np.log(t), np.log(y))
    return FitResult(value=slope, prefactor=float(np.exp(intercept)), r_squared=r2,
                     window=window, kind="power")


def fit_localization_profile(p_values, density, floor: float = 1e-12,
                             core_factor: float = 2.0) -> FitResult:
    """Localization length L of an exponentially localized momentum density.

    Fits log(density) against |p| on each side separately, excluding the
    central core |p| < core_factor * L0 (L0 estimated from <p^2> = 2 L0^2)
    and everything below ``floor``; the two one-sided lengths are averaged.
    """
    p = np.asarray(p_values, dtype=float)
    dens = np.asarray(density, dtype=float)
    total = dens.sum()
    if not total > 0:
        raise FitDataError("density has no weight")
    dens = dens / total
    l0 = np.sqrt(np.sum(p**2 * dens) / 2.0)
    core = core_factor * l0

    lengths, intercepts, r2s = [], [], []
    span_lo, span_hi = np.inf, 0.0
    for side in (p > core, p < -core):
        sel = side & (dens > floor)
        if np.count_nonzero(sel) < 8:
            raise FitDataError("too few points outside the core for a localization fit")
        slope, intercept, r2 = ols_line(np.abs(p[sel]), np.log(dens[sel]))
        if slope >= 0:
            raise FitDataError("density does not decay away from the core")
        span_lo = min(span_lo, float(dens[sel].min()))
        span_hi = max(span_hi, float(dens[sel].max()))
        lengths.append(-1.0 / slope)
        intercepts.append(intercept)
        r2s.append(r2)
    if span_hi / span_lo < 1e3:
        raise InsufficientDecayError(
            f"density spans only {np.log10(span_hi / span_lo):.2f} decades in the fit "
            "region; need >= 3"
        )
    return FitResult(
        value=float(np.mean(lengths)),
        prefactor=float(np.exp(np.mean(intercepts))),
        r_squared=float(np.mean(r2s)),
        window=(float(core), float(np.max(np.abs(p)))),
        kind="localization",
    )


def fit_localization_length(density, basis, floor: float = 1e-12,
                            core_factor: float = 2.0) -> FitResult:
    """Same as :func:`fit_localization_profile` on a basis' momentum ladder."""
    return fit_localization_profile(basis.momentum_values(), density, floor, core_factor)


def fit_ballistic_rate(t, y, mode: str = "quadratic", window: tuple | None = None) -> FitResult:
    """Ballistic rate gamma from <p^2> = gamma^2 t^2 or <p> = gamma t."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    mask, window = _window_mask(t, window, (t.max() / 25.0, t.max()))
    t, y = t[mask], y[mask]
    if t.size < 2:
        raise FitDataError("ballistic fit needs at least 2 points in window")
    if np.any(y <= 0):
        raise FitDataError("ballistic fit requires positive data in the window")
    if mode == "quadratic":
        slope, intercept, r2 = ols_line(t**2, y)
        if slope <= 0:
            raise FitDataError("non-positive slope of <p^2> vs t^2")
        return FitResult(value=float(np.sqrt(slope)), prefactor=intercept, r_squared=r2,
                         window=window, kind="ballistic-quadratic")
    if mode == "linear":
        slope, intercept, r2 = ols_line(t, y)
        return FitResult(value=slope, prefactor=intercept, r_squared=r2,
                         window=window, kind="ballistic-linear")
    raise ValueError(f"mode must be 'quadratic' or 'linear', got {mode!r}")


def k_scaling_exponent(k_values, c_avg_values) -> FitResult:
    """Log-log slope of the saturated OTOC average against kick strength."""
    k = np.asarray(k_values, dtype=float)
    if k.size < 4:
        raise FitDataError(f"K-scaling fit needs >= 4 kick strengths, got {k.size}")
    res = fit_power_law(k, c_avg_values, window=(k.min(), k.max()), min_points=4)
    res.kind = "k-scaling"
    return res


def backward_growth_exponent(t_n, p2_r_t0, window: tuple | None = None) -> FitResult:
    """Power-law exponent of the end-of-reversal energy against t_n."""
    t = np.asarray(t_n, dtype=float)
    y = np.asarray(p2_r_t0, dtype=float)
    keep = t > 0
    res = fit_power_law(t[keep], y[keep], window=window)
    res.kind = "backward-growth"
    return res


def time_avg(t, y, window: tuple | None = None) -> float:
    """Arithmetic mean of y over the time window (whole series by default)."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    mask, _ = _window_mask(t, window, (t.min(), t.max()))
    if not np.any(mask):
        raise FitDataError("empty averaging window")
    return float(np.mean(y[mask]))
