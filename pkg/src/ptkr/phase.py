"""Norm-growth dynamics and the PT-symmetry-breaking phase scan.

In the unbroken phase the Floquet spectrum is real and the norm of an evolving
packet stays at unity; past the transition the norm grows exponentially,
N(t) = exp(mu t).  Numerically the state is rescaled to unit norm after every
kick and the log of the rescale factor is accumulated, so N(t) is available
exactly in log space at any growth rate.

A point (K, lambda) is classified as broken when the fitted growth rate
exceeds a small threshold with a credible linear fit; this deterministic rule
stands in for curve-shape classifiers and is exposed as a knob since the
extracted boundary depends on it.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import BracketError, FitDataError, GridOverflowError
from .fits import ols_line
from .otoc import ForwardTrajectory  # noqa: F401  (re-exported for callers)
from .rotor import BasisSpec, ModelParams, gaussian_state, get_propagator


@dataclass
class EvolutionRecord:
    """Per-kick observables of a single packet under forced unit norm."""

    params: ModelParams
    basis: BasisSpec
    sigma: float
    times: np.ndarray
    log_norm: np.ndarray  # log N(t), N = unnormalized squared norm
    p_mean: np.ndarray
    p2: np.ndarray
    p4: np.ndarray
    snapshots: dict  # t -> unit momentum amplitudes (ascending order)


def evolve_observables(
    params: ModelParams,
    basis: BasisSpec,
    sigma: float,
    t_max: int,
    snapshot_times=(),
) -> EvolutionRecord:
    """Evolve the Gaussian packet, recording log-norm and momentum moments."""
    if t_max < 0:
        raise ValueError("t_max must be >= 0")
    prop = get_propagator(basis, params)
    p_std = prop.p_std
    p2_std = p_std**2
    p4_std = p2_std**2
    wanted = {int(t) for t in snapshot_times}

    state = gaussian_state(basis, sigma)
    work = prop.fold(state.amplitudes / np.sqrt(state.norm2()))

    times = np.arange(t_max + 1)
    log_norm = np.zeros(t_max + 1)
    p_mean = np.empty(t_max + 1)
    p2 = np.empty(t_max + 1)
    p4 = np.empty(t_max + 1)
    snapshots: dict[int, np.ndarray] = {}

    def record(t: int) -> None:
        dens = np.abs(work) ** 2
        dens /= dens.sum()
        p_mean[t] = dens @ p_std
        p2[t] = dens @ p2_std
        p4[t] = dens @ p4_std
        if t in wanted:
            snapshots[t] = prop.unfold(work).copy()

    record(0)
    for t in range(1, t_max + 1):
        work = prop.step_std(work, "forward")
        g = float(np.sum(np.abs(work) ** 2))
        log_norm[t] = log_norm[t - 1] + np.log(g)
        work /= np.sqrt(g)
        record(t)

    return EvolutionRecord(params, basis, sigma, times, log_norm, p_mean, p2, p4, snapshots)


@dataclass
class NormSeries:
    params: ModelParams
    times: np.ndarray
    log_norm: np.ndarray


def norm_series(params: ModelParams, basis: BasisSpec, sigma: float, t_max: int) -> NormSeries:
    """log N(t) for the Gaussian packet over t_max kicks."""
    if t_max < 10:
        raise ValueError("t_max must be >= 10 for a usable norm series")
    rec = evolve_observables(params, basis, sigma, t_max)
    return NormSeries(params=params, times=rec.times, log_norm=rec.log_norm)


@dataclass
class GrowthFit:
    mu: float
    r_squared: float
    window: tuple


def fit_growth_rate(series: NormSeries, window: tuple | None = None) -> GrowthFit:
    """Least-squares slope of log N(t); default window is the last half."""
    t = series.times
    if window is None:
        window = (float(t[len(t) // 2]), float(t[-1]))
    lo, hi = window
    mask = (t >= lo) & (t <= hi)
    if np.count_nonzero(mask) < 10:
        raise FitDataError("growth-rate window must contain at least 10 samples")
    slope, _, r2 = ols_line(t[mask], series.log_norm[mask])
    return GrowthFit(mu=slope, r_squared=r2, window=(float(lo), float(hi)))


def mean_log_norm(series: NormSeries, window: tuple | None = None) -> float:
    """log of the time-averaged norm over the window, computed in log space."""
    t = series.times
    if window is None:
        window = (float(t[len(t) // 2]), float(t[-1]))
    mask = (t >= window[0]) & (t <= window[1])
    vals = series.log_norm[mask]
    if vals.size == 0:
        raise FitDataError("empty averaging window")
    return float(logsumexp(vals) - np.log(vals.size))


UNBROKEN = "unbroken"
BROKEN = "broken"
INCONCLUSIVE = "inconclusive"


@dataclass
class ClassifyResult:
    label: str
    mu: float
    r_squared: float
    mean_log_norm: float
    t_max: int
    n_modes: int


def classify_point(
    params: ModelParams,
    basis: BasisSpec,
    sigma: float,
    t_max: int,
    mu_threshold: float = 1e-4,
    r2_threshold: float = 0.5,
    window_fraction: float = 0.5,
) -> ClassifyResult:
    """Label one (K, lambda) point as broken/unbroken from its norm growth.

    Broken requires both mu > mu_threshold and r^2 > r2_threshold.  A grid
    overflow is reported as inconclusive so the caller can enlarge the basis.
    """
    try:
        series = norm_series(params, basis, sigma, t_max)
    except GridOverflowError:
        return ClassifyResult(INCONCLUSIVE, np.nan, np.nan, np.nan, t_max, basis.n_modes)
    t_lo = series.times[int(round((1.0 - window_fraction) * (len(series.times) - 1)))]
    fit = fit_growth_rate(series, window=(float(t_lo), float(series.times[-1])))
    label = BROKEN if (fit.mu > mu_threshold and fit.r_squared > r2_threshold) else UNBROKEN
    mlogn = mean_log_norm(series, window=fit.window)
    return ClassifyResult(label, fit.mu, fit.r_squared, mlogn, t_max, basis.n_modes)


@dataclass
class LambdaCResult:
    lambda_c: float
    bracket: tuple
    evaluations: list  # (lambda, mu, r_squared, label, t_max, n_modes)


def find_lambda_c(
    kick_strength: float,
    hbar_eff: float,
    lambda_lo: float,
    lambda_hi: float,
    tol: float,
    n_modes: int = 8192,
    sigma: float = 10.0,
    t_max: int = 1000,
    t_max_cap: int = 8000,
    max_n_modes: int = 131072,
    mu_threshold: float = 1e-4,
    r2_threshold: float = 0.5,
) -> LambdaCResult:
    """Bisect the PT-breaking threshold in lambda at fixed (K, hbar).

    Ambiguous points (growth above threshold but a noisy fit) are re-run with
    a doubled horizon up to ``t_max_cap``; grid overflows trigger a doubled
    basis up to ``max_n_modes``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not lambda_lo < lambda_hi:
        raise BracketError("lambda_lo must be below lambda_hi")
    evaluations = []

    def classify(lam: float) -> ClassifyResult:
        t = t_max
        n = n_modes
        while True:
            params = ModelParams(kick_strength, lam, hbar_eff)
            res = classify_point(
                params, BasisSpec(n, hbar_eff), sigma, t,
                mu_threshold=mu_threshold, r2_threshold=r2_threshold,
            )
            if res.label == INCONCLUSIVE:
                if 2 * n <= max_n_modes:
                    n *= 2
                    continue
                raise GridOverflowError(
                    f"classification at lambda={lam:g} overflows even at n_modes={n}"
                )
            # A marginal rate (noisy fit, or within a decade of the threshold)
            # can be transient drift; bounded transients halve under a doubled
            # horizon while genuine exponential growth holds its rate.
            marginal = res.mu > mu_threshold and (
                res.r_squared <= r2_threshold or res.mu <= 10 * mu_threshold
            )
            if marginal and 2 * t <= t_max_cap:
                t *= 2
                continue
            evaluations.append((lam, res.mu, res.r_squared, res.label, t, n))
            return res

    if classify(lambda_lo).label != UNBROKEN:
        raise BracketError(f"lambda_lo={lambda_lo:g} does not classify as unbroken")
    if classify(lambda_hi).label != BROKEN:
        raise BracketError(f"lambda_hi={lambda_hi:g} does not classify as broken")

    lo, hi = lambda_lo, lambda_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if classify(mid).label == BROKEN:
            hi = mid
        else:
            lo = mid
    return LambdaCResult(lambda_c=0.5 * (lo + hi), bracket=(lo, hi), evaluations=evaluations)


@dataclass
class PhaseDiagram:
    """Grid of growth rates and broken/unbroken labels over (K, lambda)."""

    kick_values: np.ndarray
    lambda_values: np.ndarray
    hbar_eff: float
    mu: np.ndarray  # shape (len(kick_values), len(lambda_values))
    r_squared: np.ndarray
    mean_log_norm: np.ndarray
    labels: np.ndarray  # dtype object, same shape
    mu_threshold: float

    def boundary(self) -> list:
        """Per kick strength, the first lambda labeled broken (nan if none)."""
        out = []
        for i, k in enumerate(self.kick_values):
            broken = np.where(self.labels[i] == BROKEN)[0]
            out.append((float(k), float(self.lambda_values[broken[0]]) if broken.size else np.nan))
        return out


def scan_diagram(
    kick_values,
    lambda_values,
    hbar_eff: float,
    t_max: int,
    n_modes: int = 8192,
    sigma: float = 10.0,
    mu_threshold: float = 1e-4,
    r2_threshold: float = 0.5,
    window_fraction: float = 0.5,
) -> PhaseDiagram:
    """Classify every grid cell; inconclusive cells are flagged, not dropped."""
    kick_values = np.asarray(kick_values, dtype=float)
    lambda_values = np.asarray(lambda_values, dtype=float)
    if kick_values.size == 0 or lambda_values.size == 0:
        raise ValueError("scan axes must be nonempty")
    if np.any(np.diff(kick_values) < 0) or np.any(np.diff(lambda_values) < 0):
        raise ValueError("scan axes must be sorted ascending")
    basis = BasisSpec(n_modes, hbar_eff)
    shape = (kick_values.size, lambda_values.size)
    mu = np.empty(shape)
    r2 = np.empty(shape)
    mlogn = np.empty(shape)
    labels = np.empty(shape, dtype=object)
    for i, k in enumerate(kick_values):
        for j, lam in enumerate(lambda_values):
            res = classify_point(
                ModelParams(float(k), float(lam), hbar_eff), basis, sigma, t_max,
                mu_threshold=mu_threshold, r2_threshold=r2_threshold,
                window_fraction=window_fraction,
            )
            mu[i, j] = res.mu
            r2[i, j] = res.r_squared
            mlogn[i, j] = res.mean_log_norm
            labels[i, j] = res.label
    return PhaseDiagram(kick_values, lambda_values, hbar_eff, mu, r2, mlogn, labels, mu_threshold)
