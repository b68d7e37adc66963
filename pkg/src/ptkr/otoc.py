"""Out-of-time-order correlator engine.

Implements the three-step protocol behind C(t_n) = -<[p(t_n), p]^2>:

  i)   forward evolution of the packet psi and of its momentum-weighted
       partner phi = p psi from t_0 to t_n,
  ii)  insertion of p at t_n,
  iii) backward (adjoint) evolution to t_0 of both weighted states.

Because the propagator is non-unitary, every evolution leg runs under the
forced-norm rule: after each full period the state is rescaled so its norm
matches the norm of the state that leg started from.  The rescale is a pure
scalar, so expectation values are always taken on normalized densities and
the forced norms enter the correlators only through the recorded ledger
factors.  The reported terms are

  c1 = <psi_R(t0)| p^2 |psi_R(t0)>      (includes the forced norm),
  c2 = <phi_R(t0)|phi_R(t0)>            (the forced norm of the phi leg),
  c3 = <psi_R(t0)| p |phi_R(t0)>        (complex cross term),
  c  = c1 + c2 - 2 Re c3.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import GridOverflowError, PtkrError, ZeroStateError
from .rotor import (
    BasisSpec,
    ModelParams,
    WaveState,
    gaussian_state,
    get_propagator,
)


def log_sample_times(t_max: int, count: int = 40) -> np.ndarray:
    """t = 0 plus ``count`` log-spaced integer kick counts from 1 to t_max."""
    if t_max < 0:
        raise ValueError("t_max must be >= 0")
    if t_max == 0:
        return np.array([0], dtype=int)
    pts = np.unique(np.round(np.logspace(0.0, np.log10(t_max), count)).astype(int))
    return np.concatenate(([0], pts))


def linear_sample_times(t_max: int, count: int = 40) -> np.ndarray:
    if t_max == 0:
        return np.array([0], dtype=int)
    return np.unique(np.round(np.linspace(0, t_max, count + 1)).astype(int))


@dataclass
class BranchSeries:
    """Per-kick record of one forward branch (normalized observables)."""

    growth: np.ndarray  # norm^2 multiplier of each step, before re-forcing
    p_mean: np.ndarray
    p2: np.ndarray
    p4: np.ndarray

    def log_norm(self) -> np.ndarray:
        """log of the unnormalized norm^2, accumulated in log space."""
        return np.cumsum(np.log(self.growth))


@dataclass
class ForwardTrajectory:
    """Forced-norm forward evolution of the psi and phi = p psi branches.

    Unit-normalized snapshots are kept every ``storage_stride`` kicks (plus
    t=0 and t_max); states in between are recomputed from the nearest earlier
    snapshot, bit-identically, since the per-step forcing is a scalar rescale
    with no history dependence.
    """

    params: ModelParams
    basis: BasisSpec
    sigma: float
    t_max: int
    storage_stride: int
    norm0_psi: float
    norm0_phi: float
    psi: BranchSeries
    phi: BranchSeries
    snapshots: dict = field(repr=False)  # t -> (2, N) unit rows, ascending order

    def state_pair_at(self, t: int) -> np.ndarray:
        """Unit-norm (psi, phi) momentum amplitudes after t kicks."""
        if not 0 <= t <= self.t_max:
            raise ValueError(f"t={t} outside trajectory range [0, {self.t_max}]")
        if t in self.snapshots:
            return self.snapshots[t].copy()
        anchor = max(s for s in self.snapshots if s <= t)
        prop = get_propagator(self.basis, self.params)
        work = prop.fold(self.snapshots[anchor])
        for _ in range(t - anchor):
            work = prop.step_std(work, "forward")
            work /= np.sqrt(np.sum(np.abs(work) ** 2, axis=-1, keepdims=True))
        return prop.unfold(work)

    def psi_state(self, t: int) -> WaveState:
        return WaveState(self.basis, self.state_pair_at(t)[0], "momentum")

    def phi_state(self, t: int) -> WaveState:
        return WaveState(self.basis, self.state_pair_at(t)[1], "momentum")


def build_forward_trajectory(
    params: ModelParams,
    basis: BasisSpec,
    sigma: float,
    t_max: int,
    storage_stride: int = 1,
) -> ForwardTrajectory:
    """Evolve both branches t_max kicks, re-forcing each branch's initial norm."""
    if t_max < 0:
        raise ValueError("t_max must be >= 0")
    if storage_stride < 1:
        raise ValueError("storage_stride must be >= 1")
    prop = get_propagator(basis, params)
    p_std = prop.p_std
    p2_std = p_std**2
    p4_std = p2_std**2

    psi0 = gaussian_state(basis, sigma)
    norm0_psi = psi0.norm2()
    phi_amp = psi0.amplitudes * basis.momentum_values()
    norm0_phi = float(np.sum(np.abs(phi_amp) ** 2))
    # with a Gaussian packet <p^2> > 0 on any grid; guard the ledger anyway
    if norm0_phi < 1e-300:
        raise ZeroStateError("initial packet has no momentum weight; phi branch undefined")

    stack = np.stack([psi0.amplitudes / np.sqrt(norm0_psi), phi_amp / np.sqrt(norm0_phi)])
    shape = (2, t_max + 1)
    growth = np.ones(shape)
    p_mean = np.empty(shape)
    p2 = np.empty(shape)
    p4 = np.empty(shape)
    snapshots: dict[int, np.ndarray] = {}

    work = prop.fold(stack)

    def record(t: int) -> None:
        dens = np.abs(work) ** 2
        dens /= dens.sum(axis=-1, keepdims=True)
        p_mean[:, t] = dens @ p_std
        p2[:, t] = dens @ p2_std
        p4[:, t] = dens @ p4_std

    record(0)
    snapshots[0] = prop.unfold(work)
    for t in range(1, t_max + 1):
        work = prop.step_std(work, "forward")
        norms2 = np.sum(np.abs(work) ** 2, axis=-1)
        growth[:, t] = norms2
        work /= np.sqrt(norms2)[:, None]
        record(t)
        if t % storage_stride == 0 or t == t_max:
            snapshots[t] = prop.unfold(work)

    return ForwardTrajectory(
        params=params,
        basis=basis,
        sigma=sigma,
        t_max=t_max,
        storage_stride=storage_stride,
        norm0_psi=norm0_psi,
        norm0_phi=norm0_phi,
        psi=BranchSeries(growth[0], p_mean[0], p2[0], p4[0]),
        phi=BranchSeries(growth[1], p_mean[1], p2[1], p4[1]),
        snapshots=snapshots,
    )


@dataclass
class BackwardPass:
    """Adjoint evolution t_n -> t_0 of the momentum-weighted states.

    ``times`` runs t_n, t_n-1, ..., 0 in computation order; row 0 of the
    observable arrays is the psi-tilde branch, row 1 the phi-tilde branch.
    norm_psi / norm_phi are the forced norms N of each backward leg.
    """

    t_n: int
    insert_p: bool
    norm_psi: float
    norm_phi: float
    times: np.ndarray
    p_mean: np.ndarray
    p2: np.ndarray
    psi_r: np.ndarray  # unit amplitudes at t_0, ascending index order
    phi_r: np.ndarray


def backward_pass(traj: ForwardTrajectory, t_n: int, insert_p: bool = True) -> BackwardPass:
    """Insert p at t_n (unless in diagnostic mode) and reverse to t_0."""
    prop = get_propagator(traj.basis, traj.params)
    p_vals = traj.basis.momentum_values()
    stack = traj.state_pair_at(t_n)

    if insert_p:
        stack = stack * p_vals
        weights = np.sum(np.abs(stack) ** 2, axis=-1)
        if np.any(weights < 1e-300):
            raise ZeroStateError(f"momentum operator annihilated a branch at t_n={t_n}")
        norm_psi = traj.norm0_psi * float(weights[0])
        norm_phi = traj.norm0_phi * float(weights[1])
        stack /= np.sqrt(weights)[:, None]
    else:
        norm_psi = traj.norm0_psi
        norm_phi = traj.norm0_phi

    p_std = prop.p_std
    p2_std = p_std**2
    times = np.arange(t_n, -1, -1)
    p_mean = np.empty((2, t_n + 1))
    p2 = np.empty((2, t_n + 1))

    work = prop.fold(stack)

    def record(k: int) -> None:
        dens = np.abs(work) ** 2
        dens /= dens.sum(axis=-1, keepdims=True)
        p_mean[:, k] = dens @ p_std
        p2[:, k] = dens @ p2_std

    record(0)
    for k in range(1, t_n + 1):
        work = prop.step_std(work, "adjoint")
        work /= np.sqrt(np.sum(np.abs(work) ** 2, axis=-1, keepdims=True))
        record(k)
    final = prop.unfold(work)

    return BackwardPass(
        t_n=t_n,
        insert_p=insert_p,
        norm_psi=norm_psi,
        norm_phi=norm_phi,
        times=times,
        p_mean=p_mean,
        p2=p2,
        psi_r=final[0],
        phi_r=final[1],
    )


@dataclass
class OtocPoint:
    """One OTOC sample with its normalization-ledger diagnostics."""

    t: int
    c1: float
    c2: float
    c3: complex
    c: float
    p2_r_t0: float  # <p^2> of the reversed psi state, normalized
    norm_r_t0: float  # forced norm of the reversed psi leg; c1 = p2_r_t0 * norm_r_t0


def otoc_point_from_backward(traj: ForwardTrajectory, bp: BackwardPass) -> OtocPoint:
    p_vals = traj.basis.momentum_values()
    p2_end = float(np.sum(p_vals**2 * np.abs(bp.psi_r) ** 2))
    c1 = bp.norm_psi * p2_end
    c2 = bp.norm_phi
    c3 = complex(np.sqrt(bp.norm_psi * bp.norm_phi) * np.vdot(bp.psi_r, p_vals * bp.phi_r))
    c = c1 + c2 - 2.0 * c3.real
    return OtocPoint(
        t=bp.t_n, c1=c1, c2=c2, c3=c3, c=c, p2_r_t0=p2_end, norm_r_t0=bp.norm_psi
    )


def otoc_point(traj: ForwardTrajectory, t_n: int) -> OtocPoint:
    return otoc_point_from_backward(traj, backward_pass(traj, t_n))


@dataclass
class OtocSeries:
    """OTOC samples over a shared forward trajectory.

    Failed sample times are kept in ``failures`` with the reason rather than
    silently dropped.
    """

    params: ModelParams
    basis: BasisSpec
    sigma: float
    times: np.ndarray
    points: list
    failures: list

    def arrays(self) -> dict:
        """Column arrays over the successful points."""
        pts = self.points
        return {
            "t": np.array([p.t for p in pts], dtype=int),
            "c1": np.array([p.c1 for p in pts]),
            "c2": np.array([p.c2 for p in pts]),
            "re_c3": np.array([p.c3.real for p in pts]),
            "im_c3": np.array([p.c3.imag for p in pts]),
            "c": np.array([p.c for p in pts]),
            "p2_r_t0": np.array([p.p2_r_t0 for p in pts]),
            "norm_r_t0": np.array([p.norm_r_t0 for p in pts]),
        }


def otoc_series_from_trajectory(traj: ForwardTrajectory, sample_times) -> OtocSeries:
    times = np.unique(np.asarray(sample_times, dtype=int))
    if times.size == 0:
        raise ValueError("sample_times is empty")
    if times[0] < 0 or times[-1] > traj.t_max:
        raise ValueError("sample_times outside trajectory range")
    points = []
    failures = []
    for t_n in times:
        try:
            points.append(otoc_point(traj, int(t_n)))
        except (GridOverflowError, ZeroStateError) as exc:
            failures.append((int(t_n), f"{type(exc).__name__}: {exc}"))
    return OtocSeries(
        params=traj.params,
        basis=traj.basis,
        sigma=traj.sigma,
        times=times,
        points=points,
        failures=failures,
    )


def otoc_series(
    params: ModelParams,
    basis: BasisSpec,
    sigma: float,
    sample_times,
    storage_stride: int = 1,
) -> OtocSeries:
    """Build one forward trajectory to max(sample_times) and sample it."""
    times = np.unique(np.asarray(sample_times, dtype=int))
    if times.size == 0:
        raise ValueError("sample_times is empty")
    traj = build_forward_trajectory(params, basis, sigma, int(times[-1]), storage_stride)
    return otoc_series_from_trajectory(traj, times)


@dataclass
class ReversalRatioSeries:
    """Energy ratio between the backward and forward legs at equal labels.

    ratio[j] compares the reversed state that has returned to label t_j
    against the forward state at t_j; on the doubled axis the backward leg
    sits at 2 t_n - t_j.
    """

    t_n: int
    times: np.ndarray  # labels t_j ascending, 0 .. t_n
    times_doubled: np.ndarray  # 2 t_n - t_j
    ratio: np.ndarray
    p2_forward: np.ndarray
    p2_backward: np.ndarray


def reversal_ratio_series(
    traj: ForwardTrajectory, t_n: int, backward: BackwardPass | None = None
) -> ReversalRatioSeries:
    if backward is None:
        backward = backward_pass(traj, t_n)
    elif backward.t_n != t_n:
        raise ValueError("backward pass was computed for a different t_n")
    labels = np.arange(0, t_n + 1)
    p2_fwd = traj.psi.p2[: t_n + 1]
    # backward arrays run t_n..0; flip to ascending labels
    p2_bwd = backward.p2[0][::-1].copy()
    return ReversalRatioSeries(
        t_n=t_n,
        times=labels,
        times_doubled=2 * t_n - labels,
        ratio=p2_bwd / p2_fwd,
        p2_forward=p2_fwd.copy(),
        p2_backward=p2_bwd,
    )
