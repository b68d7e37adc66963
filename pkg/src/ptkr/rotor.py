"""Quantum state representation and the split-step Floquet propagator.

The model is a kicked rotor on a ring with a complex kicking potential
V(theta) = K [cos(theta) + i lambda sin(theta)].  One driving period applies
the kick factor exp(-i V(theta)/hbar) in angle representation followed by the
free factor exp(-i p^2 / (2 hbar)) in momentum representation.  For lambda > 0
the kick carries the real gain exp(K lambda sin(theta)/hbar), so the
propagator is non-unitary; the adjoint direction conjugates the phases while
keeping the same gain.

Grid conventions, fixed for reproducibility:
  * momentum indices n in {-N/2, ..., N/2 - 1}, eigenvalue p_n = n*hbar;
  * angle grid theta_j = -pi + 2*pi*j/N for j in {0, ..., N-1};
  * the angle<->momentum transform pair is the unitary DFT with these
    orderings, so discrete norms obey Parseval exactly.

All operations are pure functions over value-semantic states; nothing here
mutates a caller's array.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .errors import GridOverflowError, ZeroStateError

# Fraction of modes (each side) forming the guard band, and the largest
# normalized probability tolerated inside it before evolution aborts.  The
# guard is a truncation diagnostic: below GUARD_MIN_MODES the basis is a
# closed toy model (the dense-oracle regime) and every mode is legitimate
# state space, so no band is reserved.
GUARD_FRACTION = 0.10
GUARD_TAIL_LIMIT = 1e-8
GUARD_MIN_MODES = 64

MOMENTUM = "momentum"
ANGLE = "angle"


@dataclass(frozen=True)
class BasisSpec:
    """Momentum-space grid: mode count and effective Planck constant."""

    n_modes: int
    hbar_eff: float

    def __post_init__(self):
        if self.n_modes < 4 or self.n_modes % 2 != 0:
            raise ValueError(f"n_modes must be even and >= 4, got {self.n_modes}")
        if not self.hbar_eff > 0:
            raise ValueError(f"hbar_eff must be positive, got {self.hbar_eff}")

    def momentum_indices(self) -> np.ndarray:
        n = self.n_modes
        return np.arange(-(n // 2), n // 2)

    def momentum_values(self) -> np.ndarray:
        """Eigenvalue ladder p_n = n*hbar in ascending index order."""
        return self.momentum_indices() * self.hbar_eff

    def angle_values(self) -> np.ndarray:
        n = self.n_modes
        return -np.pi + 2.0 * np.pi * np.arange(n) / n


@dataclass(frozen=True)
class ModelParams:
    """One rotor instance: kick strength K, non-Hermiticity lambda, hbar."""

    kick_strength: float
    non_hermiticity: float
    hbar_eff: float

    def __post_init__(self):
        if self.non_hermiticity < 0:
            raise ValueError("non_hermiticity must be non-negative")
        if not self.hbar_eff > 0:
            raise ValueError("hbar_eff must be positive")


@dataclass
class WaveState:
    """Complex amplitude vector plus the representation it lives in."""

    basis: BasisSpec
    amplitudes: np.ndarray
    rep: str = MOMENTUM

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def copy(self) -> "WaveState":
        return WaveState(self.basis, self.amplitudes.copy(), self.rep)


def _alt_signs(n_modes: int) -> np.ndarray:
    # (-1)^n over the ascending index ladder; folds the theta = -pi grid
    # origin into plain FFT calls.
    n = np.arange(-(n_modes // 2), n_modes // 2)
    return np.where(n % 2 == 0, 1.0, -1.0)


def to_angle(state: WaveState) -> WaveState:
    """Transform to angle representation (unitary, Parseval-exact)."""
    if state.rep == ANGLE:
        return state.copy()
    alt = _alt_signs(state.basis.n_modes)
    a = sfft.ifft(np.fft.ifftshift(state.amplitudes * alt), norm="ortho")
    return WaveState(state.basis, a, ANGLE)


def to_momentum(state: WaveState) -> WaveState:
    """Transform to momentum representation (inverse of :func:`to_angle`)."""
    if state.rep == MOMENTUM:
        return state.copy()
    alt = _alt_signs(state.basis.n_modes)
    psi = np.fft.fftshift(sfft.fft(state.amplitudes, norm="ortho")) * alt
    return WaveState(state.basis, psi, MOMENTUM)


def gaussian_state(basis: BasisSpec, sigma: float) -> WaveState:
    """Gaussian wavepacket exp(-sigma theta^2 / 2) sampled on the angle grid.

    The packet is truncated periodically to [-pi, pi), renormalized to unit
    discrete norm, and returned in momentum representation.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    theta = basis.angle_values()
    a = np.exp(-sigma * theta**2 / 2.0).astype(np.complex128)
    a /= np.sqrt(np.sum(np.abs(a) ** 2))
    return to_momentum(WaveState(basis, a, ANGLE))


class Propagator:
    """Precomputed multiplier tables for one (basis, params) pair.

    The hot loop works on arrays kept in FFT index order with the grid-origin
    signs folded in, so a single period costs two transforms and two
    pointwise multiplies.  Adjoint multipliers are the elementwise conjugates
    of the forward tables, which makes adjoint-after-forward phase
    cancellation exact in floating point.
    """

    def __init__(self, basis: BasisSpec, params: ModelParams):
        if params.hbar_eff != basis.hbar_eff:
            raise ValueError("params.hbar_eff disagrees with basis.hbar_eff")
        self.basis = basis
        self.params = params
        n = basis.n_modes
        hbar = basis.hbar_eff
        theta = basis.angle_values()
        idx = basis.momentum_indices()

        karg = params.kick_strength / hbar
        self.kick_fwd = np.exp(karg * (-1j * np.cos(theta) + params.non_hermiticity * np.sin(theta)))
        self.kick_adj = np.conj(self.kick_fwd)
        # p^2/(2 hbar) = n^2 hbar / 2
        free = np.exp(-0.5j * hbar * idx.astype(np.float64) ** 2)
        self.free_fwd_std = np.fft.ifftshift(free)
        self.free_adj_std = np.conj(self.free_fwd_std)
        self.signs_std = np.fft.ifftshift(_alt_signs(n))
        self.p_std = np.fft.ifftshift(idx * hbar)

        n_guard = max(1, int(round(GUARD_FRACTION * n)))
        guard = np.zeros(n, dtype=bool)
        guard[:n_guard] = True
        guard[-n_guard:] = True
        self.guard_ascending = guard
        self.guard_std = np.fft.ifftshift(guard)

    # -- index-order folding ------------------------------------------------

    def fold(self, psi: np.ndarray) -> np.ndarray:
        """Ascending-index momentum amplitudes -> internal FFT order."""
        return np.fft.ifftshift(psi * _alt_signs(self.basis.n_modes), axes=-1)

    def unfold(self, work: np.ndarray) -> np.ndarray:
        return np.fft.fftshift(work, axes=-1) * _alt_signs(self.basis.n_modes)

    # -- stepping -----------------------------------------------------------

    def step_std(self, work: np.ndarray, direction: str) -> np.ndarray:
        """One Floquet period on FFT-ordered amplitudes (any leading shape)."""
        if direction == "forward":
            a = sfft.ifft(work, norm="ortho", axis=-1)
            a *= self.kick_fwd
            out = sfft.fft(a, norm="ortho", axis=-1)
            out *= self.free_fwd_std
        elif direction == "adjoint":
            a = sfft.ifft(work * self.free_adj_std, norm="ortho", axis=-1)
            a *= self.kick_adj
            out = sfft.fft(a, norm="ortho", axis=-1)
        else:
            raise ValueError(f"direction must be 'forward' or 'adjoint', got {direction!r}")
        self.check_guard(out)
        return out

    def check_guard(self, work: np.ndarray, order: str = "std") -> None:
        if self.basis.n_modes < GUARD_MIN_MODES:
            return
        mask = self.guard_std if order == "std" else self.guard_ascending
        dens = np.abs(work) ** 2
        total = np.sum(dens, axis=-1)
        tail = np.sum(dens[..., mask], axis=-1)
        worst = float(np.max(tail / total))
        if worst >= GUARD_TAIL_LIMIT:
            raise GridOverflowError(
                f"tail mass {worst:.3e} in outer {GUARD_FRACTION:.0%} of momentum "
                f"modes exceeds {GUARD_TAIL_LIMIT:.0e}; enlarge n_modes "
                f"(currently {self.basis.n_modes})",
                tail_mass=worst,
            )


@lru_cache(maxsize=16)
def _cached_propagator(basis: BasisSpec, params: ModelParams) -> Propagator:
    return Propagator(basis, params)


def get_propagator(basis: BasisSpec, params: ModelParams) -> Propagator:
    """Shared multiplier tables; cached per (basis, params)."""
    return _cached_propagator(basis, params)


def apply_kick(state: WaveState, params: ModelParams, direction: str = "forward") -> WaveState:
    """Pointwise kick factor in angle representation.

    Forward multiplies by exp(-i K cos(theta)/hbar) * exp(K lambda sin(theta)/hbar);
    adjoint by the complex conjugate (same gain, reversed phase).  Returns the
    state in momentum representation and trips the grid guard after the
    transform back.
    """
    if direction not in ("forward", "adjoint"):
        raise ValueError(f"direction must be 'forward' or 'adjoint', got {direction!r}")
    prop = get_propagator(state.basis, params)
    mult = prop.kick_fwd if direction == "forward" else prop.kick_adj
    a = to_angle(state)
    a.amplitudes *= mult
    out = to_momentum(a)
    prop.check_guard(out.amplitudes, order="ascending")
    return out


def apply_free(state: WaveState, params: ModelParams, direction: str = "forward") -> WaveState:
    """Diagonal free-rotation phase exp(-+ i p_n^2/(2 hbar)); norm-preserving."""
    if direction not in ("forward", "adjoint"):
        raise ValueError(f"direction must be 'forward' or 'adjoint', got {direction!r}")
    prop = get_propagator(state.basis, params)
    mult = prop.free_fwd_std if direction == "forward" else prop.free_adj_std
    s = to_momentum(state)
    s.amplitudes *= np.fft.fftshift(mult)
    return s


def floquet_step(state: WaveState, params: ModelParams, direction: str = "forward") -> WaveState:
    """One full period: kick then free (forward) or their adjoints in reverse order."""
    if direction == "forward":
        return apply_free(apply_kick(state, params, "forward"), params, "forward")
    if direction == "adjoint":
        return apply_kick(apply_free(state, params, "adjoint"), params, "adjoint")
    raise ValueError(f"direction must be 'forward' or 'adjoint', got {direction!r}")


def apply_p(state: WaveState) -> WaveState:
    """Multiply by the momentum operator: amplitude n scaled by p_n = n*hbar.

    The output is deliberately unnormalized; its squared norm equals
    <psi|p^2|psi> of the input, which callers record as part of the
    normalization ledger.
    """
    s = to_momentum(state)
    s.amplitudes *= s.basis.momentum_values()
    if s.norm2() < 1e-300:
        raise ZeroStateError("momentum operator annihilated the state")
    return s


def observables(state: WaveState) -> dict:
    """Norm and momentum moments on the normalized density, plus densities."""
    s = to_momentum(state)
    norm2 = s.norm2()
    density = np.abs(s.amplitudes) ** 2 / norm2
    p = s.basis.momentum_values()
    a = to_angle(s)
    angle_density = np.abs(a.amplitudes) ** 2 / np.sum(np.abs(a.amplitudes) ** 2)
    return {
        "norm2": norm2,
        "p_mean": float(np.sum(p * density)),
        "p2": float(np.sum(p**2 * density)),
        "p4": float(np.sum(p**4 * density)),
        "momentum_density": density,
        "angle_density": angle_density,
    }


def fidelity(a: WaveState, b: WaveState) -> float:
    """|<a|b>| on unit-normalized states."""
    am = to_momentum(a).amplitudes
    bm = to_momentum(b).amplitudes
    return float(
        abs(np.vdot(am, bm)) / np.sqrt(np.sum(np.abs(am) ** 2) * np.sum(np.abs(bm) ** 2))
    )


def tail_mass(state: WaveState) -> float:
    """Normalized probability inside the guard band (outer 10% each side)."""
    s = to_momentum(state)
    n = s.basis.n_modes
    n_guard = max(1, int(round(GUARD_FRACTION * n)))
    dens = np.abs(s.amplitudes) ** 2
    return float((dens[:n_guard].sum() + dens[-n_guard:].sum()) / dens.sum())
