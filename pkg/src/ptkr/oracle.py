"""Dense-matrix verification oracle for small bases.

Everything here re-derives the evolution from scratch with explicit O(N^2)
linear algebra: the angle<->momentum transform is written out as a DFT matrix,
the Floquet operator becomes an N x N matrix, and the OTOC protocol including
its norm-forcing ledger is executed by matrix-vector products.  No FFTs and no
calls into the split-step pipeline, so agreement with the fast path is a real
cross-implementation check.

Restricted to n_modes <= 16; dense products at production sizes are a
non-goal.
"""

import numpy as np

from .rotor import BasisSpec, ModelParams

MAX_ORACLE_MODES = 16


def _check_small(basis: BasisSpec) -> None:
    if basis.n_modes > MAX_ORACLE_MODES:
        raise ValueError(
            f"dense oracle rejects n_modes > {MAX_ORACLE_MODES}, got {basis.n_modes}"
        )


def dft_to_angle(basis: BasisSpec) -> np.ndarray:
    """Matrix of the unitary momentum->angle transform on the shared grid.

    Row j, column n holds exp(i n theta_j)/sqrt(N) with theta_j = -pi + 2 pi j/N
    and n ascending from -N/2, i.e. the exact N-point quadrature of the
    continuum overlap on this discretization.
    """
    _check_small(basis)
    n = basis.n_modes
    idx = np.arange(-(n // 2), n // 2)
    theta = -np.pi + 2.0 * np.pi * np.arange(n) / n
    return np.exp(1j * np.outer(theta, idx)) / np.sqrt(n)


def dense_floquet_matrix(basis: BasisSpec, params: ModelParams, direction: str = "forward") -> np.ndarray:
    """N x N one-period propagator in the momentum basis."""
    _check_small(basis)
    if params.hbar_eff != basis.hbar_eff:
        raise ValueError("params.hbar_eff disagrees with basis.hbar_eff")
    n = basis.n_modes
    hbar = basis.hbar_eff
    idx = np.arange(-(n // 2), n // 2)
    theta = -np.pi + 2.0 * np.pi * np.arange(n) / n
    f = dft_to_angle(basis)
    karg = params.kick_strength / hbar
    kick = np.diag(np.exp(karg * (-1j * np.cos(theta) + params.non_hermiticity * np.sin(theta))))
    free = np.diag(np.exp(-0.5j * hbar * idx.astype(np.float64) ** 2))
    u = free @ (f.conj().T @ kick @ f)
    if direction == "forward":
        return u
    if direction == "adjoint":
        return u.conj().T
    raise ValueError(f"direction must be 'forward' or 'adjoint', got {direction!r}")


def dense_gaussian(basis: BasisSpec, sigma: float) -> np.ndarray:
    """Unit-norm momentum amplitudes of the truncated Gaussian packet."""
    _check_small(basis)
    theta = -np.pi + 2.0 * np.pi * np.arange(basis.n_modes) / basis.n_modes
    a = np.exp(-sigma * theta**2 / 2.0).astype(np.complex128)
    a /= np.linalg.norm(a)
    return dft_to_angle(basis).conj().T @ a


def dense_otoc_point(params: ModelParams, basis: BasisSpec, sigma: float, t_n: int) -> dict:
    """Full OTOC protocol at one sample time via dense matrix algebra.

    Executes forward evolution of both branches with per-period renormalization
    to each branch's starting norm, the momentum insertions, backward evolution
    with the forced-norm rule, and the final inner products.  Returns the same
    quantities the fast engine reports: c1, c2, c3 (complex), c, the normalized
    end-of-reversal energy, and the forced reversal norm.
    """
    _check_small(basis)
    if t_n < 0:
        raise ValueError("t_n must be >= 0")
    u_fwd = dense_floquet_matrix(basis, params, "forward")
    u_adj = dense_floquet_matrix(basis, params, "adjoint")
    p = np.arange(-(basis.n_modes // 2), basis.n_modes // 2) * basis.hbar_eff

    psi = dense_gaussian(basis, sigma)
    norm_psi0 = float(np.vdot(psi, psi).real)

    phi = p * psi
    norm_phi0 = float(np.vdot(phi, phi).real)
    if norm_phi0 < 1e-300:
        raise ValueError("momentum operator annihilated the initial packet")
    u_psi = psi / np.linalg.norm(psi)
    u_phi = phi / np.linalg.norm(phi)

    for _ in range(t_n):
        u_psi = u_fwd @ u_psi
        u_psi /= np.linalg.norm(u_psi)
        u_phi = u_fwd @ u_phi
        u_phi /= np.linalg.norm(u_phi)

    # momentum insertion at t_n, recording the forced backward norms
    w_psi = p * u_psi
    w_phi = p * u_phi
    norm_psi_r = norm_psi0 * float(np.vdot(w_psi, w_psi).real)
    norm_phi_r = norm_phi0 * float(np.vdot(w_phi, w_phi).real)
    u_psi = w_psi / np.linalg.norm(w_psi)
    u_phi = w_phi / np.linalg.norm(w_phi)

    for _ in range(t_n):
        u_psi = u_adj @ u_psi
        u_psi /= np.linalg.norm(u_psi)
        u_phi = u_adj @ u_phi
        u_phi /= np.linalg.norm(u_phi)

    p2_end = float(np.vdot(u_psi, p**2 * u_psi).real)
    c1 = norm_psi_r * p2_end
    c2 = norm_phi_r
    c3 = complex(np.sqrt(norm_psi_r * norm_phi_r) * np.vdot(u_psi, p * u_phi))
    c = c1 + c2 - 2.0 * c3.real
    return {
        "t": t_n,
        "c1": c1,
        "c2": c2,
        "c3": c3,
        "c": c,
        "p2_r_t0": p2_end,
        "norm_r_t0": norm_psi_r,
    }
