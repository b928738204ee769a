"""Dense complex linear algebra for small Hermitian problems.

Everything in the simulator lives in dimension 3 (quantum-dot ladder) or 4
(two photonic qubits), so we use a self-contained cyclic Jacobi eigensolver
instead of delegating to LAPACK.  Matrices are plain complex ndarrays;
density matrices carry their basis convention at the call site.
"""

from __future__ import annotations

import numpy as np

# Off-diagonal Frobenius norm at which a Jacobi sweep counts as converged,
# relative to max(1, ||A||_F).
JACOBI_TOL = 1e-12


def dag(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return m.conj().T


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """[a, b] = ab - ba.  Dimension mismatch propagates as ValueError."""
    return a @ b - b @ a


def hermiticity_defect(m: np.ndarray) -> float:
    """max |m_ij - conj(m_ji)| over all entries."""
    return float(np.abs(m - dag(m)).max())


def is_hermitian(m: np.ndarray, tol: float = 1e-9) -> bool:
    return hermiticity_defect(m) <= tol


def _off_diagonal_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def eig_hermitian(m: np.ndarray, herm_tol: float = 1e-9,
                  max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Diagonalize a Hermitian matrix by classical complex Jacobi rotations.

    Parameters
    ----------
    m : ndarray
        Square Hermitian matrix (checked against ``herm_tol``).
    herm_tol : float
        Maximum tolerated hermiticity defect of the input.

    Returns
    -------
    (w, v) : eigenvalues sorted descending, unitary matrix whose columns are
        the corresponding eigenvectors.

    Raises
    ------
    ValueError
        If the input is not Hermitian; the message carries the defect size.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    defect = hermiticity_defect(m)
    if defect > herm_tol:
        raise ValueError(
            f"matrix is not Hermitian: max |m - m^dag| = {defect:.3e} "
            f"exceeds tolerance {herm_tol:.1e}")

    n = m.shape[0]
    # Work on the exactly-Hermitian part so roundoff in the input cannot leak
    # into complex diagonal entries.
    a = 0.5 * (m + dag(m))
    v = np.eye(n, dtype=complex)
    if n == 1:
        return np.array([a[0, 0].real]), v

    scale = max(1.0, float(np.linalg.norm(a)))
    for _ in range(max_sweeps * n * n):
        # classical Jacobi: annihilate the largest off-diagonal element
        off = np.abs(a - np.diag(np.diag(a)))
        p, q = np.unravel_index(np.argmax(off), off.shape)
        if off[p, q] == 0.0 or _off_diagonal_norm(a) <= JACOBI_TOL * scale:
            break
        if p > q:
            p, q = q, p

        apq = a[p, q]
        r = abs(apq)
        phase = apq / r  # e^{i phi}, with a[p,q] = r e^{i phi}
        app = a[p, p].real
        aqq = a[q, q].real
        tau = (aqq - app) / (2.0 * r)
        if tau >= 0.0:
            t = 1.0 / (tau + np.hypot(1.0, tau))
        else:
            t = -1.0 / (-tau + np.hypot(1.0, tau))
        c = 1.0 / np.hypot(1.0, t)
        s = t * c

        # U = diag-phase * real rotation on the (p, q) plane; a <- U^dag a U
        up = np.zeros(n, dtype=complex)
        uq = np.zeros(n, dtype=complex)
        up[p], up[q] = c, s
        uq[p], uq[q] = -s * np.conj(phase), c * np.conj(phase)

        col_p = a[:, p] * up[p] + a[:, q] * uq[p]
        col_q = a[:, p] * up[q] + a[:, q] * uq[q]
        a[:, p] = col_p
        a[:, q] = col_q
        row_p = np.conj(up[p]) * a[p, :] + np.conj(uq[p]) * a[q, :]
        row_q = np.conj(up[q]) * a[p, :] + np.conj(uq[q]) * a[q, :]
        a[p, :] = row_p
        a[q, :] = row_q
        a[p, q] = 0.0
        a[q, p] = 0.0
        a[p, p] = a[p, p].real
        a[q, q] = a[q, q].real

        vcol_p = v[:, p] * up[p] + v[:, q] * uq[p]
        vcol_q = v[:, p] * up[q] + v[:, q] * uq[q]
        v[:, p] = vcol_p
        v[:, q] = vcol_q

    w = np.diag(a).real.copy()
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]


def min_eigenvalue(m: np.ndarray, herm_tol: float = 1e-8) -> float:
    """Smallest eigenvalue of a Hermitian matrix."""
    w, _ = eig_hermitian(m, herm_tol=herm_tol)
    return float(w[-1])


def check_density_matrix(rho: np.ndarray, dim: int | None = None,
                         trace_tol: float = 1e-9, herm_tol: float = 1e-9,
                         psd_tol: float = 1e-9) -> None:
    """Validate trace-1, hermiticity and positivity; raise with diagnostics.

    ``psd_tol`` bounds how negative the smallest eigenvalue may be.
    """
    rho = np.asarray(rho)
    if dim is not None and rho.shape != (dim, dim):
        raise ValueError(f"expected a {dim}x{dim} matrix, got {rho.shape}")
    tr_err = abs(np.trace(rho) - 1.0)
    if tr_err > trace_tol:
        raise ValueError(f"trace deviates from 1 by {tr_err:.3e}")
    defect = hermiticity_defect(rho)
    if defect > herm_tol:
        raise ValueError(f"hermiticity defect {defect:.3e} exceeds {herm_tol:.1e}")
    lam_min = min_eigenvalue(rho, herm_tol=max(herm_tol, 1e-8))
    if lam_min < -psd_tol:
        raise ValueError(f"negative eigenvalue {lam_min:.3e} below -{psd_tol:.1e}")


def _clip_spectrum(w: np.ndarray) -> np.ndarray:
    """Zero negative and near-noise eigenvalues so sqrt cannot amplify them."""
    floor = 1e-14 * max(1e-300, float(np.abs(w).max()))
    return np.where(w > floor, w, 0.0)


def sqrtm_psd(m: np.ndarray, herm_tol: float = 1e-8) -> np.ndarray:
    """Hermitian square root of a PSD matrix (tiny negative modes clipped)."""
    w, v = eig_hermitian(m, herm_tol=herm_tol)
    return (v * np.sqrt(_clip_spectrum(w))) @ dag(v)


def state_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity F(rho, sigma) = (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2."""
    s = sqrtm_psd(rho)
    inner = s @ sigma @ s
    w, _ = eig_hermitian(0.5 * (inner + dag(inner)), herm_tol=1e-6)
    return float(np.sum(np.sqrt(_clip_spectrum(w))) ** 2)
