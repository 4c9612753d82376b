"""Two-qubit concurrence and the closed forms of the undriven model."""

from __future__ import annotations

import numpy as np

from .model import SY

_YY = np.kron(SY, SY)


class NotHermitianError(ValueError):
    """Raised when a density matrix is not Hermitian."""


def _check_density(rho, tol: float = 1e-10) -> np.ndarray:
    r = np.asarray(rho, dtype=complex)
    if r.shape != (4, 4):
        raise ValueError(f"expected a 4x4 density matrix, got {r.shape}")
    if np.max(np.abs(r - r.conj().T)) > tol * max(1.0, np.max(np.abs(r))):
        raise NotHermitianError("density matrix is not Hermitian")
    return 0.5 * (r + r.conj().T)


def spin_flip(rho) -> np.ndarray:
    """``(sy x sy) rho* (sy x sy)``."""
    return _YY @ np.conj(rho) @ _YY


def _psd_sqrt(r: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(r)
    # eigenvalues indistinguishable from zero are set to zero
    w = np.where(w > 8 * np.finfo(float).eps * max(w.max(), 0.0), w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def concurrence_mixed(rho) -> float:
    """Wootters concurrence of a two-qubit density matrix.

    The decreasing square roots ``tau_i`` of the eigenvalues of
    ``rho (sy x sy) rho* (sy x sy)`` give ``max(0, tau1 - tau2 - tau3 - tau4)``.
    They are computed as the singular values of ``sqrt(rho) sqrt(rho~)``,
    which avoids square roots of rounding noise for low-rank states.

    `rho` is divided by its trace first.
    """
    r = _check_density(rho)
    tr = np.trace(r).real
    if tr <= 0:
        raise ValueError("density matrix has non-positive trace")
    r = r / tr
    s = _psd_sqrt(r)
    s_flip = _YY @ np.conj(s) @ _YY
    tau = np.linalg.svd(s @ s_flip, compute_uv=False)
    return float(min(1.0, max(0.0, tau[0] - tau[1] - tau[2] - tau[3])))


def concurrence_mixed_eigen(rho) -> float:
    """Concurrence from the eigenvalues of ``rho rho~`` directly.

    A second route to `concurrence_mixed`. Negative rounding is clamped to
    zero before the square root, so rank-deficient states carry an error of
    order the square root of machine precision.
    """
    r = _check_density(rho)
    r = r / np.trace(r).real
    lam = np.linalg.eigvals(r @ spin_flip(r)).real
    tau = np.sort(np.sqrt(np.clip(lam, 0.0, None)))[::-1]
    return float(min(1.0, max(0.0, tau[0] - tau[1] - tau[2] - tau[3])))


def concurrence_pure(psi) -> float:
    """``2 |alpha delta - beta zeta| / ||psi||^2`` for ``psi = (alpha, beta, zeta, delta)``."""
    v = np.asarray(psi, dtype=complex)
    if v.shape != (4,):
        raise ValueError("expected a 4-component state")
    nrm = np.vdot(v, v).real
    if nrm == 0:
        raise ValueError("zero state")
    return float(min(1.0, 2 * abs(v[0] * v[3] - v[1] * v[2]) / nrm))


def product_adapted_pair(u, v, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Two independent least-entangled unit vectors spanning ``{u, v}``.

    The unnormalised concurrence of ``s u + t v`` is
    ``|a s^2 + 2 b s t + c t^2|`` with ``a = u^T Y u``, ``b = u^T Y v``,
    ``c = v^T Y v`` and ``Y = sy (x) sy``. Its two roots are product states.
    For a double root the second vector is the orthogonal complement within
    the span.
    """
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    a, b, c = u @ _YY @ u, u @ _YY @ v, v @ _YY @ v
    if max(abs(a), abs(b), abs(c)) <= tol:
        out = [u, v]
    elif abs(c) > tol:
        root = np.sqrt(b * b - a * c)
        out = [u + ((-b + root) / c) * v, u + ((-b - root) / c) * v]
    else:
        # c = 0: v is a product state; the other root solves a s + 2 b t = 0
        out = [v, 2 * b * u - a * v]
    out = [w / np.linalg.norm(w) for w in out]
    if abs(np.vdot(out[0], out[1])) > 1 - 1e-9:
        basis = np.column_stack([u, v])
        q, _ = np.linalg.qr(np.column_stack([out[0], basis]))
        out[1] = q[:, 1] if abs(np.vdot(q[:, 1], out[0])) < 1e-9 else q[:, 2]
    return out[0], out[1]


def eigenstate_concurrence_sweep(sweep, degeneracy_tol: float = 1e-6) -> np.ndarray:
    """Concurrence of every branch eigenvector in a spectrum sweep.

    Points flagged defective are returned as NaN. Inside a degenerate pair
    with two independent eigenvectors the basis is arbitrary, so the pair is
    reported in its `product_adapted_pair` basis.

    Returns
    -------
    ndarray, shape (n_points, 4)
    """
    out = np.empty(sweep.values.shape, dtype=float)
    for i in range(len(sweep.omegas)):
        if sweep.defective[i]:
            out[i] = np.nan
            continue
        vals = sweep.values[i]
        vecs = sweep.vectors[i].copy()
        cut = degeneracy_tol * max(1.0, float(np.max(np.abs(vals))))
        n = len(vals)
        for j in range(n):
            for k in range(j + 1, n):
                close = [m for m in range(n) if abs(vals[m] - vals[j]) <= cut]
                if len(close) == 2 and k in close:
                    vecs[:, j], vecs[:, k] = product_adapted_pair(vecs[:, j], vecs[:, k])
        out[i] = [concurrence_pure(vecs[:, k]) for k in range(n)]
    return out


def energy_gap(xi: float, gamma: float = 1.0) -> complex:
    """Principal root ``sqrt(4 J^2 - gamma^2)`` with ``J = -2 xi``."""
    j = -2.0 * xi
    return complex(np.sqrt(complex(4 * j * j - gamma * gamma)))


def nodrive_eigen_concurrence(xi: float, gamma: float = 1.0) -> tuple[float, float]:
    """Concurrence of the two eigenstates of the undriven ``{aa, bb}`` model.

    The eigenstates are ``J|aa> + Gamma_pm |bb>`` with
    ``Gamma_pm = i gamma/2 pm sqrt(4 J^2 - gamma^2)/2``, giving
    ``2 |J| |Gamma| / (J^2 + |Gamma|^2)``.

    Returns
    -------
    (eps_plus, eps_minus)
    """
    j = abs(-2.0 * xi)
    root = energy_gap(xi, gamma) / 2
    out = []
    for gam in (0.5j * gamma + root, 0.5j * gamma - root):
        den = j * j + abs(gam) ** 2
        out.append(0.0 if den == 0 else float(2 * j * abs(gam) / den))
    return out[0], out[1]
