"""First-order biorthogonal perturbation theory for weakly Ising-coupled qubits.

The unperturbed system is two identical driven lossy qubits. Its product
eigenstates form a biorthogonal basis (right kets and left rows with
``<left_i|right_j> = delta_ij``); because the Hamiltonian is complex
symmetric the left rows are the transposes of the right kets. The Ising term
is treated to first order in ``J = -2 xi``.

Two variants of the corrected system are provided:

``"consistent"``
    Standard first-order theory with the perturbation ``-xi (sx1 + sx2)^2``.
    Eigenvalue errors and biorthogonality defects are both O(xi^2).
``"quoted"``
    The closed forms as usually quoted, which carry an extra ``-2 xi`` on the
    degenerate-pair eigenvalues and a weight ``8 J Omega^2 / eta^4`` on the
    partner state. Their eigen-residuals are O(xi).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .dynamics import Trajectory, _observe

LABELS = ("--", "++", "1", "2")
Variant = Literal["consistent", "quoted"]

_SQ2 = np.sqrt(2.0)


class EPConstructionError(ValueError):
    """Raised when the basis is requested at the single-qubit EP."""


class BranchError(ValueError):
    """Raised when a PTS-only construction is requested in the broken phase."""


def _eta(omega: float, gamma: float) -> complex:
    return complex(np.sqrt(complex(16 * omega**2 - gamma**2)))


def _is_pts(eta: complex) -> bool:
    return eta.real > 0 and abs(eta.imag) <= 1e-14 * abs(eta)


# ---------------------------------------------------------------------------
# single qubit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SingleQubitEigen:
    """Eigenpairs of one driven lossy qubit.

    Attributes
    ----------
    values : ndarray, shape (2,)
        ``(lambda_-, lambda_+)``.
    vectors : ndarray, shape (2, 2)
        Right eigenvectors as columns.
    duals : ndarray, shape (2, 2)
        Eigenvectors of the Hermitian conjugate Hamiltonian as columns.
    coalesced : bool
        True at the exceptional point, where both pairs coincide.
    """

    values: np.ndarray
    vectors: np.ndarray
    duals: np.ndarray
    coalesced: bool


def single_qubit_eigensystem(omega: float, gamma: float = 1.0, xi: float = 0.0) -> SingleQubitEigen:
    """Eigen-decomposition of ``Omega sx - i gamma/2 |b><b| - xi sx^2``.

    ``lambda_pm = (-i gamma - 4 xi pm eta) / 4`` with
    ``eta = sqrt(16 Omega^2 - gamma^2)`` (principal root). Vectors are
    ``(i gamma pm eta, 4 Omega) / (4 sqrt2 Omega)``. The Hamiltonian is
    complex symmetric, so the duals are their complex conjugates, which is
    ``(-i gamma pm eta, 4 Omega) / (4 sqrt2 Omega)`` in the symmetric phase.
    """
    eta = _eta(omega, gamma)
    vals = np.array([(-1j * gamma - 4 * xi - eta) / 4, (-1j * gamma - 4 * xi + eta) / 4])
    if omega == 0:
        # undriven: |b> decays, |a> is stationary
        vecs = np.array([[0, 1], [1, 0]], dtype=complex)
        return SingleQubitEigen(vals, vecs, vecs.copy(), gamma == 0)
    n = 4 * _SQ2 * omega
    vecs = np.array([[1j * gamma - eta, 1j * gamma + eta], [4 * omega, 4 * omega]]) / n
    return SingleQubitEigen(vals, vecs, vecs.conj(), abs(eta) <= 1e-12 * max(1.0, gamma))


# ---------------------------------------------------------------------------
# two-qubit biorthogonal basis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BiorthoBasis:
    """Unperturbed two-qubit biorthonormal basis.

    Attributes
    ----------
    rights : ndarray, shape (4, 4)
        Columns ``psi_--, psi_++, psi_1, psi_2``.
    lefts : ndarray, shape (4, 4)
        Rows, with ``lefts @ rights = I``.
    values : ndarray, shape (4,)
        Unperturbed eigenvalues of the uncoupled Hamiltonian.
    eta : complex
        ``sqrt(16 Omega^2 - gamma^2)``; imaginary in the broken branch.
    branch : {"PTS", "PTB"}
    """

    rights: np.ndarray
    lefts: np.ndarray
    values: np.ndarray
    eta: complex
    branch: str


def build_bibasis(omega: float, gamma: float = 1.0) -> BiorthoBasis:
    """Biorthonormal product basis of the uncoupled pair.

    In the symmetric branch ``eta > 0``; in the broken branch the same
    expressions are continued to ``eta = i |eta|``, which reproduces the
    broken-phase eigenvectors up to normalisation.

    Raises
    ------
    EPConstructionError
        At ``16 Omega^2 = gamma^2``.
    """
    eta = _eta(omega, gamma)
    if abs(eta) <= 1e-12 * max(1.0, gamma):
        raise EPConstructionError("biorthogonal basis is undefined at the exceptional point")
    g = 1j * gamma
    w = 4 * omega
    mm = np.array([-g + eta, -w, -w, g + eta]) / (2 * eta)
    pp = np.array([g + eta, w, w, -g + eta]) / (2 * eta)
    one = np.array([0, -1, 1, 0]) / _SQ2
    two = np.array([-w, g, g, w]) / (_SQ2 * eta)
    rights = np.column_stack([mm, pp, one, two]).astype(complex)
    vals = np.array([(-g - eta) / 2, (-g + eta) / 2, -g / 2, -g / 2])
    return BiorthoBasis(rights, rights.T.copy(), vals, eta, "PTS" if _is_pts(eta) else "PTB")


def broken_phase_vectors(omega: float, gamma: float = 1.0) -> np.ndarray:
    """Conventionally normalised broken-phase eigenvectors, columns ``--, ++, -+, +-``.

    Written with ``eta = -i |eta|`` so that the labels match `build_bibasis`.
    """
    eta = -1j * abs(_eta(omega, gamma))
    g, w = 1j * gamma, 4 * omega
    mm = np.array([(g + eta) ** 2, w * (g + eta), w * (g + eta), w * w]) / (2 * w * w)
    pp = np.array([-(gamma + 1j * eta) ** 2, w * (g - eta), w * (g - eta), w * w]) / (2 * w * w)
    mp = np.array([-w, g + eta, g - eta, w]) / (2 * w)
    pm = np.array([-w, g - eta, g + eta, w]) / (2 * w)
    return np.column_stack([mm, pp, mp, pm])


def interaction(xi: float) -> np.ndarray:
    """The Ising perturbation ``-xi (sx1 + sx2)^2``."""
    j = -2.0 * xi
    v = np.zeros((4, 4), dtype=complex)
    v[np.diag_indices(4)] = j
    v[0, 3] = v[3, 0] = v[1, 2] = v[2, 1] = j
    return v


def degenerate_block(omega: float, gamma: float, xi: float) -> np.ndarray:
    """Perturbation restricted to the degenerate pair ``{psi_+-, psi_-+}``.

    All four entries equal ``-J gamma^2 / eta^2``.
    """
    eta = _eta(omega, gamma)
    if not _is_pts(eta):
        raise BranchError("degenerate block is defined in the symmetric phase")
    j = -2.0 * xi
    return np.full((2, 2), -j * gamma**2 / eta**2, dtype=complex)


# ---------------------------------------------------------------------------
# first-order corrections
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PerturbedSystem:
    """First-order eigenvalues and eigenstates.

    Attributes
    ----------
    values : ndarray, shape (4,)
        ``Lambda`` in the order of `LABELS`.
    rights : ndarray, shape (4, 4)
        Corrected kets as columns.
    lefts : ndarray, shape (4, 4)
        Corrected adjoint rows (transposes of `rights`).
    J : float
    variant : str
    """

    values: np.ndarray
    rights: np.ndarray
    lefts: np.ndarray
    J: float
    variant: str

    def value(self, label: str) -> complex:
        return complex(self.values[LABELS.index(label)])


def _pts_basis(omega: float, gamma: float) -> BiorthoBasis:
    b = build_bibasis(omega, gamma)
    if b.branch != "PTS":
        raise BranchError("first-order theory is provided in the symmetric phase only")
    return b


def perturbed_eigenvalues(omega: float, gamma: float, xi: float,
                          variant: Variant = "consistent") -> dict:
    """First-order eigenvalues keyed by ``"--", "++", "1", "2"``.

    Both variants share ``Lambda_pm = (-i gamma - 4 xi pm eta)/2 + 16 J Omega^2/eta^2``.
    ``"consistent"`` has ``Lambda_1 = -i gamma/2`` and
    ``Lambda_2 = -i gamma/2 - 2 J gamma^2/eta^2``; ``"quoted"`` adds ``-2 xi``
    to both.
    """
    b = _pts_basis(omega, gamma)
    eta = b.eta.real
    j = -2.0 * xi
    shift = 16 * j * omega**2 / eta**2
    pair = -2.0 * xi if variant == "quoted" else 0.0
    if variant not in ("consistent", "quoted"):
        raise ValueError(f"unknown variant {variant!r}")
    return {
        "--": 0.5 * (-1j * gamma - 4 * xi - eta) + shift,
        "++": 0.5 * (-1j * gamma - 4 * xi + eta) + shift,
        "1": -0.5j * gamma + pair,
        "2": -0.5j * gamma + pair - 2 * j * gamma**2 / eta**2,
    }


def perturbed_eigenstates(omega: float, gamma: float, xi: float,
                          variant: Variant = "consistent") -> PerturbedSystem:
    """First-order corrected eigenstates and their adjoints.

    ``Psi_1`` is the singlet, unchanged. ``Psi_2`` gains
    ``-8 sqrt2 i gamma J Omega / eta^3 (psi_-- + psi_++)``. ``Psi_pm`` gain
    ``c2 psi_2`` with ``c2 = 8 sqrt2 i gamma J Omega / eta^3`` and a partner
    weight ``-/+ w psi_-/+`` where ``w = J gamma^2 / eta^3`` (consistent) or
    ``16 J Omega^2 / eta^3`` (quoted).
    """
    lam = perturbed_eigenvalues(omega, gamma, xi, variant)
    b = _pts_basis(omega, gamma)
    eta = b.eta.real
    j = -2.0 * xi
    mm, pp, one, two = (b.rights[:, k] for k in range(4))
    c2 = 8 * _SQ2 * 1j * gamma * j * omega / eta**3
    if variant == "quoted":
        w = 16 * j * omega**2 / eta**3
    else:
        w = j * gamma**2 / eta**3
    psi_pp = pp - w * mm + c2 * two
    psi_mm = mm + w * pp + c2 * two
    psi_2 = two - c2 * (mm + pp)
    rights = np.column_stack([psi_mm, psi_pp, one, psi_2])
    values = np.array([lam[k] for k in LABELS])
    return PerturbedSystem(values, rights, rights.T.copy(), j, variant)


def first_order_system(basis: BiorthoBasis, v: np.ndarray, degenerate: tuple = (2, 3)) -> PerturbedSystem:
    """Generic first-order theory from explicit matrix elements.

    Uses ``V_ik = <left_i| v |right_k>`` for the unperturbed basis, with the
    indices in `degenerate` taken as an already diagonalised degenerate
    pair. Serves as a numerical cross-check of the closed forms.
    """
    vm = basis.lefts @ v @ basis.rights
    lam0 = basis.values
    n = len(lam0)
    values = lam0 + np.diag(vm)
    rights = basis.rights.astype(complex).copy()
    for i in range(n):
        for k in range(n):
            if k == i or (i in degenerate and k in degenerate):
                continue
            rights[:, i] += vm[k, i] / (lam0[i] - lam0[k]) * basis.rights[:, k]
    return PerturbedSystem(values, rights, rights.T.copy(), float("nan"), "generic")


def analytic_evolution(omega: float, gamma: float, xi: float, psi0=None, times=None,
                       variant: Variant = "consistent") -> Trajectory:
    """State evolution from the first-order eigen-expansion.

    ``psi(t) = sum_i A_i exp(-i Lambda_i t) Psi_i`` with ``A_i = <Psi~_i|psi0>``.
    Observables are computed on the normalised state.

    Raises
    ------
    BranchError
        Outside the symmetric phase.
    """
    ps = perturbed_eigenstates(omega, gamma, xi, variant)
    if psi0 is None:
        psi0 = np.array([1, 0, 0, 0], dtype=complex)
    if times is None:
        times = np.linspace(0.0, 40.0, 4001)
    times = np.asarray(times, dtype=float)
    amps = ps.lefts @ np.asarray(psi0, dtype=complex)
    psis = (np.exp(-1j * np.outer(times, ps.values)) * amps) @ ps.rights.T
    norms = np.sum(np.abs(psis) ** 2, axis=1)
    rhos = [np.outer(p, p.conj()) / n for p, n in zip(psis, norms)]
    return _observe(times, rhos, norms)


def amplitudes(omega: float, gamma: float, xi: float, psi0=None,
               variant: Variant = "consistent") -> np.ndarray:
    """Expansion coefficients ``A_i`` of `psi0` (default ``|aa>``)."""
    ps = perturbed_eigenstates(omega, gamma, xi, variant)
    if psi0 is None:
        psi0 = np.array([1, 0, 0, 0], dtype=complex)
    return ps.lefts @ np.asarray(psi0, dtype=complex)


# ---------------------------------------------------------------------------
# Bell projection
# ---------------------------------------------------------------------------

BELL = np.array([
    [1, 0, 0, 1],
    [1j, 0, 0, -1j],
    [0, 1, 1, 0],
    [0, 1, -1, 0],
], dtype=complex).T / _SQ2


def bell_projection(psi) -> np.ndarray:
    """Coefficients ``c_j = <e_j|psi>`` on the Bell states.

    ``e1 = (aa + bb)/sqrt2``, ``e2 = i (aa - bb)/sqrt2``,
    ``e3 = (ab + ba)/sqrt2``, ``e4 = (ab - ba)/sqrt2``.
    """
    v = np.asarray(psi, dtype=complex)
    if not np.any(v):
        raise ValueError("zero state")
    return BELL.conj().T @ v


def bell_concurrence(c) -> float:
    """Unnormalised pure-state concurrence ``2 |alpha delta - beta zeta|`` from Bell coefficients.

    With this Bell set ``e3`` lacks the phase ``i`` of the magic basis, so its
    square enters with a minus sign: ``|c1^2 + c2^2 - c3^2 + c4^2|``.
    """
    c = np.asarray(c, dtype=complex)
    return float(abs(c[0] ** 2 + c[1] ** 2 - c[2] ** 2 + c[3] ** 2))
