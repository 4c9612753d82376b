"""Hamiltonians and collapse operators for two coupled lossy qubits.

Each qubit has a stable level ``a`` and a lossy level ``b`` (loss rate
``gamma``) driven at Rabi frequency ``omega``. Two-qubit states use the
ordered basis ``(aa, ab, ba, bb)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

# single-qubit operators in the basis (a, b)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PB = np.array([[0, 0], [0, 1]], dtype=complex)
# quantum jump of the lossy level back to the stable one, |a><b|
JUMP = np.array([[0, 1], [0, 0]], dtype=complex)
I2 = np.eye(2, dtype=complex)

BASIS_LABELS = ("aa", "ab", "ba", "bb")


class ModelError(ValueError):
    """Raised for invalid model parameters."""


@dataclass(frozen=True)
class QubitDriveParams:
    """Loss rate and drive strength shared by both qubits."""

    gamma: float = 1.0
    omega: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.gamma) or self.gamma < 0:
            raise ModelError("gamma must be finite and non-negative")
        if not np.isfinite(self.omega) or self.omega < 0:
            raise ModelError("omega must be finite and non-negative")


@dataclass(frozen=True)
class ModelSpec:
    """A driven two-qubit model.

    Parameters
    ----------
    gamma, omega : float
        Loss rate and Rabi frequency.
    interaction : {"ising", "dipolar"}
    xi : float
        Ising coupling strength, used when ``interaction == "ising"``.
    g : float
        Dipolar coupling strength, used when ``interaction == "dipolar"``.
    dipolar_variant : {"physical", "as-printed"}
        ``"as-printed"`` adds ``g`` to the ``bb`` diagonal element as well.
    """

    gamma: float = 1.0
    omega: float = 0.0
    interaction: Literal["ising", "dipolar"] = "ising"
    xi: float = 0.0
    g: float = 0.0
    dipolar_variant: Literal["physical", "as-printed"] = "physical"

    def __post_init__(self):
        QubitDriveParams(self.gamma, self.omega)
        if self.interaction not in ("ising", "dipolar"):
            raise ModelError(f"unknown interaction {self.interaction!r}")
        if self.dipolar_variant not in ("physical", "as-printed"):
            raise ModelError(f"unknown dipolar variant {self.dipolar_variant!r}")
        if not (np.isfinite(self.xi) and np.isfinite(self.g)):
            raise ModelError("coupling must be finite")

    @property
    def drive(self) -> QubitDriveParams:
        return QubitDriveParams(self.gamma, self.omega)

    @property
    def coupling(self) -> float:
        return self.xi if self.interaction == "ising" else self.g

    def with_omega(self, omega: float) -> "ModelSpec":
        return replace(self, omega=float(omega))

    def uncoupled(self) -> "ModelSpec":
        return replace(self, xi=0.0, g=0.0)

    def to_dict(self) -> dict:
        d = {"gamma": self.gamma, "omega": self.omega, "interaction": self.interaction}
        if self.interaction == "ising":
            d["xi"] = self.xi
        else:
            d["g"] = self.g
            d["dipolar_variant"] = self.dipolar_variant
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        known = {"gamma", "omega", "interaction", "xi", "g", "dipolar_variant"}
        extra = set(d) - known
        if extra:
            raise ModelError(f"unknown model keys: {sorted(extra)}")
        kw = {k: d[k] for k in known if k in d and d[k] is not None}
        return cls(**kw)

    @classmethod
    def from_json(cls, text: str) -> "ModelSpec":
        return cls.from_dict(json.loads(text))


def two_qubit(op1: np.ndarray, op2: np.ndarray) -> np.ndarray:
    return np.kron(op1, op2)


def build_passive_h(spec: ModelSpec) -> np.ndarray:
    """Non-Hermitian two-qubit Hamiltonian with loss on level ``b``.

    The loss enters as ``-i gamma/2`` per excitation of ``b``, so the
    result equals the PT-symmetric Hamiltonian shifted by ``-i gamma/2``.

    Returns
    -------
    ndarray, shape (4, 4), complex
    """
    g, om = spec.gamma, spec.omega
    sx_sum = two_qubit(SX, I2) + two_qubit(I2, SX)
    loss = two_qubit(PB, I2) + two_qubit(I2, PB)
    h = om * sx_sum - 0.5j * g * loss
    if spec.interaction == "ising":
        h = h - spec.xi * (sx_sum @ sx_sum)
    else:
        flip = np.zeros((4, 4), dtype=complex)
        flip[1, 2] = flip[2, 1] = spec.g
        h = h + flip
        if spec.dipolar_variant == "as-printed":
            h[3, 3] += spec.g
    return h


def shift_to_pt(h: np.ndarray, gamma: float) -> np.ndarray:
    """Add ``i gamma/2`` to the diagonal, giving the PT-symmetric form."""
    return np.asarray(h, dtype=complex) + 0.5j * gamma * np.eye(h.shape[0])


def build_pt_h(spec: ModelSpec) -> np.ndarray:
    """PT-symmetric Hamiltonian, whose spectrum is real in the PTS phase."""
    return shift_to_pt(build_passive_h(spec), spec.gamma)


def build_nodrive_h2(xi: float, gamma: float = 1.0) -> np.ndarray:
    """Undriven Ising model restricted to ``{aa, bb}``, energies shifted.

    The coupling is ``J = -2 xi`` and the ``bb`` state decays at ``gamma``.
    """
    j = -2.0 * xi
    return np.array([[0.0, j], [j, -1j * gamma]], dtype=complex)


def build_effective_h(xi: float, omega: float) -> np.ndarray:
    """Hermitian Ising Hamiltonian for use with explicit Lindblad loss."""
    return build_passive_h(ModelSpec(gamma=0.0, omega=omega, interaction="ising", xi=xi))


# ---------------------------------------------------------------------------
# spin-mechanical model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpinMechParams:
    """Two spins coupled to one mechanical mode.

    Attributes
    ----------
    delta_m : float
        Detuning of the mechanical mode.
    g_eff : float
        Spin-phonon coupling.
    delta_dg : float
        Spin detuning.
    kappa, gamma_nv : float
        Mechanical damping and spin loss rates.
    n_trunc : int
        Number of Fock states kept, at least 2.
    """

    delta_m: float = 40.0
    g_eff: float = 0.0
    delta_dg: float = 0.0
    kappa: float = 1.0
    gamma_nv: float = 1.0
    n_trunc: int = 10

    def __post_init__(self):
        if int(self.n_trunc) != self.n_trunc or self.n_trunc < 2:
            raise ModelError("n_trunc must be an integer >= 2")
        if self.kappa < 0 or self.gamma_nv < 0:
            raise ModelError("rates must be non-negative")

    @property
    def xi_equiv(self) -> float:
        """Ising coupling obtained after eliminating the mode, g_eff^2/delta_m."""
        return self.g_eff**2 / self.delta_m


def _annihilation(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), k=1).astype(complex)


def build_rabi_h(p: SpinMechParams, omega: float) -> np.ndarray:
    """Full spin-phonon Hamiltonian on qubit1 (x) qubit2 (x) Fock.

    Returns
    -------
    ndarray, shape (4 n, 4 n)
    """
    n = p.n_trunc
    a = _annihilation(n)
    i_f = np.eye(n, dtype=complex)
    x = a + a.conj().T
    s1x = np.kron(two_qubit(SX, I2), i_f)
    s2x = np.kron(two_qubit(I2, SX), i_f)
    s1z = np.kron(two_qubit(SZ, I2), i_f)
    s2z = np.kron(two_qubit(I2, SZ), i_f)
    xq = np.kron(np.eye(4), x)
    h = p.delta_m * np.kron(np.eye(4), a.conj().T @ a)
    h = h + p.g_eff * (xq @ s1x + xq @ s2x)
    h = h + 0.5 * p.delta_dg * (s1z + s2z)
    h = h + omega * (s1x + s2x)
    return h


def build_collapse_ops(p: SpinMechParams, which: Literal["full", "effective"]) -> list[np.ndarray]:
    """Lindblad jump operators with their rates folded in.

    ``"full"`` returns mechanical damping and the two spin jumps on the
    joint space; ``"effective"`` returns the two spin jumps on the qubit
    space only.
    """
    js = [np.sqrt(p.gamma_nv) * two_qubit(JUMP, I2), np.sqrt(p.gamma_nv) * two_qubit(I2, JUMP)]
    if which == "effective":
        return js
    if which != "full":
        raise ModelError(f"unknown collapse set {which!r}")
    n = p.n_trunc
    ops = [np.sqrt(p.kappa) * np.kron(np.eye(4), _annihilation(n))]
    ops += [np.kron(j, np.eye(n)) for j in js]
    return ops
