"""Time evolution: non-unitary density matrices, eigen-expansion, Lindblad.

All integrators return a `Trajectory` sampled on a uniform grid. Observables
are taken on the trace-normalised qubit state, while `Trajectory.trace`
keeps the decaying norm of the unnormalised state.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp

from . import cxla
from .entangle import concurrence_mixed

RENORM_BELOW = 1e-6


class IntegrationError(RuntimeError):
    """Raised when the adaptive integrator fails.

    Attributes
    ----------
    t : float
        Time reached before failure.
    """

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} (t = {t:.6g})")
        self.t = t


class EPDegenerateError(RuntimeError):
    """Raised when an eigen-expansion is requested at a Jordan block."""


@dataclass(frozen=True)
class IntegratorConfig:
    """Time grid and integration method.

    Attributes
    ----------
    method : {"rk4-fixed", "rk45-adaptive"}
    dt : float
        Step of the fixed-step integrator.
    t_max : float
    sample_every : int
        Samples are recorded every ``sample_every * dt``.
    rtol, atol : float
        Tolerances of the adaptive integrator.
    """

    method: Literal["rk4-fixed", "rk45-adaptive"] = "rk4-fixed"
    dt: float = 1e-3
    t_max: float = 40.0
    sample_every: int = 10
    rtol: float = 1e-10
    atol: float = 1e-12

    def __post_init__(self):
        if self.method not in ("rk4-fixed", "rk45-adaptive"):
            raise ValueError(f"unknown method {self.method!r}")
        if not (self.dt > 0 and self.t_max > 0 and self.sample_every >= 1):
            raise ValueError("dt, t_max and sample_every must be positive")

    @property
    def n_samples(self) -> int:
        return int(round(self.t_max / (self.dt * self.sample_every))) + 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * (self.dt * self.sample_every)

    def halved(self) -> "IntegratorConfig":
        """Same sample grid with half the step."""
        return IntegratorConfig(self.method, self.dt / 2, self.t_max, 2 * self.sample_every,
                                self.rtol, self.atol)


@dataclass
class Trajectory:
    """Sampled qubit observables.

    Attributes
    ----------
    times : ndarray, shape (n,)
    populations : ndarray, shape (n, d)
        Normalised populations, ``aa, ab, ba, bb`` for two qubits.
    trace : ndarray, shape (n,)
        Norm of the unnormalised state.
    concurrence : ndarray, shape (n,)
        NaN unless the observed state is two-qubit.
    states : ndarray, shape (n, 4, 4)
        Normalised two-qubit density matrices.
    """

    times: np.ndarray
    populations: np.ndarray
    trace: np.ndarray
    concurrence: np.ndarray
    states: np.ndarray = field(repr=False)

    def to_csv(self, precision: int = 9) -> str:
        """CSV text with columns ``t, c, p_aa, p_ab, p_ba, p_bb, trace``."""
        buf = io.StringIO()
        buf.write("t,c,p_aa,p_ab,p_ba,p_bb,trace\n")
        fmt = f"{{:.{precision}g}}"
        for i in range(len(self.times)):
            row = [self.times[i], self.concurrence[i], *self.populations[i], self.trace[i]]
            buf.write(",".join(fmt.format(float(x)) for x in row) + "\n")
        return buf.getvalue()


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------

_LABELS = {"aa": 0, "ab": 1, "ba": 2, "bb": 3}


def initial_state(label: str) -> np.ndarray:
    """Basis state ``aa``, ``ab``, ``ba``, ``bb`` or ``bell1 = (aa + bb)/sqrt2``."""
    if label == "bell1":
        return np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    if label not in _LABELS:
        raise ValueError(f"unknown initial state {label!r}")
    v = np.zeros(4, dtype=complex)
    v[_LABELS[label]] = 1.0
    return v


def projector(psi) -> np.ndarray:
    v = np.asarray(psi, dtype=complex)
    return np.outer(v, v.conj())


def with_vacuum(rho_q: np.ndarray, n_fock: int) -> np.ndarray:
    """Qubit state (x) the Fock vacuum."""
    vac = np.zeros((n_fock, n_fock), dtype=complex)
    vac[0, 0] = 1.0
    return np.kron(rho_q, vac)


def partial_trace_env(rho: np.ndarray, env_dim: int) -> np.ndarray:
    """Trace out the trailing factor of dimension `env_dim`."""
    if env_dim == 1:
        return rho
    d = rho.shape[0] // env_dim
    return np.einsum("ikjk->ij", rho.reshape(d, env_dim, d, env_dim))


def _observe(times, rhos, traces) -> Trajectory:
    states = np.array(rhos)
    pops = np.real(np.einsum("nii->ni", states))
    # concurrence is defined for two qubits only
    conc = np.array([concurrence_mixed(r) if r.shape == (4, 4) else np.nan for r in states])
    return Trajectory(np.asarray(times, dtype=float), pops, np.asarray(traces, dtype=float),
                      conc, states)


# ---------------------------------------------------------------------------
# integrators
# ---------------------------------------------------------------------------

def _rk4_poly(a: np.ndarray, dt: float) -> np.ndarray:
    """One classical RK4 step of ``y' = a y`` as a matrix polynomial."""
    n = a.shape[0]
    h = dt * a
    out = np.eye(n, dtype=complex)
    term = np.eye(n, dtype=complex)
    for k in range(1, 5):
        term = term @ h / k
        out = out + term
    return out


def _run_fixed(rhs, rho0: np.ndarray, cfg: IntegratorConfig, env_dim: int,
               superop: np.ndarray | None, hermitian_each_step: bool) -> Trajectory:
    """Classical RK4 with renormalisation of small traces.

    `rhs` must be linear and time independent, which holds for every
    generator in this module. For small systems the one-step polynomial is
    formed once and raised to the sampling stride.
    """
    d = rho0.shape[0]
    rho = rho0.astype(complex).copy()
    scale = 1.0
    times, rhos, traces = [], [], []
    q = None
    if superop is not None and d <= _SUPEROP_MAX_DIM:
        q = np.linalg.matrix_power(_rk4_poly(superop, cfg.dt), cfg.sample_every)
    elif superop is not None:
        rhs = _vectorised_rhs(sparse.csr_matrix(superop), d)
    dt = cfg.dt
    for k in range(cfg.n_samples):
        if k > 0:
            if q is not None:
                rho = (q @ rho.reshape(-1)).reshape(d, d)
            else:
                for _ in range(cfg.sample_every):
                    # classical RK4 for a linear autonomous right-hand side,
                    # written as the Horner form of its degree-4 Taylor polynomial
                    y = rho + (dt / 4) * rhs(rho)
                    y = rho + (dt / 3) * rhs(y)
                    y = rho + (dt / 2) * rhs(y)
                    rho = rho + dt * rhs(y)
                    if hermitian_each_step:
                        rho = 0.5 * (rho + rho.conj().T)
            rho = 0.5 * (rho + rho.conj().T)
        tr = np.trace(rho).real
        if tr <= 0:
            raise IntegrationError("state trace vanished", k * cfg.sample_every * dt)
        times.append(k * cfg.sample_every * dt)
        traces.append(scale * tr)
        rhos.append(partial_trace_env(rho, env_dim) / tr)
        if tr < RENORM_BELOW:
            rho = rho / tr
            scale *= tr
    return _observe(times, rhos, traces)


def _vectorised_rhs(s: sparse.csr_matrix, d: int):
    def rhs(r):
        return (s @ r.reshape(-1)).reshape(d, d)
    return rhs


def _run_adaptive(rhs, rho0: np.ndarray, cfg: IntegratorConfig, env_dim: int) -> Trajectory:
    """Dormand-Prince RK45 integrated sample by sample block with renormalisation."""
    d = rho0.shape[0]
    grid = cfg.times
    rho = rho0.astype(complex).copy()
    scale = 1.0
    times, rhos, traces = [0.0], [partial_trace_env(rho, env_dim) / np.trace(rho).real], [np.trace(rho).real]

    def f(_t, y):
        return rhs(y.reshape(d, d)).reshape(-1)

    block = max(1, int(round(1.0 / (grid[1] - grid[0])))) if len(grid) > 1 else 1
    start = 0
    while start < len(grid) - 1:
        stop = min(start + block, len(grid) - 1)
        sol = solve_ivp(f, (grid[start], grid[stop]), rho.reshape(-1), method="RK45",
                        t_eval=grid[start + 1:stop + 1], rtol=cfg.rtol, atol=cfg.atol)
        if sol.status != 0:
            raise IntegrationError(sol.message, float(sol.t[-1]) if sol.t.size else grid[start])
        for j in range(sol.y.shape[1]):
            r = sol.y[:, j].reshape(d, d)
            r = 0.5 * (r + r.conj().T)
            tr = np.trace(r).real
            times.append(sol.t[j])
            traces.append(scale * tr)
            rhos.append(partial_trace_env(r, env_dim) / tr)
        rho = 0.5 * (r + r.conj().T)
        tr = np.trace(rho).real
        # keep the state at unit trace between blocks so tolerances stay relative
        rho = rho / tr
        scale *= tr
        start = stop
    return _observe(times, rhos, traces)


def _liouvillian(h_eff: np.ndarray, jumps: list) -> np.ndarray:
    """Row-major superoperator of ``-i(H rho - rho H^+) + sum L rho L^+``."""
    d = h_eff.shape[0]
    eye = np.eye(d)
    s = -1j * (np.kron(h_eff, eye) - np.kron(eye, h_eff.conj()))
    for l in jumps:
        s = s + np.kron(l, l.conj())
    return s


_SUPEROP_MAX_DIM = 8


def _sandwich(l: np.ndarray):
    """Return ``f(r, out)`` adding ``l r l^+`` to `out`.

    Operators with at most one non-zero per row and per column (ladder and
    spin-flip operators) are applied by indexing instead of two products.
    """
    rows, cols = np.nonzero(l)
    if len(set(rows)) == len(rows) and len(set(cols)) == len(cols):
        w = l[rows, cols]
        ww = np.outer(w, w.conj())
        ir, ic = np.ix_(rows, rows), np.ix_(cols, cols)

        def apply(r, out):
            out[ir] += ww * r[ic]
    else:
        ld = l.conj().T

        def apply(r, out):
            out += l @ r @ ld
    return apply


def evolve_density(h, rho0, cfg: IntegratorConfig = IntegratorConfig(), env_dim: int = 1) -> Trajectory:
    """Integrate ``d rho/dt = -i (H rho - rho H^+)`` without normalisation.

    Parameters
    ----------
    h : ndarray
        Non-Hermitian Hamiltonian.
    rho0 : ndarray
        Initial density matrix (a state vector is turned into a projector).
    cfg : IntegratorConfig
    env_dim : int
        Dimension of a trailing factor traced out before observables.
    """
    h = cxla.as_square(h)
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.ndim == 1:
        rho0 = projector(rho0)
    if rho0.shape != h.shape:
        raise cxla.DimensionError("state and Hamiltonian dimensions differ")
    hd = h.conj().T

    def rhs(r):
        return -1j * (h @ r - r @ hd)

    if cfg.method == "rk45-adaptive":
        return _run_adaptive(rhs, rho0, cfg, env_dim)
    sup = _liouvillian(h, []) if h.shape[0] <= _SUPEROP_MAX_DIM else None
    return _run_fixed(rhs, rho0, cfg, env_dim, sup, hermitian_each_step=False)


def evolve_lindblad(h, collapses, rho0, cfg: IntegratorConfig = IntegratorConfig(),
                    env_dim: int = 1) -> Trajectory:
    """Integrate the Lindblad equation with jump operators `collapses`.

    ``d rho/dt = -i[H, rho] + sum_k (L_k rho L_k^+ - {L_k^+ L_k, rho}/2)``.
    The state is symmetrised after every step.

    Parameters
    ----------
    h : ndarray
        Hermitian Hamiltonian.
    collapses : list of ndarray
        Jump operators with rates folded in.
    rho0 : ndarray
    cfg : IntegratorConfig
    env_dim : int
        Dimension of a trailing factor (the mechanical mode) traced out.
    """
    h = cxla.as_square(h)
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.ndim == 1:
        rho0 = projector(rho0)
    if rho0.shape != h.shape:
        raise cxla.DimensionError("state and Hamiltonian dimensions differ")
    ls = [np.asarray(l, dtype=complex) for l in collapses]
    h_eff = h - 0.5j * sum((l.conj().T @ l for l in ls), np.zeros_like(h))
    sandwiches = [_sandwich(l) for l in ls]

    def rhs(r):
        # r is Hermitian at every stage, so r H^+ = (H r)^+
        x = h_eff @ r
        out = -1j * (x - x.conj().T)
        for f in sandwiches:
            f(r, out)
        return out

    if cfg.method == "rk45-adaptive":
        return _run_adaptive(rhs, rho0, cfg, env_dim)
    sup = _liouvillian(h_eff, ls)
    return _run_fixed(rhs, rho0, cfg, env_dim, sup, hermitian_each_step=True)


def evolve_pure_eigen(h, psi0, times) -> Trajectory:
    """Evolve a state vector by expansion in the right eigenvectors of `h`.

    The coefficients are the components of `psi0` in the dual (left) basis,
    ``c = V^{-1} psi0``, and ``psi(t) = sum_k c_k exp(-i lambda_k t) v_k``.

    Raises
    ------
    EPDegenerateError
        If the spectrum contains a Jordan block.
    """
    es = cxla.eigensystem(h)
    if es.any_defective:
        raise EPDegenerateError("EP-degenerate: use ODE path")
    psi0 = np.asarray(psi0, dtype=complex)
    coef = np.linalg.solve(es.vectors, psi0)
    times = np.asarray(times, dtype=float)
    phases = np.exp(-1j * np.outer(times, es.values))
    psis = (phases * coef) @ es.vectors.T
    norms = np.sum(np.abs(psis) ** 2, axis=1)
    rhos = [np.outer(p, p.conj()) / n for p, n in zip(psis, norms)]
    return _observe(times, rhos, norms)
