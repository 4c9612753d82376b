"""Spectral sweeps, phase labels and exceptional-point location."""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import cxla
from .model import ModelSpec, build_pt_h


class Phase(str, Enum):
    PI = "PI"
    MIXED = "Mixed"
    PTS = "PTS"


def _scale(eigs) -> float:
    eigs = np.asarray(eigs)
    return max(1.0, float(np.max(np.abs(eigs)))) if eigs.size else 1.0


def classify_phase(eigs, tol: float = 1e-7) -> Phase:
    """Label a PT-symmetric spectrum by how many eigenvalues are real.

    With ``scale = max(1, max|lambda|)``, all ``|Im| <= tol * scale`` gives
    PTS, all ``|Re| <= tol * scale`` gives PI, anything else Mixed.
    """
    eigs = np.asarray(eigs, dtype=complex)
    if eigs.size == 0:
        raise ValueError("empty spectrum")
    cut = tol * _scale(eigs)
    if np.all(np.abs(eigs.imag) <= cut):
        return Phase.PTS
    if np.all(np.abs(eigs.real) <= cut):
        return Phase.PI
    return Phase.MIXED


WEAK_COUPLING = 0.1


def _ep_resolved_values(spec: ModelSpec) -> np.ndarray:
    # rounding splits an n-fold Jordan block by ~eps^(1/n); its mean is accurate
    es = cxla.eigensystem(build_pt_h(spec))
    vals = es.values.copy()
    for g, bad in zip(es.clusters, es.defective):
        if bad:
            vals[list(g)] = vals[list(g)].mean()
    return vals


def phase_at(spec: ModelSpec, tol: float = 1e-7, weak_ratio: float = WEAK_COUPLING) -> Phase:
    """Phase label of a model used for sweeps and EP records.

    A fully real spectrum is PTS. For weak coupling,
    ``|coupling| <= weak_ratio * gamma``, the broken region is split by the
    uncoupled system: where the uncoupled qubits are themselves fully broken
    the label is PI, elsewhere Mixed. This keeps the PI/Mixed boundary at the
    uncoupled fourth-order point even though the coupling lifts the
    degeneracy and shifts real parts by order of the coupling. For stronger
    coupling the strict `classify_phase` label is returned.
    """
    label = classify_phase(_ep_resolved_values(spec), tol)
    if label is Phase.PTS or spec.coupling == 0.0:
        return label
    if abs(spec.coupling) > weak_ratio * spec.gamma:
        return label
    ref = classify_phase(_ep_resolved_values(spec.uncoupled()), tol)
    return Phase.PI if ref is Phase.PI else Phase.MIXED


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumSweep:
    """Branch-matched eigenvalues of the PT-symmetric Hamiltonian.

    Attributes
    ----------
    omegas : ndarray, shape (n,)
    values : ndarray, shape (n, 4)
        Column ``k`` follows one branch continuously across the sweep.
    vectors : ndarray, shape (n, 4, 4)
        ``vectors[i, :, k]`` is the eigenvector of branch ``k`` at point ``i``.
    defective : ndarray of bool, shape (n,)
    phases : list of Phase
    """

    omegas: np.ndarray
    values: np.ndarray
    vectors: np.ndarray
    defective: np.ndarray
    phases: list


def _point(spec: ModelSpec):
    es = cxla.eigensystem(build_pt_h(spec))
    return es.values, es.vectors, es.any_defective, phase_at(spec)


def _match(prev: np.ndarray, cur: np.ndarray) -> tuple:
    best, best_cost = None, np.inf
    for perm in itertools.permutations(range(len(cur))):
        cost = float(np.sum(np.abs(prev - cur[list(perm)])))
        if cost < best_cost:
            best, best_cost = perm, cost
    return best


def sweep_spectrum(spec: ModelSpec, omega_range: tuple, steps: int, jobs: int = 1) -> SpectrumSweep:
    """Eigenvalues over an evenly spaced grid of drive strengths.

    Parameters
    ----------
    spec : ModelSpec
        The model; its `omega` is replaced by the grid values.
    omega_range : (float, float)
        Inclusive endpoints.
    steps : int
        Number of grid points, at least 2.
    jobs : int
        Worker processes. The result does not depend on this value.
    """
    lo, hi = map(float, omega_range)
    if steps < 2 or not hi > lo:
        raise ValueError("need steps >= 2 and an increasing range")
    omegas = np.linspace(lo, hi, int(steps))
    specs = [spec.with_omega(w) for w in omegas]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            pts = list(ex.map(_point, specs, chunksize=max(1, len(specs) // (4 * jobs))))
    else:
        pts = [_point(s) for s in specs]
    vals = np.empty((len(omegas), 4), dtype=complex)
    vecs = np.empty((len(omegas), 4, 4), dtype=complex)
    for i, (v, u, _, _) in enumerate(pts):
        if i == 0:
            perm = list(range(4))
        else:
            perm = list(_match(vals[i - 1], v))
        vals[i] = v[perm]
        vecs[i] = u[:, perm]
    return SpectrumSweep(
        omegas=omegas,
        values=vals,
        vectors=vecs,
        defective=np.array([p[2] for p in pts]),
        phases=[p[3] for p in pts],
    )


# ---------------------------------------------------------------------------
# exceptional points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EPRecord:
    """A located exceptional point.

    Attributes
    ----------
    omega_star : float
    order : int
        Number of coalescing eigenvalues.
    gap_at_star : float
        Coalescence measure at `omega_star` (see `coalescence`).
    phase_below, phase_above : Phase
    discriminant : float
        ``|Disc|`` of the characteristic quartic, kept as a witness.
    """

    omega_star: float
    order: int
    gap_at_star: float
    phase_below: Phase
    phase_above: Phase
    discriminant: float


def coalescence(spec: ModelSpec) -> float:
    """Distance of the spectrum from an eigenvector coalescence.

    For every eigenvalue pair this takes the larger of the relative gap and
    the smallest singular value of the two unit eigenvectors side by side,
    then returns the minimum over pairs. It vanishes only when two
    eigenvalues meet with parallel eigenvectors, so ordinary degeneracies
    with independent eigenvectors are ignored.
    """
    es = cxla.eigensystem(build_pt_h(spec))
    scale = _scale(es.values)
    best = np.inf
    for i, j in itertools.combinations(range(4), 2):
        gap = abs(es.values[i] - es.values[j]) / scale
        ov = min(1.0, abs(np.vdot(es.vectors[:, i], es.vectors[:, j])))
        sep = np.sqrt(max(0.0, 1.0 - ov))
        best = min(best, max(gap, sep))
    return float(best)


def ep_order(spec: ModelSpec, cluster_radius: float = 1e-3, rank_tol: float = 1e-8) -> int:
    """Order of the exceptional point at ``spec.omega``, or 1 if there is none.

    Eigenvalues within ``cluster_radius * scale`` of the closest coalescing
    pair are counted; the count is returned only if ``H - lambda I`` at the
    cluster centre has fewer null directions than the cluster size.
    """
    h = build_pt_h(spec)
    es = cxla.eigensystem(h)
    vals = es.values
    scale = _scale(vals)
    best, pair = np.inf, None
    for i, j in itertools.combinations(range(4), 2):
        gap = abs(vals[i] - vals[j]) / scale
        ov = min(1.0, abs(np.vdot(es.vectors[:, i], es.vectors[:, j])))
        m = max(gap, np.sqrt(max(0.0, 1.0 - ov)))
        if m < best:
            best, pair = m, (i, j)
    if best > cluster_radius:
        return 1
    centre = vals[list(pair)].mean()
    members = [k for k in range(4) if abs(vals[k] - centre) <= cluster_radius * scale]
    centre = vals[members].mean()
    spread = max(abs(vals[k] - centre) for k in members)
    sv = cxla.singular_values(h - centre * np.eye(4))
    thresh = max(rank_tol * sv[0], 4 * spread)
    nullity = int(np.sum(sv <= thresh))
    return len(members) if nullity < len(members) else 1


def _ternary(f, a: float, b: float, width: float) -> float:
    while b - a > width:
        m1 = a + (b - a) / 3
        m2 = b - (b - a) / 3
        if f(m1) <= f(m2):
            b = m2
        else:
            a = m1
    return 0.5 * (a + b)


def find_eps(
    spec: ModelSpec,
    omega_range: tuple,
    coarse_steps: int = 400,
    candidate_tol: float = 0.2,
    accept_tol: float = 1e-3,
    width: float = 1e-8,
) -> list[EPRecord]:
    """Locate exceptional points of the PT-symmetric Hamiltonian in a range.

    Local minima of `coalescence` on a coarse grid that fall below
    `candidate_tol` are refined by ternary search to `width`. A candidate
    is kept when the refined measure is below `accept_tol` and `ep_order`
    confirms a Jordan block.

    Returns
    -------
    list of EPRecord
        Sorted by `omega_star`.
    """
    lo, hi = map(float, omega_range)
    if coarse_steps < 3 or not hi > lo:
        raise ValueError("need coarse_steps >= 3 and an increasing range")
    grid = np.linspace(lo, hi, int(coarse_steps))
    f = lambda w: coalescence(spec.with_omega(w))
    vals = np.array([f(w) for w in grid])
    step = grid[1] - grid[0]
    probe = max(1e-4 * max(1.0, spec.gamma), 10 * width)
    out: list[EPRecord] = []
    for k in range(len(grid)):
        left = vals[k - 1] if k > 0 else np.inf
        right = vals[k + 1] if k + 1 < len(grid) else np.inf
        if not (vals[k] <= left and vals[k] <= right and vals[k] < candidate_tol):
            continue
        a, b = max(lo, grid[k] - step), min(hi, grid[k] + step)
        w = _ternary(f, a, b, width)
        gap = f(w)
        if gap > accept_tol:
            continue
        order = ep_order(spec.with_omega(w))
        if order < 2:
            continue
        if out and abs(out[-1].omega_star - w) < 2 * step:
            continue
        disc = abs(cxla.quartic_discriminant(cxla.char_poly(build_pt_h(spec.with_omega(w)))))
        out.append(EPRecord(
            omega_star=float(w),
            order=order,
            gap_at_star=gap,
            phase_below=phase_at(spec.with_omega(max(0.0, w - probe))),
            phase_above=phase_at(spec.with_omega(w + probe)),
            discriminant=float(disc),
        ))
    return sorted(out, key=lambda r: r.omega_star)
