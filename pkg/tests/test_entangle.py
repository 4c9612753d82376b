import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nhep import cxla
from nhep.entangle import (
    NotHermitianError,
    concurrence_mixed,
    concurrence_mixed_eigen,
    concurrence_pure,
    eigenstate_concurrence_sweep,
    energy_gap,
    nodrive_eigen_concurrence,
    product_adapted_pair,
    spin_flip,
)
from nhep.analysis import derivative_scan
from nhep.model import ModelSpec, build_nodrive_h2
from nhep.spectrum import find_eps, sweep_spectrum


def random_state(rng):
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    return v / np.linalg.norm(v)


def random_unitary(rng, n=2):
    q, r = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density(rng, rank=4):
    a = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    r = a @ a.conj().T
    return r / np.trace(r).real


# --- mixed-state concurrence -------------------------------------------------------

def test_bell_state_is_maximal():
    e1 = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert concurrence_mixed(np.outer(e1, e1.conj())) == pytest.approx(1.0, abs=1e-12)


def test_maximally_mixed_is_zero():
    assert concurrence_mixed(np.eye(4) / 4) == 0.0


def test_nodrive_eigenprojector_at_ep():
    # at xi = -gamma/4 both undriven eigenstates are maximally entangled
    es = cxla.eigensystem(build_nodrive_h2(-0.25, 1.0))
    v2 = es.vectors[:, 0]
    psi = np.array([v2[0], 0, 0, v2[1]])
    assert concurrence_mixed(np.outer(psi, psi.conj())) == pytest.approx(1.0, abs=1e-9)


def test_rejects_non_hermitian():
    r = np.eye(4, dtype=complex) / 4
    r[0, 1] = 0.1
    with pytest.raises(NotHermitianError):
        concurrence_mixed(r)


def test_rejects_wrong_shape():
    with pytest.raises(ValueError):
        concurrence_mixed(np.eye(2) / 2)


def test_spin_flip_of_bell_state():
    e1 = np.array([1, 0, 0, 1]) / np.sqrt(2)
    rho = np.outer(e1, e1)
    np.testing.assert_allclose(spin_flip(rho), rho, atol=1e-15)


def test_pure_and_mixed_agree_on_random_states():
    rng = np.random.default_rng(20)
    for _ in range(1000):
        psi = random_state(rng)
        assert abs(concurrence_mixed(np.outer(psi, psi.conj())) - concurrence_pure(psi)) <= 1e-9


def test_two_routes_agree_on_full_rank_states():
    rng = np.random.default_rng(21)
    for _ in range(300):
        rho = random_density(rng)
        assert abs(concurrence_mixed(rho) - concurrence_mixed_eigen(rho)) <= 1e-9


def test_eigen_route_on_pure_states_has_root_eps_error():
    rng = np.random.default_rng(22)
    worst = 0.0
    for _ in range(200):
        psi = random_state(rng)
        worst = max(worst, abs(concurrence_mixed_eigen(np.outer(psi, psi.conj())) - concurrence_pure(psi)))
    assert worst < 1e-6


def test_local_unitary_invariance():
    rng = np.random.default_rng(23)
    for _ in range(300):
        rho = random_density(rng, rank=rng.integers(1, 5))
        u = np.kron(random_unitary(rng), random_unitary(rng))
        assert abs(concurrence_mixed(u @ rho @ u.conj().T) - concurrence_mixed(rho)) <= 1e-9


def test_werner_states():
    e1 = np.array([1, 0, 0, 1]) / np.sqrt(2)
    bell = np.outer(e1, e1)
    for p in np.linspace(0, 1, 11):
        rho = p * bell + (1 - p) * np.eye(4) / 4
        assert concurrence_mixed(rho) == pytest.approx(max(0.0, (3 * p - 1) / 2), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=8, max_size=8))
def test_concurrence_in_unit_interval(x):
    psi = np.array(x[:4]) + 1j * np.array(x[4:])
    if np.linalg.norm(psi) < 1e-3:
        return
    c = concurrence_mixed(np.outer(psi, psi.conj()))
    assert 0.0 <= c <= 1.0


# --- pure-state concurrence ----------------------------------------------------------

def test_pure_examples():
    assert concurrence_pure([1, 0, 0, 0]) == 0.0
    assert concurrence_pure(np.array([1, 0, 0, 1]) / np.sqrt(2)) == pytest.approx(1.0)
    assert concurrence_pure([0.6, 0, 0, 0.8]) == pytest.approx(0.96)


def test_pure_is_scale_invariant():
    assert concurrence_pure([1.2, 0, 0, 1.6]) == pytest.approx(0.96)


def test_pure_rejects_zero():
    with pytest.raises(ValueError):
        concurrence_pure(np.zeros(4))


# --- undriven closed forms -----------------------------------------------------------

def test_nodrive_concurrence_examples():
    assert nodrive_eigen_concurrence(-0.25) == pytest.approx((1.0, 1.0), abs=1e-12)
    assert nodrive_eigen_concurrence(-0.125) == pytest.approx((0.5, 0.5), abs=1e-12)
    assert nodrive_eigen_concurrence(-0.5) == pytest.approx((1.0, 1.0), abs=1e-12)


def test_nodrive_branches_equal():
    for xi in np.linspace(-1.0, 1.0, 401):
        p, m = nodrive_eigen_concurrence(xi)
        assert abs(p - m) <= 1e-12


def test_nodrive_saturates_beyond_ep():
    for xi in np.linspace(-1.0, -0.25, 301):
        p, m = nodrive_eigen_concurrence(xi)
        assert abs(p - 1) <= 1e-12 and abs(m - 1) <= 1e-12


def test_nodrive_matches_eigenvectors():
    for xi in [-0.4, -0.2, -0.1, -0.05]:
        es = cxla.eigensystem(build_nodrive_h2(xi, 1.0))
        for k in range(2):
            a, d = es.vectors[:, k]
            assert concurrence_pure([a, 0, 0, d]) == pytest.approx(nodrive_eigen_concurrence(xi)[0], abs=1e-12)


def test_energy_gap_examples():
    assert energy_gap(-0.25) == 0
    assert energy_gap(-0.5) == pytest.approx(np.sqrt(3), abs=1e-12)
    assert energy_gap(0.0) == pytest.approx(1j)


def test_energy_gap_matches_eigenvalues():
    for xi in [-0.6, -0.3, -0.1]:
        v = cxla.eigvals(build_nodrive_h2(xi, 1.0))
        assert abs(v[1] - v[0]) == pytest.approx(abs(energy_gap(xi)), abs=1e-9)


def test_nodrive_scan_has_single_kink():
    h = 1e-3
    xs = np.arange(-0.5, -0.01 + h / 2, h)
    eps = np.array([nodrive_eigen_concurrence(x)[0] for x in xs])
    scan = derivative_scan(eps, h)
    assert len(scan.flagged) == 1
    assert xs[scan.flagged[0]] == pytest.approx(-0.25, abs=h)


# --- eigenstate sweeps -----------------------------------------------------------------

def test_eigenstate_concurrence_hermitian_uncoupled_is_zero():
    sw = sweep_spectrum(ModelSpec(gamma=0.0), (0.0, 1.0), 51)
    c = eigenstate_concurrence_sweep(sw)
    assert np.nanmax(c) < 1e-12


def test_eigenstate_concurrence_marks_defective_points():
    sw = sweep_spectrum(ModelSpec(), (0.0, 0.5), 51)
    c = eigenstate_concurrence_sweep(sw)
    k = int(np.argmin(np.abs(sw.omegas - 0.25)))
    assert sw.defective[k]
    assert np.all(np.isnan(c[k]))
    assert not np.isnan(c[0]).any()


@pytest.mark.parametrize("xi, expected", [(0.006, [0.283]), (0.5, [0.626, 1.34])])
def test_eigenstate_concurrence_kinks_at_eps(xi, expected):
    spec = ModelSpec(xi=xi)
    lo, hi, steps = 0.2, 1.6, 1401
    sw = sweep_spectrum(spec, (lo, hi), steps)
    conc = eigenstate_concurrence_sweep(sw)
    h = sw.omegas[1] - sw.omegas[0]
    found = set()
    for b in range(4):
        scan = derivative_scan(conc[:, b], h)
        found |= {round(float(sw.omegas[k]), 3) for k in scan.flagged}
    for target in expected:
        assert any(abs(w - target) <= 0.02 for w in found), (target, sorted(found))
    eps = [r.omega_star for r in find_eps(spec, (lo, hi))]
    assert len(eps) == len(expected)


def test_product_adapted_pair_spans_and_is_product():
    rng = np.random.default_rng(24)
    for _ in range(100):
        u, v = random_state(rng), random_state(rng)
        p, q = product_adapted_pair(u, v)
        assert concurrence_pure(p) < 1e-12 and concurrence_pure(q) < 1e-12
        span = np.column_stack([u, v])
        for w in (p, q):
            resid = w - span @ np.linalg.lstsq(span, w, rcond=None)[0]
            assert np.linalg.norm(resid) < 1e-10
        assert np.linalg.matrix_rank(np.column_stack([p, q]), tol=1e-8) == 2


def test_product_adapted_pair_double_root():
    aa = np.array([1, 0, 0, 0], dtype=complex)
    e3 = np.array([0, 1, 1, 0]) / np.sqrt(2)
    p, q = product_adapted_pair(e3, aa)
    assert concurrence_pure(p) == pytest.approx(0.0, abs=1e-12)
    assert concurrence_pure(q) == pytest.approx(1.0, abs=1e-12)
