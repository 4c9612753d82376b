import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nhep import cxla
from nhep.dynamics import IntegratorConfig, evolve_density, initial_state
from nhep.entangle import concurrence_pure
from nhep.model import ModelSpec, build_passive_h
from nhep.perturb import (
    LABELS,
    BranchError,
    EPConstructionError,
    amplitudes,
    analytic_evolution,
    bell_concurrence,
    bell_projection,
    broken_phase_vectors,
    build_bibasis,
    degenerate_block,
    first_order_system,
    interaction,
    perturbed_eigenstates,
    perturbed_eigenvalues,
    single_qubit_eigensystem,
)

OMEGA, XI = 0.3, 0.0006
XIS = [1e-3, 5e-4, 2.5e-4]


def coupled(omega, xi, gamma=1.0):
    return build_passive_h(ModelSpec(gamma=gamma, omega=omega, xi=xi))


def ratios(errs):
    return [errs[k] / errs[k + 1] for k in range(len(errs) - 1)]


# --- single qubit -----------------------------------------------------------------

def test_single_qubit_values():
    s = single_qubit_eigensystem(0.3, 1.0)
    np.testing.assert_allclose(s.values, [-0.1658312 - 0.25j, 0.1658312 - 0.25j], atol=1e-7)
    assert not s.coalesced


def test_single_qubit_hermitian_limit():
    s = single_qubit_eigensystem(0.7, 0.0)
    np.testing.assert_allclose(s.values, [-0.7, 0.7], atol=1e-15)


def test_single_qubit_coalesces_at_ep():
    s = single_qubit_eigensystem(0.25, 1.0, xi=0.01)
    np.testing.assert_allclose(s.values, [-0.01 - 0.25j] * 2, atol=1e-15)
    assert s.coalesced


@pytest.mark.parametrize("omega, gamma", [(0.3, 1.0), (0.1, 1.0), (1.2, 0.5), (0.4, 0.0)])
def test_single_qubit_eigenpairs(omega, gamma):
    h = np.array([[0, omega], [omega, -0.5j * gamma]])
    s = single_qubit_eigensystem(omega, gamma)
    for k in range(2):
        np.testing.assert_allclose(h @ s.vectors[:, k], s.values[k] * s.vectors[:, k], atol=1e-14)
        np.testing.assert_allclose(h.conj().T @ s.duals[:, k], np.conj(s.values[k]) * s.duals[:, k], atol=1e-14)


# --- unperturbed basis ---------------------------------------------------------------

@pytest.mark.parametrize("omega", [0.26, 0.3, 0.5, 1.0, 2.0])
def test_bibasis_is_biorthonormal_and_complete(omega):
    b = build_bibasis(omega, 1.0)
    assert b.branch == "PTS"
    np.testing.assert_allclose(b.lefts @ b.rights, np.eye(4), atol=1e-10)
    np.testing.assert_allclose(b.rights @ b.lefts, np.eye(4), atol=1e-10)
    assert abs(b.lefts[0] @ b.rights[:, 1]) <= 1e-10


@pytest.mark.parametrize("omega", [0.26, 0.3, 1.0])
def test_bibasis_singlet_and_partner(omega):
    b = build_bibasis(omega, 1.0)
    np.testing.assert_allclose(b.rights[:, 2], np.array([0, -1, 1, 0]) / np.sqrt(2), atol=1e-15)
    eta = np.sqrt(16 * omega**2 - 1)
    np.testing.assert_allclose(b.rights[:, 3], np.array([-4 * omega, 1j, 1j, 4 * omega]) / (np.sqrt(2) * eta), atol=1e-15)


@pytest.mark.parametrize("omega", [0.1, 0.3, 0.6])
def test_bibasis_are_eigenvectors_of_uncoupled_model(omega):
    h = coupled(omega, 0.0)
    b = build_bibasis(omega, 1.0)
    for k in range(4):
        np.testing.assert_allclose(h @ b.rights[:, k], b.values[k] * b.rights[:, k], atol=1e-13)


def test_bibasis_hermitian_limit():
    b = build_bibasis(0.4, 0.0)
    np.testing.assert_allclose(b.rights.imag, 0.0, atol=1e-15)
    np.testing.assert_allclose(b.lefts, b.rights.conj().T, atol=1e-15)
    np.testing.assert_allclose(b.rights.conj().T @ b.rights, np.eye(4), atol=1e-14)


def test_bibasis_broken_branch():
    b = build_bibasis(0.1, 1.0)
    assert b.branch == "PTB"
    assert b.eta.real == pytest.approx(0.0, abs=1e-15) and b.eta.imag > 0
    np.testing.assert_allclose(b.lefts @ b.rights, np.eye(4), atol=1e-10)
    bv = broken_phase_vectors(0.1, 1.0)
    for k in range(2):
        u, v = b.rights[:, k], bv[:, k]
        assert abs(np.vdot(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v)) == pytest.approx(1.0, abs=1e-12)
    # singlet and partner span the same degenerate pair as the product vectors
    q, _ = np.linalg.qr(bv[:, 2:])
    resid = b.rights[:, 2:] - q @ (q.conj().T @ b.rights[:, 2:])
    assert np.linalg.norm(resid) <= 1e-12


def test_bibasis_rejects_ep():
    with pytest.raises(EPConstructionError):
        build_bibasis(0.25, 1.0)


# --- degenerate block ------------------------------------------------------------------

def test_degenerate_block_entries():
    m = degenerate_block(OMEGA, 1.0, XI)
    np.testing.assert_allclose(m, np.full((2, 2), 0.0027273), atol=1e-7)
    vals = np.sort(np.linalg.eigvals(m).real)
    np.testing.assert_allclose(vals, [0.0, 0.0054545], atol=1e-7)


def test_degenerate_block_zero_coupling():
    np.testing.assert_array_equal(degenerate_block(OMEGA, 1.0, 0.0), np.zeros((2, 2)))


def test_degenerate_block_matches_matrix_elements():
    b = build_bibasis(OMEGA, 1.0)
    vm = b.lefts @ interaction(XI) @ b.rights
    # singlet and partner are the diagonalising combinations of the block
    assert vm[2, 2] == pytest.approx(0.0, abs=1e-15)
    assert vm[2, 3] == pytest.approx(0.0, abs=1e-15)
    assert vm[3, 3] == pytest.approx(2 * degenerate_block(OMEGA, 1.0, XI)[0, 0], abs=1e-15)


def test_degenerate_block_requires_symmetric_phase():
    with pytest.raises(BranchError):
        degenerate_block(0.1, 1.0, XI)


# --- perturbed eigenvalues ------------------------------------------------------------

def test_quoted_variant_closed_forms():
    lam = perturbed_eigenvalues(OMEGA, 1.0, XI, variant="quoted")
    assert lam["1"] == pytest.approx(-0.0012 - 0.5j, abs=1e-15)
    assert lam["2"] == pytest.approx(0.0042545 - 0.5j, abs=1e-7)
    assert lam["++"] == pytest.approx(0.3265352 - 0.5j, abs=1e-7)


def test_consistent_variant_singlet_is_exact():
    for xi in XIS:
        lam = perturbed_eigenvalues(OMEGA, 1.0, xi)
        assert lam["1"] == -0.5j
        psi = np.array([0, -1, 1, 0]) / np.sqrt(2)
        np.testing.assert_allclose(coupled(OMEGA, xi) @ psi, -0.5j * psi, atol=1e-15)


@pytest.mark.parametrize("variant", ["consistent", "quoted"])
def test_zero_coupling_recovers_unperturbed(variant):
    lam = perturbed_eigenvalues(OMEGA, 1.0, 0.0, variant)
    b = build_bibasis(OMEGA, 1.0)
    np.testing.assert_allclose([lam[k] for k in LABELS], b.values, atol=1e-15)
    ps = perturbed_eigenstates(OMEGA, 1.0, 0.0, variant)
    np.testing.assert_allclose(ps.rights, b.rights, atol=1e-15)
    np.testing.assert_allclose(ps.lefts, b.lefts, atol=1e-15)


def test_unknown_variant():
    with pytest.raises(ValueError):
        perturbed_eigenvalues(OMEGA, 1.0, XI, variant="other")


def test_perturbed_values_require_symmetric_phase():
    with pytest.raises(BranchError):
        perturbed_eigenvalues(0.1, 1.0, XI)


def scaling_errors(variant, omega=OMEGA):
    bio, res, val = [], [], []
    for xi in XIS:
        ps = perturbed_eigenstates(omega, 1.0, xi, variant)
        h = coupled(omega, xi)
        bio.append(np.max(np.abs(ps.lefts @ ps.rights - np.eye(4))))
        res.append(max(np.linalg.norm(h @ ps.rights[:, i] - ps.values[i] * ps.rights[:, i]) for i in range(4)))
        exact = cxla.eigvals(h)
        val.append(max(np.min(np.abs(exact - lam)) for lam in ps.values))
    return bio, res, val


@pytest.mark.parametrize("omega", [0.3, 0.5, 1.0])
def test_consistent_variant_is_second_order(omega):
    for errs in scaling_errors("consistent", omega):
        for r in ratios(errs):
            assert r == pytest.approx(4.0, abs=0.5)


def test_quoted_variant_residual_is_first_order():
    bio, res, val = scaling_errors("quoted")
    for r in ratios(bio):
        assert r == pytest.approx(4.0, abs=0.5)
    for r in ratios(res) + ratios(val):
        assert r == pytest.approx(2.0, abs=0.25)


def test_closed_forms_match_generic_first_order():
    for omega in [0.3, 0.7]:
        b = build_bibasis(omega, 1.0)
        gen = first_order_system(b, interaction(XI))
        ps = perturbed_eigenstates(omega, 1.0, XI)
        np.testing.assert_allclose(ps.values[[0, 1, 3]], gen.values[[0, 1, 3]], atol=1e-14)
        # the singlet shift -2 xi of the generic diagonal cancels against +2 xi in V_11
        assert gen.values[2] == pytest.approx(ps.values[2], abs=1e-14)
        np.testing.assert_allclose(ps.rights, gen.rights, atol=1e-12)


# --- analytic evolution -------------------------------------------------------------------

def test_amplitudes_of_ground_state():
    a = amplitudes(OMEGA, 1.0, XI)
    assert a[2] == 0


def test_reconstruction_at_t0_is_first_order_small():
    aa = initial_state("aa")
    errs = []
    for xi in XIS:
        ps = perturbed_eigenstates(OMEGA, 1.0, xi)
        errs.append(np.linalg.norm(ps.rights @ amplitudes(OMEGA, 1.0, xi) - aa))
    assert errs[0] <= 5.0 * XIS[0]
    for r in ratios(errs):
        assert r >= 1.75


def test_analytic_matches_numeric():
    cfg = IntegratorConfig(t_max=40.0)
    for omega, xi in [(0.3, 0.0006), (0.5, 0.001), (1.0, 0.0005)]:
        num = evolve_density(coupled(omega, xi), initial_state("aa"), cfg)
        ana = analytic_evolution(omega, 1.0, xi, times=num.times)
        assert np.max(np.abs(num.concurrence - ana.concurrence)) <= 0.02


def test_analytic_peak_concurrence():
    tr = analytic_evolution(OMEGA, 1.0, XI)
    k = int(np.argmax(tr.concurrence))
    assert tr.concurrence[k] >= 0.99
    assert tr.times[k] == pytest.approx(17.17, abs=0.5)


def test_analytic_general_initial_state():
    psi0 = initial_state("bell1")
    num = evolve_density(coupled(0.5, 0.0005), psi0, IntegratorConfig(t_max=20.0))
    ana = analytic_evolution(0.5, 1.0, 0.0005, psi0=psi0, times=num.times)
    assert np.max(np.abs(num.concurrence - ana.concurrence)) <= 0.02


def test_analytic_refuses_broken_phase():
    with pytest.raises(BranchError):
        analytic_evolution(0.1, 1.0, XI)


# --- Bell projection ----------------------------------------------------------------------

def test_bell_projection_examples():
    np.testing.assert_allclose(bell_projection([1, 0, 0, 0]), np.array([1, -1j, 0, 0]) / np.sqrt(2), atol=1e-15)
    np.testing.assert_allclose(bell_projection(np.array([0, 1, 1, 0]) / np.sqrt(2)), [0, 0, 1, 0], atol=1e-15)


def test_bell_projection_rejects_zero():
    with pytest.raises(ValueError):
        bell_projection(np.zeros(4))


def test_bell_states_are_orthonormal():
    from nhep.perturb import BELL

    np.testing.assert_allclose(BELL.conj().T @ BELL, np.eye(4), atol=1e-15)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=8, max_size=8))
def test_bell_concurrence_identity(x):
    psi = np.array(x[:4]) + 1j * np.array(x[4:])
    if not np.any(psi):
        return
    al, be, ze, de = psi
    assert bell_concurrence(bell_projection(psi)) == pytest.approx(2 * abs(al * de - be * ze), abs=1e-10)


def test_bell_concurrence_matches_pure_concurrence():
    rng = np.random.default_rng(31)
    for _ in range(200):
        psi = rng.normal(size=4) + 1j * rng.normal(size=4)
        psi /= np.linalg.norm(psi)
        assert bell_concurrence(bell_projection(psi)) == pytest.approx(concurrence_pure(psi), abs=1e-12)
