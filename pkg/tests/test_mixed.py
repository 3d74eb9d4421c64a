import numpy as np
import pytest
from scipy.stats import unitary_group

from geoment import states
from geoment.mixed import (
    AlgorithmConfig,
    IterationState,
    gme_mixed,
    initial_state,
    member_overlaps,
    polar_residual,
    polar_step,
    probability_step,
    purification_overlap,
    random_rho_decomposition,
    random_separable_ensemble,
    run_once,
    state_update_step,
    with_overrides,
)
from geoment.tensor import (
    DegenerateInput,
    DensityOperator,
    HilbertStructure,
    InvalidArgument,
    PureState,
    fidelity,
)

QUBITS2 = HilbertStructure.qubits(2)


def product_ket(*locals_):
    v = np.ones(1, dtype=complex)
    for x in locals_:
        v = np.kron(v, np.asarray(x, dtype=complex))
    return PureState(HilbertStructure.qubits(len(locals_)), v / np.linalg.norm(v))


# initial ensembles ----------------------------------------------------------

def test_decomposition_of_pure_state(rng):
    psi = states.random_pure((2, 2), rng)
    ens = random_rho_decomposition(psi.density(), 1, rng)
    assert ens.weights[0] == pytest.approx(1)
    assert abs(np.vdot(ens.states[0].amplitudes, psi.amplitudes)) == pytest.approx(1, abs=1e-12)


def test_decomposition_mixes_to_rho(rng):
    rho = DensityOperator(HilbertStructure((2,)), np.eye(2) / 2)
    ens = random_rho_decomposition(rho, 4, rng)
    assert sum(ens.weights) == pytest.approx(1)
    np.testing.assert_allclose(ens.mixture(), rho.matrix, atol=1e-10)
    rho = states.isotropic3(0.5)
    ens = random_rho_decomposition(rho, 64, rng)
    assert np.linalg.norm(ens.mixture() - rho.matrix) <= 1e-10


def test_decomposition_below_rank(rng):
    with pytest.raises(InvalidArgument):
        random_rho_decomposition(states.isotropic(2, 0.5), 3, rng)


def test_separable_ensemble(rng):
    ens = random_separable_ensemble(HilbertStructure.qubits(3), 1, rng)
    assert list(ens.weights) == [1.0]
    ens = random_separable_ensemble(HilbertStructure.qubits(3), 64, rng)
    assert np.all(np.asarray(ens.weights) > 0)
    assert sum(ens.weights) == pytest.approx(1)
    a = random_separable_ensemble(QUBITS2, 5, np.random.default_rng(7))
    b = random_separable_ensemble(QUBITS2, 5, np.random.default_rng(7))
    assert np.array_equal(a.weights, b.weights)
    assert np.array_equal(a.vectors(), b.vectors())


# polar step -------------------------------------------------------------------

def _diag_state(a_diag):
    """A state whose coupling matrix is diag(a_diag) for basis kets."""
    m = len(a_diag)
    p = np.full(m, 1 / m)
    q = np.full(m, 1 / m)
    dims = (m, 1)
    psi = np.eye(m, dtype=complex)
    scale = np.asarray(a_diag, dtype=float) * m
    phi = [np.eye(m, dtype=complex), (scale[:, None] + 0j)]
    return IterationState(dims, p, psi, q, phi)


def test_polar_step_psd_gives_identity():
    st = _diag_state([2.0, 3.0])
    u = polar_step(st)
    np.testing.assert_allclose(st.coupling, np.diag([2.0, 3.0]), atol=1e-14)
    np.testing.assert_allclose(u, np.eye(2), atol=1e-14)
    assert polar_residual(st.coupling, u) <= 1e-14


def test_polar_overlap_equals_fidelity(rng):
    for _ in range(10):
        rho = states.random_density((2, 2), None, rng)
        st = initial_state(rho, 16, rng)
        polar_step(st)
        sigma = DensityOperator(QUBITS2, st.separable_mixture(), validate=False)
        assert st.overlap_sq == pytest.approx(fidelity(rho, sigma), abs=1e-8)


def test_polar_unitary_is_optimal(rng):
    rho = states.random_density((2, 2), None, rng)
    st = initial_state(rho, 16, rng)
    u = polar_step(st)
    best = purification_overlap(st, u)
    for _ in range(50):
        w = unitary_group.rvs(16, random_state=rng)
        assert purification_overlap(st, w) <= best + 1e-10


def test_polar_residual_small(rng):
    rho = states.random_density((2, 3), None, rng)
    st = initial_state(rho, 36, rng)
    u = polar_step(st)
    assert polar_residual(st.coupling, u) <= 1e-8


# state update ----------------------------------------------------------------

def test_identity_update_keeps_ensemble(rng):
    rho = states.random_density((2, 2), None, rng)
    st = initial_state(rho, 16, rng)
    new = state_update_step(np.eye(16), st)
    np.testing.assert_allclose(new.p, st.p, atol=1e-14)
    ph = np.einsum("ij,ij->i", st.psi.conj(), new.psi)
    np.testing.assert_allclose(np.abs(ph), 1, atol=1e-12)


def test_update_preserves_mixture(rng):
    rho = states.isotropic3(0.6)
    st = initial_state(rho, 64, rng)
    for _ in range(5):
        u = polar_step(st)
        st2 = state_update_step(u, st)
        assert np.linalg.norm(st2.mixture() - rho.matrix) <= 1e-10
        st2.q = probability_step(st2.p, member_overlaps(st2))
        st = st2


def test_product_state_members_reach_overlap_one(rng):
    rho = product_ket([1, 1j], [2, -1], [1, 0]).density()
    st = initial_state(rho, 4, rng)
    u = unitary_group.rvs(4, random_state=rng)
    new = state_update_step(u, st, inner_max_sweeps=50)
    live = new.p > 1e-14
    np.testing.assert_allclose(member_overlaps(new)[live], 1, atol=1e-10)


# probability step ---------------------------------------------------------------

def test_probability_step_examples():
    np.testing.assert_allclose(probability_step([1.0], [0.3]), [1.0])
    np.testing.assert_allclose(probability_step([0.5, 0.5], [1.0, 0.0]), [1.0, 0.0])
    np.testing.assert_allclose(probability_step([0.5, 0.5], [0.5, 0.25]), [2 / 3, 1 / 3])
    with pytest.raises(DegenerateInput):
        probability_step([0.5, 0.5], [0.0, 0.0])


# full runs -----------------------------------------------------------------------

def test_config_validation():
    with pytest.raises(InvalidArgument):
        AlgorithmConfig(epsilon=0)
    with pytest.raises(InvalidArgument):
        AlgorithmConfig(restarts=0)
    assert with_overrides(AlgorithmConfig(), seed=None, restarts=2).restarts == 2


def test_product_state_gives_zero():
    rho = product_ket([1, 0], [1, 1], [1, 2j]).density()
    est = gme_mixed(rho, config=AlgorithmConfig(restarts=2, ensemble_size=8))
    assert est.gme_upper <= 1e-10


def test_two_qubit_random_state(rng):
    rho = states.random_density((2, 2), None, rng)
    est = gme_mixed(rho, config=AlgorithmConfig(epsilon=1e-15, restarts=3, diagnostics=True))
    exact = states.two_qubit_eg(rho)
    assert abs(est.gme_upper - exact) <= 1e-8
    assert est.gme_upper >= exact - 1e-8
    assert abs(est.direct_fidelity - est.fidelity) <= 1e-7
    assert est.diagnostics["min_trace_step"] >= -1e-12
    assert est.diagnostics["max_mixture_residual"] <= 1e-10
    assert est.diagnostics["max_polar_residual"] <= 1e-8


def test_isotropic3_separable_point():
    est = gme_mixed(states.isotropic3(0.1),
                    config=AlgorithmConfig(epsilon=1e-9, restarts=2, ensemble_size=64))
    assert est.gme_upper <= 1e-6


def test_isotropic3_near_pure_is_bounded_by_diagonal_mixture():
    # sigma = (|000><000| + |111><111|)/2 is separable; its fidelity with
    # rho(0.99) caps the true value well below 0.48
    rho = states.isotropic3(0.99)
    sigma = np.zeros((8, 8))
    sigma[0, 0] = sigma[7, 7] = 0.5
    f = fidelity(rho, DensityOperator(HilbertStructure.qubits(3), sigma))
    # on span{|000>, |111>} rho has eigenvalues a + b and a - b
    a, b = 0.99 / 2 + 0.01 / 8, 0.99 / 2
    closed = 0.5 * (np.sqrt(a + b) + np.sqrt(a - b)) ** 2
    assert f == pytest.approx(closed, abs=1e-12)
    assert 1 - f < 0.47
    est = gme_mixed(rho, config=AlgorithmConfig(epsilon=1e-7, restarts=1, ensemble_size=64))
    assert est.gme_upper <= 1 - f + 1e-6


def test_trace_monotone_with_callback(rng):
    seen = []
    rho = states.random_density((2, 3), None, rng)
    gme_mixed(rho, config=AlgorithmConfig(restarts=1), callback=lambda it, st: seen.append(st.overlap_sq))
    assert len(seen) > 1
    assert np.all(np.diff(seen) >= -1e-12)


def test_cut_regroups_parties(rng):
    # a Bell pair on parties (0, 2) tensored with |0> on party 1
    bell = states.max_entangled(2).amplitudes.reshape(2, 2)
    v = np.einsum("ac,b->abc", bell, np.array([1, 0])).reshape(-1)
    rho = PureState(HilbertStructure.qubits(3), v).density()
    cfg = AlgorithmConfig(epsilon=1e-12, restarts=2, ensemble_size=4)
    assert gme_mixed(rho, cut=[[0, 1], [2]], config=cfg).gme_upper == pytest.approx(0.5, abs=1e-8)
    assert gme_mixed(rho, cut=[[0, 2], [1]], config=cfg).gme_upper <= 1e-10
    with pytest.raises(InvalidArgument):
        gme_mixed(rho, cut=[[0, 1]], config=cfg)
    with pytest.raises(InvalidArgument):
        gme_mixed(rho, cut=[[0, 1, 2]], config=cfg)


def test_determinism(rng):
    rho = states.random_density((2, 2), None, rng)
    cfg = AlgorithmConfig(restarts=2, seed=42)
    a = gme_mixed(rho, config=cfg)
    b = gme_mixed(rho, config=cfg)
    assert a.gme_upper == b.gme_upper
    assert a.trace == b.trace
    assert np.array_equal(a.closest_separable.vectors(), b.closest_separable.vectors())


def test_iteration_cap_reports_unconverged(rng):
    rho = states.random_density((2, 2), None, rng)
    est = gme_mixed(rho, config=AlgorithmConfig(epsilon=1e-15, max_iterations=3, restarts=1))
    assert not est.converged
    assert est.iterations == 3


def test_mutually_optimal_start_is_a_fixed_point():
    # one member: psi and its closest product state already pair optimally,
    # so the first iteration changes nothing and the run stops
    psi = states.max_entangled(2)
    rho = psi.density()
    st = IterationState((2, 2), np.ones(1), psi.amplitudes[None].copy(), np.ones(1),
                        [np.array([[1, 0]], dtype=complex), np.array([[1, 0]], dtype=complex)])
    cfg = AlgorithmConfig(epsilon=1e-12, ensemble_size=1)
    out, trace, converged, _, _ = run_once(rho, cfg, np.random.default_rng(0), state=st)
    assert converged and len(trace) == 2
    assert trace[0] == pytest.approx(0.5) and trace[1] == pytest.approx(0.5)
