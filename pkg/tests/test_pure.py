from itertools import combinations

import numpy as np
import pytest

from oracles import grid_product_overlap, symmetric_ansatz_overlap
from geoment import states
from geoment.pure import (
    batch_overlaps,
    bipartite_pure_gme,
    closest_product_iterate,
    complement_projection,
    complete_basis,
    generalized_schmidt,
    generalized_schmidt_qudit,
    pure_gme_multirestart,
    random_product,
    schmidt_zero_pattern,
    zero_pattern_mask,
)
from geoment.tensor import (
    HilbertStructure, InvalidArgument, ProductState, PureState, pure_trace_distance,
)

# Largest product-state overlaps, frozen from the oracles in oracles.py
W4_OVERLAP = 27 / 64
D4_OVERLAP = 3 / 8
CL4_OVERLAP = 1 / 4
GHZ_OVERLAP = 1 / 2


def ket(bits):
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1
    return PureState(HilbertStructure.qubits(len(bits)), v)


def test_frozen_values_reproduced_by_oracles():
    for psi, n, want in [(states.w4(), 4, W4_OVERLAP), (states.dicke4(), 4, D4_OVERLAP),
                         (states.ghz(3), 3, GHZ_OVERLAP)]:
        assert symmetric_ansatz_overlap(psi.amplitudes, n) == pytest.approx(want, abs=1e-9)
    for psi, n, want in [(states.w4(), 4, W4_OVERLAP), (states.cluster4(), 4, CL4_OVERLAP)]:
        assert grid_product_overlap(psi.amplitudes, n) == pytest.approx(want, abs=1e-8)


@pytest.mark.parametrize("psi,want", [
    (states.ghz(3), 1 - GHZ_OVERLAP),
    (states.w4(), 1 - W4_OVERLAP),
    (states.dicke4(), 1 - D4_OVERLAP),
    (states.cluster4(), 1 - CL4_OVERLAP),
])
def test_multirestart_matches_frozen(psi, want):
    res = pure_gme_multirestart(psi, restarts=20, seed=1)
    assert res.gme == pytest.approx(want, abs=1e-6)
    ov = abs(np.vdot(res.closest_product.vector(), psi.amplitudes)) ** 2
    assert ov == pytest.approx(res.overlap_sq, abs=1e-12)


def test_product_state_has_zero_gme():
    res = pure_gme_multirestart(ket("010"), restarts=3, seed=0)
    assert res.gme == pytest.approx(0, abs=1e-12)


def test_bipartite_examples():
    res = bipartite_pure_gme(states.max_entangled(2))
    assert res.gme == pytest.approx(0.5, abs=1e-12)
    assert res.overlap_sq == pytest.approx(0.5, abs=1e-12)
    res = bipartite_pure_gme(states.max_entangled(3))
    assert res.gme == pytest.approx(2 / 3, abs=1e-12)
    v = np.zeros(4, dtype=complex)
    v[0] = np.sqrt(0.8)
    v[3] = np.sqrt(0.2)
    res = bipartite_pure_gme(PureState(HilbertStructure.qubits(2), v))
    assert res.gme == pytest.approx(0.2, abs=1e-12)


def test_bipartite_pair_is_consistent_under_degeneracy():
    res = bipartite_pure_gme(states.max_entangled(4))
    ov = abs(np.vdot(res.closest_product.vector(), states.max_entangled(4).amplitudes)) ** 2
    assert ov == pytest.approx(0.25, abs=1e-12)


def test_bipartite_cut_of_ghz():
    res = bipartite_pure_gme(states.ghz(3), cut=[0])
    assert res.gme == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(InvalidArgument):
        bipartite_pure_gme(states.ghz(3))
    with pytest.raises(InvalidArgument):
        bipartite_pure_gme(states.ghz(3), cut=[0, 1, 2])


def test_iteration_agrees_with_bipartite(rng):
    for _ in range(10):
        psi = states.random_pure((3, 4), rng)
        exact = bipartite_pure_gme(psi).gme
        it = pure_gme_multirestart(psi, restarts=5, seed=int(rng.integers(1 << 30)))
        assert it.gme == pytest.approx(exact, abs=1e-8)


def test_overlap_never_decreases(rng):
    for _ in range(20):
        psi = states.random_pure((2, 3, 2), rng)
        res = closest_product_iterate(psi, random_product(psi.structure, rng))
        assert np.all(np.diff(res.trace) >= -1e-14)


def test_converged_residual_is_small(rng):
    for _ in range(20):
        psi = states.random_pure((2, 2, 2), rng)
        res = closest_product_iterate(psi, random_product(psi.structure, rng), tol=1e-15)
        assert res.residual <= 1e-6


def test_rejects_unnormalized_and_mismatched():
    psi = PureState(HilbertStructure.qubits(2), np.ones(4), normalized=False)
    with pytest.raises(InvalidArgument):
        bipartite_pure_gme(psi)
    init = random_product(HilbertStructure.qubits(3), np.random.default_rng(0))
    with pytest.raises(InvalidArgument):
        closest_product_iterate(ket("00"), init)
    with pytest.raises(InvalidArgument):
        pure_gme_multirestart(ket("00"), restarts=0)


def test_batch_overlap_of_product():
    p = ProductState(HilbertStructure.qubits(2), (np.array([1, 0]), np.array([0, 1])))
    t = ket("01").tensor()[None]
    ov = batch_overlaps(t, [v[None].astype(complex) for v in p.locals])
    assert abs(ov[0]) == pytest.approx(1)


# generalized Schmidt ---------------------------------------------------------

def test_complete_basis_is_orthonormal(rng):
    for d in (2, 3, 5):
        z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        b = complete_basis((z / np.linalg.norm(z))[:, None], d)
        np.testing.assert_allclose(b.conj().T @ b, np.eye(d), atol=1e-12)


def test_zero_pattern_qubits():
    mask = zero_pattern_mask((2, 2, 2))
    assert sorted(zip(*np.nonzero(mask))) == [(0, 0, 1), (0, 1, 0), (1, 0, 0)]


def test_zero_pattern_qutrits():
    idx = set(zip(*np.nonzero(zero_pattern_mask((3, 3)))))
    assert idx == {(0, 1), (0, 2), (1, 0), (2, 0), (1, 2), (2, 1)}


def test_schmidt_of_ghz():
    dec = generalized_schmidt(states.ghz(3))
    assert dec.distance <= 1e-8
    assert schmidt_zero_pattern(dec, states.ghz(3)) <= 1e-8


def test_schmidt_on_random_states(rng):
    for _ in range(10):
        psi = states.random_pure((2, 2, 2), rng)
        dec = generalized_schmidt(psi)
        assert dec.converged
        for b in dec.local_bases:
            np.testing.assert_allclose(b.conj().T @ b, np.eye(2), atol=1e-12)
        recon = dec.state().amplitudes
        assert pure_trace_distance(psi, recon) <= 1e-8
        assert schmidt_zero_pattern(dec, psi) <= 1e-8


def test_qubit_schmidt_rejects_qudits():
    with pytest.raises(InvalidArgument):
        generalized_schmidt(states.random_pure((3, 2), np.random.default_rng(0)))


def test_qudit_route_matches_qubit_route(rng):
    for _ in range(5):
        psi = states.random_pure((2, 2, 2), rng)
        a = generalized_schmidt(psi)
        b = generalized_schmidt_qudit(psi)
        np.testing.assert_allclose(a.state().amplitudes, b.state().amplitudes, atol=1e-10)


def test_qudit_schmidt(rng):
    for dims in [(3, 3), (3, 3, 3), (2, 3, 3)]:
        psi = states.random_pure(dims, rng)
        dec = generalized_schmidt_qudit(psi, tol=1e-8)
        assert dec.distance <= 1e-8
        for b, d in zip(dec.local_bases, dims):
            np.testing.assert_allclose(b.conj().T @ b, np.eye(d), atol=1e-12)


def _inclusion_exclusion(t, vecs):
    """psi - sum_i P_i psi + sum_{i<j} P_ij psi - ..., summed explicitly."""
    n = t.ndim
    out = np.zeros_like(t)
    for r in range(n + 1):
        for subset in combinations(range(n), r):
            x = t
            for k in subset:
                p = np.outer(vecs[k], vecs[k].conj())
                x = np.moveaxis(np.tensordot(p, x, axes=([1], [k])), 0, k)
            out = out + (-1) ** r * x
    return out


def test_complement_projection_matches_inclusion_exclusion(rng):
    dims = (3, 2, 4)
    psi = states.random_pure(dims, rng).tensor()
    vecs = []
    for d in dims:
        z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        vecs.append(z / np.linalg.norm(z))
    got = complement_projection(psi, [v[:, None] for v in vecs])
    np.testing.assert_allclose(got, _inclusion_exclusion(psi, vecs), atol=1e-13)
