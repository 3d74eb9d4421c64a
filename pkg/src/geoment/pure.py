"""Geometric measure and closest product states for pure states.

The multipartite routine is the alternating single-party update: with all
other local vectors fixed, the best local vector for party k is the
normalized contraction of the state against the others. Sweeps go over the
parties in ascending order. The batched kernels operate on a stack of
states at once; :mod:`geoment.mixed` drives them for whole ensembles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from string import ascii_letters

import numpy as np

from .tensor import (
    HilbertStructure,
    InvalidArgument,
    PureState,
    ProductState,
    hermitian_eig,
    partial_contract,
    partial_trace,
    permute_and_group,
    pure_trace_distance,
)

DEFAULT_TOL = 1e-12
DEFAULT_MAX_SWEEPS = 10000
ZERO_CONTRACTION = 1e-14


@dataclass(frozen=True)
class PureGmResult:
    gme: float
    closest_product: ProductState
    overlap_sq: float
    iterations: int
    residual: float
    trace: tuple = field(default=(), repr=False)


@dataclass(frozen=True)
class SchmidtDecomposition:
    """Product-basis expansion with the generalized Schmidt zero pattern.

    ``coefficients`` is a complex array of shape ``dims``; the entry at a
    multi-index is the coefficient of the corresponding basis product, and
    ``local_bases[k][:, j]`` is basis vector ``j`` of party ``k``.
    """

    structure: HilbertStructure
    local_bases: tuple[np.ndarray, ...]
    coefficients: np.ndarray
    normalization: float
    distance: float
    converged: bool
    sweeps: int

    def state(self) -> PureState:
        return PureState(self.structure, expand(self.coefficients, self.local_bases),
                         normalized=False)


# batched kernels --------------------------------------------------------

def _contract_others(t: np.ndarray, locs: list[np.ndarray], k: int) -> np.ndarray:
    """For each batch member, contract t against conj(locals) on all parties but k."""
    n = len(locs)
    letters = ascii_letters[:n]
    ops = ["Z" + letters]
    args = [t]
    for j in range(n):
        if j != k:
            ops.append("Z" + letters[j])
            args.append(locs[j].conj())
    expr = ",".join(ops) + "->Z" + letters[k]
    return np.einsum(expr, *args, optimize=n > 3)


def batch_overlaps(t: np.ndarray, locs: list[np.ndarray]) -> np.ndarray:
    """<phi_i|psi_i> for every batch member i."""
    c = _contract_others(t, locs, 0)
    return np.einsum("Za,Za->Z", locs[0].conj(), c)


def sweep(t: np.ndarray, locs: list[np.ndarray], active=None) -> list[np.ndarray]:
    """One ascending pass of single-party updates over a stack of states.

    ``t`` has shape ``(m, d1, ..., dn)``; ``locs[k]`` has shape ``(m, d_k)``.
    Members whose contraction vanishes keep their previous local vector, as do
    members with ``active`` False.
    """
    locs = [l.copy() for l in locs]
    for k in range(len(locs)):
        c = _contract_others(t, locs, k)
        nrm = np.linalg.norm(c, axis=1)
        ok = nrm > ZERO_CONTRACTION
        if active is not None:
            ok &= active
        locs[k][ok] = c[ok] / nrm[ok, None]
    return locs


def batch_residual(t: np.ndarray, locs: list[np.ndarray]) -> np.ndarray:
    """Norm of the single-excitation overlaps for each member.

    For party k the contraction c_k against all other locals splits into its
    component along local k and the rest; the rest collects every overlap of
    the form <0..j..0|psi> with j orthogonal to local k.
    """
    total = np.zeros(t.shape[0])
    for k in range(len(locs)):
        c = _contract_others(t, locs, k)
        along = np.einsum("Za,Za->Z", locs[k].conj(), c)
        # explicit orthogonal part; ||c||^2 - |along|^2 loses half the digits
        perp = c - along[:, None] * locs[k]
        total += np.sum(np.abs(perp) ** 2, axis=1)
    return np.sqrt(total)


def iterate_batch(t, locs, max_sweeps, tol, active=None):
    """Sweep until the squared-overlap gain of every active member drops below tol.

    Returns ``(locals, overlap_sq, sweeps)``.
    """
    if active is None:
        active = np.ones(t.shape[0], dtype=bool)
    active = active.copy()
    ov = np.abs(batch_overlaps(t, locs)) ** 2
    sweeps = 0
    while sweeps < max_sweeps and active.any():
        locs = sweep(t, locs, active)
        sweeps += 1
        new = np.abs(batch_overlaps(t, locs)) ** 2
        active &= (new - ov) >= tol
        ov = new
    return locs, ov, sweeps


def bipartite_batch(t: np.ndarray):
    """Exact closest product state for a stack of two-party states.

    Returns local vectors (m, d1), (m, d2) and the largest Schmidt coefficient.
    """
    u, s, vh = np.linalg.svd(t)
    return u[:, :, 0], vh[:, 0, :], s[:, 0]


# single-state operations -------------------------------------------------

def _check_normalized(psi: PureState):
    if abs(psi.norm - 1.0) > 1e-12:
        raise InvalidArgument("state must be normalized")


def bipartite_pure_gme(psi: PureState, cut=None) -> PureGmResult:
    """Exact GME across a bipartition from the largest Schmidt coefficient.

    Parameters
    ----------
    psi : PureState
    cut : sequence of int, optional
        Parties forming the first block; the rest form the second. May be
        omitted for a two-party state.

    The first local vector is the top eigenvector of the first block's
    reduced operator; the second is the normalized contraction of ``psi``
    against it, which pairs the two correctly even when the top eigenvalue
    is degenerate.
    """
    _check_normalized(psi)
    n = psi.structure.n_parties
    if cut is None:
        if n != 2:
            raise InvalidArgument("a cut is required for more than two parties")
        cut = [0]
    first = sorted(set(int(c) for c in cut))
    second = [k for k in range(n) if k not in first]
    if not first or not second or first[0] < 0 or first[-1] >= n:
        raise InvalidArgument(f"trivial or invalid cut {cut}")
    grouped = permute_and_group(psi, first + second, [len(first), len(second)])
    rho_a = partial_trace(grouped.density(), [0])
    w, v = hermitian_eig(rho_a.matrix)
    phi_a = v[:, 0]
    rest = partial_contract(grouped, {0: phi_a}).amplitudes
    lam_sq = float(np.linalg.norm(rest) ** 2)
    phi_b = rest / np.linalg.norm(rest)
    return PureGmResult(
        gme=1.0 - lam_sq,
        closest_product=ProductState(grouped.structure, (phi_a, phi_b)),
        overlap_sq=lam_sq,
        iterations=0,
        residual=0.0,
    )


def closest_product_iterate(psi: PureState, init: ProductState,
                            max_sweeps: int = DEFAULT_MAX_SWEEPS,
                            tol: float = DEFAULT_TOL) -> PureGmResult:
    """Alternating search for the product state with largest overlap.

    Stops once a full sweep improves the squared overlap by less than ``tol``
    or after ``max_sweeps`` sweeps. The overlap never decreases from one
    sweep to the next.
    """
    _check_normalized(psi)
    if init.structure != psi.structure:
        raise InvalidArgument("initial product state has a different structure")
    t = psi.tensor()[None]
    locs = [v[None].copy() for v in init.locals]
    trace = [float(abs(batch_overlaps(t, locs)[0]) ** 2)]
    sweeps = 0
    while sweeps < max_sweeps:
        locs = sweep(t, locs)
        sweeps += 1
        trace.append(float(abs(batch_overlaps(t, locs)[0]) ** 2))
        if trace[-1] - trace[-2] < tol:
            break
    ov = trace[-1]
    return PureGmResult(
        gme=1.0 - ov,
        closest_product=ProductState(psi.structure, tuple(l[0] for l in locs)),
        overlap_sq=ov,
        iterations=sweeps,
        residual=float(batch_residual(t, locs)[0]),
        trace=tuple(trace),
    )


def random_product(structure: HilbertStructure, rng) -> ProductState:
    """Each local vector uniform on its complex unit sphere."""
    locs = []
    for d in structure.dims:
        z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        locs.append(z / np.linalg.norm(z))
    return ProductState(structure, tuple(locs))


def pure_gme_multirestart(psi: PureState, restarts: int = 20, seed=None,
                          tol: float = DEFAULT_TOL,
                          max_sweeps: int = DEFAULT_MAX_SWEEPS) -> PureGmResult:
    """Best of several alternating runs from random product states.

    For two-party states the exact bipartite answer is one of the candidates.
    """
    if restarts < 1:
        raise InvalidArgument("restarts must be >= 1")
    rng = np.random.default_rng(seed)
    best = None
    if psi.structure.n_parties == 2:
        best = bipartite_pure_gme(psi)
    for _ in range(restarts):
        res = closest_product_iterate(psi, random_product(psi.structure, rng),
                                      max_sweeps=max_sweeps, tol=tol)
        if best is None or res.overlap_sq > best.overlap_sq:
            best = res
    return best


# generalized Schmidt decomposition -----------------------------------------

def complete_basis(vectors: np.ndarray, d: int) -> np.ndarray:
    """Extend orthonormal columns to a d-dimensional orthonormal basis.

    Gram-Schmidt against the canonical basis vectors, in index order.
    """
    basis = [np.asarray(vectors[:, j], dtype=complex) for j in range(vectors.shape[1])]
    for i in range(d):
        if len(basis) == d:
            break
        e = np.zeros(d, dtype=complex)
        e[i] = 1.0
        for b in basis:
            e = e - np.vdot(b, e) * b
        for b in basis:  # second pass for numerical orthogonality
            e = e - np.vdot(b, e) * b
        nrm = np.linalg.norm(e)
        if nrm > 1e-8:
            basis.append(e / nrm)
    return np.column_stack(basis)


def expand(coefficients: np.ndarray, bases) -> np.ndarray:
    """Sum of coefficient-weighted basis products, as a flat state vector."""
    t = coefficients
    for k, b in enumerate(bases):
        t = np.moveaxis(np.tensordot(b, t, axes=([1], [k])), 0, k)
    return t.reshape(-1)


def coefficients_in(psi_tensor: np.ndarray, bases) -> np.ndarray:
    """Coefficients of a state tensor in a local product basis."""
    t = psi_tensor
    for k, b in enumerate(bases):
        t = np.moveaxis(np.tensordot(b.conj(), t, axes=([0], [k])), 0, k)
    return t


def zero_pattern_mask(dims) -> np.ndarray:
    """True at multi-indices with all entries equal to some i except one entry j > i."""
    mask = np.zeros(dims, dtype=bool)
    n = len(dims)
    for i in range(min(dims)):
        for pos in range(n):
            for j in range(i + 1, dims[pos]):
                idx = [i] * n
                idx[pos] = j
                mask[tuple(idx)] = True
    return mask


def _dominant_init(t: np.ndarray) -> list[np.ndarray]:
    """Top eigenvector of each party's reduced operator, as a deterministic start."""
    locs = []
    n = t.ndim
    for k in range(n):
        mat = np.moveaxis(t, k, 0).reshape(t.shape[k], -1)
        red = mat @ mat.conj().T
        if t.shape[k] == 1:
            locs.append(np.ones(1, dtype=complex))
            continue
        _, v = hermitian_eig(red)
        locs.append(v[:, 0])
    return locs


def complement_projection(psi_tensor: np.ndarray, fixed_bases) -> np.ndarray:
    """Project every party onto the orthogonal complement of its fixed vectors.

    For a single fixed vector per party this equals the inclusion-exclusion
    deflation ``psi - sum_i P_i psi + sum_{i<j} P_ij psi - ...`` in which
    ``P_S`` projects the parties in S onto their fixed vector.
    """
    t = psi_tensor
    for k, b in enumerate(fixed_bases):
        if b.shape[1] == 0:
            continue
        proj = np.eye(b.shape[0]) - b @ b.conj().T
        t = np.moveaxis(np.tensordot(proj, t, axes=([1], [k])), 0, k)
    return t


def _schmidt(psi: PureState, tol: float, max_sweeps: int, init=None) -> SchmidtDecomposition:
    _check_normalized(psi)
    dims = psi.structure.dims
    n = len(dims)
    full = psi.tensor()
    chosen = [np.zeros((d, 0), dtype=complex) for d in dims]
    # level i fixes basis vector i of every party; the last level is trivial
    # only when all parties share the smallest dimension
    levels = min(dims) if len(set(dims)) > 1 else min(dims) - 1
    # aim a decade below tol so rounding in the final coefficients cannot push past it
    level_tol = 0.1 * tol / np.sqrt(max(1, levels))
    total_sweeps = 0
    for level in range(levels):
        # complement coordinates: orthonormal basis of each party's remaining subspace
        comp = [complete_basis(chosen[k], dims[k])[:, chosen[k].shape[1]:] for k in range(n)]
        resid = complement_projection(full, chosen)
        t = coefficients_in(resid, comp)  # shape (d_k - level, ...)
        if level == 0 and init is not None:
            if isinstance(init, ProductState):
                init = init.locals
            locs = [np.asarray(v, dtype=complex)[None] for v in init]
        elif np.linalg.norm(t) < ZERO_CONTRACTION:
            locs = [np.eye(c.shape[1], 1, dtype=complex).T for c in comp]
        else:
            locs = [v[None] for v in _dominant_init(t)]
        tb = t[None]
        if np.linalg.norm(t) >= ZERO_CONTRACTION:
            sweeps = 0
            while sweeps < max_sweeps:
                if batch_residual(tb, locs)[0] <= level_tol:
                    break
                locs = sweep(tb, locs)
                sweeps += 1
            total_sweeps += sweeps
        for k in range(n):
            vec = comp[k] @ locs[k][0]
            vec = vec / np.linalg.norm(vec)
            chosen[k] = np.column_stack([chosen[k], vec])
    bases = tuple(complete_basis(chosen[k], dims[k]) for k in range(n))
    coeffs = coefficients_in(full, bases)
    mask = zero_pattern_mask(dims)
    removed = float(np.sum(np.abs(coeffs[mask]) ** 2))
    kept = np.where(mask, 0.0, coeffs)
    norm = float(np.linalg.norm(kept))
    kept = kept / norm
    distance = float(np.sqrt(min(1.0, removed)))
    return SchmidtDecomposition(
        structure=psi.structure,
        local_bases=bases,
        coefficients=kept,
        normalization=norm,
        distance=distance,
        converged=distance <= tol,
        sweeps=total_sweeps,
    )


def generalized_schmidt(psi: PureState, tol: float = 1e-8,
                        max_sweeps: int = DEFAULT_MAX_SWEEPS, init=None) -> SchmidtDecomposition:
    """Generalized Schmidt decomposition of a multi-qubit state.

    Runs the alternating closest-product iteration until the single-excitation
    overlaps fall below ``tol``, completes each converged local vector to a
    basis, and drops the single-excitation coefficients. ``distance`` is the
    trace distance between ``psi`` and the renormalized truncated expansion;
    ``converged`` is False when it exceeds ``tol`` after ``max_sweeps``.
    """
    if any(d != 2 for d in psi.structure.dims):
        raise InvalidArgument("generalized_schmidt handles qubits; use generalized_schmidt_qudit")
    return _schmidt(psi, tol, max_sweeps, init)


def generalized_schmidt_qudit(psi: PureState, tol: float = 1e-8,
                              max_sweeps: int = DEFAULT_MAX_SWEEPS,
                              init=None) -> SchmidtDecomposition:
    """Generalized Schmidt decomposition for arbitrary local dimensions.

    Basis vectors are fixed level by level: after the |0> vectors converge,
    the state is projected onto the complement of every party's |0> and the
    iteration runs again inside that subspace to fix the |1> vectors, and so
    on. Coefficients with all indices equal to i except one index j > i are
    dropped.
    """
    return _schmidt(psi, tol, max_sweeps, init)


def schmidt_zero_pattern(decomp: SchmidtDecomposition, psi: PureState) -> float:
    """Largest |<basis product|psi>| over the zero-pattern multi-indices."""
    c = coefficients_in(psi.tensor(), decomp.local_bases)
    mask = zero_pattern_mask(decomp.structure.dims)
    return float(np.max(np.abs(c[mask]), initial=0.0))


__all__ = [
    "PureGmResult",
    "SchmidtDecomposition",
    "bipartite_pure_gme",
    "closest_product_iterate",
    "pure_gme_multirestart",
    "random_product",
    "generalized_schmidt",
    "generalized_schmidt_qudit",
    "schmidt_zero_pattern",
    "complete_basis",
    "zero_pattern_mask",
    "complement_projection",
    "pure_trace_distance",
]
