"""Upper bound on the geometric measure of entanglement of a mixed state.

The state rho is purified as |psi> = sum_i sqrt(p_i) |psi_i>|i> and a
separable state sigma as |phi> = sum_j sqrt(q_j) |phi_j> U^dag|j>. One
iteration raises the overlap |<psi|phi>| in three steps:

1. polar step: U from the SVD of A_ij = sqrt(p_i q_j) <phi_j|psi_i>,
   after which |<psi|phi>|^2 = F(rho, sigma);
2. state step: rotate the rho-ensemble by U and move every product state
   towards its partner (exactly for two blocks, by alternating sweeps
   otherwise);
3. weight step: q_i proportional to p_i |<psi_i|phi_i>|^2.

The fidelity after each polar step never decreases, and 1 - F is an upper
bound on E_G because sigma is separable by construction.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import unitary_group

from . import pure
from .tensor import (
    DegenerateInput,
    DensityOperator,
    Ensemble,
    HilbertStructure,
    InvalidArgument,
    ProductState,
    PureState,
    batch_kron,
    fidelity,
    permute_and_group,
)

log = logging.getLogger(__name__)

ZERO_WEIGHT = 1e-14
RANK_TOL = 1e-14


@dataclass(frozen=True)
class AlgorithmConfig:
    epsilon: float = 1e-7
    ensemble_size: int | None = None  # None -> total_dim**2
    max_iterations: int = 50000
    restarts: int = 5
    seed: int | None = 0
    inner_tol: float = 1e-12
    inner_max_sweeps: int = 10
    diagnostics: bool = False

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidArgument("epsilon must be positive")
        if self.ensemble_size is not None and self.ensemble_size < 1:
            raise InvalidArgument("ensemble_size must be >= 1")
        if self.restarts < 1:
            raise InvalidArgument("restarts must be >= 1")
        if self.max_iterations < 1 or self.inner_max_sweeps < 1:
            raise InvalidArgument("iteration caps must be >= 1")

    def echo(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "ensemble_size": self.ensemble_size,
            "max_iterations": self.max_iterations,
            "restarts": self.restarts,
            "seed": self.seed,
            "inner_tol": self.inner_tol,
            "inner_max_sweeps": self.inner_max_sweeps,
        }


@dataclass
class IterationState:
    """Working arrays of one run.

    ``psi`` holds the rho-ensemble states as rows; ``phi`` holds the local
    vectors of the product states, one ``(m, d_k)`` array per party.
    """

    dims: tuple[int, ...]
    p: np.ndarray
    psi: np.ndarray
    q: np.ndarray
    phi: list[np.ndarray]
    coupling: np.ndarray | None = None
    unitary: np.ndarray | None = None
    overlap_sq: float = float("nan")

    @property
    def m(self) -> int:
        return self.p.size

    def product_vectors(self) -> np.ndarray:
        return batch_kron(self.phi)

    def coupling_matrix(self) -> np.ndarray:
        # A_ij = sqrt(p_i q_j) <phi_j|psi_i>
        a = self.psi @ self.product_vectors().conj().T
        return np.sqrt(self.p)[:, None] * a * np.sqrt(self.q)[None, :]

    def rho_ensemble(self) -> Ensemble:
        s = HilbertStructure(self.dims)
        return Ensemble(s, _renorm(self.p),
                        [PureState(s, v) for v in self.psi])

    def sep_ensemble(self) -> Ensemble:
        s = HilbertStructure(self.dims)
        states = [ProductState(s, tuple(l[i] for l in self.phi)) for i in range(self.m)]
        return Ensemble(s, _renorm(self.q), states)

    def mixture(self) -> np.ndarray:
        return (self.psi.T * self.p) @ self.psi.conj()

    def separable_mixture(self) -> np.ndarray:
        v = self.product_vectors()
        return (v.T * self.q) @ v.conj()


def _renorm(w):
    w = np.clip(np.asarray(w, dtype=float), 0.0, None)
    return w / w.sum()


@dataclass(frozen=True)
class GmEstimate:
    gme_upper: float
    fidelity: float
    closest_separable: Ensemble
    iterations: int
    trace: tuple
    converged: bool
    restart_index: int
    final_gain: float = float("nan")
    direct_fidelity: float = float("nan")
    restart_fidelities: tuple = ()
    diagnostics: dict = field(default_factory=dict)

    @property
    def fs(self) -> float:
        """Fidelity with the closest separable state found."""
        return self.fidelity


# initial ensembles -------------------------------------------------------

def random_rho_decomposition(rho: DensityOperator, m: int, rng,
                             max_tries: int = 100) -> Ensemble:
    """Random m-member decomposition of rho.

    The eigen-ensemble sqrt(l_k)|e_k> is mixed by the first r columns of a
    Haar-random m x m unitary; resampled until every weight is positive.
    """
    w, v = np.linalg.eigh(rho.matrix)
    keep = w > RANK_TOL
    w, v = w[keep], v[:, keep]
    r = w.size
    if m < r:
        raise InvalidArgument(f"ensemble size {m} is below rank {r}")
    sub = (v * np.sqrt(w)).T  # rows: subnormalized eigenvectors
    for _ in range(max_tries):
        u = unitary_group.rvs(m, random_state=rng) if m > 1 else np.ones((1, 1))
        alpha = u[:, :r] @ sub
        p = np.sum(np.abs(alpha) ** 2, axis=1)
        if np.all(p > ZERO_WEIGHT):
            break
    else:
        raise DegenerateInput("could not draw a decomposition with positive weights")
    states = alpha / np.sqrt(p)[:, None]
    s = rho.structure
    return Ensemble(s, p / p.sum(), [PureState(s, x) for x in states])


def random_separable_ensemble(structure, m: int, rng) -> Ensemble:
    """m random product states with Dirichlet(1, ..., 1) weights."""
    if m < 1:
        raise InvalidArgument("m must be >= 1")
    structure = structure if isinstance(structure, HilbertStructure) else HilbertStructure(structure)
    q = rng.dirichlet(np.ones(m)) if m > 1 else np.ones(1)
    while np.any(q <= 0):
        q = rng.dirichlet(np.ones(m))
    states = [pure.random_product(structure, rng) for _ in range(m)]
    return Ensemble(structure, q, states)


def initial_state(rho: DensityOperator, m: int, rng) -> IterationState:
    dec = random_rho_decomposition(rho, m, rng)
    sep = random_separable_ensemble(rho.structure, m, rng)
    n = rho.structure.n_parties
    phi = [np.array([s.locals[k] for s in sep.states]) for k in range(n)]
    return IterationState(rho.structure.dims, np.array(dec.weights), dec.vectors(),
                          np.array(sep.weights), phi)


def state_from_ensembles(rho_ensemble: Ensemble, sep_ensemble: Ensemble) -> IterationState:
    if len(rho_ensemble) != len(sep_ensemble):
        raise InvalidArgument("ensembles must have the same size")
    n = sep_ensemble.structure.n_parties
    phi = [np.array([s.locals[k] for s in sep_ensemble.states]) for k in range(n)]
    return IterationState(rho_ensemble.structure.dims, np.array(rho_ensemble.weights),
                          rho_ensemble.vectors(), np.array(sep_ensemble.weights), phi)


# the three steps -----------------------------------------------------------

def polar_step(state: IterationState) -> np.ndarray:
    """Unitary U = W^dag V^dag from A = V D W; stores A, U and (Tr D)^2 on ``state``."""
    a = state.coupling_matrix()
    v, d, w = np.linalg.svd(a)
    if not np.any(d > 0):
        u = np.eye(a.shape[0], dtype=complex)
    else:
        u = w.conj().T @ v.conj().T
    state.coupling = a
    state.unitary = u
    state.overlap_sq = float(d.sum() ** 2)
    return u


def polar_residual(a: np.ndarray, u: np.ndarray) -> float:
    """Frobenius norm of A - sqrt(A A^dag) U^dag."""
    v, d, _ = np.linalg.svd(a)
    root = (v * d) @ v.conj().T
    return float(np.linalg.norm(a - root @ u.conj().T))


def purification_overlap(state: IterationState, u: np.ndarray) -> float:
    """|<psi|phi>| for the purifications built from ``state`` with mixing unitary u."""
    a = state.coupling_matrix()
    return float(abs(np.trace(a @ u)))


def state_update_step(u: np.ndarray, state: IterationState, inner_tol: float = 1e-12,
                      inner_max_sweeps: int = 10) -> IterationState:
    """Rotate the rho-ensemble by u and improve every product state.

    Returns a new state with p', psi' and phi'; q is carried over unchanged.
    Members with p'_i below ZERO_WEIGHT get weight 0, keep their previous
    product state and are skipped by the inner optimization.
    """
    alpha = u @ (np.sqrt(state.p)[:, None] * state.psi)
    p_new = np.sum(np.abs(alpha) ** 2, axis=1)
    live = p_new > ZERO_WEIGHT
    psi_new = np.array(state.psi, copy=True)
    psi_new[live] = alpha[live] / np.sqrt(p_new[live])[:, None]
    p_new = np.where(live, p_new, 0.0)
    old_vectors = state.product_vectors()
    # dead members: any unit vector will do, reuse the paired product state
    psi_new[~live] = old_vectors[~live]
    dims = state.dims
    t = psi_new.reshape((state.m,) + dims)
    if len(dims) == 2:
        a, b, _ = pure.bipartite_batch(t[live])
        phi_new = [l.copy() for l in state.phi]
        phi_new[0][live] = a
        phi_new[1][live] = b
    else:
        phi_new, _, _ = pure.iterate_batch(t, state.phi, inner_max_sweeps, inner_tol,
                                           active=live)
    return IterationState(dims, p_new, psi_new, state.q.copy(), phi_new)


def member_overlaps(state: IterationState) -> np.ndarray:
    """|<psi_i|phi_i>|^2 for each member."""
    t = state.psi.reshape((state.m,) + state.dims)
    return np.abs(pure.batch_overlaps(t, state.phi)) ** 2


def probability_step(p: np.ndarray, overlaps_sq: np.ndarray) -> np.ndarray:
    """Optimal weights q_i = p_i |<psi_i|phi_i>|^2 / sum_k p_k |<psi_k|phi_k>|^2."""
    w = np.asarray(p, dtype=float) * np.asarray(overlaps_sq, dtype=float)
    total = w.sum()
    if not total > 0:
        raise DegenerateInput("every member is orthogonal to its product state")
    return w / total


# driver --------------------------------------------------------------------

def _resolve_cut(rho: DensityOperator, cut):
    """Regroup rho so that each block of ``cut`` becomes one party."""
    if cut is None:
        return rho
    blocks = [list(b) for b in cut]
    if len(blocks) < 2:
        raise InvalidArgument("a cut needs at least two blocks")
    order = [k for b in blocks for k in b]
    n = rho.structure.n_parties
    if sorted(order) != list(range(n)):
        raise InvalidArgument(f"cut {cut} is not a partition of {n} parties")
    if len(blocks) == n and order == list(range(n)):
        return rho
    return permute_and_group(rho, order, [len(b) for b in blocks])


def run_once(rho: DensityOperator, config: AlgorithmConfig, rng,
             state: IterationState | None = None, callback=None):
    """One restart. Returns ``(state, trace, converged, gain, diagnostics)``."""
    m = config.ensemble_size or rho.dim ** 2
    if state is None:
        state = initial_state(rho, m, rng)
    diag = {"max_mixture_residual": 0.0, "max_polar_residual": 0.0}
    trace = []
    converged = False
    gain = float("nan")
    for it in range(config.max_iterations):
        u = polar_step(state)
        trace.append(state.overlap_sq)
        if config.diagnostics:
            diag["max_polar_residual"] = max(diag["max_polar_residual"],
                                             polar_residual(state.coupling, u))
        if callback is not None:
            callback(it, state)
        if len(trace) > 1:
            gain = trace[-1] - trace[-2]
            if gain <= config.epsilon:
                converged = True
                break
        new = state_update_step(u, state, config.inner_tol, config.inner_max_sweeps)
        new.q = probability_step(new.p, member_overlaps(new))
        if config.diagnostics:
            res = float(np.linalg.norm(new.mixture() - rho.matrix))
            diag["max_mixture_residual"] = max(diag["max_mixture_residual"], res)
        state = new
    return state, trace, converged, gain, diag


def gme_mixed(rho: DensityOperator, cut=None, config: AlgorithmConfig | None = None,
              callback=None) -> GmEstimate:
    """Approximate E_G(rho) from above.

    Parameters
    ----------
    rho : DensityOperator
    cut : sequence of sequences of int, optional
        Partition of the parties into blocks; entanglement is measured
        between blocks. Default: every party is its own block.
    config : AlgorithmConfig, optional
    callback : callable, optional
        Called as ``callback(iteration, state)`` after every polar step.

    Returns
    -------
    GmEstimate
        The best of ``config.restarts`` runs. ``gme_upper`` is 1 minus the
        fidelity with the separable state ``closest_separable``.
    """
    config = config or AlgorithmConfig()
    work = _resolve_cut(rho, cut)
    if work.structure.n_parties < 2:
        raise InvalidArgument("need at least two blocks")
    seeds = np.random.SeedSequence(config.seed).spawn(config.restarts)
    best = None
    fids = []
    # diagnostics cover every restart, not only the winner
    agg = {"max_mixture_residual": 0.0, "max_polar_residual": 0.0, "min_trace_step": np.inf}
    for idx, ss in enumerate(seeds):
        rng = np.random.default_rng(ss)
        state, trace, converged, gain, diag = run_once(work, config, rng, callback=callback)
        fids.append(trace[-1])
        for key in ("max_mixture_residual", "max_polar_residual"):
            agg[key] = max(agg[key], diag[key])
        if len(trace) > 1:
            agg["min_trace_step"] = min(agg["min_trace_step"], float(np.min(np.diff(trace))))
        log.debug("restart %d: F=%.15f after %d iterations", idx, trace[-1], len(trace))
        if best is None or trace[-1] > best[1][-1]:
            best = (state, trace, converged, gain, diag, idx)
    state, trace, converged, gain, _, idx = best
    diag = {}
    if config.diagnostics:
        diag = dict(agg)
        if not np.isfinite(diag["min_trace_step"]):
            diag["min_trace_step"] = 0.0
    sep = state.sep_ensemble()
    fid = float(min(1.0, max(0.0, trace[-1])))
    sigma = DensityOperator(work.structure, state.separable_mixture(), validate=False)
    return GmEstimate(
        gme_upper=1.0 - fid,
        fidelity=fid,
        closest_separable=sep,
        iterations=len(trace),
        trace=tuple(trace),
        converged=converged,
        restart_index=idx,
        final_gain=gain,
        direct_fidelity=fidelity(work, sigma),
        restart_fidelities=tuple(fids),
        diagnostics=diag,
    )


def with_overrides(config: AlgorithmConfig, **kw) -> AlgorithmConfig:
    kw = {k: v for k, v in kw.items() if v is not None}
    return replace(config, **kw)
