"""Multipartite index arithmetic and the dense linear-algebra kernel.

Amplitudes are stored row-major over the party indices with the leftmost
party varying slowest, so a state on dims ``(d1, d2, d3)`` reshapes to an
array of shape ``(d1, d2, d3)`` without copying.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

# Module tolerances. Override by assignment, e.g. ``tensor.NORM_ATOL = 1e-10``.
NORM_ATOL = 1e-12
HERMITIAN_ATOL = 1e-12
PSD_ATOL = 1e-12
EIG_CLAMP = 1e-12
HERMITIAN_INPUT_ATOL = 1e-10


class InvalidArgument(ValueError):
    """Raised when an input violates an operation's preconditions."""


class DegenerateInput(ArithmeticError):
    """Raised when an iteration cannot proceed from the given data."""


@dataclass(frozen=True)
class HilbertStructure:
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise InvalidArgument("at least one party is required")
        if any(d < 2 for d in dims):
            raise InvalidArgument(f"local dimensions must be >= 2, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def n_parties(self) -> int:
        return len(self.dims)

    @classmethod
    def qubits(cls, n: int) -> "HilbertStructure":
        return cls((2,) * n)


def as_structure(dims) -> HilbertStructure:
    if isinstance(dims, HilbertStructure):
        return dims
    return HilbertStructure(tuple(dims))


@dataclass(frozen=True)
class PureState:
    """State vector on a multipartite space.

    ``normalized=False`` marks an intermediate (e.g. a partial contraction)
    whose norm is not constrained.
    """

    structure: HilbertStructure
    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != self.structure.total_dim:
            raise InvalidArgument(
                f"expected {self.structure.total_dim} amplitudes, got {amps.size}")
        if self.normalized and abs(np.linalg.norm(amps) - 1.0) > NORM_ATOL:
            raise InvalidArgument(f"state norm is {np.linalg.norm(amps)!r}, expected 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_vector(cls, vector, dims, normalize: bool = False) -> "PureState":
        v = np.asarray(vector, dtype=complex).reshape(-1)
        if normalize:
            v = v / np.linalg.norm(v)
        return cls(as_structure(dims), v)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.structure.dims)

    def density(self) -> "DensityOperator":
        v = self.amplitudes
        return DensityOperator(self.structure, np.outer(v, v.conj()))


@dataclass(frozen=True)
class DensityOperator:
    structure: HilbertStructure
    matrix: np.ndarray
    validate: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        d = self.structure.total_dim
        if m.shape != (d, d):
            raise InvalidArgument(f"expected a {d}x{d} matrix, got shape {m.shape}")
        if self.validate:
            check_density(m)
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.structure.total_dim


def check_density(m: np.ndarray) -> None:
    if np.max(np.abs(m - m.conj().T), initial=0.0) > HERMITIAN_ATOL:
        raise InvalidArgument("density operator is not Hermitian")
    if abs(np.trace(m) - 1.0) > 1e-12 * max(1, m.shape[0]):
        raise InvalidArgument(f"density operator trace is {np.trace(m).real!r}")
    if np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0] < -PSD_ATOL:
        raise InvalidArgument("density operator has a negative eigenvalue")


@dataclass(frozen=True)
class ProductState:
    structure: HilbertStructure
    locals: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.locals) != self.structure.n_parties:
            raise InvalidArgument("need one local vector per party")
        vecs = []
        for d, v in zip(self.structure.dims, self.locals):
            v = np.asarray(v, dtype=complex).reshape(-1)
            if v.size != d:
                raise InvalidArgument(f"local vector of size {v.size} for a {d}-level party")
            if abs(np.linalg.norm(v) - 1.0) > NORM_ATOL:
                raise InvalidArgument("local vectors must have unit norm")
            v.setflags(write=False)
            vecs.append(v)
        object.__setattr__(self, "locals", tuple(vecs))

    def vector(self) -> np.ndarray:
        out = np.ones(1, dtype=complex)
        for v in self.locals:
            out = np.kron(out, v)
        return out

    def as_pure(self) -> PureState:
        return PureState(self.structure, self.vector())


@dataclass(frozen=True)
class Ensemble:
    """Weighted list of pure or product states."""

    structure: HilbertStructure
    weights: np.ndarray
    states: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.size != len(self.states):
            raise InvalidArgument("one weight per member is required")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise InvalidArgument("weights must be nonnegative and sum to 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "states", tuple(self.states))

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(zip(self.weights, self.states))

    def vectors(self) -> np.ndarray:
        """Member state vectors stacked as rows."""
        return np.array([_state_vector(s) for s in self.states])

    def mixture(self) -> np.ndarray:
        v = self.vectors()
        return (v.T * self.weights) @ v.conj()


def _state_vector(s) -> np.ndarray:
    if isinstance(s, ProductState):
        return s.vector()
    if isinstance(s, PureState):
        return s.amplitudes
    return np.asarray(s, dtype=complex).reshape(-1)


def _party_set(keep: Iterable[int], n: int) -> list[int]:
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise InvalidArgument("keep-set must be nonempty")
    if keep[0] < 0 or keep[-1] >= n:
        raise InvalidArgument(f"party index out of range for {n} parties: {keep}")
    return keep


def partial_trace(rho: DensityOperator, keep: Iterable[int]) -> DensityOperator:
    """Reduced operator on the parties in ``keep`` (returned in ascending order)."""
    dims = rho.structure.dims
    n = len(dims)
    keep = _party_set(keep, n)
    drop = [k for k in range(n) if k not in keep]
    t = rho.matrix.reshape(dims + dims)
    # move kept row axes, then kept column axes, to the front
    order = keep + [n + k for k in keep] + drop + [n + k for k in drop]
    t = t.transpose(order)
    dk = int(np.prod([dims[k] for k in keep]))
    dd = int(np.prod([dims[k] for k in drop])) if drop else 1
    t = t.reshape(dk, dk, dd, dd)
    reduced = np.einsum("abjj->ab", t)
    return DensityOperator(HilbertStructure(tuple(dims[k] for k in keep)), reduced,
                           validate=False)


def partial_contract(psi: PureState, fixed: Mapping[int, np.ndarray]) -> PureState:
    """Apply the bras of ``fixed`` local vectors to ``psi``.

    The result lives on the remaining parties and is unnormalized.
    """
    dims = psi.structure.dims
    n = len(dims)
    if not fixed:
        raise InvalidArgument("nothing to contract")
    parties = sorted(fixed)
    if parties[0] < 0 or parties[-1] >= n:
        raise InvalidArgument("party index out of range")
    if len(parties) == n:
        raise InvalidArgument("fixed covers all parties; use an overlap instead")
    t = psi.tensor()
    # contract from the highest axis down so lower axis numbers stay valid
    for k in reversed(parties):
        v = np.asarray(fixed[k], dtype=complex).reshape(-1)
        if v.size != dims[k]:
            raise InvalidArgument(f"local vector size {v.size} does not match party {k}")
        t = np.tensordot(t, v.conj(), axes=([k], [0]))
    rest = tuple(d for i, d in enumerate(dims) if i not in fixed)
    return PureState(HilbertStructure(rest), t.reshape(-1), normalized=False)


def hermitian_eig(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order and the matching eigenvectors as columns.

    Within a degenerate eigenspace the order is made reproducible by sorting
    on the rounded eigenvector entries, after fixing each vector's phase so
    its largest-magnitude entry is real positive.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidArgument("expected a square matrix")
    if np.max(np.abs(m - m.conj().T), initial=0.0) > HERMITIAN_INPUT_ATOL:
        raise InvalidArgument("matrix is not Hermitian")
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    w = w[::-1]
    v = v[:, ::-1]
    v = _fix_phases(v)
    scale = max(1.0, float(np.max(np.abs(w), initial=0.0)))
    keys = np.round(w / scale, 9)
    order = sorted(range(len(w)), key=lambda i: (-keys[i], _vector_key(v[:, i])))
    return w[order], v[:, order]


def _fix_phases(v: np.ndarray) -> np.ndarray:
    v = v.copy()
    for i in range(v.shape[1]):
        j = int(np.argmax(np.abs(v[:, i]) > np.max(np.abs(v[:, i])) - 1e-9))
        ph = v[j, i] / abs(v[j, i])
        v[:, i] /= ph
    return v


def _vector_key(x: np.ndarray) -> tuple:
    r = np.round(x, 8)
    # larger leading components first, i.e. standard basis vectors in order
    return tuple(-c for pair in zip(r.real, r.imag) for c in pair)


def svd(m) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(V, D, W)`` with ``m = V @ np.diag(D) @ W`` and ``D`` descending."""
    m = np.asarray(m, dtype=complex)
    v, d, w = np.linalg.svd(m)
    return v, d, w


def sqrtm_psd(m: np.ndarray) -> np.ndarray:
    """Square root of a Hermitian PSD matrix; eigenvalues below EIG_CLAMP become 0."""
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    w = np.where(w < EIG_CLAMP, 0.0, w)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Uhlmann fidelity, squared convention: ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``.

    Evaluated as the squared nuclear norm of ``sqrt(rho) @ sqrt(sigma)``.
    """
    a = _matrix(rho)
    b = _matrix(sigma)
    if a.shape != b.shape:
        raise InvalidArgument(f"dimension mismatch: {a.shape} vs {b.shape}")
    if isinstance(rho, DensityOperator) and isinstance(sigma, DensityOperator):
        if rho.structure.total_dim != sigma.structure.total_dim:
            raise InvalidArgument("dimension mismatch")
    s = np.linalg.svd(sqrtm_psd(a) @ sqrtm_psd(b), compute_uv=False)
    return float(min(1.0, max(0.0, s.sum() ** 2)))


def _matrix(x) -> np.ndarray:
    if isinstance(x, DensityOperator):
        return x.matrix
    return np.asarray(x, dtype=complex)


def _check_permutation(permutation: Sequence[int], n: int) -> list[int]:
    perm = [int(p) for p in permutation]
    if sorted(perm) != list(range(n)):
        raise InvalidArgument(f"{permutation} is not a permutation of {n} parties")
    return perm


def permute_and_group(state, permutation: Sequence[int], grouping: Sequence[int] | None = None):
    """Reorder parties and merge consecutive ones into blocks.

    Parameters
    ----------
    state : PureState or DensityOperator
    permutation : sequence of int
        ``permutation[k]`` is the old index of the party placed at position k.
    grouping : sequence of int, optional
        Block sizes, consumed left to right over the permuted parties.
        Default keeps every party as its own block.
    """
    dims = state.structure.dims
    n = len(dims)
    perm = _check_permutation(permutation, n)
    if grouping is None:
        grouping = [1] * n
    grouping = [int(g) for g in grouping]
    if any(g < 1 for g in grouping) or sum(grouping) != n:
        raise InvalidArgument(f"grouping {grouping} does not cover {n} parties")
    new_dims = [dims[p] for p in perm]
    blocks, pos = [], 0
    for g in grouping:
        blocks.append(int(np.prod(new_dims[pos:pos + g])))
        pos += g
    structure = HilbertStructure(tuple(blocks))
    if isinstance(state, PureState):
        t = state.tensor().transpose(perm).reshape(-1)
        return PureState(structure, t, normalized=state.normalized)
    if isinstance(state, DensityOperator):
        t = state.matrix.reshape(dims + dims).transpose(perm + [n + p for p in perm])
        d = structure.total_dim
        return DensityOperator(structure, t.reshape(d, d), validate=False)
    raise InvalidArgument(f"cannot permute {type(state).__name__}")


def inverse_permutation(permutation: Sequence[int]) -> list[int]:
    inv = [0] * len(permutation)
    for i, p in enumerate(permutation):
        inv[p] = i
    return inv


def pure_trace_distance(psi: PureState, phi: PureState) -> float:
    a, b = _vec(psi), _vec(phi)
    if a.shape != b.shape:
        raise InvalidArgument("dimension mismatch")
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    # norm of the part of a orthogonal to b; avoids the cancellation in 1 - |<a|b>|^2
    perp = a - np.vdot(b, a) * b
    return float(min(1.0, np.linalg.norm(perp)))


def _vec(x) -> np.ndarray:
    if isinstance(x, PureState):
        return x.amplitudes
    if isinstance(x, ProductState):
        return x.vector()
    return np.asarray(x, dtype=complex).reshape(-1)


def kron_all(vectors: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones(1, dtype=complex)
    for v in vectors:
        out = np.kron(out, v)
    return out


def batch_kron(locals_: Sequence[np.ndarray]) -> np.ndarray:
    """Row-wise Kronecker product of stacked local vectors, each of shape (m, d_k)."""
    out = np.ones((locals_[0].shape[0], 1), dtype=complex)
    for v in locals_:
        out = (out[:, :, None] * v[:, None, :]).reshape(out.shape[0], -1)
    return out
