"""State families and two-qubit closed-form entanglement values."""

from __future__ import annotations

from math import comb

import numpy as np

from .tensor import (
    DensityOperator, HilbertStructure, InvalidArgument, PureState, as_structure, sqrtm_psd,
)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _check_p(p):
    if not 0.0 <= p <= 1.0:
        raise InvalidArgument(f"p must lie in [0, 1], got {p}")


def _from_bits(n, strings, amps) -> PureState:
    v = np.zeros(2 ** n, dtype=complex)
    for s, a in zip(strings, amps):
        v[int(s, 2)] = a
    return PureState(HilbertStructure.qubits(n), v)


def max_entangled(d: int) -> PureState:
    """(1/sqrt(d)) sum_{i<d} |ii>."""
    v = np.zeros(d * d, dtype=complex)
    v[np.arange(d) * (d + 1)] = 1 / np.sqrt(d)
    return PureState(HilbertStructure((d, d)), v)


def isotropic(d: int, p: float) -> DensityOperator:
    """p |Phi+><Phi+| + (1 - p)/d^2 * identity on d x d.

    Entangled iff p > 1/(1 + d).
    """
    if d < 2:
        raise InvalidArgument("d must be >= 2")
    _check_p(p)
    phi = max_entangled(d).amplitudes
    m = p * np.outer(phi, phi.conj()) + (1 - p) / d ** 2 * np.eye(d * d)
    return DensityOperator(HilbertStructure((d, d)), m)


def ghz(n: int = 3) -> PureState:
    if n < 2:
        raise InvalidArgument("GHZ needs at least two qubits")
    return _from_bits(n, ["0" * n, "1" * n], [1 / np.sqrt(2)] * 2)


def isotropic3(p: float) -> DensityOperator:
    """p |GHZ><GHZ| + (1 - p)/8 * identity on three qubits; fully separable iff p <= 1/5."""
    _check_p(p)
    g = ghz(3).amplitudes
    m = p * np.outer(g, g.conj()) + (1 - p) / 8 * np.eye(8)
    return DensityOperator(HilbertStructure.qubits(3), m)


def w4() -> PureState:
    return _from_bits(4, ["0001", "0010", "0100", "1000"], [0.5] * 4)


def dicke4() -> PureState:
    strings = ["0011", "0101", "1001", "1100", "0110", "1010"]
    return _from_bits(4, strings, [1 / np.sqrt(6)] * 6)


def cluster4() -> PureState:
    return _from_bits(4, ["0000", "0011", "1100", "1111"], [0.5, 0.5, 0.5, -0.5])


def dicke(n: int, k: int) -> PureState:
    """Symmetric n-qubit state with k excitations."""
    v = np.zeros(2 ** n, dtype=complex)
    for i in range(2 ** n):
        if bin(i).count("1") == k:
            v[i] = 1.0
    return PureState(HilbertStructure.qubits(n), v / np.sqrt(comb(n, k)))


def decay(rho: DensityOperator, t: float) -> DensityOperator:
    """Damp every off-diagonal entry by exp(-t); the diagonal is untouched."""
    if t < 0:
        raise InvalidArgument("t must be >= 0")
    m = rho.matrix * np.exp(-t)
    np.fill_diagonal(m, np.diag(rho.matrix))
    return DensityOperator(rho.structure, m)


def _op_on(op, site, n):
    out = np.ones((1, 1), dtype=complex)
    for k in range(n):
        out = np.kron(out, op if k == site else np.eye(2))
    return out


def xx_hamiltonian(B: float, J: float = 0.5, n: int = 3) -> np.ndarray:
    """Isotropic XX ring in a longitudinal field.

    H = (B/2) sum_i Z_i + J sum_i (X_i X_{i+1} + Y_i Y_{i+1}), periodic.
    For n = 3 the spectrum is +-3B/2, 4J +- B/2 (simple) and -2J +- B/2 (double).
    """
    dim = 2 ** n
    h = np.zeros((dim, dim), dtype=complex)
    for i in range(n):
        j = (i + 1) % n
        h += 0.5 * B * _op_on(SIGMA_Z, i, n)
        h += J * (_op_on(SIGMA_X, i, n) @ _op_on(SIGMA_X, j, n)
                  + _op_on(SIGMA_Y, i, n) @ _op_on(SIGMA_Y, j, n))
    return h


def xx_spectrum(B: float, J: float = 0.5) -> np.ndarray:
    """Closed-form eigenvalues of the three-site ring, ascending, with multiplicity."""
    vals = [1.5 * B, -1.5 * B, 4 * J + 0.5 * B, 4 * J - 0.5 * B,
            -2 * J + 0.5 * B, -2 * J + 0.5 * B, -2 * J - 0.5 * B, -2 * J - 0.5 * B]
    return np.sort(vals)


def gibbs(h, T: float, dims=None) -> DensityOperator:
    """Thermal state exp(-H/T)/Z with Boltzmann constant 1.

    ``dims`` defaults to qubits when the dimension is a power of two.
    """
    if T <= 0:
        raise InvalidArgument("temperature must be positive")
    h = np.asarray(h, dtype=complex)
    w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    boltz = np.exp(-(w - w.min()) / T)
    rho = (v * (boltz / boltz.sum())) @ v.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    if dims is None:
        n = int(round(np.log2(h.shape[0])))
        if 2 ** n != h.shape[0]:
            raise InvalidArgument("dims required for a non-qubit Hamiltonian")
        dims = (2,) * n
    return DensityOperator(as_structure(dims), rho)


def _two_qubit(rho) -> np.ndarray:
    m = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)
    if m.shape != (4, 4):
        raise InvalidArgument("expected a two-qubit state")
    if isinstance(rho, DensityOperator) and rho.structure.dims != (2, 2):
        raise InvalidArgument("expected a two-qubit structure")
    return m


def concurrence(rho) -> float:
    """Wootters concurrence; the spin flip conjugates in the computational basis."""
    m = _two_qubit(rho)
    yy = np.kron(SIGMA_Y, SIGMA_Y)
    root = sqrtm_psd(m)
    # singular values of sqrt(rho) sqrt(rho~) are the square roots of the
    # eigenvalues of rho rho~, without the precision loss near zero
    lam = np.linalg.svd(root @ (yy @ root.conj() @ yy), compute_uv=False)
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def binary_entropy(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return float(-x * np.log2(x) - (1 - x) * np.log2(1 - x))


def two_qubit_fs(rho) -> float:
    """Maximal fidelity with a separable state: (1 + sqrt(1 - C^2)) / 2."""
    c = concurrence(rho)
    return 0.5 * (1 + np.sqrt(max(0.0, 1 - c * c)))


def two_qubit_eg(rho) -> float:
    c = concurrence(rho)
    return 0.5 * (1 - np.sqrt(max(0.0, 1 - c * c)))


def two_qubit_ef(rho) -> float:
    c = concurrence(rho)
    return binary_entropy(0.5 + 0.5 * np.sqrt(max(0.0, 1 - c * c)))


def log_entanglement_from_fs(fs: float) -> float:
    if fs <= 0 or fs > 1 + 1e-12:
        raise InvalidArgument("fs must lie in (0, 1]")
    return float(max(0.0, -np.log2(min(fs, 1.0))))


def random_pure(structure, rng) -> PureState:
    structure = as_structure(structure)
    d = structure.total_dim
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return PureState(structure, z / np.linalg.norm(z))


def random_density(dims, rank: int | None, rng) -> DensityOperator:
    """G G^dag / Tr(G G^dag) with G a d x rank complex Gaussian matrix.

    ``dims`` may be an int (treated as a single party) or a sequence of
    local dimensions.
    """
    if np.isscalar(dims):
        dims = (int(dims),)
    structure = as_structure(dims)
    d = structure.total_dim
    if rank is None:
        rank = d
    if not 1 <= rank <= d:
        raise InvalidArgument(f"rank must lie in [1, {d}]")
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    m = g @ g.conj().T
    m /= np.trace(m).real
    return DensityOperator(structure, 0.5 * (m + m.conj().T))
