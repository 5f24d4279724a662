"""Dense multi-qubit states and operators.

Qubit ordering: qubit 0 is the most significant bit of a computational-basis
index, so ``kron(a0, a1, ..., a_{N-1})`` acts with ``a0`` on qubit 0 and the
basis index of bitstring ``b0 b1 ... b_{N-1}`` is ``sum_j b_j 2**(N-1-j)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Union

import numpy as np

from randqfi import constants as C

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_PAULI = {"x": PAULI_X, "y": PAULI_Y, "z": PAULI_Z}


class StateError(ValueError):
    """Raised when an array violates a state or operator invariant."""


def num_qubits_for(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise StateError(f"dimension {dim} is not a power of two")
    return n


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix of size 2**N.

    The invariants are checked on construction; pass ``check=False`` only for
    matrices produced by trusted internal code paths.
    """

    entries: np.ndarray
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen(self.entries))
        if self.check:
            validate_density_matrix(self.entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def num_qubits(self) -> int:
        return num_qubits_for(self.dim)

    @classmethod
    def from_pure(cls, psi) -> "DensityMatrix":
        v = psi.amplitudes if isinstance(psi, PureState) else np.asarray(psi, dtype=complex)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, n_qubits: int) -> "DensityMatrix":
        d = 2**n_qubits
        return cls(np.eye(d, dtype=complex) / d)

    @classmethod
    def basis(cls, index: int, n_qubits: int) -> "DensityMatrix":
        d = 2**n_qubits
        rho = np.zeros((d, d), dtype=complex)
        rho[index, index] = 1.0
        return cls(rho)


@dataclass(frozen=True)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "amplitudes", _frozen(self.amplitudes))
        if self.amplitudes.ndim != 1:
            raise StateError("amplitudes must be a vector")
        num_qubits_for(self.amplitudes.shape[0])
        norm2 = float(np.vdot(self.amplitudes, self.amplitudes).real)
        if abs(norm2 - 1.0) > C.NORM_ATOL:
            raise StateError(f"squared norm {norm2!r} differs from 1")

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def density_matrix(self) -> DensityMatrix:
        return DensityMatrix.from_pure(self)


@dataclass(frozen=True)
class UnitaryMatrix:
    """Unitary with a record of how it was drawn.

    ``provenance`` is the ensemble tag; ``params`` holds the drawn parameters
    (angles, disorder fields) as plain Python data.
    """

    entries: np.ndarray
    provenance: str = "explicit"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen(self.entries))
        u = self.entries
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise StateError("unitary must be square")
        err = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
        if err > C.UNITARY_ATOL:
            raise StateError(f"U^dag U deviates from identity by {err:.3e}")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in descending order with eigenvectors as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


StateLike = Union[DensityMatrix, np.ndarray]


def as_array(rho: StateLike) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        return rho.entries
    if isinstance(rho, PureState):
        return DensityMatrix.from_pure(rho).entries
    return np.asarray(rho, dtype=complex)


def validate_density_matrix(rho: np.ndarray) -> None:
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise StateError(f"density matrix must be square, got shape {rho.shape}")
    num_qubits_for(rho.shape[0])
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > C.HERMITIAN_ATOL:
        raise StateError(f"not Hermitian (max deviation {herm:.3e})")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > C.TRACE_ATOL:
        raise StateError(f"trace {tr!r} differs from 1")
    lam_min = np.linalg.eigvalsh(rho)[0]
    if lam_min < -C.PSD_ATOL:
        raise StateError(f"negative eigenvalue {lam_min:.3e}")


def kron(*mats: np.ndarray) -> np.ndarray:
    """Kronecker product of square matrices, first argument most significant."""
    if not mats:
        raise ValueError("kron needs at least one matrix")
    for m in mats:
        m = np.asarray(m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"kron expects square matrices, got shape {m.shape}")
    return reduce(np.kron, (np.asarray(m, dtype=complex) for m in mats))


def single_site(op: np.ndarray, site: int, n_qubits: int) -> np.ndarray:
    """Embed a one-qubit operator acting on ``site`` into the N-qubit space."""
    left = np.eye(2**site, dtype=complex)
    right = np.eye(2 ** (n_qubits - site - 1), dtype=complex)
    return np.kron(np.kron(left, op), right)


def collective_spin(axis: str, n_qubits: int) -> np.ndarray:
    """J_axis = sum_j sigma_axis^(j) / 2 as a dense 2**N x 2**N matrix."""
    if n_qubits <= 0:
        raise ValueError("collective_spin needs at least one qubit")
    try:
        sigma = _PAULI[axis]
    except KeyError:
        raise ValueError(f"axis must be one of x, y, z, got {axis!r}") from None
    d = 2**n_qubits
    j = np.zeros((d, d), dtype=complex)
    for site in range(n_qubits):
        j += single_site(sigma, site, n_qubits)
    return j / 2


def popcount(indices: np.ndarray) -> np.ndarray:
    indices = np.asarray(indices, dtype=np.int64)
    out = np.zeros_like(indices)
    x = indices.copy()
    while np.any(x):
        out += x & 1
        x >>= 1
    return out


def jz_eigenvalues(n_qubits: int) -> np.ndarray:
    """Diagonal of J_z in the computational basis: N/2 minus the number of ones."""
    s = np.arange(2**n_qubits)
    return n_qubits / 2 - popcount(s)


def hamming_distances(n_qubits: int) -> np.ndarray:
    """Matrix h[s, s'] of Hamming distances between basis bitstrings."""
    s = np.arange(2**n_qubits)
    return popcount(s[:, None] ^ s[None, :])


def eig_hermitian(m: np.ndarray) -> SpectralDecomposition:
    m = as_array(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("eig_hermitian expects a square matrix")
    dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if dev > C.EIG_HERMITIAN_ATOL:
        raise ValueError(f"matrix is not Hermitian (max deviation {dev:.3e})")
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return SpectralDecomposition(w[::-1].copy(), v[:, ::-1].copy())


def expm_hermitian(h: np.ndarray, t: float = 1.0) -> np.ndarray:
    """exp(-i t H) for Hermitian H via its spectral decomposition."""
    sd = eig_hermitian(h)
    v = sd.eigenvectors
    return (v * np.exp(-1j * t * sd.eigenvalues)) @ v.conj().T


def purity(rho: StateLike) -> float:
    r = as_array(rho)
    # Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho.
    return float(np.sum(np.abs(r) ** 2))


def overlap(rho1: StateLike, rho2: StateLike) -> float:
    """Tr(rho1 rho2)."""
    a, b = as_array(rho1), as_array(rho2)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    # Tr(AB) = sum_ij A_ij B_ji = sum_ij A_ij conj(B_ij) for Hermitian B.
    return float(np.real(np.vdot(b, a)))


def conjugate(rho: StateLike, u: np.ndarray) -> np.ndarray:
    """U rho U^dag."""
    u = u.entries if isinstance(u, UnitaryMatrix) else np.asarray(u)
    r = as_array(rho)
    return u @ r @ u.conj().T


def ghz_vector(n_qubits: int) -> np.ndarray:
    v = np.zeros(2**n_qubits, dtype=complex)
    v[0] = v[-1] = 1 / np.sqrt(2)
    return v


def random_pure_state(n_qubits: int, rng: np.random.Generator) -> PureState:
    d = 2**n_qubits
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return PureState(v / np.linalg.norm(v))


def random_density_matrix(
    n_qubits: int, rng: np.random.Generator, rank: int | None = None
) -> DensityMatrix:
    """Ginibre-distributed mixed state (Hilbert-Schmidt measure when full rank)."""
    d = 2**n_qubits
    k = d if rank is None else rank
    g = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return DensityMatrix(rho / np.trace(rho).real)


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (a + a.conj().T) / 2
