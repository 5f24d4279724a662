"""Exact metrology quantities computed from density matrices.

These are the oracles against which every randomized estimate is checked.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from randqfi import constants as C
from randqfi.qstate import StateLike, as_array, eig_hermitian, overlap, purity

StateFamily = Callable[[float], StateLike]


@dataclass(frozen=True)
class QfiResult:
    value: float
    kind: str  # "exact_qfi" or "sub_qfi"
    generator_note: str = ""
    dtheta: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("exact_qfi", "sub_qfi"):
            raise ValueError(f"unknown QFI kind {self.kind!r}")
        if self.value < 0:
            raise ValueError(f"QFI must be non-negative, got {self.value}")

    def __float__(self) -> float:
        return self.value


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def exact_qfi(
    rho_theta: StateLike,
    d_rho: np.ndarray,
    cutoff: float = C.QFI_EIGEN_CUTOFF,
    note: str = "",
) -> QfiResult:
    """Spectral-sum QFI, sum 2|<l|d_rho|l'>|^2 / (p_l + p_l') over p_l + p_l' > cutoff."""
    rho = as_array(rho_theta)
    d_rho = np.asarray(d_rho, dtype=complex)
    _check_same_shape(rho, d_rho)
    if np.max(np.abs(d_rho - d_rho.conj().T)) > C.EIG_HERMITIAN_ATOL:
        raise ValueError("d_rho must be Hermitian")
    sd = eig_hermitian(rho)
    p = sd.eigenvalues
    v = sd.eigenvectors
    elems = v.conj().T @ d_rho @ v
    denom = p[:, None] + p[None, :]
    keep = denom > cutoff
    terms = np.zeros_like(denom)
    terms[keep] = 2 * np.abs(elems[keep]) ** 2 / denom[keep]
    return QfiResult(max(float(terms.sum()), 0.0), "exact_qfi", note)


def exact_qfi_unitary(
    rho: StateLike, generator: np.ndarray, cutoff: float = C.QFI_EIGEN_CUTOFF
) -> QfiResult:
    """QFI of theta -> exp(-i theta G) rho exp(i theta G), using d_rho = -i[G, rho]."""
    r = as_array(rho)
    g = np.asarray(generator, dtype=complex)
    _check_same_shape(r, g)
    d_rho = -1j * (g @ r - r @ g)
    d_rho = (d_rho + d_rho.conj().T) / 2
    return exact_qfi(r, d_rho, cutoff, note="unitary encoding, d_rho = -i[G, rho]")


def finite_difference_derivative(
    family: StateFamily, theta: float, step: float = 1e-5
) -> np.ndarray:
    """Central difference of a black-box family, Richardson-extrapolated once."""

    def central(h):
        return (as_array(family(theta + h)) - as_array(family(theta - h))) / (2 * h)

    coarse = central(step)
    fine = central(step / 2)
    d = (4 * fine - coarse) / 3
    return (d + d.conj().T) / 2


def exact_qfi_family(family: StateFamily, theta: float, step: float = 1e-5) -> QfiResult:
    d_rho = finite_difference_derivative(family, theta, step)
    return exact_qfi(family(theta), d_rho, note="finite-difference derivative")


def superfidelity(rho1: StateLike, rho2: StateLike) -> float:
    """Tr(rho1 rho2) + sqrt((1 - Tr rho1^2)(1 - Tr rho2^2)), clamped to [0, 1]."""
    a, b = as_array(rho1), as_array(rho2)
    _check_same_shape(a, b)
    mix = max(0.0, 1.0 - purity(a)) * max(0.0, 1.0 - purity(b))
    g = overlap(a, b) + np.sqrt(mix)
    return float(min(1.0, max(0.0, g)))


def bures_from_superfidelity(g):
    """8 (1 - sqrt(g)); accepts scalars or arrays of superfidelities."""
    g = np.clip(g, 0.0, 1.0)
    return 8.0 * (1.0 - np.sqrt(g))


def modified_bures_distance(rho1: StateLike, rho2: StateLike) -> float:
    """Superfidelity-based Bures distance, in [0, 8].

    Its quadratic coefficient in d_theta between neighbouring states of a
    family is the sub-QFI, which equals the QFI for pure states.
    """
    return float(bures_from_superfidelity(superfidelity(rho1, rho2)))


def sub_qfi_exact(family: StateFamily, theta0: float, dtheta: float) -> QfiResult:
    """Finite-step sub-QFI D_G(rho(theta0), rho(theta0 + dtheta)) / dtheta^2."""
    if dtheta == 0:
        raise ValueError("dtheta must be non-zero")
    d = modified_bures_distance(family(theta0), family(theta0 + dtheta))
    return QfiResult(d / dtheta**2, "sub_qfi", "superfidelity ratio", dtheta=dtheta)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    sd = eig_hermitian(m)
    w = np.sqrt(np.clip(sd.eigenvalues, 0.0, None))
    v = sd.eigenvectors
    return (v * w) @ v.conj().T


def uhlmann_fidelity(rho1: StateLike, rho2: StateLike) -> float:
    """(Tr sqrt(sqrt(rho1) rho2 sqrt(rho1)))^2."""
    a, b = as_array(rho1), as_array(rho2)
    _check_same_shape(a, b)
    s = _psd_sqrt(a)
    inner = s @ b @ s
    ev = np.clip(eig_hermitian((inner + inner.conj().T) / 2).eigenvalues, 0.0, None)
    return float(min(1.0, np.sum(np.sqrt(ev)) ** 2))
