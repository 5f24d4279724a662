"""State preparation, phase encoding and dephasing dynamics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from randqfi import constants as C
from randqfi.qstate import (
    PAULI_X,
    PAULI_Z,
    DensityMatrix,
    PureState,
    StateLike,
    as_array,
    collective_spin,
    expm_hermitian,
    hamming_distances,
    jz_eigenvalues,
    num_qubits_for,
    single_site,
)


@dataclass(frozen=True)
class RamseyParams:
    """Single-spin Ramsey state parameters.

    ``delta`` is the detuning in rad per unit time; ``t`` and ``t2star`` share
    that time unit (microseconds in the experiment runners).
    """

    phi: float
    delta: float
    t: float
    t2star: float

    def __post_init__(self):
        if self.t < 0:
            raise ValueError(f"t must be >= 0, got {self.t}")
        if self.t2star <= 0:
            raise ValueError(f"t2star must be > 0, got {self.t2star}")

    @property
    def theta(self) -> float:
        return self.delta * self.t

    @property
    def coherence_decay(self) -> float:
        return float(np.exp(-((self.t / self.t2star) ** 2)))


@dataclass(frozen=True)
class DephasingParams:
    gamma: float
    t: float

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.t < 0:
            raise ValueError(f"t must be >= 0, got {self.t}")


@dataclass(frozen=True)
class IsingParams:
    """Long-range transverse Ising model sum_{k<l} g|k-l|^-alpha X_k X_l + omega sum_k X_k."""

    n_qubits: int
    g: float
    alpha_exp: float
    omega: float

    def __post_init__(self):
        if self.n_qubits < 2:
            raise ValueError(f"Ising model needs N >= 2, got {self.n_qubits}")
        if self.n_qubits > C.MAX_QUBITS:
            raise ValueError(f"N={self.n_qubits} exceeds {C.MAX_QUBITS}")
        if not 0 < self.alpha_exp < 3:
            raise ValueError(f"alpha_exp must lie in (0, 3), got {self.alpha_exp}")

    def couplings(self) -> np.ndarray:
        """Symmetric matrix J[k, l] = g |k-l|^-alpha with zero diagonal."""
        k = np.arange(self.n_qubits)
        dist = np.abs(k[:, None] - k[None, :]).astype(float)
        with np.errstate(divide="ignore"):
            j = self.g * np.where(dist > 0, dist ** (-self.alpha_exp), 0.0)
        return j


def ramsey_state(p: RamseyParams) -> DensityMatrix:
    """Dephased Ramsey state with phase theta = delta * t and Gaussian decay."""
    c = 0.5 * np.sin(p.phi) * np.exp(1j * p.theta - (p.t / p.t2star) ** 2)
    rho = np.array(
        [[np.cos(p.phi / 2) ** 2, c], [np.conj(c), np.sin(p.phi / 2) ** 2]],
        dtype=complex,
    )
    return DensityMatrix(rho)


def ramsey_family(phi: float, t: float, t2star: float):
    """theta -> Ramsey state with phase theta and the decay of time t held fixed.

    This is the one-parameter family whose QFI the Ramsey experiment reads
    out: neighbouring points differ by d_theta = delta * dt, while the
    decoherence over dt is second order and ignored.
    """
    base = RamseyParams(phi, 0.0, t, t2star)

    def family(theta: float) -> DensityMatrix:
        c = 0.5 * np.sin(phi) * np.exp(1j * theta) * base.coherence_decay
        rho = np.array(
            [[np.cos(phi / 2) ** 2, c], [np.conj(c), np.sin(phi / 2) ** 2]],
            dtype=complex,
        )
        return DensityMatrix(rho, check=False)

    return family


def ramsey_pure_state(phi: float) -> PureState:
    """cos(phi/2)|0> + sin(phi/2)|1>, the state before free evolution."""
    return PureState(np.array([np.cos(phi / 2), np.sin(phi / 2)], dtype=complex))


def phase_factors(theta: float, n_qubits: int) -> np.ndarray:
    """exp(-i theta m_s) for each basis state s, m_s the J_z eigenvalue."""
    return np.exp(-1j * theta * jz_eigenvalues(n_qubits))


def encode_phase(rho: StateLike, theta: float, n_qubits: int) -> DensityMatrix:
    """exp(-i theta J_z) rho exp(i theta J_z), computed entrywise."""
    r = as_array(rho)
    if r.shape != (2**n_qubits, 2**n_qubits):
        raise ValueError(f"state of shape {r.shape} does not match N={n_qubits}")
    f = phase_factors(theta, n_qubits)
    return DensityMatrix(r * np.outer(f, f.conj()), check=False)


def ghz_prepare(n_qubits: int) -> PureState:
    """Apply exp(i pi Jx/2) exp(i pi Jz^2/2) exp(i pi Jx/2) to |0...0>.

    For odd N the twist leaves the cat aligned along +-x rather than +-y, so the
    final rotation is taken about y to land on the computational-basis GHZ.
    """
    if not 1 <= n_qubits <= C.MAX_QUBITS:
        raise ValueError(f"N must be in [1, {C.MAX_QUBITS}], got {n_qubits}")
    jx = collective_spin("x", n_qubits)
    jz = collective_spin("z", n_qubits)
    last = jx if n_qubits % 2 == 0 else collective_spin("y", n_qubits)
    twist = expm_hermitian(jz @ jz, -np.pi / 2)
    psi0 = np.zeros(2**n_qubits, dtype=complex)
    psi0[0] = 1.0
    psi = expm_hermitian(last, -np.pi / 2) @ (
        twist @ (expm_hermitian(jx, -np.pi / 2) @ psi0)
    )
    return PureState(psi / np.linalg.norm(psi))


def ghz_circuit(n_qubits: int) -> PureState:
    """Hadamard on qubit 0 followed by a CNOT chain 0->1->...->N-1."""
    if not 1 <= n_qubits <= C.MAX_QUBITS:
        raise ValueError(f"N must be in [1, {C.MAX_QUBITS}], got {n_qubits}")
    psi = np.zeros([2] * n_qubits, dtype=complex)
    psi[(0,) * n_qubits] = 1.0
    hadamard = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    psi = np.tensordot(hadamard, psi, axes=([1], [0]))
    for control in range(n_qubits - 1):
        target = control + 1
        psi = psi.copy()
        idx = [slice(None)] * n_qubits
        idx[control] = 1
        block = psi[tuple(idx)]
        # target axis shifts down by one after fixing the control index
        psi[tuple(idx)] = np.flip(block, axis=target - 1)
    return PureState(psi.reshape(-1))


def dephase(rho: StateLike, p: DephasingParams) -> DensityMatrix:
    """Closed-form pure dephasing: entry (s, s') decays as exp(-2 gamma t h(s, s'))."""
    r = as_array(rho)
    n = num_qubits_for(r.shape[0])
    if p.gamma == 0 or p.t == 0:
        return DensityMatrix(r, check=False)
    damping = np.exp(-2.0 * p.gamma * p.t * hamming_distances(n))
    return DensityMatrix(r * damping, check=False)


def _dissipator(rho: np.ndarray, ops: Sequence[np.ndarray]) -> np.ndarray:
    out = np.zeros_like(rho)
    for op in ops:
        op_dag = op.conj().T
        ldl = op_dag @ op
        out += op @ rho @ op_dag - 0.5 * (ldl @ rho + rho @ ldl)
    return out


def lindblad_evolve(
    rho: StateLike, p: DephasingParams, steps: int, trace_check: bool = True
) -> DensityMatrix:
    """Integrate the local sigma_z dephasing master equation with classic RK4.

    Used as an independent oracle for :func:`dephase`. ``steps`` must satisfy
    ``gamma * t / steps <= 0.01``.
    """
    if steps <= 0:
        raise ValueError("steps must be positive")
    if p.gamma * p.t / steps > 0.01:
        raise ValueError(
            f"step too coarse: gamma*t/steps = {p.gamma * p.t / steps:.3g} > 0.01"
        )
    r = np.array(as_array(rho), dtype=complex)
    n = num_qubits_for(r.shape[0])
    ops = [np.sqrt(p.gamma) * single_site(PAULI_Z, j, n) for j in range(n)]
    dt = p.t / steps
    for _ in range(steps):
        k1 = _dissipator(r, ops)
        k2 = _dissipator(r + 0.5 * dt * k1, ops)
        k3 = _dissipator(r + 0.5 * dt * k2, ops)
        k4 = _dissipator(r + dt * k3, ops)
        r = r + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if trace_check and abs(np.trace(r).real - 1.0) > 1e-9:
            raise FloatingPointError("trace drifted during integration")
    return DensityMatrix((r + r.conj().T) / 2, check=False)


def ising_hamiltonian(p: IsingParams) -> np.ndarray:
    n = p.n_qubits
    xs = [single_site(PAULI_X, k, n) for k in range(n)]
    j = p.couplings()
    h = np.zeros((2**n, 2**n), dtype=complex)
    for k in range(n):
        for l in range(k + 1, n):
            h += j[k, l] * (xs[k] @ xs[l])
        h += p.omega * xs[k]
    return h


def disorder_hamiltonian(fields: np.ndarray) -> np.ndarray:
    """Diagonal matrix sum_j fields[j] Z_j."""
    fields = np.asarray(fields, dtype=float)
    n = fields.shape[0]
    s = np.arange(2**n)
    diag = np.zeros(2**n)
    for j in range(n):
        bit = (s >> (n - 1 - j)) & 1
        diag += fields[j] * (1 - 2 * bit)
    return np.diag(diag).astype(complex)


def dephased_ghz(n_qubits: int, coherence: float) -> DensityMatrix:
    """GHZ state whose |0..0><1..1| coherence is scaled by ``coherence``."""
    if n_qubits < 1:
        raise ValueError("need at least one qubit")
    d = 2**n_qubits
    rho = np.zeros((d, d), dtype=complex)
    rho[0, 0] = rho[-1, -1] = 0.5
    rho[0, -1] = rho[-1, 0] = 0.5 * coherence
    return DensityMatrix(rho)
