"""Independent reference implementations used only by the tests.

Each oracle takes a different computational route from the library code
(SLD via a Sylvester solve, dense scipy expm, explicit double sums, scipy
sqrtm) so agreement is meaningful.
"""

import itertools

import numpy as np
from scipy import linalg

from randqfi import dynamics as dy


def qfi_sld(rho, d_rho):
    """F = Tr(rho L^2) with L solving rho L + L rho = 2 d_rho (rho full rank)."""
    lsld = linalg.solve_sylvester(rho, rho, 2 * d_rho)
    return float(np.real(np.trace(rho @ lsld @ lsld)))


def superfidelity_direct(a, b):
    pa = np.real(np.trace(a @ a))
    pb = np.real(np.trace(b @ b))
    return float(np.real(np.trace(a @ b)) + np.sqrt(max(0.0, (1 - pa) * (1 - pb))))


def uhlmann_sqrtm(a, b):
    s = linalg.sqrtm(a)
    return float(np.real(np.trace(linalg.sqrtm(s @ b @ s))) ** 2)


def hamming_double_sum(pa, pb, n_qubits):
    d = 2**n_qubits
    total = 0.0
    for s, t in itertools.product(range(d), repeat=2):
        h = bin(s ^ t).count("1")
        total += (-2.0) ** (-h) * pa[s] * pb[t]
    return d * total


def kron_loop(a, b):
    ra, rb = a.shape[0], b.shape[0]
    out = np.zeros((ra * rb, ra * rb), dtype=complex)
    for i, j, k, l in itertools.product(range(ra), range(ra), range(rb), range(rb)):
        out[i * rb + k, j * rb + l] = a[i, j] * b[k, l]
    return out


def quench_unitary_dense(spec, fields):
    """prod_m expm(-i (H_disorder_m + H_ising) T) with segment 0 acting first."""
    h_s = dy.ising_hamiltonian(spec.ising)
    d = h_s.shape[0]
    u = np.eye(d, dtype=complex)
    for f in fields:
        u = linalg.expm(-1j * (dy.disorder_hamiltonian(f) + h_s) * spec.T) @ u
    return u


def lindblad_dense_expm(rho, gamma, t):
    """Vectorised Lindbladian exponential for L_j = sqrt(gamma) Z_j."""
    d = rho.shape[0]
    n = d.bit_length() - 1
    eye = np.eye(d)
    gen = np.zeros((d * d, d * d), dtype=complex)
    z = np.diag([1.0, -1.0])
    for j in range(n):
        zj = np.array([[1.0]])
        for k in range(n):
            zj = np.kron(zj, z if k == j else np.eye(2))
        zj = np.sqrt(gamma) * zj
        zz = zj.conj().T @ zj
        # row-major vec: vec(A X B) = (A kron B^T) vec(X)
        gen += np.kron(zj, zj.conj()) - 0.5 * np.kron(zz, eye) - 0.5 * np.kron(eye, zz.T)
    vec = linalg.expm(gen * t) @ rho.reshape(-1)
    return vec.reshape(d, d)
