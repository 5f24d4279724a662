"""Pure numpy implementations of the hot kernels.

Each function mirrors one in ``_kernels.pyx`` with the same signature and
array layout. Vectors are rows of a C-contiguous ``(r, 2**N)`` array.
"""

import numpy as np

BACKEND = "python"


def fwht(v):
    """Unnormalized Walsh-Hadamard transform along the last axis of ``(r, D)``."""
    r, d = v.shape
    n = d.bit_length() - 1
    out = v
    for axis in range(n):
        out = out.reshape(r, 1 << axis, 2, d >> (axis + 1))
        a = out[:, :, 0, :]
        b = out[:, :, 1, :]
        out = np.stack((a + b, a - b), axis=2)
    return out.reshape(r, d)


def hamming_form(pa, pb, n_qubits):
    """2**N sum_{s,s'} (-2)**(-h(s,s')) pa[s] pb[s'] for each row pair."""
    pa = np.ascontiguousarray(pa, dtype=np.float64)
    pb = np.ascontiguousarray(pb, dtype=np.float64)
    n, d = pb.shape
    q = pb
    for axis in range(n_qubits):
        q = q.reshape(n, 1 << axis, 2, d >> (axis + 1))
        a = q[:, :, 0, :]
        b = q[:, :, 1, :]
        q = np.stack((a - 0.5 * b, b - 0.5 * a), axis=2)
    q = q.reshape(n, d)
    return d * np.einsum("ij,ij->i", pa, q)


def apply_local(vecs, factors):
    """Apply kron(factors[0], ..., factors[N-1]) to each row of ``vecs``."""
    vecs = np.ascontiguousarray(vecs, dtype=np.complex128)
    r, d = vecs.shape
    n = factors.shape[0]
    out = vecs
    for k in range(n):
        out = out.reshape(r, 1 << k, 2, d >> (k + 1))
        out = np.einsum("ab,ibj->iaj", factors[k], out.reshape(r * (1 << k), 2, -1))
    return np.ascontiguousarray(out.reshape(r, d))


def evolve_chebyshev(vecs, diags, xspec, centers, halfwidths, coeffs, nterms):
    """Propagate rows of ``vecs`` through K segments exp(-i H_m T).

    H_m = diag(diags[m]) + W diag(xspec) W / D with W the Walsh-Hadamard
    matrix. ``coeffs[m, k]`` already carries the Bessel weights, the (-i)^k
    factors and the exp(-i c T) phase of segment m.
    """
    v = np.array(vecs, dtype=np.complex128, order="C")
    d = v.shape[1]
    for m in range(diags.shape[0]):
        c = centers[m]
        inv_r = 1.0 / halfwidths[m]
        diag = diags[m]

        def scaled(x):
            hx = diag * x + fwht(xspec * fwht(x)) / d
            return (hx - c * x) * inv_r

        t_prev = v
        t_cur = scaled(v)
        acc = coeffs[m, 0] * t_prev + coeffs[m, 1] * t_cur
        for k in range(2, nterms[m]):
            t_next = 2.0 * scaled(t_cur) - t_prev
            acc += coeffs[m, k] * t_next
            t_prev, t_cur = t_cur, t_next
        v = acc
    return v
