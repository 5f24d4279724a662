"""Kernel dispatch: the compiled extension when built, numpy otherwise.

Set ``RANDQFI_PURE_PYTHON=1`` to force the numpy implementation. Both
backends are importable directly as ``randqfi._kernels`` and
``randqfi._kernels_py`` for benchmarking and cross-checks.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.special import jv

from randqfi import _kernels_py

if os.environ.get("RANDQFI_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from randqfi import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND: str = _impl.BACKEND


def backends() -> dict:
    """All importable kernel modules keyed by backend name."""
    found = {"python": _kernels_py}
    try:
        from randqfi import _kernels

        found["cython"] = _kernels
    except ImportError:
        pass
    return found


def hamming_form(pa: np.ndarray, pb: np.ndarray, n_qubits: int, impl=None) -> np.ndarray:
    pa = np.atleast_2d(pa)
    pb = np.atleast_2d(pb)
    return (impl or _impl).hamming_form(pa, pb, n_qubits)


def apply_local(vecs: np.ndarray, factors: np.ndarray, impl=None) -> np.ndarray:
    return (impl or _impl).apply_local(np.atleast_2d(vecs), np.asarray(factors))


def chebyshev_coefficients(
    half_width: float, center: float, t: float, tol: float = 1e-17
) -> np.ndarray:
    """Expansion weights of exp(-i H t) in Chebyshev polynomials of (H - c)/r."""
    x = half_width * t
    kmax = int(np.ceil(x)) + 60
    k = np.arange(kmax)
    bessel = jv(k, x)
    significant = np.nonzero(np.abs(bessel) > tol)[0]
    last = max(int(significant[-1]) if significant.size else 1, 1)
    k = k[: last + 1]
    coef = 2.0 * (-1j) ** k * bessel[: last + 1]
    coef[0] = bessel[0]
    return coef * np.exp(-1j * center * t)


def evolve(
    vecs: np.ndarray,
    diags: np.ndarray,
    xspec: np.ndarray,
    t: float,
    impl=None,
) -> np.ndarray:
    """Apply prod_m exp(-i H_m t) to each row of ``vecs``, segment 0 first.

    ``H_m = diag(diags[m]) + W diag(xspec) W / D``; the spectrum of H_m lies in
    ``[min(xspec) + min(diags[m]), max(xspec) + max(diags[m])]`` (Weyl), which
    fixes the Chebyshev interval.
    """
    diags = np.atleast_2d(np.asarray(diags, dtype=np.float64))
    xspec = np.asarray(xspec, dtype=np.float64)
    lo = xspec.min() + diags.min(axis=1)
    hi = xspec.max() + diags.max(axis=1)
    centers = (hi + lo) / 2
    halfwidths = np.maximum((hi - lo) / 2, 1e-12)
    coefs = [chebyshev_coefficients(r, c, t) for r, c in zip(halfwidths, centers)]
    nterms = np.array([len(c) for c in coefs], dtype=np.int_)
    table = np.zeros((len(coefs), nterms.max()), dtype=np.complex128)
    for m, c in enumerate(coefs):
        table[m, : len(c)] = c
    return (impl or _impl).evolve_chebyshev(
        np.atleast_2d(vecs), diags, xspec, centers, halfwidths, table, nterms
    )
