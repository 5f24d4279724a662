"""From randomized measurements to a sub-QFI: d_theta sweep, polynomial fit,
entanglement witness and sample-complexity search."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

from randqfi.metrics import StateFamily, bures_from_superfidelity, modified_bures_distance
from randqfi.randmeas import (
    STREAM_SHOTS,
    EnsembleSpec,
    MeasurementRecord,
    StateVectors,
    TraceTerms,
    bootstrap_indices,
    draw_setting,
    overlap_terms,
    sample_frequencies,
    setting_rng,
)

log = logging.getLogger(__name__)

DEFAULT_GRID = np.linspace(0.05, 0.4, 8)
DEFAULT_BOOTSTRAP = 500


class FitError(ValueError):
    """Degenerate design matrix or too few sweep points."""


# ------------------------------------------------------------ probabilities


@dataclass(frozen=True)
class StateBasis:
    """Several states expressed through one shared set of vectors.

    ``weights[s, v]`` is the weight of ``|vectors[v]><vectors[v]|`` in state s.
    Rotating the vectors once per random setting gives the outcome
    distributions of every state.
    """

    vectors: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_states(cls, states: Sequence[StateVectors]) -> "StateBasis":
        vecs = np.concatenate([s.vectors for s in states], axis=0)
        w = np.zeros((len(states), len(vecs)))
        start = 0
        for i, s in enumerate(states):
            w[i, start : start + len(s.weights)] = s.weights
            start += len(s.weights)
        return cls(vecs, w)


def basis_probabilities(
    vectors: np.ndarray, ensemble: EnsembleSpec, seed: int, start: int, stop: int
) -> np.ndarray:
    """|U v|^2 for each vector and each setting index in [start, stop); shape (n, V, D)."""
    out = np.empty((stop - start,) + vectors.shape)
    for row, i in enumerate(range(start, stop)):
        out[row] = np.abs(draw_setting(ensemble, seed, i).apply(vectors)) ** 2
    return out


def state_probabilities(
    basis: StateBasis,
    ensemble: EnsembleSpec,
    n_unitaries: int,
    seed: int,
    shots: Optional[int] = None,
    start: int = 0,
) -> np.ndarray:
    """Outcome distributions, shape (n, S, D); empirical frequencies if ``shots``."""
    q = basis_probabilities(basis.vectors, ensemble, seed, start, start + n_unitaries)
    p = np.clip(np.einsum("sv,nvd->nsd", basis.weights, q), 0.0, None)
    p /= p.sum(axis=-1, keepdims=True)
    if shots is None:
        return p
    out = np.empty_like(p)
    for row in range(p.shape[0]):
        rng = setting_rng(seed, start + row, STREAM_SHOTS)
        for s in range(p.shape[1]):
            out[row, s] = sample_frequencies(p[row, s], shots, rng)
    return out


# -------------------------------------------------------------------- sweep


@dataclass
class SweepResult:
    """Estimated D_G between rho(theta0) and rho(theta0 + d_theta) over a grid.

    ``dg_bootstrap`` holds one row of D_G values per bootstrap resample of the
    random unitaries (shared across grid points), used by the fit for error
    inflation. ``dg_errors`` are bootstrap standard deviations.
    """

    dtheta_grid: np.ndarray
    dg_values: np.ndarray
    dg_errors: np.ndarray
    n_unitaries: int
    theta0: float = 0.0
    dg_bootstrap: Optional[np.ndarray] = field(default=None, repr=False)
    method: str = "randomized, bootstrap over unitaries"

    def __post_init__(self):
        g = np.asarray(self.dtheta_grid, dtype=float)
        if g.ndim != 1 or g.size == 0:
            raise ValueError("empty d_theta grid")
        if not (len(self.dg_values) == len(self.dg_errors) == g.size):
            raise ValueError("grid, values and errors must have equal length")
        if np.any(g <= 0) or np.any(np.diff(g) <= 0):
            raise ValueError("d_theta grid must be positive and strictly increasing")
        self.dtheta_grid = g
        self.dg_values = np.asarray(self.dg_values, dtype=float)
        self.dg_errors = np.asarray(self.dg_errors, dtype=float)


def _check_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise ValueError("empty d_theta grid")
    if np.any(g <= 0) or np.any(np.diff(g) <= 0):
        raise ValueError("d_theta grid must be positive and strictly increasing")
    return g


def sweep_from_terms(
    grid,
    terms: Sequence[TraceTerms],
    theta0: float = 0.0,
    n_boot: int = DEFAULT_BOOTSTRAP,
    seed: int = 0,
) -> SweepResult:
    """Assemble D_G = 8(1 - sqrt(g)) per grid point from per-setting trace terms."""
    grid = _check_grid(grid)
    n = len(terms[0].ab)
    dg = np.array([bures_from_superfidelity(t.superfidelity()) for t in terms])
    if n_boot > 0 and n > 1:
        idx = bootstrap_indices(n, n_boot, seed)
        boot = np.stack([bures_from_superfidelity(t.superfidelity(idx)) for t in terms], axis=1)
        err = boot.std(axis=0, ddof=1)
    else:
        boot = None
        err = np.zeros_like(dg)
    return SweepResult(grid, dg, err, n, theta0, boot)


def sweep_dg(
    family: StateFamily,
    theta0: float,
    grid,
    ensemble: EnsembleSpec,
    n_unitaries: int,
    seed: int,
    shots: Optional[int] = None,
    n_boot: int = DEFAULT_BOOTSTRAP,
) -> SweepResult:
    """Randomized-measurement estimate of D_G(rho(theta0), rho(theta0 + d)) for d in grid.

    The same random settings measure the reference state and every shifted
    state.
    """
    grid = _check_grid(grid)
    if n_unitaries < 2:
        raise ValueError("need at least two random unitaries")
    states = [StateVectors.from_state(family(theta0))]
    states += [StateVectors.from_state(family(theta0 + d)) for d in grid]
    basis = StateBasis.from_states(states)
    p = state_probabilities(basis, ensemble, n_unitaries, seed, shots)
    n_q = ensemble.n_qubits
    ref = p[:, 0]
    aa = overlap_terms(ref, ref, n_q, ensemble.kind)
    terms = []
    for k in range(len(grid)):
        pb = p[:, k + 1]
        ab = overlap_terms(ref, pb, n_q, ensemble.kind)
        terms.append(TraceTerms(ab, aa, overlap_terms(pb, pb, n_q, ensemble.kind)))
    return sweep_from_terms(grid, terms, theta0, n_boot, seed)


def exact_sweep(family: StateFamily, theta0: float, grid) -> SweepResult:
    """Noise-free D_G curve from the density matrices themselves."""
    grid = _check_grid(grid)
    ref = family(theta0)
    dg = np.array([modified_bures_distance(ref, family(theta0 + d)) for d in grid])
    return SweepResult(grid, dg, np.zeros_like(dg), 1, theta0, None, "exact density matrices")


def sweep_from_records(records: Sequence[MeasurementRecord], n_boot: int = DEFAULT_BOOTSTRAP, seed: int = 0) -> SweepResult:
    """Group records by ``dtheta`` (same unitary indices per group) and build a sweep."""
    groups: dict = {}
    for r in records:
        if r.dtheta is None:
            raise ValueError("records need a dtheta field to form a sweep")
        groups.setdefault(float(r.dtheta), []).append(r)
    grid = sorted(groups)
    n_q = records[0].num_qubits
    kind = records[0].ensemble
    terms = []
    index_sets = []
    for d in grid:
        rs = sorted(groups[d], key=lambda r: r.unitary_index)
        index_sets.append([r.unitary_index for r in rs])
        if any(r.probabilities_b is None for r in rs):
            raise ValueError("records are missing the second state's probabilities")
        pa = np.array([r.probabilities_a for r in rs])
        pb = np.array([r.probabilities_b for r in rs])
        terms.append(TraceTerms.from_probabilities(pa, pb, n_q, kind))
    if any(ix != index_sets[0] for ix in index_sets):
        raise ValueError("every d_theta group must use the same unitary indices")
    return sweep_from_terms(grid, terms, 0.0, n_boot, seed)


# ---------------------------------------------------------------------- fit


@dataclass(frozen=True)
class FitResult:
    sub_qfi: float
    coefficients: np.ndarray
    sub_qfi_error: float
    residual_norm: float
    powers: tuple = (2, 3, 4)


def _design(grid: np.ndarray, powers) -> np.ndarray:
    return np.stack([grid**p for p in powers], axis=1)


def fit_quadratic(sweep: SweepResult, max_power: int = 4, weighted: bool = True) -> FitResult:
    """Least-squares fit of D_G = c2 d^2 + c3 d^3 + ... + c_max d^max.

    No constant or linear term: D_G vanishes quadratically at d = 0. The
    sub-QFI is c2. Points are weighted by 1/sigma^2 when every bootstrap error
    is positive; the reported error is the larger of the covariance estimate
    and the spread of c2 refitted on each bootstrap resample.
    """
    powers = tuple(range(2, max_power + 1))
    grid = sweep.dtheta_grid
    m = len(grid)
    if m < 4 or m < len(powers):
        raise FitError(f"need at least {max(4, len(powers))} grid points, got {m}")
    a = _design(grid, powers)
    if np.linalg.matrix_rank(a) < len(powers):
        raise FitError("degenerate d_theta grid")
    err = sweep.dg_errors
    use_w = weighted and np.all(np.isfinite(err)) and np.all(err > 0)
    w = 1.0 / err if use_w else np.ones(m)
    aw = a * w[:, None]
    pinv = np.linalg.pinv(aw)
    coef = pinv @ (sweep.dg_values * w)
    resid = sweep.dg_values - a @ coef
    rnorm = float(np.linalg.norm(resid))
    cov_inv = np.linalg.inv(aw.T @ aw)
    if use_w:
        cov = cov_inv
    else:
        dof = m - len(powers)
        s2 = rnorm**2 / dof if dof > 0 else 0.0
        cov = s2 * cov_inv
    sigma = float(np.sqrt(max(cov[0, 0], 0.0)))
    if sweep.dg_bootstrap is not None:
        boot_coef = (sweep.dg_bootstrap * w[None, :]) @ pinv.T
        sigma = max(sigma, float(np.std(boot_coef[:, 0], ddof=1)))
    return FitResult(float(coef[0]), coef, sigma, rnorm, powers)


def single_point_sub_qfi(sweep: SweepResult, index: int = 0) -> tuple:
    """(D_G / d^2, error / d^2) at one grid point, the truncated definition."""
    d = sweep.dtheta_grid[index]
    return sweep.dg_values[index] / d**2, sweep.dg_errors[index] / d**2


# ------------------------------------------------------------------ witness


@dataclass(frozen=True)
class WitnessResult:
    qfi_density: float
    m_witnessed: int
    n_qubits: int

    @property
    def entanglement_depth(self) -> int:
        """Smallest k such that the state is certified k-partite entangled."""
        return self.m_witnessed + 1


def witness(qfi_value: float, n_qubits: int) -> WitnessResult:
    """Largest m with F/N > m (strict), clamped to [0, N-1]."""
    if qfi_value < 0:
        raise ValueError("QFI must be non-negative")
    if n_qubits < 1:
        raise ValueError("need at least one qubit")
    density = qfi_value / n_qubits
    fl = np.floor(density)
    m = int(fl) - 1 if density == fl else int(fl)
    return WitnessResult(float(density), min(max(m, 0), n_qubits - 1), n_qubits)


# ------------------------------------------------------- sample complexity


class TermPool:
    """Lazily grown per-setting trace terms for fixed state pairs.

    Setting ``i`` always comes from the same sub-seed, so growing the pool
    never changes earlier entries.
    """

    def __init__(
        self,
        basis: StateBasis,
        pairs: Sequence[tuple],
        ensemble: EnsembleSpec,
        seed: int,
        shots: Optional[int] = None,
        chunk: int = 256,
    ):
        self.shots = shots
        self.basis = basis
        self.pairs = list(pairs)
        self.ensemble = ensemble
        self.seed = seed
        self.chunk = chunk
        self._ab = [np.empty(0) for _ in self.pairs]
        self._aa = [np.empty(0) for _ in self.pairs]
        self._bb = [np.empty(0) for _ in self.pairs]

    def __len__(self) -> int:
        return len(self._ab[0])

    def ensure(self, size: int) -> None:
        n_q, kind = self.ensemble.n_qubits, self.ensemble.kind
        while len(self) < size:
            start = len(self)
            stop = min(size, start + self.chunk)
            p = state_probabilities(
                self.basis, self.ensemble, stop - start, self.seed, self.shots, start
            )
            for k, (a, b) in enumerate(self.pairs):
                t = TraceTerms.from_probabilities(p[:, a], p[:, b], n_q, kind)
                self._ab[k] = np.concatenate([self._ab[k], t.ab])
                self._aa[k] = np.concatenate([self._aa[k], t.aa])
                self._bb[k] = np.concatenate([self._bb[k], t.bb])

    def terms(self, pair: int, start: int, stop: int) -> TraceTerms:
        self.ensure(stop)
        return TraceTerms(
            self._ab[pair][start:stop], self._aa[pair][start:stop], self._bb[pair][start:stop]
        )


def mean_relative_error(
    pool: TermPool, pair: int, n: int, reps: int, dtheta: float, target: float
) -> float:
    """Average |F_est - target| / target over ``reps`` disjoint blocks of n settings."""
    errs = []
    for r in range(reps):
        t = pool.terms(pair, r * n, (r + 1) * n)
        est = bures_from_superfidelity(t.superfidelity()) / dtheta**2
        errs.append(abs(est - target) / target)
    return float(np.mean(errs))


@dataclass(frozen=True)
class RequiredN:
    n_qubits: int
    n: int
    mean_relative_error: float
    converged: bool


def search_required_n(
    error_at: Callable[[int], float],
    epsilon: float,
    n_min: int = 8,
    n_ceiling: int = 1 << 14,
) -> tuple:
    """Smallest n with error_at(n) < epsilon: doubling from n_min, then bisection.

    Returns (n, error, converged); when the ceiling is hit, (ceiling, error, False).
    """
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    n = n_min
    err = error_at(n)
    if err < epsilon:
        return n, err, True
    lo = n
    while True:
        hi = min(2 * lo, n_ceiling)
        err_hi = error_at(hi)
        if err_hi < epsilon:
            break
        if hi >= n_ceiling:
            return n_ceiling, err_hi, False
        lo = hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        err_mid = error_at(mid)
        if err_mid < epsilon:
            hi, err_hi = mid, err_mid
        else:
            lo = mid
    return hi, err_hi, True


def required_measurements(
    pools: dict,
    epsilon: float,
    dtheta: float,
    targets: dict,
    reps: int = 20,
    n_min: int = 8,
    n_ceiling: int = 1 << 14,
    pair: int = 0,
) -> list:
    """Per-N smallest number of random unitaries reaching mean relative error < epsilon.

    ``pools[N]`` is a :class:`TermPool`, ``targets[N]`` the exact value the
    estimate D_G(d_theta)/d_theta^2 is compared against.
    """
    out = []
    for n_q in sorted(pools):
        pool = pools[n_q]

        def error_at(n, pool=pool, n_q=n_q):
            return mean_relative_error(pool, pair, n, reps, dtheta, targets[n_q])

        n, err, ok = search_required_n(error_at, epsilon, n_min, n_ceiling)
        if not ok:
            log.warning("N=%d: no convergence below n=%d (error %.3f)", n_q, n_ceiling, err)
        out.append(RequiredN(n_q, n, err, ok))
    return out


@dataclass(frozen=True)
class ExponentialFit:
    """log2 n = a + b N with standard errors."""

    a: float
    b: float
    a_error: float
    b_error: float


def fit_exponential(n_qubits: Sequence[int], counts: Sequence[int]) -> ExponentialFit:
    x = np.asarray(n_qubits, dtype=float)
    y = np.log2(np.asarray(counts, dtype=float))
    if len(x) < 3:
        raise FitError("need at least three points for an exponential fit")
    res = stats.linregress(x, y)
    return ExponentialFit(float(res.intercept), float(res.slope), float(res.intercept_stderr), float(res.stderr))
