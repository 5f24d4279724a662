"""Random-unitary ensembles, simulated measurements and trace estimators.

Every random setting is drawn from its own generator, derived from a master
seed and the setting's index (``SeedSequence(seed, spawn_key=(stream, index))``),
so records are identical whether generated serially, in parallel or out of
order.
"""

from __future__ import annotations

import json
from functools import lru_cache
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from randqfi import constants as C
from randqfi import kernels
from randqfi.dynamics import IsingParams
from randqfi.qstate import (
    DensityMatrix,
    StateLike,
    UnitaryMatrix,
    as_array,
    eig_hermitian,
    num_qubits_for,
)

HAAR_EULER = "haar_single_qubit_euler"
HAAR_LOCAL = "haar_local_product"
HAMILTONIAN = "hamiltonian_evolution"
ENSEMBLE_KINDS = (HAAR_EULER, HAAR_LOCAL, HAMILTONIAN)
LOCAL_KINDS = (HAAR_EULER, HAAR_LOCAL)

# spawn-key streams
STREAM_UNITARY = 0
STREAM_SHOTS = 1
STREAM_BOOTSTRAP = 2


@dataclass(frozen=True)
class EnsembleSpec:
    """Which random unitaries to draw.

    ``haar_single_qubit_euler`` and ``haar_local_product`` draw an independent
    Haar 2x2 unitary per qubit (Euler-angle or direct parametrization);
    ``hamiltonian_evolution`` draws K disorder realisations of
    H_m = sum_j Delta_mj Z_j + H_ising and multiplies exp(-i H_m T).
    """

    kind: str
    n_qubits: int
    K: int = 20
    T: float = 1.0
    delta_std: float = 1.0
    ising: Optional[IsingParams] = None

    def __post_init__(self):
        if self.kind not in ENSEMBLE_KINDS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        if not 1 <= self.n_qubits <= C.MAX_QUBITS:
            raise ValueError(f"n_qubits must be in [1, {C.MAX_QUBITS}]")
        if self.kind == HAMILTONIAN:
            if self.K < 1:
                raise ValueError("K must be >= 1")
            if self.T <= 0:
                raise ValueError("T must be > 0")
            if self.delta_std < 0:
                raise ValueError("delta_std must be >= 0")
            if self.ising is None:
                raise ValueError("hamiltonian_evolution needs Ising parameters")
            if self.ising.n_qubits != self.n_qubits:
                raise ValueError("Ising model size does not match n_qubits")

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "n_qubits": self.n_qubits}
        if self.kind == HAMILTONIAN:
            d.update(
                K=self.K,
                T=self.T,
                delta_std=self.delta_std,
                g=self.ising.g,
                alpha_exp=self.ising.alpha_exp,
                omega=self.ising.omega,
            )
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleSpec":
        if d["kind"] != HAMILTONIAN:
            return cls(d["kind"], int(d["n_qubits"]))
        n = int(d["n_qubits"])
        ising = IsingParams(n, float(d["g"]), float(d["alpha_exp"]), float(d["omega"]))
        return cls(HAMILTONIAN, n, int(d["K"]), float(d["T"]), float(d["delta_std"]), ising)


def setting_rng(seed: int, index: int, stream: int = STREAM_UNITARY) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(stream, int(index))))


# ---------------------------------------------------------------- U(2) pieces


def u2_from_params(lam, theta, phi) -> np.ndarray:
    """2x2 unitary [[cos, -e^{i lam} sin], [e^{i phi} sin, e^{i(phi+lam)} cos]] of theta/2.

    Broadcasts over array arguments; the trailing two axes are the matrix.
    """
    lam, theta, phi = np.broadcast_arrays(*map(np.asarray, (lam, theta, phi)))
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    u = np.empty(lam.shape + (2, 2), dtype=complex)
    u[..., 0, 0] = c
    u[..., 0, 1] = -np.exp(1j * lam) * s
    u[..., 1, 0] = np.exp(1j * phi) * s
    u[..., 1, 1] = np.exp(1j * (phi + lam)) * c
    return u


def draw_haar_u2_params(rng: np.random.Generator, size=None):
    """(lam, theta, phi) giving a Haar-distributed unitary up to global phase."""
    xi = rng.random(size)
    theta = 2 * np.arcsin(np.sqrt(xi))
    lam = rng.uniform(0, 2 * np.pi, size)
    phi = rng.uniform(0, 2 * np.pi, size)
    return lam, theta, phi


def rx(angle) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry(angle) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def euler_unitary(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """R_x(alpha) R_y(beta) R_x(gamma)."""
    return rx(alpha) @ ry(beta) @ rx(gamma)


_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def euler_angles(u: np.ndarray) -> tuple:
    """Angles (alpha, beta, gamma) with R_x(alpha) R_y(beta) R_x(gamma) = u up to phase.

    Conjugating by a Hadamard maps the x-y-x decomposition onto the standard
    z-y-z one: H R_x(a) H = R_z(a) and H R_y(b) H = R_y(-b).
    """
    u = np.asarray(u, dtype=complex)
    v = u / np.sqrt(np.linalg.det(u))
    w = _HADAMARD @ v @ _HADAMARD
    # w = [[e^{-i(a+c)/2} cos(b/2), -e^{-i(a-c)/2} sin(b/2)],
    #      [e^{i(a-c)/2} sin(b/2),   e^{i(a+c)/2} cos(b/2)]]
    b = 2 * np.arctan2(abs(w[1, 0]), abs(w[0, 0]))
    if abs(w[0, 0]) < 1e-12:
        a_plus_c, a_minus_c = 0.0, 2 * np.angle(w[1, 0])
    elif abs(w[1, 0]) < 1e-12:
        a_plus_c, a_minus_c = 2 * np.angle(w[1, 1]), 0.0
    else:
        a_plus_c, a_minus_c = 2 * np.angle(w[1, 1]), 2 * np.angle(w[1, 0])
    a = (a_plus_c + a_minus_c) / 2
    c = (a_plus_c - a_minus_c) / 2
    return float(a), float(-b), float(c)


# ------------------------------------------------------------ random settings


@lru_cache(maxsize=None)
def _z_signs(n_qubits: int) -> np.ndarray:
    s = np.arange(2**n_qubits)
    return np.array([1 - 2 * ((s >> (n_qubits - 1 - j)) & 1) for j in range(n_qubits)], float)


@lru_cache(maxsize=64)
def ising_hadamard_spectrum(p: IsingParams) -> np.ndarray:
    """Diagonal of the Ising Hamiltonian in the Hadamard-rotated basis."""
    x = _z_signs(p.n_qubits)
    j = p.couplings()
    lam = p.omega * x.sum(axis=0)
    for k in range(p.n_qubits):
        for l in range(k + 1, p.n_qubits):
            lam = lam + j[k, l] * x[k] * x[l]
    return lam


@dataclass(frozen=True)
class RandomSetting:
    """One drawn unitary in factored form; ``apply`` acts on row vectors."""

    spec: EnsembleSpec
    index: int
    params: dict = field(compare=False)

    def apply(self, vecs: np.ndarray) -> np.ndarray:
        vecs = np.atleast_2d(np.asarray(vecs, dtype=complex))
        if self.spec.kind in LOCAL_KINDS:
            return kernels.apply_local(vecs, self.params["factors"])
        diags = self.params["fields"] @ _z_signs(self.spec.n_qubits)
        xspec = ising_hadamard_spectrum(self.spec.ising)
        return kernels.evolve(vecs, diags, xspec, self.spec.T)

    def unitary(self) -> UnitaryMatrix:
        d = 2**self.spec.n_qubits
        cols = self.apply(np.eye(d, dtype=complex))
        public = {k: v.tolist() for k, v in self.params.items() if k != "factors"}
        return UnitaryMatrix(cols.T, provenance=self.spec.kind, params=public)


def draw_setting(spec: EnsembleSpec, seed: int, index: int) -> RandomSetting:
    rng = setting_rng(seed, index)
    n = spec.n_qubits
    if spec.kind == HAAR_LOCAL:
        lam, theta, phi = draw_haar_u2_params(rng, n)
        factors = u2_from_params(lam, theta, phi)
        params = {"lambda": lam, "theta": theta, "phi": phi, "factors": factors}
    elif spec.kind == HAAR_EULER:
        lam, theta, phi = draw_haar_u2_params(rng, n)
        angles = np.array([euler_angles(u) for u in u2_from_params(lam, theta, phi)])
        factors = np.array([euler_unitary(*a) for a in angles])
        params = {
            "alpha": angles[:, 0],
            "beta": angles[:, 1],
            "gamma": angles[:, 2],
            "factors": factors,
        }
    else:
        fields = rng.normal(0.0, spec.delta_std, size=(spec.K, n))
        params = {"fields": fields}
    return RandomSetting(spec, index, params)


def sample_unitary(spec: EnsembleSpec, seed: int, index: int = 0) -> UnitaryMatrix:
    """Dense unitary for setting ``index`` of the stream rooted at ``seed``."""
    return draw_setting(spec, seed, index).unitary()


# ------------------------------------------------------------- measurements


@dataclass(frozen=True)
class StateVectors:
    """rho = sum_k weights[k] |vectors[k]><vectors[k]|, rows are eigenvectors."""

    weights: np.ndarray
    vectors: np.ndarray

    @classmethod
    def from_state(cls, rho: StateLike, cutoff: float = C.RANK_CUTOFF) -> "StateVectors":
        sd = eig_hermitian(as_array(rho))
        keep = sd.eigenvalues > cutoff
        return cls(sd.eigenvalues[keep].copy(), sd.eigenvectors[:, keep].T.copy())

    @classmethod
    def pure(cls, psi: np.ndarray) -> "StateVectors":
        psi = np.asarray(psi, dtype=complex)
        return cls(np.ones(1), psi[None, :])


def born_probabilities(setting: RandomSetting, states: Sequence[StateVectors]) -> np.ndarray:
    """Outcome distributions diag(U rho U^dag) for several states under one setting."""
    block = np.concatenate([s.vectors for s in states], axis=0)
    rotated = setting.apply(block)
    out = np.empty((len(states), block.shape[1]))
    start = 0
    for i, s in enumerate(states):
        stop = start + len(s.weights)
        out[i] = s.weights @ (np.abs(rotated[start:stop]) ** 2)
        start = stop
    return np.clip(out, 0.0, None)


def sample_frequencies(probs: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    if shots <= 0:
        raise ValueError("shots must be positive")
    p = np.clip(probs, 0.0, None)
    return rng.multinomial(shots, p / p.sum()) / shots


def measure(
    rho: StateLike,
    u,
    shots: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Computational-basis distribution of U rho U^dag, exact or from ``shots`` draws."""
    r = as_array(rho)
    m = u.entries if isinstance(u, UnitaryMatrix) else np.asarray(u)
    if m.shape != r.shape:
        raise ValueError(f"dimension mismatch: state {r.shape} vs unitary {m.shape}")
    if shots is not None and shots <= 0:
        raise ValueError("shots must be positive")
    probs = np.clip(np.real(np.einsum("ij,jk,ik->i", m, r, m.conj())), 0.0, None)
    if shots is None:
        return probs
    return sample_frequencies(probs, shots, rng or np.random.default_rng())


@dataclass(frozen=True)
class MeasurementRecord:
    """Outcome distributions of one or two states under one random setting."""

    unitary_index: int
    probabilities_a: np.ndarray
    probabilities_b: Optional[np.ndarray] = None
    shots: Optional[int] = None
    ensemble: str = HAAR_LOCAL
    dtheta: Optional[float] = None

    def __post_init__(self):
        for p in (self.probabilities_a, self.probabilities_b):
            if p is None:
                continue
            if np.any(p < 0):
                raise ValueError("probabilities must be non-negative")
            tol = 1e-12 if self.shots else C.PROBABILITY_ATOL
            if abs(p.sum() - 1.0) > tol:
                raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        if self.shots is not None and self.shots <= 0:
            raise ValueError("shots must be positive")
        if self.ensemble not in ENSEMBLE_KINDS:
            raise ValueError(f"unknown ensemble kind {self.ensemble!r}")

    @property
    def num_qubits(self) -> int:
        return num_qubits_for(len(self.probabilities_a))


def simulate_records(
    rho_a: StateLike,
    rho_b: Optional[StateLike],
    spec: EnsembleSpec,
    n_unitaries: int,
    seed: int,
    shots: Optional[int] = None,
    start_index: int = 0,
) -> list:
    """Measure one or two states under the same ``n_unitaries`` random settings."""
    states = [StateVectors.from_state(rho_a)]
    if rho_b is not None:
        states.append(StateVectors.from_state(rho_b))
    records = []
    for i in range(start_index, start_index + n_unitaries):
        probs = born_probabilities(draw_setting(spec, seed, i), states)
        if shots is not None:
            rng = setting_rng(seed, i, STREAM_SHOTS)
            probs = np.array([sample_frequencies(p, shots, rng) for p in probs])
        else:
            probs = probs / probs.sum(axis=1, keepdims=True)
        records.append(
            MeasurementRecord(
                i,
                probs[0],
                probs[1] if rho_b is not None else None,
                shots,
                spec.kind,
            )
        )
    return records


# --------------------------------------------------------------- estimators


@dataclass(frozen=True)
class Estimate:
    value: float
    std_error: float
    n_unitaries: int
    method: str

    def __post_init__(self):
        if not np.isfinite(self.std_error) or self.std_error < 0:
            raise ValueError(f"invalid std_error {self.std_error!r}")
        if self.n_unitaries <= 0:
            raise ValueError("n_unitaries must be positive")


def overlap_terms(pa: np.ndarray, pb: np.ndarray, n_qubits: int, kind: str) -> np.ndarray:
    """Per-setting unbiased estimates of Tr(rho_a rho_b).

    Local ensembles use the Hamming-distance form
    2**N sum_{s,s'} (-2)**(-h(s,s')) P_a(s) P_b(s'); the Hamiltonian-evolution
    ensemble, which approximates a global unitary 2-design, uses
    (D + 1) sum_s P_a(s) P_b(s) - 1.

    Unbiased for exact probabilities and for independently sampled
    frequencies of two different states. With frequencies of a single state
    on both slots (a purity) the diagonal term picks up a
    (1 - sum_s P(s)^2) / shots bias, which is not corrected here.
    """
    pa = np.atleast_2d(pa)
    pb = np.atleast_2d(pb)
    if kind in LOCAL_KINDS:
        return kernels.hamming_form(pa, pb, n_qubits)
    if kind == HAMILTONIAN:
        d = pa.shape[1]
        return (d + 1) * np.einsum("ij,ij->i", pa, pb) - 1.0
    raise ValueError(f"no overlap estimator for ensemble {kind!r}")


def _mean_estimate(x: np.ndarray, method: str) -> Estimate:
    n = len(x)
    se = float(np.std(x, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return Estimate(float(np.mean(x)), se, n, method)


def _stack(records: Sequence[MeasurementRecord], need_b: bool = True):
    if not records:
        raise ValueError("no records")
    kinds = {r.ensemble for r in records}
    if len(kinds) != 1:
        raise ValueError(f"records mix ensembles {sorted(kinds)}")
    if need_b and any(r.probabilities_b is None for r in records):
        raise ValueError("records are missing the second state's probabilities")
    pa = np.array([r.probabilities_a for r in records])
    pb = np.array([r.probabilities_b for r in records]) if need_b else None
    return pa, pb, kinds.pop()



def estimate_fidelity_single_qubit(records: Sequence[MeasurementRecord]) -> Estimate:
    """Tr(rho_a rho_b) = 6 <p_a p_b> - 1 from the outcome-0 probabilities."""
    pa, pb, _ = _stack(records)
    if pa.shape[1] != 2:
        raise ValueError("single-qubit estimator needs N = 1 records")
    terms = 6.0 * pa[:, 0] * pb[:, 0] - 1.0
    return _mean_estimate(terms, "6<p p'>-1, single-qubit random unitaries")


def estimate_overlap(records: Sequence[MeasurementRecord], n_qubits: int) -> Estimate:
    pa, pb, kind = _stack(records)
    if pa.shape[1] != 2**n_qubits:
        raise ValueError("record length does not match n_qubits")
    return _mean_estimate(overlap_terms(pa, pb, n_qubits, kind), f"overlap[{kind}]")


def estimate_purity(
    records: Sequence[MeasurementRecord], n_qubits: int, which: str = "a"
) -> Estimate:
    pa, pb, kind = _stack(records, need_b=(which == "b"))
    p = pa if which == "a" else pb
    if p.shape[1] != 2**n_qubits:
        raise ValueError("record length does not match n_qubits")
    return _mean_estimate(overlap_terms(p, p, n_qubits, kind), f"purity[{kind}]")


def superfidelity_from_means(ov, pur_a, pur_b):
    """Superfidelity assembled from (possibly arrays of) estimated trace moments.

    Sampling noise can push an estimated purity above 1 for (nearly) pure
    states. When both mixedness estimates 1 - Tr rho^2 are negative the
    geometric mean is continued with a minus sign, so that for pure states
    g - 1 ~ Tr(ab) - (Tr a^2 + Tr b^2) / 2 keeps the correlation between the
    overlap and purity estimates; a plain clamp at zero would discard it. With
    opposite signs the term is zero.
    """
    x = 1.0 - np.asarray(pur_a, dtype=float)
    y = 1.0 - np.asarray(pur_b, dtype=float)
    sign = np.where((x < 0) & (y < 0), -1.0, 1.0)
    return ov + sign * np.sqrt(np.maximum(x * y, 0.0))


def bootstrap_indices(n: int, n_boot: int, seed: int, index: int = 0) -> np.ndarray:
    rng = setting_rng(seed, index, STREAM_BOOTSTRAP)
    return rng.integers(0, n, size=(n_boot, n))


@dataclass(frozen=True)
class TraceTerms:
    """Per-setting estimates of Tr(ab), Tr(a^2), Tr(b^2); shape (n,) each."""

    ab: np.ndarray
    aa: np.ndarray
    bb: np.ndarray

    @classmethod
    def from_probabilities(cls, pa, pb, n_qubits, kind) -> "TraceTerms":
        return cls(
            overlap_terms(pa, pb, n_qubits, kind),
            overlap_terms(pa, pa, n_qubits, kind),
            overlap_terms(pb, pb, n_qubits, kind),
        )

    def superfidelity(self, idx: Optional[np.ndarray] = None):
        """Point estimate, or one estimate per bootstrap row of ``idx``."""
        if idx is None:
            return float(superfidelity_from_means(self.ab.mean(), self.aa.mean(), self.bb.mean()))
        return superfidelity_from_means(
            self.ab[idx].mean(axis=-1), self.aa[idx].mean(axis=-1), self.bb[idx].mean(axis=-1)
        )


def estimate_superfidelity(
    records: Sequence[MeasurementRecord],
    n_qubits: int,
    n_boot: int = 500,
    seed: int = 0,
) -> Estimate:
    """Plug-in superfidelity estimate (see ``superfidelity_from_means``) with bootstrap error."""
    pa, pb, kind = _stack(records)
    terms = TraceTerms.from_probabilities(pa, pb, n_qubits, kind)
    value = terms.superfidelity()
    boot = terms.superfidelity(bootstrap_indices(len(records), n_boot, seed))
    return Estimate(value, float(np.std(boot, ddof=1)), len(records), f"superfidelity[{kind}], bootstrap")


# ------------------------------------------------------------------ file I/O

RECORD_FIELDS = (
    "unitary_index",
    "ensemble",
    "num_qubits",
    "dtheta",
    "shots",
    "probabilities_a",
    "probabilities_b",
)


def record_to_json(rec: MeasurementRecord, ensemble_params: Optional[dict] = None) -> str:
    row = {
        "unitary_index": int(rec.unitary_index),
        "ensemble": dict(ensemble_params or {"kind": rec.ensemble}, kind=rec.ensemble),
        "num_qubits": rec.num_qubits,
        "dtheta": rec.dtheta,
        "shots": rec.shots,
        "probabilities_a": [float(x) for x in rec.probabilities_a],
        "probabilities_b": None
        if rec.probabilities_b is None
        else [float(x) for x in rec.probabilities_b],
    }
    return json.dumps(row, separators=(",", ":"))


def record_from_json(line: str) -> MeasurementRecord:
    row = json.loads(line)
    missing = [k for k in ("unitary_index", "ensemble", "probabilities_a") if k not in row]
    if missing:
        raise ValueError(f"record missing fields {missing}")
    unknown = set(row) - set(RECORD_FIELDS)
    if unknown:
        raise ValueError(f"record has unknown fields {sorted(unknown)}")
    ens = row["ensemble"]
    kind = ens["kind"] if isinstance(ens, dict) else ens
    pb = row.get("probabilities_b")
    rec = MeasurementRecord(
        int(row["unitary_index"]),
        np.asarray(row["probabilities_a"], dtype=float),
        None if pb is None else np.asarray(pb, dtype=float),
        row.get("shots"),
        kind,
        row.get("dtheta"),
    )
    if "num_qubits" in row and row["num_qubits"] != rec.num_qubits:
        raise ValueError("num_qubits disagrees with probability vector length")
    return rec


def write_records(
    path, records: Iterable[MeasurementRecord], ensemble_params: Optional[dict] = None
) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(record_to_json(rec, ensemble_params))
            fh.write("\n")


def read_records(path) -> list:
    out = []
    with open(Path(path), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            try:
                out.append(record_from_json(line))
            except (ValueError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return out
