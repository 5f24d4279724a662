"""Scenario runners producing plot-ready result rows.

Every row carries the randomized estimate next to an exact oracle value.
Outputs depend only on (config, seed): no timestamps, fixed float
formatting, rows in a fixed order.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from randqfi import __version__
from randqfi import dynamics as dy
from randqfi import metrics as me
from randqfi import pipeline as pl
from randqfi import randmeas as rm
from randqfi.qstate import DensityMatrix, jz_eigenvalues, purity

SCHEMA_VERSION = "1"
CSV_COLUMNS = (
    "schema_version",
    "scenario",
    "series",
    "variable",
    "value",
    "quantity",
    "estimate",
    "error",
    "oracle",
    "oracle_kind",
    "audited",
    "n_unitaries",
    "seed",
    "flag",
)
AUDIT_SIGMAS = 5.0
AUDIT_PASS_FRACTION = 0.99


@dataclass(frozen=True)
class ResultRow:
    """One estimate with its exact counterpart.

    ``variable`` names the sweep axis with its unit (``t_us``, ``phi_rad``,
    ``dtheta_rad``, ``n_qubits``, ``t_T``). ``audited`` rows compare an
    estimator with the exact value it targets and enter the self-audit.
    """

    scenario: str
    series: str
    variable: str
    value: float
    quantity: str
    estimate: float
    error: float
    oracle: float
    oracle_kind: str
    audited: bool
    n_unitaries: int
    seed: int
    flag: str = ""


@dataclass
class RunResult:
    scenario: str
    rows: list
    config: dict
    fits: dict = field(default_factory=dict)
    audit: dict = field(default_factory=dict)

    @property
    def audit_passed(self) -> bool:
        return bool(self.audit.get("passed", True))


class NumericalFailure(RuntimeError):
    pass


# ---------------------------------------------------------------- helpers


def _ensemble(cfg: dict, n_qubits: int) -> rm.EnsembleSpec:
    kind = cfg["ensemble"]
    if kind != rm.HAMILTONIAN:
        return rm.EnsembleSpec(kind, n_qubits)
    ising = dy.IsingParams(n_qubits, cfg["coupling_g_per_T"], cfg["alpha_exp"], cfg["omega_per_T"])
    return rm.EnsembleSpec(
        rm.HAMILTONIAN,
        n_qubits,
        K=cfg["segments_K"],
        T=cfg["segment_time_T"],
        delta_std=cfg["disorder_std_per_T"],
        ising=ising,
    )


def _shots(cfg: dict) -> Optional[int]:
    return cfg["shots"] or None


def _row(cfg, scenario, series, variable, value, quantity, est, err, oracle, kind, audited, n, flag=""):
    return ResultRow(
        scenario,
        series,
        variable,
        float(value),
        quantity,
        float(est),
        float(err),
        float(oracle),
        kind,
        bool(audited),
        int(n),
        int(cfg["seed"]),
        flag,
    )


def _reference_purity(family, theta0, cfg, ensemble, sub_seed: int) -> rm.Estimate:
    records = rm.simulate_records(
        family(theta0), None, ensemble, cfg["n_unitaries"], sub_seed, _shots(cfg)
    )
    return rm.estimate_purity(records, ensemble.n_qubits)


def _fit_point(family, theta0, cfg, ensemble, sub_seed):
    sweep = pl.sweep_dg(
        family,
        theta0,
        cfg["dtheta_grid_rad"],
        ensemble,
        cfg["n_unitaries"],
        sub_seed,
        _shots(cfg),
        cfg["n_bootstrap"],
    )
    return sweep, pl.fit_quadratic(sweep, cfg["fit_max_power"])


def _sub_seed(seed: int, *key: int) -> int:
    """Independent integer seed for one sweep point, stable under reordering."""
    return int(np.random.SeedSequence(seed, spawn_key=(99,) + key).generate_state(1, np.uint64)[0] >> 1)


# --------------------------------------------------------------- ramsey


def run_ramsey_qfi_vs_time(cfg: dict) -> RunResult:
    scen = "ramsey_qfi_vs_time"
    delta, t2, phi = cfg["delta_rad_per_us"], cfg["t2star_us"], cfg["phi_rad"]
    ens = _ensemble(cfg, 1)
    rows = []
    for k, t in enumerate(cfg["times_us"]):
        family = dy.ramsey_family(phi, t, t2)
        theta0 = delta * t
        seed = _sub_seed(cfg["seed"], k)
        sweep, fit = _fit_point(family, theta0, cfg, ens, seed)
        qfi = math.sin(phi) ** 2 * math.exp(-2 * (t / t2) ** 2)
        rows.append(_row(cfg, scen, "", "t_us", t, "qfi", fit.sub_qfi, fit.sub_qfi_error, qfi, "exact_qfi", True, sweep.n_unitaries))
        pur = _reference_purity(family, theta0, cfg, ens, seed)
        rows.append(_row(cfg, scen, "", "t_us", t, "purity", pur.value, pur.std_error, purity(family(theta0)), "exact_purity", True, pur.n_unitaries))
    return RunResult(scen, rows, cfg)


def run_ramsey_qfi_vs_phi(cfg: dict) -> RunResult:
    scen = "ramsey_qfi_vs_phi"
    delta, t2, t = cfg["delta_rad_per_us"], cfg["t2star_us"], cfg["t_fixed_us"]
    ens = _ensemble(cfg, 1)
    rows = []
    for k, phi in enumerate(cfg["phi_grid_rad"]):
        family = dy.ramsey_family(phi, t, t2)
        theta0 = delta * t
        sweep, fit = _fit_point(family, theta0, cfg, ens, _sub_seed(cfg["seed"], k))
        qfi = math.sin(phi) ** 2 * math.exp(-2 * (t / t2) ** 2)
        rows.append(_row(cfg, scen, "", "phi_rad", phi, "qfi", fit.sub_qfi, fit.sub_qfi_error, qfi, "exact_qfi", True, sweep.n_unitaries))
        # single-qubit phase family: F = 4 |rho_01|^2
        f_pos = max(fit.sub_qfi, 0.0)
        coh = math.sqrt(f_pos) / 2
        coh_err = fit.sub_qfi_error / (4 * coh) if coh > 0 else math.sqrt(fit.sub_qfi_error) / 2
        exact_coh = abs(family(theta0).entries[0, 1])
        rows.append(_row(cfg, scen, "", "phi_rad", phi, "coherence", coh, coh_err, exact_coh, "exact_coherence", False, sweep.n_unitaries))
    return RunResult(scen, rows, cfg)


# ------------------------------------------------------------------ GHZ


def ghz_family(cfg: dict) -> Callable[[float], DensityMatrix]:
    n = cfg["n_qubits"]
    psi = dy.ghz_circuit(n) if cfg["preparation"] == "circuit" else dy.ghz_prepare(n)
    rho = psi.density_matrix().entries
    c = cfg["dephasing_coherence"]
    if c < 1:
        # synthetic global dephasing: shrink every off-diagonal element by c
        rho = c * rho + (1 - c) * np.diag(np.diag(rho))
    return lambda theta: dy.encode_phase(rho, theta, n)


def run_ghz_sweep(cfg: dict) -> RunResult:
    scen = "ghz_sweep"
    n = cfg["n_qubits"]
    ens = _ensemble(cfg, n)
    family = ghz_family(cfg)
    theta0 = cfg["theta0_rad"]
    sweep, fit = _fit_point(family, theta0, cfg, ens, cfg["seed"])
    exact = pl.exact_sweep(family, theta0, sweep.dtheta_grid)
    series = "synthetic_dephasing" if cfg["dephasing_coherence"] < 1 else "ideal"
    rows = []
    for d, est, err, ora in zip(sweep.dtheta_grid, sweep.dg_values, sweep.dg_errors, exact.dg_values):
        rows.append(_row(cfg, scen, series, "dtheta_rad", d, "d_g", est, err, ora, "exact_d_g", True, sweep.n_unitaries))
    sub = me.sub_qfi_exact(family, theta0, 1e-4).value
    qfi = me.exact_qfi_unitary(family(theta0), np.diag(jz_eigenvalues(n))).value
    rows.append(_row(cfg, scen, series, "fit", 0.0, "sub_qfi", fit.sub_qfi, fit.sub_qfi_error, sub, "exact_sub_qfi", True, sweep.n_unitaries))
    w = pl.witness(max(fit.sub_qfi, 0.0), n)
    w_exact = pl.witness(qfi, n)
    rows.append(_row(cfg, scen, series, "fit", 0.0, "entanglement_depth", w.entanglement_depth, 0.0, w_exact.entanglement_depth, "exact_qfi_witness", False, sweep.n_unitaries))
    fits = {
        "sub_qfi": fit.sub_qfi,
        "sub_qfi_error": fit.sub_qfi_error,
        "coefficients": [float(c) for c in fit.coefficients],
        "residual_norm": fit.residual_norm,
        "exact_qfi": qfi,
        "exact_sub_qfi": sub,
        "error_method": sweep.method,
    }
    return RunResult(scen, rows, cfg, {"ghz": fits})


# ------------------------------------------------------------ many-body


def ghz_phase_vectors(n_qubits: int, dtheta: float) -> np.ndarray:
    """GHZ+ and GHZ- at theta = 0 and theta = dtheta under exp(-i theta J_z).

    Any dephased GHZ state is diagonal in {GHZ+, GHZ-}, so these four vectors
    span every state of the many-body scenarios.
    """
    d = 2**n_qubits
    plus = np.zeros(d, dtype=complex)
    plus[0] = plus[-1] = 1 / math.sqrt(2)
    minus = plus.copy()
    minus[-1] *= -1
    jz = jz_eigenvalues(n_qubits)
    return np.array(
        [v * np.exp(-1j * th * jz) for v in (plus, minus) for th in (0.0, dtheta)]
    )


def dephased_ghz_weights(coherence: float) -> np.ndarray:
    """Rows (state at 0, state at dtheta) over the vectors of ``ghz_phase_vectors``."""
    wp, wm = (1 + coherence) / 2, (1 - coherence) / 2
    return np.array([[wp, 0, wm, 0], [0, wp, 0, wm]])


def ghz_coherence(n_qubits: int, gamma: float, t: float) -> float:
    return math.exp(-2 * gamma * t * n_qubits)


def dephased_ghz_family(n_qubits: int, gamma: float, t: float):
    """theta -> exp(-i theta J_z) D_t(GHZ) exp(i theta J_z), via the closed-form channel."""
    rho = dy.dephase(dy.ghz_circuit(n_qubits).density_matrix(), dy.DephasingParams(gamma, t))
    return lambda theta: dy.encode_phase(rho, theta, n_qubits)


def _gammas(cfg) -> list:
    return [g * cfg["coupling_g_per_T"] for g in cfg["gamma_per_g"]]


def _series(gamma_per_g: float) -> str:
    return f"gamma_per_g={gamma_per_g!r}"


def run_manybody_time_evolution(cfg: dict) -> RunResult:
    """Sub-QFI from D_G(d_theta)/d_theta^2 along dephasing of an N-qubit GHZ state.

    One set of random unitaries measures every (gamma, t) point: all states
    are mixtures of the same four vectors.
    """
    scen = "manybody_time_evolution"
    n, dth = cfg["n_qubits"], cfg["dtheta_rad"]
    ens = _ensemble(cfg, n)
    n_u = cfg["n_unitaries"]
    q = pl.basis_probabilities(ghz_phase_vectors(n, dth), ens, cfg["seed"], 0, n_u)
    shots = _shots(cfg)
    idx = rm.bootstrap_indices(n_u, cfg["n_bootstrap"], cfg["seed"]) if cfg["n_bootstrap"] else None
    g_op = np.diag(jz_eigenvalues(n))
    rows = []
    for gpg, gamma in zip(cfg["gamma_per_g"], _gammas(cfg)):
        series = _series(gpg)
        for k, t in enumerate(cfg["times_T"]):
            w = dephased_ghz_weights(ghz_coherence(n, gamma, t))
            p = np.clip(np.einsum("sv,nvd->nsd", w, q), 0.0, None)
            p /= p.sum(axis=-1, keepdims=True)
            if shots:
                p = _sample_shots(p, shots, cfg["seed"], k)
            terms = rm.TraceTerms.from_probabilities(p[:, 0], p[:, 1], n, ens.kind)
            est = float(me.bures_from_superfidelity(terms.superfidelity())) / dth**2
            err = 0.0
            if idx is not None:
                boot = me.bures_from_superfidelity(terms.superfidelity(idx)) / dth**2
                err = float(np.std(boot, ddof=1))
            family = dephased_ghz_family(n, gamma, t)
            sub = me.sub_qfi_exact(family, 0.0, dth).value
            qfi = me.exact_qfi_unitary(family(0.0), g_op).value
            rows.append(_row(cfg, scen, series, "t_T", t, "sub_qfi", est, err, sub, "exact_sub_qfi_dtheta", True, n_u))
            rows.append(_row(cfg, scen, series, "t_T", t, "qfi_density", est / n, err / n, qfi / n, "exact_qfi", False, n_u))
            depth = pl.witness(max(est, 0.0), n).entanglement_depth
            depth_exact = pl.witness(qfi, n).entanglement_depth
            rows.append(_row(cfg, scen, series, "t_T", t, "entanglement_depth", depth, 0.0, depth_exact, "exact_qfi_witness", False, n_u))
    return RunResult(scen, rows, cfg)


def _sample_shots(p: np.ndarray, shots: int, seed: int, point: int) -> np.ndarray:
    out = np.empty_like(p)
    for i in range(p.shape[0]):
        rng = rm.setting_rng(_sub_seed(seed, point), i, rm.STREAM_SHOTS)
        for s in range(p.shape[1]):
            out[i, s] = rm.sample_frequencies(p[i, s], shots, rng)
    return out


def run_manybody_scaling(cfg: dict) -> RunResult:
    """Smallest number of random unitaries reaching mean relative error < epsilon, per N."""
    scen = "manybody_scaling"
    dth = cfg["dtheta_rad"]
    gammas = _gammas(cfg)
    t_mix = cfg["mixed_time_T"]
    pools, targets = {}, [dict() for _ in gammas]
    for n in cfg["n_qubits_list"]:
        weights = np.concatenate(
            [dephased_ghz_weights(ghz_coherence(n, g, t_mix)) for g in gammas]
        )
        basis = pl.StateBasis(ghz_phase_vectors(n, dth), weights)
        pairs = [(2 * i, 2 * i + 1) for i in range(len(gammas))]
        pools[n] = pl.TermPool(basis, pairs, _ensemble(cfg, n), cfg["seed"], _shots(cfg))
        for i, g in enumerate(gammas):
            targets[i][n] = me.sub_qfi_exact(dephased_ghz_family(n, g, t_mix), 0.0, dth).value
    rows, fits = [], {}
    for i, gpg in enumerate(cfg["gamma_per_g"]):
        series = _series(gpg)
        found = pl.required_measurements(
            pools,
            cfg["epsilon"],
            dth,
            targets[i],
            reps=cfg["repetitions"],
            n_min=cfg["n_min"],
            n_ceiling=cfg["n_ceiling"],
            pair=i,
        )
        for r in found:
            flag = "" if r.converged else "not_converged"
            rows.append(_row(cfg, scen, series, "n_qubits", r.n_qubits, "required_n", r.n, 0.0, math.nan, "none", False, r.n, flag))
            rows.append(_row(cfg, scen, series, "n_qubits", r.n_qubits, "mean_relative_error", r.mean_relative_error, 0.0, cfg["epsilon"], "threshold", False, r.n, flag))
        ok = [r for r in found if r.converged]
        if len(ok) >= 3:
            ef = pl.fit_exponential([r.n_qubits for r in ok], [r.n for r in ok])
            fits[series] = asdict(ef)
        else:
            fits[series] = None
    return RunResult(scen, rows, cfg, fits)


# -------------------------------------------------------------- records


def run_estimate_from_records(cfg: dict) -> RunResult:
    scen = "estimate_from_records"
    records = rm.read_records(cfg["records_path"])
    sweep = pl.sweep_from_records(records, cfg["n_bootstrap"], cfg["seed"])
    fit = pl.fit_quadratic(sweep, cfg["fit_max_power"])
    rows = [
        _row(cfg, scen, "", "dtheta_rad", d, "d_g", v, e, math.nan, "none", False, sweep.n_unitaries)
        for d, v, e in zip(sweep.dtheta_grid, sweep.dg_values, sweep.dg_errors)
    ]
    rows.append(_row(cfg, scen, "", "fit", 0.0, "sub_qfi", fit.sub_qfi, fit.sub_qfi_error, math.nan, "none", False, sweep.n_unitaries))
    fits = {
        "sub_qfi": fit.sub_qfi,
        "sub_qfi_error": fit.sub_qfi_error,
        "coefficients": [float(c) for c in fit.coefficients],
        "residual_norm": fit.residual_norm,
    }
    return RunResult(scen, rows, cfg, {"records": fits})


RUNNERS = {
    "ramsey_qfi_vs_time": run_ramsey_qfi_vs_time,
    "ramsey_qfi_vs_phi": run_ramsey_qfi_vs_phi,
    "ghz_sweep": run_ghz_sweep,
    "manybody_scaling": run_manybody_scaling,
    "manybody_time_evolution": run_manybody_time_evolution,
    "estimate_from_records": run_estimate_from_records,
}


# ---------------------------------------------------------------- audit


def self_audit(rows, sigmas: float = AUDIT_SIGMAS, required: float = AUDIT_PASS_FRACTION) -> dict:
    """Fraction of audited rows with |estimate - oracle| <= sigmas * error."""
    checked = [r for r in rows if r.audited]
    if not checked:
        return {"checked": 0, "within": 0, "fraction": 1.0, "passed": True}
    within = sum(
        abs(r.estimate - r.oracle) <= sigmas * r.error + 1e-12 * max(1.0, abs(r.oracle))
        for r in checked
    )
    frac = within / len(checked)
    return {
        "checked": len(checked),
        "within": int(within),
        "fraction": frac,
        "sigmas": sigmas,
        "required_fraction": required,
        "passed": frac >= required,
    }


def run(cfg: dict) -> RunResult:
    result = RUNNERS[cfg["scenario"]](cfg)
    bad = [r for r in result.rows if not (math.isfinite(r.estimate) and math.isfinite(r.error))]
    if bad:
        raise NumericalFailure(f"non-finite estimate in {len(bad)} rows, first: {bad[0]}")
    result.audit = self_audit(result.rows)
    if cfg.get("shots"):
        result.audit["note"] = "finite-shot mode; contract stated for exact probabilities"
    return result


# --------------------------------------------------------------- output


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return repr(x)
    return str(x)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        d = asdict(r)
        w.writerow([SCHEMA_VERSION] + [_fmt(d[c]) for c in CSV_COLUMNS[1:]])
    return buf.getvalue()


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return _json_safe(x.item())
    return x


def summary(result: RunResult, include_rows: bool = False) -> dict:
    out = {
        "schema_version": SCHEMA_VERSION,
        "software_version": __version__,
        "scenario": result.scenario,
        # the output location is not part of the experiment; leaving it out
        # keeps outputs byte-identical wherever they are written
        "config": {k: v for k, v in result.config.items() if k != "output_path"},
        "fits": result.fits,
        "audit": result.audit,
        "error_method": "bootstrap over random unitaries",
    }
    if include_rows:
        out["columns"] = list(CSV_COLUMNS)
        out["rows"] = [
            [SCHEMA_VERSION] + [asdict(r)[c] for c in CSV_COLUMNS[1:]] for r in result.rows
        ]
    return _json_safe(out)


def summary_json(result: RunResult, include_rows: bool = False) -> str:
    return json.dumps(summary(result, include_rows), indent=2, sort_keys=True) + "\n"
