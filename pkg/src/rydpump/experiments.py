"""Experiment runs and their tabular outputs."""
from __future__ import annotations

import csv
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__, qops
from .config import ExperimentConfig, config_from_dict
from .ising import SpinModel, af_ground_population, ground_manifold, spectrum
from .lindblad import MasterEquationRun, bell_fidelity, propagate
from .mcwf import TrajectoryEnsemble, TrajectorySpec, default_dt, run_ensemble, steady_state
from .model import PumpParams, site_levels
from .rates import RateModelParams, ising_coupling, paf_equilibrium, paf_limit, pump_rates


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[tuple] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)
    children: dict[str, "ResultTable"] = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    def write(self, path: str | Path) -> list[Path]:
        """Write CSV plus a ``.json`` metadata sidecar; children get suffixed names."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(self.columns)
            for row in self.rows:
                w.writerow([_fmt(v) for v in row])
        sidecar = path.with_suffix(".json")
        sidecar.write_text(json.dumps(_jsonable(self.metadata), indent=2, sort_keys=True) + "\n")
        written = [path, sidecar]
        for name, child in self.children.items():
            written += child.write(path.with_name(f"{path.stem}_{name}{path.suffix}"))
        return written


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _metadata(cfg: ExperimentConfig, **extra) -> dict[str, Any]:
    meta = {
        "artifact": "rydpump",
        "version": __version__,
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "source": cfg.source,
        "config": cfg.to_dict(),
        "resolved": cfg.resolved(),
    }
    meta.update(extra)
    return meta


def _ground_states(n_sites: int) -> list[str]:
    return ["".join(s) for s in itertools.product("12", repeat=n_sites)]


# -- master equation -----------------------------------------------------

def master_trace(cfg: ExperimentConfig, params: PumpParams) -> ResultTable:
    geo = cfg.geometry()
    t_final = cfg.t_final(params)
    n = int(cfg.run.get("n_samples", 200))
    labels = _ground_states(geo.n_sites)
    idx = [qops.basis_index(s) for s in labels]
    ryd = np.flatnonzero(site_levels(geo.n_sites).max(axis=1) >= 2)
    obs = {f"p_{s}": (lambda rho, i=i: rho[i, i].real) for s, i in zip(labels, idx)}
    obs["p_rydberg"] = lambda rho: float(np.diag(rho).real[ryd].sum())
    if geo.n_sites == 2:
        obs["f_bell"] = lambda rho: bell_fidelity(rho)[0]
        obs["singlet_overlap"] = lambda rho: bell_fidelity(rho)[1]
    rho0 = qops.density_matrix(qops.ket(cfg.initial_labels()))
    rec = propagate(MasterEquationRun(params, geo, rho0, t_final, t_final / n, obs))
    cols = ["t_us", "t_omega_r"] + list(obs)
    rows = [
        (t, t * params.omega_r, *(float(np.real(rec.values[k][i])) for k in obs))
        for i, t in enumerate(rec.times)
    ]
    return ResultTable(cols, rows, {"delta33": params.delta33, "t_final_us": t_final})


def _fig2_point(cfg_dict: dict, nu33: float) -> tuple:
    cfg = config_from_dict(cfg_dict)
    p = cfg.pump_params(delta33_mhz=nu33)
    geo = cfg.geometry()
    t_final = cfg.t_final(p)
    n = int(cfg.run.get("n_samples", 200))
    rho0 = qops.density_matrix(qops.ket(cfg.initial_labels()))
    rec = propagate(MasterEquationRun(p, geo, rho0, t_final, t_final / n))
    f, overlap = bell_fidelity(rec.final_state)
    paf = paf_equilibrium(RateModelParams.from_pump(p))
    return (nu33, p.omega_r, t_final, paf, f, overlap)


def run_fig2_sweep(cfg: ExperimentConfig, jobs: int = 1) -> ResultTable:
    """Rate-model P_AF against master-equation singlet fidelity over Delta33."""
    grid = cfg.sweep_values("delta33_mhz") if "delta33_mhz" in cfg.sweep else np.array([])
    cols = ["delta33_mhz", "omega_r", "t_final_us", "p_af", "f_bell", "singlet_overlap"]
    d = cfg.to_dict()
    if jobs > 1 and len(grid) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_fig2_point, itertools.repeat(d), grid))
    else:
        rows = [_fig2_point(d, nu) for nu in grid]
    table = ResultTable(cols, rows, _metadata(cfg, grid_mhz=grid))
    nu_trace = cfg.run.get("trace_at_delta33_mhz")
    if nu_trace is not None:
        table.children["trace"] = master_trace(cfg, cfg.pump_params(delta33_mhz=nu_trace))
        table.children["trace"].metadata = _metadata(cfg, trace_delta33_mhz=nu_trace)
    return table


def run_master(cfg: ExperimentConfig) -> ResultTable:
    table = master_trace(cfg, cfg.pump_params())
    table.metadata = _metadata(cfg, t_final_us=table.metadata["t_final_us"])
    return table


# -- trajectories --------------------------------------------------------

def ensemble_for(cfg: ExperimentConfig, params: PumpParams, jobs: int = 1,
                 seed: int | None = None) -> TrajectoryEnsemble:
    geo = cfg.geometry()
    t_final = cfg.t_final(params)
    dt = float(cfg.run["dt_us"]) if "dt_us" in cfg.run else default_dt(params, geo)
    n_steps = max(1, int(round(t_final / dt)))
    every = max(1, n_steps // int(cfg.run.get("n_samples", 200)))
    template = TrajectorySpec(
        params=params,
        geometry=geo,
        initial=qops.ket(cfg.initial_labels()),
        t_final=t_final,
        dt=dt,
        seed=cfg.seed if seed is None else seed,
        sample_every=every,
    )
    return run_ensemble(template, cfg.n_traj, jobs=jobs)


def _steady_window(cfg: ExperimentConfig, params: PumpParams) -> float:
    j = ising_coupling(params.omega_r, params.gamma)
    return cfg.run.get("steady_window_over_j", 2.0) / j


AF_STATES = ("1212", "2121")


def af_steady_state(cfg: ExperimentConfig, params: PumpParams, ens: TrajectoryEnsemble) -> dict:
    a, b = (qops.basis_index(s) for s in AF_STATES)
    window = _steady_window(cfg, params)
    total = steady_state(ens.times, ens.observable([a, b]), window)
    s = slice(np.searchsorted(ens.times, total.t_start), None)
    pa = ens.observable([a])[:, s].mean(axis=1)
    pb = ens.observable([b])[:, s].mean(axis=1)
    diff = pa - pb
    n = ens.n_traj
    return {
        "af_total": total.value,
        "af_total_se": total.std_error,
        "t_start_us": total.t_start,
        "converged": total.converged,
        "p_1212": float(pa.mean()),
        "p_2121": float(pb.mean()),
        "p_1212_se": float(pa.std(ddof=1) / math.sqrt(n)) if n > 1 else float("nan"),
        "p_2121_se": float(pb.std(ddof=1) / math.sqrt(n)) if n > 1 else float("nan"),
        "af_diff": float(diff.mean()),
        "af_diff_se": float(diff.std(ddof=1) / math.sqrt(n)) if n > 1 else float("nan"),
    }


def run_fig3(cfg: ExperimentConfig, jobs: int = 1, seed: int | None = None) -> ResultTable:
    """Populations of |1212> and |2121> on the square plaquette versus time."""
    p = cfg.pump_params()
    ens = ensemble_for(cfg, p, jobs, seed)
    j = ising_coupling(p.omega_r, p.gamma)
    a, b = (qops.basis_index(s) for s in AF_STATES)
    ma, ea = ens.mean_and_error([a])
    mb, eb = ens.mean_and_error([b])
    mt, et = ens.mean_and_error([a, b])
    cols = ["t_us", "t_j", "p_1212", "se_1212", "p_2121", "se_2121", "p_af", "se_af"]
    rows = [(t, t * j, ma[i], ea[i], mb[i], eb[i], mt[i], et[i]) for i, t in enumerate(ens.times)]
    meta = _metadata(cfg, j=j, n_traj=ens.n_traj, mean_jumps=float(ens.per_trajectory_jumps.mean()),
                     steady_state=af_steady_state(cfg, p, ens))
    if seed is not None:
        meta["seed"] = seed
    return ResultTable(cols, rows, meta)


def run_fig3_inset(cfg: ExperimentConfig, jobs: int = 1, seed: int | None = None) -> ResultTable:
    """AF population against B/J from trajectories and from diagonalisation."""
    grid = cfg.sweep_values("b_over_j")
    geo = cfg.geometry()
    cols = ["b_over_j", "omega_g", "af_mcwf", "af_mcwf_se", "af_diag", "converged"]
    rows = []
    for bj in grid:
        p = cfg.pump_params(b_over_j=bj)
        ens = ensemble_for(cfg, p, jobs, seed)
        ss = af_steady_state(cfg, p, ens)
        diag = af_ground_population(SpinModel.from_scale(geo.scale, 1.0, bj))
        rows.append((bj, p.omega_g, ss["af_total"], ss["af_total_se"], diag, ss["converged"]))
    return ResultTable(cols, rows, _metadata(cfg, n_traj=cfg.n_traj))


def triangle_populations(cfg: ExperimentConfig, params: PumpParams, ens: TrajectoryEnsemble) -> list[dict]:
    """Steady ground-basis populations with Rydberg weight projected out.

    At each sample the ground-subspace populations are divided by the
    ground-subspace total (ratio of ensemble means); the plateau average and
    a delta-method standard error are reported per state.
    """
    n_sites = cfg.geometry().n_sites
    labels = _ground_states(n_sites)
    idx = [qops.basis_index(s) for s in labels]
    ground = ens.observable(idx)
    plateau = steady_state(ens.times, ground, _steady_window(cfg, params))
    s = slice(np.searchsorted(ens.times, plateau.t_start), None)
    g_tot = ground[:, s].mean(axis=1)
    n = ens.n_traj
    out = []
    for lab, i in zip(labels, idx):
        g = ens.populations[:, s, i].mean(axis=1)
        ratio = g.mean() / g_tot.mean()
        resid = g - ratio * g_tot
        se = resid.std(ddof=1) / (math.sqrt(n) * g_tot.mean()) if n > 1 else float("nan")
        out.append({
            "state": lab,
            "m": (lab.count("1") - lab.count("2")) / 2,
            "population": float(ratio),
            "std_error": float(se),
            "raw_population": float(g.mean()),
        })
    return out


def run_triangle(cfg: ExperimentConfig, jobs: int = 1, seed: int | None = None) -> ResultTable:
    p = cfg.pump_params()
    ens = ensemble_for(cfg, p, jobs, seed)
    pops = triangle_populations(cfg, p, ens)
    cols = ["state", "m", "population", "std_error", "raw_population"]
    rows = [tuple(d[c] for c in cols) for d in pops]
    return ResultTable(cols, rows, _metadata(cfg, n_traj=ens.n_traj))


def run_mcwf(cfg: ExperimentConfig, jobs: int = 1, seed: int | None = None) -> ResultTable:
    """Ensemble-averaged ground-basis populations versus time."""
    p = cfg.pump_params()
    ens = ensemble_for(cfg, p, jobs, seed)
    n_sites = cfg.geometry().n_sites
    labels = _ground_states(n_sites)
    cols = ["t_us"]
    series = []
    for lab in labels:
        m, e = ens.mean_and_error([qops.basis_index(lab)])
        cols += [f"p_{lab}", f"se_{lab}"]
        series += [m, e]
    ryd = np.flatnonzero(site_levels(n_sites).max(axis=1) >= 2)
    m, e = ens.mean_and_error(ryd)
    cols += ["p_rydberg", "se_rydberg"]
    series += [m, e]
    rows = [(t, *(s[i] for s in series)) for i, t in enumerate(ens.times)]
    return ResultTable(cols, rows, _metadata(cfg, n_traj=ens.n_traj,
                                             mean_jumps=float(ens.per_trajectory_jumps.mean())))


# -- analytic ------------------------------------------------------------

def run_rates(cfg: ExperimentConfig) -> ResultTable:
    grid = cfg.sweep_values("delta33_mhz") if "delta33_mhz" in cfg.sweep else [cfg.physics["delta33_mhz"]]
    cols = ["delta33_mhz", "omega_r", "p_af", "p_af_limit", "r1_in", "r1_out", "r2_in", "r2_out",
            "j", "b_over_j"]
    rows = []
    for nu in grid:
        p = cfg.pump_params(delta33_mhz=nu)
        rp = RateModelParams.from_pump(p)
        paf = paf_equilibrium(rp)
        r = pump_rates(rp, paf)
        j = ising_coupling(rp.omega_r, p.gamma)
        rows.append((nu, rp.omega_r, paf, paf_limit(rp.omega, p.gamma), r.r1_in, r.r1_out,
                     r.r2_in, r.r2_out, j, p.omega_g / j))
    return ResultTable(cols, rows, _metadata(cfg))


def run_ising(cfg: ExperimentConfig) -> ResultTable:
    """Spectrum data of the TFIM on the configured geometry, J = 1."""
    geo = cfg.geometry()
    grid = cfg.sweep_values("b_over_j") if "b_over_j" in cfg.sweep else np.linspace(-10, 0, 15)
    cols = ["b_over_j", "e0", "degeneracy", "e_next", "af_population"]
    rows = []
    for bj in grid:
        model = SpinModel.from_scale(geo.scale, 1.0, float(bj))
        e = spectrum(model)
        w, _ = ground_manifold(model)
        rest = e[len(w):]
        af = af_ground_population(model) if geo.n_sites == 4 else None
        rows.append((bj, e[0], len(w), rest[0] if len(rest) else None, af))
    return ResultTable(cols, rows, _metadata(cfg))


__all__ = [
    "ResultTable", "run_fig2_sweep", "run_master", "run_fig3", "run_fig3_inset", "run_triangle",
    "run_mcwf", "run_rates", "run_ising", "master_trace", "ensemble_for", "af_steady_state",
    "triangle_populations",
]
