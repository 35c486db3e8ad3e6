"""Experiment configuration files.

A config is a JSON object with sections ``experiment``, ``physics``,
``sweep``, ``run`` and ``output``.  Physical inputs are in laboratory units:
frequencies as nu = Omega/2pi in MHz and the Rydberg lifetime in ms.  They
are converted once, here, to rad/us and 1/us.

Physics keys::

    omega_mhz                 Rabi frequency for both 1->3 and 2->4
    omega1_mhz, omega2_mhz    optional per-transition overrides
    lifetime_ms | gamma_per_us
    delta33_mhz               same-state pair shift
    delta34_ratio | delta34_mhz
    delta_mhz                 laser detuning, default delta33/2
    omega_g_mhz | omega_g_over_omega_r | b_over_j
    geometry                  "pair" | "triangle" | "square" | {"scale": [[...]]}
    initial                   level string, default all "1"

Run keys: ``t_final_us`` | ``t_final_rabi_periods`` | ``t_final_over_j``,
``n_samples``, ``dt_us``, ``n_traj``, ``seed``, ``trace_at_delta33_mhz``,
``steady_window_over_j``.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError, InvalidArgumentError
from .model import LatticeGeometry, PumpParams
from .rates import effective_rabi, ising_coupling

EXPERIMENTS = ("fig2_sweep", "fig2_trace", "fig3_trace", "fig3_inset", "triangle", "custom")
TWO_PI = 2 * math.pi


def mhz_to_angular(nu_mhz: float) -> float:
    """nu in MHz -> angular frequency in rad/us."""
    return TWO_PI * nu_mhz


def lifetime_ms_to_gamma(lifetime_ms: float) -> float:
    """Lifetime in ms -> decay rate in 1/us."""
    return 1.0 / (lifetime_ms * 1000.0)


def preset_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("rydpump.presets").iterdir()
                  if p.name.endswith(".json"))


@dataclass
class ExperimentConfig:
    experiment: str
    physics: dict[str, Any]
    sweep: dict[str, Any] = field(default_factory=dict)
    run: dict[str, Any] = field(default_factory=dict)
    output: dict[str, Any] = field(default_factory=dict)
    defaults_applied: list[str] = field(default_factory=list)
    source: str | None = None

    # -- physics ---------------------------------------------------------
    def _get(self, key, default=None):
        return self.physics.get(key, default)

    @property
    def omega(self) -> float:
        return mhz_to_angular(self.physics["omega_mhz"])

    @property
    def gamma(self) -> float:
        if "gamma_per_us" in self.physics:
            return float(self.physics["gamma_per_us"])
        return lifetime_ms_to_gamma(self.physics["lifetime_ms"])

    @property
    def delta33(self) -> float:
        return mhz_to_angular(self.physics["delta33_mhz"])

    def geometry(self) -> LatticeGeometry:
        geo = self._get("geometry", "pair")
        if isinstance(geo, str):
            return LatticeGeometry.preset(geo)
        scale = np.asarray(geo["scale"], dtype=float)
        return LatticeGeometry(len(scale), scale)

    def initial_labels(self) -> str:
        return str(self._get("initial", "1" * self.geometry().n_sites))

    def pump_params(self, delta33_mhz: float | None = None, omega_g: float | None = None,
                    b_over_j: float | None = None) -> PumpParams:
        """Resolve angular-unit parameters, optionally at a different sweep point."""
        ph = self.physics
        nu33 = ph["delta33_mhz"] if delta33_mhz is None else delta33_mhz
        d33 = mhz_to_angular(nu33)
        w1 = mhz_to_angular(ph.get("omega1_mhz", ph["omega_mhz"]))
        w2 = mhz_to_angular(ph.get("omega2_mhz", ph["omega_mhz"]))
        if "delta34_mhz" in ph:
            d34 = mhz_to_angular(ph["delta34_mhz"])
        else:
            d34 = ph["delta34_ratio"] * d33
        delta = mhz_to_angular(ph["delta_mhz"]) if ph.get("delta_mhz") is not None else d33 / 2
        gamma = self.gamma
        if omega_g is None:
            if b_over_j is None:
                b_over_j = ph.get("b_over_j")
            if b_over_j is not None:
                omega_g = b_over_j * ising_coupling(effective_rabi(w1, d33), gamma)
            elif "omega_g_mhz" in ph:
                omega_g = mhz_to_angular(ph["omega_g_mhz"])
            else:
                omega_g = ph.get("omega_g_over_omega_r", 0.0) * effective_rabi(w1, d33)
        return PumpParams(omega1=w1, omega2=w2, omega_g=omega_g, delta=delta, gamma=gamma,
                          delta33=d33, delta34=d34)

    # -- run controls ----------------------------------------------------
    def t_final(self, params: PumpParams) -> float:
        r = self.run
        if "t_final_us" in r:
            return float(r["t_final_us"])
        if "t_final_rabi_periods" in r:
            return r["t_final_rabi_periods"] * TWO_PI / abs(params.omega_r)
        if "t_final_over_j" in r:
            return r["t_final_over_j"] / ising_coupling(params.omega_r, params.gamma)
        raise ConfigError("run section needs one of t_final_us, t_final_rabi_periods, t_final_over_j")

    @property
    def seed(self) -> int:
        return int(self.run.get("seed", 0))

    @property
    def n_traj(self) -> int:
        return int(self.run.get("n_traj", 100))

    def sweep_values(self, key: str) -> np.ndarray:
        spec = self.sweep.get(key)
        if spec is None:
            raise ConfigError(f"sweep section has no {key!r} entry")
        return grid_from_spec(spec)

    # -- serialisation ---------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        return {
            "experiment": self.experiment,
            "physics": copy.deepcopy(self.physics),
            "sweep": copy.deepcopy(self.sweep),
            "run": copy.deepcopy(self.run),
            "output": copy.deepcopy(self.output),
        }

    def resolved(self) -> dict[str, Any]:
        """Angular-unit parameter set at the base point, for metadata."""
        p = self.pump_params()
        out = {k: getattr(p, k) for k in ("omega1", "omega2", "omega_g", "delta", "gamma",
                                           "delta33", "delta34")}
        out["omega_r"] = p.omega_r
        out["units"] = "rad/us, 1/us"
        out["defaults_applied"] = list(self.defaults_applied)
        return out


def grid_from_spec(spec) -> np.ndarray:
    if isinstance(spec, (list, tuple)):
        return np.asarray(spec, dtype=float)
    if "values" in spec:
        return np.asarray(spec["values"], dtype=float)
    try:
        start, stop, num = spec["start"], spec["stop"], int(spec["num"])
    except KeyError as exc:
        raise ConfigError(f"sweep grid missing {exc.args[0]!r}") from None
    if spec.get("spacing", "linear") == "log":
        return np.geomspace(start, stop, num)
    return np.linspace(start, stop, num)


_REQUIRED = ("omega_mhz", "delta33_mhz")


def _validate(cfg: ExperimentConfig) -> None:
    ph = cfg.physics
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}; expected one of {EXPERIMENTS}")
    for key in _REQUIRED:
        if key not in ph:
            raise ConfigError(f"physics.{key} is required")
    if "lifetime_ms" not in ph and "gamma_per_us" not in ph:
        raise ConfigError("physics needs lifetime_ms or gamma_per_us")
    if "delta34_ratio" not in ph and "delta34_mhz" not in ph:
        raise ConfigError("physics needs delta34_ratio or delta34_mhz")
    if "lifetime_ms" in ph and not ph["lifetime_ms"] > 0:
        raise ConfigError("physics.lifetime_ms must be positive")
    if "gamma_per_us" in ph and ph["gamma_per_us"] < 0:
        raise ConfigError("physics.gamma_per_us must be non-negative")
    if ph["delta33_mhz"] == 0:
        raise ConfigError("physics.delta33_mhz must be nonzero")
    for key, val in ph.items():
        if isinstance(val, float) and not math.isfinite(val):
            raise ConfigError(f"physics.{key} is not finite")
    try:
        cfg.pump_params()
        geo = cfg.geometry()
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"invalid physics section: {exc}") from None
    except InvalidArgumentError as exc:
        raise ConfigError(str(exc)) from None
    init = cfg.initial_labels()
    if len(init) != geo.n_sites or any(c not in "1234" for c in init):
        raise ConfigError(f"physics.initial {init!r} does not match {geo.n_sites} sites")


def config_from_dict(data: dict[str, Any], source: str | None = None) -> ExperimentConfig:
    if "config" in data and "physics" not in data:
        data = data["config"]  # metadata sidecar written by a previous run
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    for section in ("experiment", "physics"):
        if section not in data:
            raise ConfigError(f"missing section {section!r}")
    physics = dict(data["physics"])
    applied = []
    if physics.get("delta_mhz") is None:
        physics.pop("delta_mhz", None)
        applied.append("delta_mhz=delta33_mhz/2")
    cfg = ExperimentConfig(
        experiment=data["experiment"],
        physics=physics,
        sweep=dict(data.get("sweep", {})),
        run=dict(data.get("run", {})),
        output=dict(data.get("output", {})),
        defaults_applied=applied,
        source=source,
    )
    _validate(cfg)
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    """Load a config file, or a shipped preset by name (e.g. ``"fig2"``)."""
    p = Path(path)
    if not p.exists() and str(path) in preset_names():
        text = resources.files("rydpump.presets").joinpath(f"{path}.json").read_text()
        source = f"preset:{path}"
    else:
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from None
        source = str(p)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return config_from_dict(data, source=source)
