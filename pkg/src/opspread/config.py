"""Run configuration: TOML ingestion, flag overrides, validation, hashing."""

import hashlib
import json
import math
from dataclasses import dataclass, field

try:
    import tomllib
except ImportError:  # python < 3.11
    import tomli as tomllib

from .errors import ConfigError
from .evolution import EvolutionConfig, QuenchParams
from .pauli import BlochAngles


def _angle_list(value, name):
    """A list of angles in degrees from a list or a {start, stop, count} table."""
    if isinstance(value, (int, float)):
        return [float(value)]
    if isinstance(value, list):
        return [float(x) for x in value]
    if isinstance(value, dict):
        try:
            start, stop, count = value["start"], value["stop"], int(value["count"])
        except KeyError as exc:
            raise ConfigError(f"{name}: grid table needs start/stop/count") from exc
        if count < 1:
            raise ConfigError(f"{name}: count must be >= 1")
        if count == 1:
            return [float(start)]
        stepw = (stop - start) / (count - 1)
        return [start + i * stepw for i in range(count)]
    raise ConfigError(f"{name}: expected number, list or grid table")


@dataclass
class RunConfig:
    model: QuenchParams
    evolution: EvolutionConfig
    theta_deg: list = field(default_factory=lambda: [0.0])
    phi_deg: list = field(default_factory=lambda: [0.0])
    operator: str = "x"
    operators: list = field(default_factory=lambda: ["x", "y", "z"])
    site: int | None = None
    omega_max: int = 8
    omega_star: list = field(default_factory=lambda: [10, 11, 12])
    t_window: tuple = (0.0, 5.0)
    record_stride: int = 5
    omega_perp: list = field(default_factory=lambda: [4, 6, 8])
    backflow_monitor_stride: int = 1
    out_dir: str = "out"
    checkpoint_every: int = 100
    dtheta_deg: float = 1.0
    dphi_deg: float = 1.0
    jobs: int = 1
    phi_explicit: bool = True

    def __post_init__(self):
        if self.site is None:
            self.site = self.model.L // 2
        if not 0 <= self.site < self.model.L:
            raise ConfigError(f"site {self.site} out of range for L={self.model.L}")
        if self.operator not in ("x", "y", "z"):
            raise ConfigError(f"operator must be x, y or z, got {self.operator!r}")
        for op in self.operators:
            if op not in ("x", "y", "z"):
                raise ConfigError(f"operators entries must be x/y/z, got {op!r}")
        if not 0 <= self.omega_max <= self.model.L:
            raise ConfigError("omega_max must satisfy 0 <= omega_max <= L")
        for ws in self.omega_star:
            if not 1 <= ws <= self.omega_max:
                raise ConfigError("omega_star values must satisfy 1 <= w* <= omega_max")
        if self.record_stride < 1 or self.checkpoint_every < 1:
            raise ConfigError("strides must be >= 1")
        for w in self.omega_perp:
            if w < 1:
                raise ConfigError("omega_perp values must be >= 1")
        for t in self.theta_deg:
            if not 0.0 <= t <= 180.0:
                raise ConfigError(f"theta_deg {t} outside [0, 180]")

    def angles(self):
        """Single-state angles (first grid point)."""
        return BlochAngles.from_degrees(self.theta_deg[0], self.phi_deg[0])

    def grid(self):
        return [(t, f) for t in self.theta_deg for f in self.phi_deg]

    def canonical_dict(self):
        return {
            "model": {"L": self.model.L, "J": self.model.J, "g": self.model.g,
                      "h": self.model.h},
            "evolution": {"dt": self.evolution.dt, "chi_max": self.evolution.chi_max,
                          "lambda2_cutoff": self.evolution.lambda2_cutoff,
                          "t_max": self.evolution.t_max},
            "initial": {"theta_deg": self.theta_deg, "phi_deg": self.phi_deg},
            "operator": {"label": self.operator, "operators": self.operators,
                         "site": self.site},
            "analysis": {"omega_max": self.omega_max, "omega_star": self.omega_star,
                         "t_window": list(self.t_window),
                         "record_stride": self.record_stride,
                         "omega_perp": self.omega_perp},
            "output": {"checkpoint_every": self.checkpoint_every},
        }

    def config_hash(self):
        blob = json.dumps(self.canonical_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def resume_hash(self):
        """Config identity for checkpoint resume.

        Fields that only set the run extent (t_max, the max-OWE window, the
        checkpoint cadence) may change between the interrupted and resumed
        runs without affecting row content, so they are excluded.
        """
        d = self.canonical_dict()
        d["evolution"].pop("t_max")
        d["analysis"].pop("t_window")
        d.pop("output")
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def load_config(path=None, overrides=None):
    """Build a RunConfig from an optional TOML file plus flag overrides."""
    data = {}
    if path is not None:
        try:
            with open(path, "rb") as f:
                data = tomllib.load(f)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config parse error in {path}: {exc}") from exc
    overrides = overrides or {}

    def section(name):
        sec = data.get(name, {})
        if not isinstance(sec, dict):
            raise ConfigError(f"[{name}] must be a table")
        return sec

    model_sec = section("model")
    evo_sec = section("evolution")
    init_sec = section("initial")
    op_sec = section("operator")
    ana_sec = section("analysis")
    out_sec = section("output")

    def pick(sec, key, default, flag=None):
        if flag is not None and overrides.get(flag) is not None:
            return overrides[flag]
        return sec.get(key, default)

    try:
        model = QuenchParams(
            L=int(pick(model_sec, "L", 10, "L")),
            J=float(pick(model_sec, "J", 1.0)),
            g=float(pick(model_sec, "g", 1.0)),
            h=float(pick(model_sec, "h", 0.5)),
        )
        chi = pick(evo_sec, "chi_max", None, "chi")
        evolution = EvolutionConfig(
            dt=float(pick(evo_sec, "dt", 0.01, "dt")),
            chi_max=None if chi in (None, 0) else int(chi),
            lambda2_cutoff=float(pick(evo_sec, "lambda2_cutoff", 1e-10)),
            t_max=float(pick(evo_sec, "t_max", 1.0, "tmax")),
        )
        theta = _angle_list(pick(init_sec, "theta_deg", 0.0, "theta"), "theta_deg")
        phi_explicit = overrides.get("phi") is not None or "phi_deg" in init_sec
        phi = _angle_list(pick(init_sec, "phi_deg", 0.0, "phi"), "phi_deg")
        omega_star = pick(ana_sec, "omega_star", None, "omega_star")
        omega_max = int(pick(ana_sec, "omega_max", min(8, model.L), "omega_max"))
        if omega_star is None:
            omega_star = [omega_max]
        if isinstance(omega_star, (int, float)):
            omega_star = [int(omega_star)]
        t_window = ana_sec.get("t_window", [0.0, evolution.t_max])
        cfg = RunConfig(
            model=model,
            evolution=evolution,
            theta_deg=theta,
            phi_deg=phi,
            operator=str(pick(op_sec, "label", "x", "operator")),
            operators=list(op_sec.get("operators", ["x", "y", "z"])),
            site=pick(op_sec, "site", None, "site"),
            omega_max=omega_max,
            omega_star=[int(w) for w in omega_star],
            t_window=(float(t_window[0]), float(t_window[1])),
            record_stride=int(pick(ana_sec, "record_stride", 5)),
            omega_perp=[int(w) for w in ana_sec.get("omega_perp", [4, 6, 8])],
            out_dir=str(pick(out_sec, "dir", "out", "out")),
            checkpoint_every=int(pick(out_sec, "checkpoint_every", 100)),
            dtheta_deg=float(pick(ana_sec, "dtheta_deg", 1.0, "dtheta")),
            dphi_deg=float(pick(ana_sec, "dphi_deg", 1.0, "dphi")),
            jobs=int(overrides.get("jobs") or 1),
            phi_explicit=phi_explicit,
        )
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
    if cfg.site is not None:
        cfg.site = int(cfg.site)
    if not math.isfinite(cfg.evolution.dt):
        raise ConfigError("dt must be finite")
    return cfg
