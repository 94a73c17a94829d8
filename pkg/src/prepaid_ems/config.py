"""Experiment configuration: JSON parsing and validation."""

import json
from dataclasses import dataclass, field
from pathlib import Path

from prepaid_ems.forecast import (
    ApplianceProfile,
    Fidelity,
    ForecastSpec,
    Granularity,
)
from prepaid_ems.model import LoadSet

POLICIES = ("BSL", "AFG", "DFM", "OBM")

REGIME_NAMES = (
    "perfect-detailed",
    "perfect-limited",
    "imperfect-detailed",
    "imperfect-limited",
)

#: Loads and usage profiles used by ``synth`` when no config is given:
#: a small household in descending priority order.
DEFAULT_HOUSEHOLD = {
    "refrigerator": (0.48, ApplianceProfile(150.0, 1.0, 10.0)),
    "air_compressor": (0.24, ApplianceProfile(1100.0, 0.5, 2.0)),
    "microwave": (0.16, ApplianceProfile(1200.0, 0.9, 0.5)),
    "washing_machine": (0.12, ApplianceProfile(500.0, 0.35, 1.5)),
}


class ConfigError(ValueError):
    pass


@dataclass
class DfmSettings:
    backend: str = "grid"  # "grid" | "external"
    grid_resolution: int = 3
    candidate_cap: int = 20000
    indicator_eps: float = 1e-6
    solver_cmd: str | None = None
    solver_timeout: float | None = None


@dataclass
class ExperimentConfig:
    loads: LoadSet
    alpha_per_wh: float
    step_minutes: int
    horizon_days: int
    csv_path: Path | None = None
    profiles: dict[str, ApplianceProfile] | None = None
    synth_seed: int = 1
    start_day: int = 0
    budget_fractions: list[float] = field(default_factory=lambda: [0.7, 0.8, 0.9])
    regimes: list[ForecastSpec] = field(default_factory=list)
    shuffle_seed: int = 1
    policies: list[str] = field(default_factory=lambda: list(POLICIES))
    dfm: DfmSettings = field(default_factory=DfmSettings)
    output_dir: Path = Path("out")

    def validate(self) -> None:
        if len(self.loads) == 0:
            raise ConfigError("at least one load is required")
        if not (self.alpha_per_wh > 0):
            raise ConfigError(f"alpha_per_wh must be positive, got {self.alpha_per_wh}")
        if self.step_minutes <= 0 or 1440 % self.step_minutes != 0:
            raise ConfigError(
                f"step_minutes must divide 1440 evenly, got {self.step_minutes}"
            )
        if self.horizon_days <= 0:
            raise ConfigError(f"horizon_days must be positive, got {self.horizon_days}")
        if self.start_day < 0:
            raise ConfigError(f"start_day must be non-negative, got {self.start_day}")
        if not self.budget_fractions:
            raise ConfigError("at least one budget fraction is required")
        bad = [f for f in self.budget_fractions if not 0 <= f <= 1]
        if bad:
            raise ConfigError(f"budget fractions must lie in [0, 1], got {bad}")
        if not self.policies:
            raise ConfigError("at least one policy is required")
        unknown = [p for p in self.policies if p not in POLICIES]
        if unknown:
            raise ConfigError(f"unknown policies {unknown}; choose from {POLICIES}")
        if not self.regimes:
            raise ConfigError("at least one forecast regime is required")
        if (self.csv_path is None) == (self.profiles is None):
            raise ConfigError(
                "data source must be exactly one of a CSV path or a synthetic spec"
            )
        if self.profiles is not None:
            missing = [n for n in self.loads.names if n not in self.profiles]
            if missing:
                raise ConfigError(f"synthetic spec missing profiles for {missing}")
        if self.dfm.backend not in ("grid", "external"):
            raise ConfigError(
                f"dfm backend must be 'grid' or 'external', got {self.dfm.backend!r}"
            )


def parse_regime(name: str, shuffle_seed: int) -> ForecastSpec:
    if name not in REGIME_NAMES:
        raise ConfigError(f"unknown regime {name!r}; choose from {REGIME_NAMES}")
    fidelity_name, granularity_name = name.split("-")
    fidelity = Fidelity.PERFECT if fidelity_name == "perfect" else Fidelity.IMPERFECT_SHUFFLED
    granularity = (
        Granularity.DETAILED if granularity_name == "detailed" else Granularity.LIMITED
    )
    seed = shuffle_seed if fidelity is Fidelity.IMPERFECT_SHUFFLED else None
    return ForecastSpec(fidelity, granularity, seed)


def _require(data: dict, key: str):
    if key not in data:
        raise ConfigError(f"missing required config field {key!r}")
    return data[key]


def from_dict(data: dict, base_dir: Path | None = None) -> ExperimentConfig:
    """Build and validate a config from parsed JSON.

    Relative paths are resolved against ``base_dir`` (normally the
    directory containing the config file).
    """
    base = base_dir or Path(".")
    try:
        loads = LoadSet.from_pairs(
            (entry["name"], entry["gamma"]) for entry in _require(data, "loads")
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid loads section: {exc}") from None

    source = _require(data, "data")
    csv_path = None
    profiles = None
    synth_seed = 1
    if "csv" in source:
        csv_path = base / source["csv"]
    elif "synthetic" in source:
        synth = source["synthetic"]
        synth_seed = int(synth.get("seed", 1))
        try:
            profiles = {
                name: ApplianceProfile(
                    float(p["rated_w"]),
                    float(p["on_probability"]),
                    float(p["mean_on_hours"]),
                )
                for name, p in synth.get("profiles", {}).items()
            }
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid synthetic profiles: {exc}") from None
    else:
        raise ConfigError("data section must contain 'csv' or 'synthetic'")

    shuffle_seed = int(data.get("shuffle_seed", 1))
    regime_names = data.get("regimes", list(REGIME_NAMES))
    regimes = [parse_regime(name, shuffle_seed) for name in regime_names]

    dfm_data = data.get("dfm", {})
    defaults = DfmSettings()
    dfm = DfmSettings(
        backend=dfm_data.get("backend", defaults.backend),
        grid_resolution=int(dfm_data.get("grid_resolution", defaults.grid_resolution)),
        candidate_cap=int(dfm_data.get("candidate_cap", defaults.candidate_cap)),
        indicator_eps=float(dfm_data.get("indicator_eps", defaults.indicator_eps)),
        solver_cmd=dfm_data.get("solver_cmd"),
        solver_timeout=dfm_data.get("solver_timeout"),
    )

    config = ExperimentConfig(
        loads=loads,
        alpha_per_wh=float(_require(data, "alpha_per_wh")),
        step_minutes=int(_require(data, "step_minutes")),
        horizon_days=int(_require(data, "horizon_days")),
        csv_path=csv_path,
        profiles=profiles,
        synth_seed=synth_seed,
        start_day=int(data.get("start_day", 0)),
        budget_fractions=[float(f) for f in data.get("budget_fractions", [0.7, 0.8, 0.9])],
        regimes=regimes,
        shuffle_seed=shuffle_seed,
        policies=list(data.get("policies", POLICIES)),
        dfm=dfm,
        output_dir=base / data.get("output_dir", "out"),
    )
    config.validate()
    return config


def from_file(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a JSON object")
    return from_dict(data, base_dir=path.parent)
