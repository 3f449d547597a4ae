"""
TOML run configuration. Unknown keys anywhere are rejected.

    seed = 7
    trials = 10000

    [scenario]
    geometry = "reference"     # reference | bases | random
    regime = "known"           # known | unknown-covariance | unknown-statistics
    snr_db = 10.0

    [roc]
    target_pfa = [0.01, 0.05, 0.1, 0.2, 0.3]
"""

import tomllib
from pathlib import Path
from typing import Callable, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from uosdetect.errors import ConfigError
from uosdetect.geometry import Subspace, UnionModel, orthonormalize, random_subspace
from uosdetect.io import read_matrix
from uosdetect.noise import NoiseRegime, random_spd_covariance
from uosdetect.sim import Scenario, Stream, reference_union, trial_rng
from uosdetect.sim.scenario import REFERENCE_S2_ANGLE, REFERENCE_S3_ANGLE, reference_path

DEFAULT_PFA_GRID = [0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5]


class ConfigModel(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ScenarioConfig(ConfigModel):
    geometry: Literal["reference", "bases", "random"] = "reference"
    angle: float = Field(default=REFERENCE_S2_ANGLE, ge=0, le=REFERENCE_S3_ANGLE)
    bases: list[Path] = Field(default_factory=list)
    ambient_dim: int = Field(default=4, ge=1)
    subspace_dim: int = Field(default=2, ge=1)
    n_subspaces: Optional[int] = Field(default=None, ge=1)
    regime: NoiseRegime = NoiseRegime.KNOWN
    sigma2: float = Field(default=1.0, gt=0)
    covariance: str = "identity"
    condition: float = Field(default=10.0, ge=1)
    n0: Optional[int] = None
    snr_db: float = 10.0
    class_priors: Optional[list[float]] = None

    @model_validator(mode="after")
    def _check_geometry(self):
        if self.geometry == "bases" and not self.bases:
            raise ValueError("geometry = 'bases' needs a list of basis files")
        if self.regime.uses_training and self.n0 is None:
            raise ValueError(f"regime '{self.regime.value}' needs n0")
        return self


class RocConfig(ConfigModel):
    target_pfa: list[float] = Field(default_factory=lambda: list(DEFAULT_PFA_GRID))
    eta0: float = Field(default=0.25, gt=0, lt=0.5)


class AngleSweepConfig(ConfigModel):
    angles: list[float] = Field(
        default_factory=lambda: [float(a) for a in np.linspace(0.1, 1.1, 10)]
    )
    target_pfa: float = Field(default=0.1, gt=0, le=1)


class NoiseGeometryConfig(ConfigModel):
    condition: float = Field(default=100.0, ge=1)
    perturbation: float = Field(default=0.05, ge=0)
    target_pfa: float = Field(default=0.1, gt=0, le=1)


class GapConfig(ConfigModel):
    snr_db: list[float] = Field(default_factory=lambda: [5.0, 10.0])


class N0SweepConfig(ConfigModel):
    n0: list[int] = Field(default_factory=lambda: [8, 200])


class BaselineConfig(ConfigModel):
    target_pfa: list[float] = Field(default_factory=lambda: [0.05, 0.1, 0.2])


class BoundsConfig(ConfigModel):
    target_pfa: float = Field(default=0.1, gt=0, le=1)
    eta0: float = Field(default=0.25, gt=0, lt=0.5)


class RunConfig(ConfigModel):
    seed: int = Field(default=0, ge=0, lt=2**64)
    trials: int = Field(default=10_000, ge=1)
    calibration_trials: Optional[int] = Field(default=None, ge=1)
    output_dir: Optional[Path] = None
    plots: bool = True
    scenario: ScenarioConfig = Field(default_factory=ScenarioConfig)
    roc: RocConfig = Field(default_factory=RocConfig)
    angle_sweep: AngleSweepConfig = Field(default_factory=AngleSweepConfig)
    noise_geometry: NoiseGeometryConfig = Field(default_factory=NoiseGeometryConfig)
    gap: GapConfig = Field(default_factory=GapConfig)
    n0_sweep: N0SweepConfig = Field(default_factory=N0SweepConfig)
    baseline: BaselineConfig = Field(default_factory=BaselineConfig)
    bounds: BoundsConfig = Field(default_factory=BoundsConfig)

    # directory relative paths in the file are resolved against
    base_dir: Path = Path(".")

    def resolve(self, path: Path) -> Path:
        return path if path.is_absolute() else self.base_dir / path

    def sweep_path(self) -> Optional[Callable[[float], Subspace]]:
        return reference_path if self.scenario.geometry == "reference" else None

    def build_union(self) -> UnionModel:
        section = self.scenario
        if section.geometry == "reference":
            union = reference_union(section.angle)
            k0 = section.n_subspaces or union.n_subspaces
            if k0 > union.n_subspaces:
                raise ConfigError(f"The reference union has {union.n_subspaces} subspaces")
            return UnionModel(subspaces=union.subspaces[:k0])
        if section.geometry == "bases":
            return UnionModel(
                subspaces=tuple(orthonormalize(read_matrix(self.resolve(p))) for p in section.bases)
            )
        rng = trial_rng(self.seed, Stream.CONSTRUCTION, 1)
        return UnionModel(
            subspaces=tuple(
                random_subspace(section.ambient_dim, section.subspace_dim, rng)
                for _ in range(section.n_subspaces or 3)
            )
        )

    def build_covariance(self, m: int) -> Optional[np.ndarray]:
        section = self.scenario
        if section.covariance == "identity":
            return None
        if section.covariance == "random":
            return random_spd_covariance(m, section.condition, trial_rng(self.seed, Stream.CONSTRUCTION, 2))
        return read_matrix(self.resolve(Path(section.covariance)))

    def build_scenario(self, seed: Optional[int] = None) -> Scenario:
        section = self.scenario
        seed = self.seed if seed is None else seed
        config = self if seed == self.seed else self.model_copy(update={"seed": seed})
        union = config.build_union()
        return Scenario(
            union=union,
            sigma2=section.sigma2,
            covariance=config.build_covariance(union.ambient_dim),
            regime=section.regime,
            n0=section.n0,
            snr_db=section.snr_db,
            class_priors=section.class_priors,
            trials=self.trials,
            seed=seed,
        )


def load_config(path: str | Path) -> RunConfig:
    """Parse and validate a TOML run config; errors become `ConfigError`."""
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"Cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"Malformed config {path}: {exc}") from exc
    if "base_dir" in data:
        raise ConfigError(f"Unknown key 'base_dir' in {path}")
    try:
        return RunConfig(**data, base_dir=path.resolve().parent)
    except ValidationError as exc:
        raise ConfigError(f"Invalid config {path}:\n{exc}") from exc
