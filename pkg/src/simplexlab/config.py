"""Experiment configuration: YAML in, validated pydantic models out."""
from __future__ import annotations

from pathlib import Path
from typing import Annotated, List, Literal, Optional, Tuple, Union

import yaml
from pydantic import (BaseModel, ConfigDict, Field, PositiveInt, TypeAdapter, ValidationError,
                      field_validator, model_validator)

from .errors import ConfigError, SimplexLabError
from .simplex import SimplexData, preset, validate_simplex

Unit = Annotated[float, Field(gt=0, le=1)]
Positive = Annotated[float, Field(gt=0)]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# -- simplices ---------------------------------------------------------------

class PresetSimplex(_Strict):
    preset: Literal["right", "equilateral"]
    k: Annotated[int, Field(ge=1, le=6)]
    scale: Positive = 1.0

    def build(self) -> SimplexData:
        return preset(self.preset, self.k, self.scale)


class VertexSimplex(_Strict):
    vertices: List[List[float]]

    @field_validator("vertices")
    @classmethod
    def _nondegenerate(cls, v):
        try:
            validate_simplex(v)
        except SimplexLabError as exc:
            raise ValueError(str(exc)) from None
        return v

    def build(self) -> SimplexData:
        return validate_simplex(self.vertices)


SimplexSpec = Union[PresetSimplex, VertexSimplex]


# -- sets --------------------------------------------------------------------

class FullSet(_Strict):
    kind: Literal["full"]


class EmptySet(_Strict):
    kind: Literal["empty"]


class SubcubeSet(_Strict):
    kind: Literal["subcube"]
    delta: Unit


class RandomSet(_Strict):
    kind: Literal["random"]
    delta: Unit
    seed: Annotated[int, Field(ge=0)] = 0


class ShellSet(_Strict):
    kind: Literal["shell"]
    width: Positive
    period: Positive


class ExplicitSet(_Strict):
    kind: Literal["explicit"]
    cells: List[List[int]] = []
    runs: List[Tuple[int, int]] = []


SetSpec = Annotated[Union[FullSet, EmptySet, SubcubeSet, RandomSet, ShellSet, ExplicitSet],
                    Field(discriminator="kind")]


# -- experiments -------------------------------------------------------------

class _Base(_Strict):
    seed: Annotated[int, Field(ge=0)] = 0
    workers: Optional[PositiveInt] = None
    output: str = "results"


class _WithSet(_Base):
    simplices: List[SimplexSpec] = Field(min_length=1)
    set: SetSpec
    resolution: Annotated[int, Field(ge=2, le=1024)]

    @field_validator("resolution")
    @classmethod
    def _power_of_two(cls, r):
        if r & (r - 1):
            raise ValueError("resolution must be a power of two")
        return r

    def build_simplices(self) -> list[SimplexData]:
        return [s.build() for s in self.simplices]

    @property
    def K(self) -> tuple:
        return tuple(s.build().k for s in self.simplices)


class OracleConfig(_Strict):
    rotation_samples: PositiveInt = 200
    base_grid: Annotated[int, Field(ge=1, le=64)] = 32


class ScanConfig(_WithSet):
    experiment: Literal["scan"]
    delta: Annotated[float, Field(gt=0, le=0.5)] = 0.5
    C1: Unit = 1.0
    C2: Annotated[float, Field(ge=1)] = 1.0
    C3: Annotated[float, Field(ge=1)] = 1.0
    lambda_min: Unit
    lambda_max: Unit
    grid_points: Annotated[int, Field(ge=2, le=10_000)] = 24
    samples: PositiveInt = 100_000
    max_witnesses: Annotated[int, Field(ge=0)] = 3
    oracle: Optional[OracleConfig] = None

    @model_validator(mode="after")
    def _order(self):
        if not self.lambda_min < self.lambda_max:
            raise ValueError("lambda_min must be below lambda_max")
        return self


class StructuredConfig(_WithSet):
    experiment: Literal["structured"]
    lam: Unit
    samples: Annotated[int, Field(ge=0)] = 0


class HeatConfig(_Strict):
    t: Unit = 0.05
    lam: Unit = 0.5
    dims: List[Annotated[int, Field(ge=1, le=6)]] = [1, 2, 3, 4, 5, 6]


class ConvConfig(_Strict):
    s: Positive = 0.01171875
    t: Unit = 1.0
    lam_j: Unit = 0.3
    dims: List[Annotated[int, Field(ge=1, le=6)]] = [1, 2]


class IdentitiesConfig(_Base):
    experiment: Literal["identities"]
    heat: HeatConfig = HeatConfig()
    conv: ConvConfig = ConvConfig()


class TelescopingConfig(_WithSet):
    experiment: Literal["telescoping"]
    L: List[PositiveInt]
    a: Unit = 0.05
    ratios: List[Annotated[float, Field(ge=2)]] = [2.0, 8.0]
    alpha: List[List[Positive]]
    samples: PositiveInt = 100_000


class GrowthConfig(_WithSet):
    experiment: Literal["growth"]
    epsilon: Unit = 0.1
    J: List[Annotated[int, Field(ge=1, le=12)]] = list(range(1, 13))
    samples: PositiveInt = 200_000
    bootstrap: PositiveInt = 200


class DecayConfig(_WithSet):
    experiment: Literal["uniform-decay"]
    lam: Unit
    epsilons: List[Unit] = [0.2, 0.1, 0.05, 0.025]
    samples: PositiveInt = 200_000
    min_exponent: float = 0.3


ExperimentConfig = Annotated[
    Union[ScanConfig, StructuredConfig, IdentitiesConfig, TelescopingConfig, GrowthConfig, DecayConfig],
    Field(discriminator="experiment")]

_ADAPTER = TypeAdapter(ExperimentConfig)
_TAGS = {"scan", "structured", "identities", "telescoping", "growth", "uniform-decay",
         "full", "empty", "subcube", "random", "shell", "explicit",
         "PresetSimplex", "VertexSimplex"}


def _key(loc) -> str:
    parts = [str(p) for p in loc if str(p) not in _TAGS]
    return ".".join(parts) or "<root>"


def parse_config(data) -> ExperimentConfig:
    """Validate a mapping; any problem becomes a ConfigError naming the key."""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a mapping")
    if "experiment" not in data:
        raise ConfigError("experiment", "missing experiment kind")
    try:
        return _ADAPTER.validate_python(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        raise ConfigError(_key(err["loc"]), err["msg"]) from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"not valid YAML: {exc}") from None
    return parse_config(data)


def resolved(cfg) -> dict:
    """Fully defaulted config as plain data, minus the worker count."""
    data = cfg.model_dump(mode="json")
    data.pop("workers", None)
    return data
