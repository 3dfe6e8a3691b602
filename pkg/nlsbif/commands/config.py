"""Run files: YAML with one mapping per section, validated section by section.

Validation failures raise ConfigError naming the dotted key and the line it appears on.
"""
import logging
from typing import Any, Dict, List, Literal, Optional, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator, ValidationError

from nlsbif.components.bifurcation import BifurcationControls
from nlsbif.components.continuation import ContinuationControls
from nlsbif.components.stationary import NewtonOptions
from nlsbif.discretization.grid import Grid
from nlsbif.distributions import Distribution, DistributionDict, from_dict
from nlsbif.operators.schrodinger import Normalization, ProblemParams
from nlsbif.potentials.potentials import Potential, PotentialType
from nlsbif.utilities.exceptions import ConfigError, InvalidParameters

_logger = logging.getLogger(__name__)

SCENARIOS = ("trace", "pitchfork", "scaling", "localized", "reproduce_figure", "audit")
FIGURES = ("fig1", "fig1a", "fig2", "fig2a", "figNew")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class RunSection(_Section):
    scenario: Optional[Literal["trace", "pitchfork", "scaling", "localized", "reproduce_figure", "audit"]] = None
    figure: Optional[Literal["fig1", "fig1a", "fig2", "fig2a", "figNew"]] = None
    workers: int = Field(default=1, ge=1)
    loggers: List[Literal["csv", "database"]] = Field(default_factory=list)
    allow_unverified: bool = False
    stationarity_tol: float = Field(default=1e-6, gt=0)


class PotentialSection(_Section):
    kind: Literal["free", "single_well_sech2", "double_well_sech2", "tabulated"] = "single_well_sech2"
    s: Optional[float] = Field(default=None, ge=0)
    table_path: Optional[str] = None

    @model_validator(mode="after")
    def _check_kind(self) -> "PotentialSection":
        if self.kind == "double_well_sech2" and self.s is None:
            raise ValueError("a double well needs the separation s")
        if self.kind == "tabulated" and self.table_path is None:
            raise ValueError("a tabulated potential needs table_path")
        return self

    def build(self) -> Potential:
        return PotentialType(self.kind).get_potential(s=self.s, table_path=self.table_path)


class ProblemSection(_Section):
    sigma: float = -1.0
    p: float = Field(default=1.0, gt=0)
    normalization: Literal["section1", "section5"] = "section1"

    @field_validator("sigma")
    @classmethod
    def _nonzero(cls, value: float) -> float:
        if value == 0:
            raise ValueError("sigma must be nonzero")
        return value


class GridSection(_Section):
    half_width: float = Field(default=25.0, gt=0)
    dx: Optional[float] = Field(default=None, gt=0)
    n: Optional[int] = Field(default=None, ge=3)
    order: Literal[2, 4] = 4

    @model_validator(mode="after")
    def _check_size(self) -> "GridSection":
        if self.dx is not None and self.n is not None:
            raise ValueError("give either dx or n, not both")
        if self.n is not None and self.n % 2 == 0:
            raise ValueError("n must be odd")
        return self

    def build(self) -> Grid:
        if self.n is not None:
            return Grid(half_width=self.half_width, n=self.n)
        return Grid.from_spacing(self.half_width, self.dx if self.dx is not None else 0.0125)


class NewtonSection(_Section):
    tol: float = Field(default=1e-10, gt=0)
    max_iter: int = Field(default=50, ge=1)
    damping: bool = True
    max_halvings: int = Field(default=20, ge=0)
    jacobian_guard: float = Field(default=1e-8, ge=0)

    def build(self) -> NewtonOptions:
        return NewtonOptions(**self.model_dump())


class ContinuationSection(_Section):
    E_max: float = 50.0
    mode: Literal[0, 1] = 0
    offset: Optional[float] = Field(default=None, gt=0)
    dE_initial: float = Field(default=1e-3, gt=0)
    dE_min: float = Field(default=1e-7, gt=0)
    dE_max: float = Field(default=0.25, gt=0)
    growth: float = Field(default=1.3, ge=1)
    predictor_order: Literal[0, 1] = 1
    continuity_factor: float = Field(default=10.0, gt=1)
    clamp_floor: float = Field(default=1e-6, gt=0)

    @model_validator(mode="after")
    def _check_steps(self) -> "ContinuationSection":
        if self.dE_min > self.dE_max:
            raise ValueError("dE_min must not exceed dE_max")
        return self

    def build(self) -> ContinuationControls:
        return ContinuationControls(**self.model_dump(exclude={"E_max", "mode", "offset"}))


class BifurcationSection(_Section):
    crossing_tol: float = Field(default=1e-8, gt=0)
    nondegeneracy_tol: float = Field(default=1e-4, gt=0)
    consistency_tol: float = Field(default=0.05, gt=0)
    a0_factor: float = Field(default=0.05, gt=0)
    a0_sweep: List[float] = Field(default_factory=lambda: [0.25, 0.5, 1.0], min_length=2)
    normal_form_tol: float = Field(default=0.1, gt=0)
    retry_refined: bool = True
    switch: bool = True
    switch_E_max: Optional[float] = None
    profile_E: Optional[float] = None

    def build(self) -> BifurcationControls:
        values = self.model_dump(exclude={"switch", "switch_E_max", "profile_E"})
        values["a0_sweep"] = tuple(values["a0_sweep"])
        return BifurcationControls(**values)


class _Sweep(_Section):
    E: Dict[str, Any] = Field(
        default_factory=lambda: {"distribution": "log_uniform_grid", "params": {"low": 50.0, "high": 500.0, "num": 9}}
    )

    @field_validator("E")
    @classmethod
    def _distribution(cls, value: Dict[str, Any]) -> Dict[str, Any]:
        if set(value) != {"distribution", "params"}:
            raise ValueError("an E sweep needs exactly the keys 'distribution' and 'params'")
        try:
            from_dict(DistributionDict(distribution=value["distribution"], params=value["params"]))
        except InvalidParameters as err:
            raise ValueError(str(err)) from err
        return value

    def distribution(self) -> Distribution:
        return from_dict(DistributionDict(distribution=self.E["distribution"], params=self.E["params"]))


class ScalingSection(_Sweep):
    window: Tuple[float, float] = (50.0, 500.0)
    x0: float = 0.0
    min_resolution: float = Field(default=8.0, gt=0)

    @field_validator("window")
    @classmethod
    def _ordered(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        if not value[0] < value[1]:
            raise ValueError("the window must be an ordered pair (low, high)")
        return value


class LocalizedSection(_Sweep):
    x0: Optional[List[float]] = None
    probe_points: List[float] = Field(default_factory=list)
    probe_E: float = Field(default=100.0, gt=0)
    min_resolution: float = Field(default=8.0, gt=0)


class AuditSection(_Section):
    refinement: int = Field(default=2, ge=1)


class RunConfig(_Section):
    run: RunSection = Field(default_factory=RunSection)
    potential: PotentialSection = Field(default_factory=PotentialSection)
    problem: ProblemSection = Field(default_factory=ProblemSection)
    grid: GridSection = Field(default_factory=GridSection)
    newton: NewtonSection = Field(default_factory=NewtonSection)
    continuation: ContinuationSection = Field(default_factory=ContinuationSection)
    bifurcation: BifurcationSection = Field(default_factory=BifurcationSection)
    scaling: ScalingSection = Field(default_factory=ScalingSection)
    localized: LocalizedSection = Field(default_factory=LocalizedSection)
    audit: AuditSection = Field(default_factory=AuditSection)

    def params(self) -> ProblemParams:
        return ProblemParams(
            sigma=self.problem.sigma,
            p=self.problem.p,
            normalization=Normalization(self.problem.normalization),
            stencil_order=self.grid.order,
        )

    def potential_object(self) -> Potential:
        return self.potential.build()

    def updated(self, **sections: Dict[str, Any]) -> "RunConfig":
        """Copy with section fields overridden, validated like a run file."""
        data = self.model_dump()
        for name, values in sections.items():
            data[name] = {**data[name], **values}
        return validate_config(data)


def _line_index(node: yaml.Node, path: Tuple[Any, ...] = ()) -> Dict[Tuple[Any, ...], int]:
    lines = {path: node.start_mark.line + 1}
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            lines[path + (key.value,)] = key.start_mark.line + 1
            lines.update({k: v for k, v in _line_index(value, path + (key.value,)).items() if k != path + (key.value,)})
    elif isinstance(node, yaml.SequenceNode):
        for i, value in enumerate(node.value):
            lines.update(_line_index(value, path + (i,)))
    return lines


def _line_for(lines: Dict[Tuple[Any, ...], int], loc: Tuple[Any, ...]) -> Optional[int]:
    path = tuple(str(part) if not isinstance(part, int) else part for part in loc)
    while path:
        if path in lines:
            return lines[path]
        path = path[:-1]
    return None


def validate_config(data: Any, lines: Optional[Dict[Tuple[Any, ...], int]] = None) -> RunConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("The run file must be a mapping of sections.", line=1)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as err:
        first = err.errors()[0]
        loc = tuple(part for part in first["loc"] if not str(part).startswith("function-after"))
        key = ".".join(str(part) for part in loc) or None
        raise ConfigError(first["msg"], key=key, line=_line_for(lines or {}, loc)) from err


def parse_config(text: str) -> RunConfig:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as err:
        mark = getattr(err, "problem_mark", None)
        raise ConfigError(f"Malformed YAML: {err}", line=None if mark is None else mark.line + 1) from err
    lines = _line_index(node) if node is not None else {}
    return validate_config(data, lines)


def load_config(path: Optional[str]) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path) as f:
            text = f.read()
    except OSError as err:
        raise ConfigError(f"Cannot read the run file {path}: {err}") from err
    _logger.debug(f"Loaded run file {path}")
    return parse_config(text)
