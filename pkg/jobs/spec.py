'''
Job descriptions. A job file is a mapping whose "command" selects one of
the job models below; inputs are catalog entries or grid files relative
to the job file.
'''
import os
from typing import Annotated, List, Literal, Optional, Union

import numpy as np
from pydantic import Field, conint, confloat, parse_obj_as, root_validator

from grids.formats import read_grid
from grids.grid import Grid, GridFunction, sample
from scales.catalog import CatalogForm, Polynomial
from scales.scale import Scale
from util.pydantic import PydanticModel
from .parser import ConfigError


class GridSpec(PydanticModel):
    '''
    A box given either by half_width (symmetric) or by lower and upper.
    '''
    spacing: Union[confloat(gt=0), List[confloat(gt=0)]]
    half_width: Optional[Union[confloat(gt=0), List[confloat(gt=0)]]] = None
    lower: Optional[List[float]] = None
    upper: Optional[List[float]] = None
    dim: conint(ge=1, le=3) = 1

    @root_validator(skip_on_failure=True)
    def check_box(cls, values):
        symmetric = values["half_width"] is not None
        explicit = values["lower"] is not None or values["upper"] is not None
        if symmetric == explicit:
            raise ValueError("give either half_width or lower and upper")
        if explicit and (values["lower"] is None or values["upper"] is None):
            raise ValueError("lower and upper go together")
        return values

    def to_grid(self) -> Grid:
        if self.half_width is not None:
            return Grid.symmetric(self.half_width, self.spacing, self.dim)
        spacing = self.spacing if isinstance(self.spacing, list) else [self.spacing] * len(self.lower)
        return Grid(tuple(self.lower), tuple(self.upper), tuple(spacing))


def _load_grid_file(path: str, base_dir: str, grid: Grid) -> GridFunction:
    full = os.path.join(base_dir, path)
    try:
        f = read_grid(full)
    except OSError as e:
        raise ConfigError("Cannot read grid file %s" % (full), e)
    if f.grid != grid:
        raise ConfigError("Grid file %s does not match the job grid" % (full), f.grid.descriptor().dict())
    return f


class CatalogFunction(PydanticModel):
    source: Literal["catalog"] = "catalog"
    name: Literal["gaussian", "odd_gaussian", "rational", "zero"]
    rate: confloat(gt=0) = 1.0

    def load(self, grid: Grid, base_dir: str = ".") -> GridFunction:
        def radial(*coords):
            return sum(np.square(c) for c in coords)
        if self.name == "gaussian":
            return sample(lambda *c: np.exp(-self.rate * radial(*c)), grid)
        if self.name == "odd_gaussian":
            return sample(lambda *c: c[0] * np.exp(-self.rate * radial(*c)), grid)
        if self.name == "rational":
            return sample(lambda *c: 1 / (1 + radial(*c)), grid)
        return sample(lambda *c: np.zeros_like(c[0]), grid)


class FileFunction(PydanticModel):
    source: Literal["file"] = "file"
    path: str

    def load(self, grid: Grid, base_dir: str = ".") -> GridFunction:
        return _load_grid_file(self.path, base_dir, grid)


FunctionSpec = Annotated[Union[CatalogFunction, FileFunction], Field(discriminator="source")]


class CatalogScale(PydanticModel):
    source: Literal["catalog"] = "catalog"
    form: CatalogForm

    def load(self, grid: Grid, base_dir: str = ".") -> Scale:
        return Scale.from_closed_form(self.form, grid)


class FileScale(PydanticModel):
    source: Literal["file"] = "file"
    path: str

    def load(self, grid: Grid, base_dir: str = ".") -> Scale:
        return Scale(_load_grid_file(self.path, base_dir, grid))


ScaleSpec = Annotated[Union[CatalogScale, FileScale], Field(discriminator="source")]

QUADRATIC_SCALE = CatalogScale(form=Polynomial(coefficients=[1, 0, 1]))


class JobBase(PydanticModel):
    output_dir: Optional[str] = None


class FactorizeJob(JobBase):
    command: Literal["factorize"]
    grid: GridSpec
    psi: FunctionSpec
    sigma: ScaleSpec = QUADRATIC_SCALE
    epsilon: Optional[confloat(gt=0)] = None
    d_max: Optional[conint(ge=0)] = None
    l_max: Optional[conint(ge=0)] = None
    mollify: bool = True


class MollifyJob(JobBase):
    command: Literal["mollify"]
    grid: GridSpec
    sigma: ScaleSpec
    radius: Optional[confloat(gt=0)] = None


class CheckScaleJob(JobBase):
    command: Literal["check-scale"]
    grid: GridSpec
    sigma: ScaleSpec
    checks: List[Literal["proper", "translational", "subpolynomial", "mollify", "equivalence"]] = ["proper"]
    shifts: List[float] = [1.0]
    compare: Optional[ScaleSpec] = None

    @root_validator(skip_on_failure=True)
    def check_compare(cls, values):
        if "equivalence" in values["checks"] and values["compare"] is None:
            raise ValueError("the equivalence check needs a compare scale")
        return values


class ConvolveDemoJob(JobBase):
    command: Literal["convolve-demo"]
    grid: GridSpec
    sigma: ScaleSpec = QUADRATIC_SCALE
    omega: CatalogForm = Polynomial(coefficients=[1, 1])
    window_radius: conint(ge=2) = 4
    steps_per_unit: conint(ge=1) = 1
    trials: conint(ge=1) = 100
    seed: Optional[int] = None


class CrossedFactorizeJob(JobBase):
    command: Literal["crossed-factorize"]
    grid: GridSpec
    e: FunctionSpec
    sigma: ScaleSpec = QUADRATIC_SCALE
    window_radius: conint(ge=1) = 2
    steps_per_unit: conint(ge=1) = 1
    group_rate: confloat(gt=0) = 1.0
    epsilon: Optional[confloat(gt=0)] = None
    mollify: bool = True


class CounterexamplesJob(JobBase):
    command: Literal["counterexamples"]
    trials: conint(ge=1) = 1000
    length: conint(ge=1) = 50
    seed: Optional[int] = None
    R_values: List[confloat(ge=0)] = [0, 1, 10, 100]
    l2_variant: bool = True


class ReportJob(JobBase):
    command: Literal["report"]
    grid: GridSpec
    psi: FunctionSpec
    sigma: ScaleSpec = QUADRATIC_SCALE
    d_max: Optional[conint(ge=0)] = None
    l_max: Optional[conint(ge=0)] = None


JobSpec = Annotated[
    Union[FactorizeJob, MollifyJob, CheckScaleJob, ConvolveDemoJob, CrossedFactorizeJob, CounterexamplesJob, ReportJob],
    Field(discriminator="command"),
]


def parse_job(data: dict) -> JobBase:
    '''
    @raises pydantic.ValidationError: the mapping is not a valid job
    '''
    return parse_obj_as(JobSpec, data)  # type: ignore[arg-type]


COARSE_SPACING = 0.25


def review_job(job: JobBase) -> JobBase:
    '''
    Attaches non-fatal remarks about settings that weaken the certificates.
    '''
    if getattr(job, "mollify", True) is False:
        job.add_warning("the scale is used as sampled, so its derivative bound must hold without smoothing", "mollify")
    grid = getattr(job, "grid", None)
    if grid is not None:
        spacing = grid.spacing if isinstance(grid.spacing, list) else [grid.spacing]
        if max(spacing) > COARSE_SPACING:
            grid.add_warning(f"spacing above {COARSE_SPACING} leaves large finite difference errors", "spacing")
    return job
