from dataclasses import dataclass
from enum import Enum
import logging
from typing import Optional, Sequence, Tuple

import numpy as np

from grids.grid import Grid, GridError, GridFunction, lattice_steps, sample
from .catalog import ClosedForm


LOGGER = logging.getLogger('main')

# samples this far below 1 are rounding noise from quadrature and are clipped
FLOOR_TOLERANCE = 1e-12


class ScaleError(Exception):
    '''
    Invalid scales, shifts and mollifiers.
    '''
    def __init__(self, value, error=None):
        self.value = value
        self.error = error

    def __str__(self):
        if self.error is not None:
            return "%s: %s" % (str(self.value), repr(self.error))
        return str(self.value)


class ScaleKind(str, Enum):
    ON_SPACE = "on_space"
    ON_GROUP = "on_group"


class ActionKind(str, Enum):
    TRANSLATION = "translation"
    TRIVIAL = "trivial"


@dataclass(frozen=True)
class PointAction:
    '''
    How a group coordinate g moves a point m: translation by g*step along
    one axis, or not at all.
    '''
    kind: ActionKind = ActionKind.TRANSLATION
    axis: int = 0
    step: float = 1.0

    def displacement(self, g: float, dim: int) -> Tuple[float, ...]:
        out = [0.0] * dim
        if self.kind is ActionKind.TRANSLATION:
            out[self.axis] = g * self.step
        return tuple(out)


@dataclass(frozen=True, eq=False)
class Scale:
    f: GridFunction
    closed_form: Optional[ClosedForm] = None
    kind: ScaleKind = ScaleKind.ON_SPACE

    def __post_init__(self) -> None:
        if self.f.is_complex:
            raise ScaleError("Scales are real valued")
        low = float(np.min(self.f.values))
        if low < 1 - FLOOR_TOLERANCE:
            index = np.unravel_index(int(np.argmin(self.f.values)), self.f.grid.shape)
            raise ScaleError(f"Scale value {low!r} below 1 at {self.f.grid.point(index)}")
        if low < 1:
            object.__setattr__(self, "f", self.f.with_values(np.maximum(self.f.values, 1.0)))

    @classmethod
    def from_closed_form(cls, form: ClosedForm, grid: Grid, kind: ScaleKind = ScaleKind.ON_SPACE) -> "Scale":
        return cls(sample(form, grid), form, kind)

    @property
    def grid(self) -> Grid:
        return self.f.grid

    @property
    def values(self) -> np.ndarray:
        return self.f.values

    def restrict(self, sub: Grid) -> "Scale":
        return Scale(self.f.restrict(sub), self.closed_form, self.kind)

    def value_at(self, points: np.ndarray) -> np.ndarray:
        '''
        Evaluates the scale at arbitrary points (rows of coordinates); off the
        lattice or outside the box this requires a closed form.
        '''
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if self.closed_form is not None:
            return np.asarray(self.closed_form(*points.T), dtype=np.float64)
        indices = []
        for axis, ((lo, hi), h) in enumerate(zip(self.grid.index_bounds, self.grid.spacing)):
            column = []
            for c in points[:, axis]:
                try:
                    k = lattice_steps(c, h, "point")
                except GridError as e:
                    raise ScaleError("Scale without a closed form evaluated off the lattice", e)
                if not lo <= k <= hi:
                    raise ScaleError(f"Point {c!r} on axis {axis} lies outside the box and the scale has no closed form")
                column.append(k - lo)
            indices.append(column)
        return self.values[tuple(np.array(i) for i in indices)]

    def shifted(self, shift: Sequence[float]) -> GridFunction:
        '''
        Returns sigma_h(m) = sigma(m - shift). A closed form is resampled on the
        full grid; otherwise the shift must be lattice aligned and the result
        lives on the sub-grid where sigma(m - shift) is sampled.

        @raises ScaleError: misaligned shift, or no lattice point left
        '''
        shift = tuple(float(s) for s in shift)
        if len(shift) != self.grid.dim:
            raise ScaleError(f"Shift {shift} does not match the grid dimension {self.grid.dim}")
        if self.closed_form is not None:
            coords = self.grid.coordinates()
            return self.f.with_values(self.closed_form(*(c - s for c, s in zip(coords, shift))))

        lower, upper, cut = [], [], []
        for axis, (s, (lo, hi), h) in enumerate(zip(shift, self.grid.index_bounds, self.grid.spacing)):
            try:
                k = lattice_steps(s, h, f"Shift on axis {axis}")
            except GridError as e:
                raise ScaleError("Shift is not lattice aligned and the scale has no closed form", e)
            lower.append((lo + max(k, 0)) * h)
            upper.append((hi + min(k, 0)) * h)
            n = hi - lo + 1
            cut.append(slice(max(0, -k), n - max(0, k)))
        try:
            sub = Grid(tuple(lower), tuple(upper), self.grid.spacing)
        except GridError as e:
            raise ScaleError(f"Shift {shift} moves the needed points outside the box", e)
        return GridFunction(sub, self.values[tuple(cut)], self.f.boundary_policy)
