'''
Finite windows of the groups Z and R, and their translation actions on
grid functions.
'''
from dataclasses import dataclass, replace
from enum import Enum
import logging
from typing import Optional, Sequence

from django.conf import settings
import numpy as np

from grids.grid import Grid, GridError, GridFunction, lattice_steps
from scales.calculus import check_scaled_space, exponent_bound
from scales.certificate import Certificate, grid_points, search_exponents
from scales.scale import ActionKind, PointAction, Scale, ScaleKind
from schwartz.seminorms import seminorm_sigma


LOGGER = logging.getLogger('main')

AD_BOUND_NOTE = "adjoint bound is vacuous: the group is abelian and acts by translations"


class CrossedProductError(Exception):
    '''
    Mismatched windows, grids or actions, and support violations.
    '''
    def __init__(self, value, error=None):
        self.value = value
        self.error = error

    def __str__(self):
        if self.error is not None:
            return "%s: %s" % (str(self.value), repr(self.error))
        return str(self.value)


class GroupKind(str, Enum):
    Z_WINDOW = "Z_window"
    R_SAMPLED = "R_sampled"


@dataclass(frozen=True)
class GroupWindow:
    '''
    The points -radius..radius of Z, or of the lattice spacing * Z in R.
    Haar weights are 1 on Z and the spacing on R.
    '''
    kind: GroupKind
    radius: int
    spacing: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", GroupKind(self.kind))
        if self.radius < 1:
            raise CrossedProductError(f"Window radius must be at least one, got {self.radius}")
        if self.kind is GroupKind.Z_WINDOW and self.spacing != 1.0:
            raise CrossedProductError("Windows of Z have unit spacing", self.spacing)
        if not self.spacing > 0:
            raise CrossedProductError(f"Window spacing must be positive, got {self.spacing}")

    @classmethod
    def integers(cls, radius: int) -> "GroupWindow":
        return cls(GroupKind.Z_WINDOW, radius)

    @classmethod
    def sampled(cls, half_width: float, spacing: float) -> "GroupWindow":
        return cls(GroupKind.R_SAMPLED, lattice_steps(half_width, spacing, "Window half width"), spacing)

    @property
    def size(self) -> int:
        return 2 * self.radius + 1

    @property
    def points(self) -> np.ndarray:
        return np.arange(-self.radius, self.radius + 1) * self.spacing

    @property
    def haar_weight(self) -> float:
        return 1.0 if self.kind is GroupKind.Z_WINDOW else self.spacing

    @property
    def identity_index(self) -> int:
        return self.radius

    @property
    def grid(self) -> Grid:
        return Grid.symmetric(self.radius * self.spacing, self.spacing)

    def index_of(self, g: float) -> int:
        '''
        @raises CrossedProductError: g is not a point of the window
        '''
        steps = lattice_steps(g, self.spacing, "Group element")
        if abs(steps) > self.radius:
            raise CrossedProductError(f"Group element {g} lies outside the window", self.radius)
        return steps + self.radius

    def scale(self, form) -> Scale:
        '''A closed-form group scale omega sampled on the window.'''
        return Scale.from_closed_form(form, self.grid, ScaleKind.ON_GROUP)


def shift_values(values: np.ndarray, axis: int, steps: int) -> np.ndarray:
    """out[i] = values[i - steps] along axis, zero where i - steps leaves the array."""
    out = np.zeros_like(values)
    n = values.shape[axis]
    if abs(steps) >= n:
        return out
    src = [slice(None)] * values.ndim
    dst = [slice(None)] * values.ndim
    if steps >= 0:
        src[axis], dst[axis] = slice(0, n - steps), slice(steps, n)
    else:
        src[axis], dst[axis] = slice(-steps, n), slice(0, n + steps)
    out[tuple(dst)] = values[tuple(src)]
    return out


@dataclass(frozen=True)
class ActionSpec:
    '''
    The action alpha_g(a)(m) = a(m - g.step) of a group window on grid
    functions, by lattice translation along one axis, or trivially.
    certify_action attaches the scaled-space and temperedness certificates.
    '''
    window: GroupWindow
    grid: Grid
    point_action: PointAction = PointAction()
    scaled_space: Optional[Certificate] = None
    tempered: Optional[Certificate] = None
    ad_bound_note: str = AD_BOUND_NOTE

    @classmethod
    def translation(cls, window: GroupWindow, grid: Grid, axis: int = 0, steps_per_unit: int = 1, **kwargs) -> "ActionSpec":
        '''
        Translation along <axis>: Z windows move by steps_per_unit lattice
        steps of <grid> per unit, sampled R windows move by g itself.
        '''
        if window.kind is GroupKind.Z_WINDOW:
            step = steps_per_unit * grid.spacing[axis]
        else:
            step = 1.0
            lattice_steps(window.spacing, grid.spacing[axis], "Window spacing")
        return cls(window, grid, PointAction(ActionKind.TRANSLATION, axis, step), **kwargs)

    @classmethod
    def trivial(cls, window: GroupWindow, grid: Grid) -> "ActionSpec":
        return cls(window, grid, PointAction(ActionKind.TRIVIAL))

    @property
    def is_trivial(self) -> bool:
        return self.point_action.kind is ActionKind.TRIVIAL

    def steps(self, g: float, grid: Grid) -> int:
        '''
        Lattice steps of the translation by g on <grid>.

        @raises CrossedProductError: the displacement is not lattice aligned
        '''
        if self.is_trivial:
            return 0
        axis = self.point_action.axis
        if grid.spacing != self.grid.spacing:
            raise CrossedProductError("Grid spacing does not match the action", grid.spacing)
        try:
            return lattice_steps(g * self.point_action.step, grid.spacing[axis], "Translation")
        except GridError as e:
            raise CrossedProductError(f"Translation by {g} is not aligned with the grid", e)

    def apply(self, g: float, a: GridFunction) -> GridFunction:
        if self.is_trivial:
            return a
        steps = self.steps(g, a.grid)
        return a.with_values(shift_values(a.values, self.point_action.axis, steps))

    def tempered_for(self, order: int, omega: Scale, sigma: Scale) -> Certificate:
        '''
        The attached temperedness certificate when it was fitted for this
        seminorm order on the grid of sigma, a fresh fit otherwise.
        '''
        attached = self.tempered
        if (
                attached is not None
                and attached.grid == sigma.grid.descriptor()
                and attached.constants.get("order") == order
                and attached.constants.get("k") == order
                ):
            return attached
        return check_tempered(self, omega, sigma, d=order)


def _point_mass_ratios(action: ActionSpec, omega: Scale, sigma: Scale, d: int, k: int):
    '''
    ||alpha_g delta_m||_(d,0) against omega(g) and ||delta_m||_(k,0) for
    every window point g and lattice point m of sigma. A point mass attains
    the worst ratio of any element on the grid.
    '''
    grid = sigma.grid
    moved_weight = sigma.values ** d
    norms = (sigma.values ** k).ravel()
    coords = grid_points(grid)
    lhs, weight, points = [], [], []
    for g, w in zip(action.window.points, omega.value_at(action.window.points[:, None])):
        # alpha_g delta_m = delta_(m + g.step), zero once it leaves the grid
        moved = shift_values(moved_weight, action.point_action.axis, -action.steps(float(g), grid))
        lhs.append(moved.ravel())
        weight.append(np.full(grid.size, float(w)))
        points.append(np.hstack([np.full((grid.size, 1), float(g)), coords]))
    return np.concatenate(lhs), np.concatenate(weight), np.tile(norms, len(lhs)), np.concatenate(points)


def _sample_ratios(action: ActionSpec, omega: Scale, sigma: Scale, samples: Sequence[GridFunction], d: int, k: int):
    weights = omega.value_at(action.window.points[:, None])
    lhs, factor, points = [], [], []
    for e in samples:
        norm = seminorm_sigma(e, sigma, (k, 0))
        if norm == 0:
            continue
        for g, weight in zip(action.window.points, weights):
            lhs.append(seminorm_sigma(action.apply(float(g), e), sigma, (d, 0)))
            factor.append((float(weight), norm))
            points.append([float(g)])
    if not lhs:
        raise CrossedProductError("Temperedness needs at least one nonzero sample")
    weight, norms = np.array(factor).T
    return np.array(lhs), weight, norms, np.array(points)


def check_tempered(
        action: ActionSpec,
        omega: Scale,
        sigma: Scale,
        samples: Optional[Sequence[GridFunction]] = None,
        d: int = 0,
        k: Optional[int] = None,
        d_max: Optional[int] = None,
        cap: Optional[float] = None,
        ) -> Certificate:
    '''
    Fits ||alpha_g e||_(d,0) <= C omega(g)^d' ||e||_(k,0) over the window
    points g and the sample elements e, smallest d' first. The seminorm
    orders are recorded as the constants "order" and "k".

    @type samples: sequence of L{GridFunction}
    @param samples: elements on the grid of sigma; defaults to every point
        mass, which makes the fit hold for all elements on the grid
    '''
    k = d if k is None else k
    d_max = exponent_bound(d_max, settings.SCALE_D_MAX * max(d, 1), minimum=0)
    if samples is None:
        lhs, weight, norms, points = _point_mass_ratios(action, omega, sigma, d, k)
    else:
        lhs, weight, norms, points = _sample_ratios(action, omega, sigma, samples, d, k)
    return search_exponents(
        "tempered",
        lhs,
        lambda dd, _order, _k: weight ** dd * norms,
        ((dd, d, k) for dd in range(0, d_max + 1)),
        ("d", "order", "k"),
        points,
        grid=sigma.grid,
        cap=cap,
        notes=[action.ad_bound_note],
    )


def certify_action(
        action: ActionSpec,
        sigma: Scale,
        omega: Scale,
        order: int = 0,
        cap: Optional[float] = None,
        ) -> ActionSpec:
    '''
    The action with the scaled-space certificate of sigma over the window
    and the temperedness certificate of the given seminorm order attached.
    '''
    samples = [float(g) for g in action.window.points]
    scaled_space = check_scaled_space(sigma, omega, action.point_action, samples=samples, cap=cap)
    tempered = check_tempered(action, omega, sigma, d=order, cap=cap)
    LOGGER.debug(
        "Certified %s action on %d window points: scaled space %s, tempered %s",
        action.point_action.kind.value, action.window.size, scaled_space.passed, tempered.passed,
    )
    return replace(action, scaled_space=scaled_space, tempered=tempered)
