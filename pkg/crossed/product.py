'''
Elements of the smooth crossed product: functions from a group window to
grid functions, with covariant convolution

    (F1 * F2)(g) = sum_h w F1(h) alpha_h(F2(g - h))

and the seminorms sum_g w omega(g)^d ||X^gamma F(g)||_m.
'''
from dataclasses import dataclass
import logging
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from grids.grid import Grid, GridFunction, MultiIndex, diff_axis, zeros
from scales.scale import Scale
from schwartz.seminorms import SeminormIndex, seminorm_sigma
from util.perfmonitor import monitorperf
from .groups import ActionSpec, CrossedProductError, GroupKind, GroupWindow


LOGGER = logging.getLogger('main')


@dataclass(frozen=True, eq=False)
class CrossedElement:
    window: GroupWindow
    slices: Tuple[GridFunction, ...]
    omega: Scale
    notes: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "slices", tuple(self.slices))
        if len(self.slices) != self.window.size:
            raise CrossedProductError(f"Expected {self.window.size} slices, got {len(self.slices)}")
        grid = self.slices[0].grid
        if any(s.grid != grid for s in self.slices):
            raise CrossedProductError("All slices must share one grid")
        if self.omega.grid != self.window.grid:
            raise CrossedProductError("omega must be sampled on the window", self.omega.grid.descriptor().dict())

    @classmethod
    def zero(cls, window: GroupWindow, grid: Grid, omega: Scale) -> "CrossedElement":
        return cls(window, [zeros(grid)] * window.size, omega)

    @classmethod
    def from_function(cls, window: GroupWindow, omega: Scale, func: Callable[[float], GridFunction]) -> "CrossedElement":
        return cls(window, [func(float(g)) for g in window.points], omega)

    @classmethod
    def tensor(cls, window: GroupWindow, omega: Scale, weights: Sequence[float], a: GridFunction) -> "CrossedElement":
        """f (x) a: the slice at g is f(g) a."""
        if len(weights) != window.size:
            raise CrossedProductError(f"Expected {window.size} group weights, got {len(weights)}")
        return cls(window, [a * float(w) for w in weights], omega)

    @classmethod
    def delta(cls, window: GroupWindow, omega: Scale, a: GridFunction, g: float = 0.0) -> "CrossedElement":
        '''
        The point mass at g with unit Haar mass, times a.
        '''
        weights = np.zeros(window.size)
        weights[window.index_of(g)] = 1 / window.haar_weight
        return cls.tensor(window, omega, weights, a)

    @property
    def grid(self) -> Grid:
        return self.slices[0].grid

    def at(self, g: float) -> GridFunction:
        return self.slices[self.window.index_of(g)]

    def stacked(self) -> np.ndarray:
        return np.stack([s.values for s in self.slices])

    def with_slices(self, slices: Sequence[GridFunction], notes: Sequence[str] = ()) -> "CrossedElement":
        return CrossedElement(self.window, tuple(slices), self.omega, tuple(notes))

    def _check(self, other: "CrossedElement") -> None:
        if self.window != other.window:
            raise CrossedProductError("Elements live on different windows")
        if self.grid != other.grid:
            raise CrossedProductError("Elements live on different grids")

    def __add__(self, other: "CrossedElement") -> "CrossedElement":
        self._check(other)
        return self.with_slices([a + b for a, b in zip(self.slices, other.slices)])

    def __sub__(self, other: "CrossedElement") -> "CrossedElement":
        self._check(other)
        return self.with_slices([a - b for a, b in zip(self.slices, other.slices)])

    def __mul__(self, c: complex) -> "CrossedElement":
        return self.with_slices([s * c for s in self.slices])

    __rmul__ = __mul__

    def sup(self) -> float:
        return float(np.max(np.abs(self.stacked()))) if self.grid.size else 0.0


def _check_action(F: CrossedElement, action: ActionSpec) -> None:
    if action.window != F.window:
        raise CrossedProductError("The action is defined on another window")


@monitorperf
def convolve(F1: CrossedElement, F2: CrossedElement, action: ActionSpec) -> CrossedElement:
    '''
    Covariant convolution with Haar weights. Terms whose g - h leaves the
    window are zero; the sum over h runs in increasing order.

    @raises CrossedProductError: mismatched windows, grids or action
    '''
    F1._check(F2)
    _check_action(F1, action)
    window = F1.window
    w = window.haar_weight
    n = window.size
    r = window.radius
    dtype = np.result_type(F1.slices[0].values, F2.slices[0].values)
    totals = [np.zeros(F1.grid.shape, dtype=dtype) for _ in range(n)]
    for j, h in enumerate(window.points):
        if not np.any(F1.slices[j].values):
            continue
        for k in range(n):
            i = j + k - r
            if 0 <= i < n:
                totals[i] = totals[i] + w * F1.slices[j].values * action.apply(float(h), F2.slices[k]).values
    return F1.with_slices([F1.slices[0].with_values(total) for total in totals])


def _group_derivative(F: CrossedElement, order: int) -> Tuple[np.ndarray, np.ndarray]:
    '''
    X^order across the slices by finite differences along the window
    axis of the stacked samples, returned with the window points that
    survive the stencil.
    '''
    order = MultiIndex((order,)).total
    policy = F.slices[0].boundary_policy
    values, r = diff_axis(F.stacked(), 0, order, F.window.spacing, policy)
    points = F.window.points
    return values, points[r:len(points) - r]


def crossed_seminorm(
        F: CrossedElement,
        idx: Tuple[int, int, Union[SeminormIndex, Tuple[int, Union[int, Sequence[int]]]]],
        sigma: Optional[Scale] = None,
        ) -> float:
    '''
    sum_g w omega(g)^d ||(X^gamma F)(g)||_m with ||.||_m the seminorm
    (k, beta) of the scale sigma on the slices, or sup |X^beta .| without
    a scale.

    @raises CrossedProductError: gamma != 0 on a window of Z
    '''
    d, gamma, m = idx
    m = SeminormIndex.coerce(m, F.grid.dim)
    if gamma and F.window.kind is GroupKind.Z_WINDOW:
        raise CrossedProductError("Windows of Z carry no group derivatives", gamma)
    if sigma is None:
        sigma = Scale(zeros(F.grid) + 1.0)
    if gamma:
        values, points = _group_derivative(F, gamma)
    else:
        values, points = F.stacked(), F.window.points
    weights = F.omega.value_at(points[:, None]) ** d
    total = 0.0
    for weight, slice_values in zip(weights, values):
        total += F.window.haar_weight * float(weight) * seminorm_sigma(F.slices[0].with_values(slice_values), sigma, m)
    return total


def group_translate(F: CrossedElement, g: float, action: ActionSpec) -> CrossedElement:
    '''
    (gF)(h) = alpha_g(F(h - g)). Slices moved out of the window are
    dropped and their sup norm is recorded in the notes.
    '''
    _check_action(F, action)
    steps = F.window.index_of(g) - F.window.identity_index
    n = F.window.size
    slices, dropped = [], 0.0
    for i in range(n):
        k = i - steps
        slices.append(action.apply(g, F.slices[k]) if 0 <= k < n else zeros(F.grid))
    for k in range(n):
        if not 0 <= k + steps < n:
            dropped = max(dropped, float(np.max(np.abs(F.slices[k].values))))
    notes = list(F.notes)
    if dropped > 0:
        notes.append(f"translation by {g} dropped slices with sup norm {dropped:.6g}")
        LOGGER.debug("Translation by %s truncated the window", g)
    return F.with_slices(slices, notes)


def algebra_mult(a: GridFunction, F: CrossedElement) -> CrossedElement:
    """(aF)(h) = a F(h)"""
    if a.grid != F.grid:
        raise CrossedProductError("The multiplier lives on another grid")
    return F.with_slices([a * s for s in F.slices], F.notes)
