'''
Sampled functions on truncated uniform lattices.

A Grid is a box [a_i, b_i] in at most three dimensions, sampled with a
uniform spacing h_i per axis so that the origin is a lattice point. A
GridFunction carries real or complex samples on every lattice point.
Derivatives use 4th-order central stencils, integrals the tensor-product
trapezoidal rule.
'''
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
import itertools
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple, Union

from django.conf import settings
import numpy as np
from pydantic import root_validator

from util.pydantic import PydanticModel
from util.typing import Coordinates, FloatArray, Point, PointwiseFunction, SampleArray


LOGGER = logging.getLogger('main')

MAX_DIM = 3
# relative tolerance when checking that a coordinate is a lattice multiple
LATTICE_TOLERANCE = 1e-9


class GridError(Exception):
    '''
    Invalid grids, samples or stencil requests.
    '''
    def __init__(self, value, error=None):
        self.value = value
        self.error = error

    def __str__(self):
        if self.error is not None:
            return "%s: %s" % (str(self.value), repr(self.error))
        return str(self.value)


class BoundaryPolicy(str, Enum):
    SHRINK = "shrink"
    ONE_SIDED = "one_sided"


def lattice_steps(value: float, spacing: float, what: str = "value") -> int:
    '''
    Returns value/spacing as an integer.

    @raises GridError: if value is not a lattice multiple of spacing
    '''
    ratio = value / spacing
    k = round(ratio)
    if abs(ratio - k) > LATTICE_TOLERANCE * max(1.0, abs(ratio)):
        raise GridError(f"{what} {value!r} is not a multiple of the spacing {spacing!r}")
    return int(k)


def _per_axis(value: Union[float, Sequence[float]], dim: int, name: str) -> Tuple[float, ...]:
    if isinstance(value, (int, float, np.floating, np.integer)):
        return (float(value),) * dim
    values = tuple(float(v) for v in value)
    if len(values) != dim:
        raise GridError(f"{name} has {len(values)} entries for a {dim}-dimensional grid")
    return values


@dataclass(frozen=True)
class Grid:
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    spacing: Tuple[float, ...]

    def __post_init__(self) -> None:
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        spacing = tuple(float(v) for v in self.spacing)
        dim = len(spacing)
        if not 1 <= dim <= MAX_DIM:
            raise GridError(f"Grid dimension must be between 1 and {MAX_DIM}, got {dim}")
        if len(lower) != dim or len(upper) != dim:
            raise GridError("Grid lower, upper and spacing must have one entry per axis")

        normalized_lower = []
        normalized_upper = []
        for axis, (a, b, h) in enumerate(zip(lower, upper, spacing)):
            if not (math.isfinite(h) and h > 0):
                raise GridError(f"Spacing on axis {axis} must be positive, got {h!r}")
            if not (math.isfinite(a) and math.isfinite(b)) or not a <= 0 <= b or not a < b:
                raise GridError(f"Box on axis {axis} must satisfy lower <= 0 <= upper and lower < upper, got [{a}, {b}]")
            k_lo = lattice_steps(a, h, f"Lower bound on axis {axis}")
            k_hi = lattice_steps(b, h, f"Upper bound on axis {axis}")
            normalized_lower.append(k_lo * h)
            normalized_upper.append(k_hi * h)

        object.__setattr__(self, "lower", tuple(normalized_lower))
        object.__setattr__(self, "upper", tuple(normalized_upper))
        object.__setattr__(self, "spacing", spacing)

    @classmethod
    def symmetric(cls, half_width: Union[float, Sequence[float]], spacing: Union[float, Sequence[float]], dim: int = 1) -> "Grid":
        if not isinstance(half_width, (int, float)):
            dim = len(half_width)
        elif not isinstance(spacing, (int, float)):
            dim = len(spacing)
        widths = _per_axis(half_width, dim, "half_width")
        return cls(tuple(-w for w in widths), widths, _per_axis(spacing, dim, "spacing"))

    @property
    def dim(self) -> int:
        return len(self.spacing)

    @cached_property
    def index_bounds(self) -> Tuple[Tuple[int, int], ...]:
        """Lattice index range (k_lo, k_hi) per axis; coordinate = k*h."""
        return tuple(
            (round(a / h), round(b / h))
            for a, b, h in zip(self.lower, self.upper, self.spacing)
        )

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(hi - lo + 1 for lo, hi in self.index_bounds)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @cached_property
    def axes(self) -> Tuple[FloatArray, ...]:
        return tuple(
            np.arange(lo, hi + 1, dtype=np.float64) * h
            for (lo, hi), h in zip(self.index_bounds, self.spacing)
        )

    def coordinates(self) -> Coordinates:
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    def radius(self) -> FloatArray:
        """Euclidean distance of every lattice point from the origin."""
        coords = self.coordinates()
        return np.sqrt(sum(c * c for c in coords))

    def point(self, index: Sequence[int]) -> Point:
        return tuple(float(axis[i]) for axis, i in zip(self.axes, index))

    @property
    def is_symmetric(self) -> bool:
        return all(a == -b for a, b in zip(self.lower, self.upper))

    @property
    def volume(self) -> float:
        return float(np.prod([b - a for a, b in zip(self.lower, self.upper)]))

    def shrink(self, radii: Sequence[int]) -> "Grid":
        '''
        Returns the sub-grid with radii[i] lattice points removed at both ends of axis i.
        '''
        lower, upper = [], []
        for axis, ((lo, hi), h, r) in enumerate(zip(self.index_bounds, self.spacing, radii)):
            new_lo, new_hi = lo + r, hi - r
            if new_lo > 0 or new_hi < 0 or new_lo >= new_hi:
                raise GridError(f"Shrinking axis {axis} by {r} points leaves no box around the origin")
            lower.append(new_lo * h)
            upper.append(new_hi * h)
        return Grid(tuple(lower), tuple(upper), self.spacing)

    def slices_of(self, sub: "Grid") -> Tuple[slice, ...]:
        '''
        Returns index slices that cut <sub> out of this grid.

        @raises GridError: if <sub> is not a sub-lattice with the same spacing
        '''
        if sub.spacing != self.spacing:
            raise GridError("Sub-grid spacing differs from the grid spacing", (sub.spacing, self.spacing))
        slices = []
        for axis, ((lo, hi), (sub_lo, sub_hi)) in enumerate(zip(self.index_bounds, sub.index_bounds)):
            if sub_lo < lo or sub_hi > hi:
                raise GridError(f"Sub-grid exceeds the grid on axis {axis}")
            slices.append(slice(sub_lo - lo, sub_hi - lo + 1))
        return tuple(slices)

    def descriptor(self) -> "GridDescriptor":
        return GridDescriptor(lower=list(self.lower), upper=list(self.upper), spacing=list(self.spacing))


class GridDescriptor(PydanticModel):
    lower: List[float]
    upper: List[float]
    spacing: List[float]

    @root_validator(skip_on_failure=True)
    def check_grid(cls, values):
        try:
            Grid(tuple(values["lower"]), tuple(values["upper"]), tuple(values["spacing"]))
        except GridError as e:
            raise ValueError(str(e))
        return values

    def to_grid(self) -> Grid:
        return Grid(tuple(self.lower), tuple(self.upper), tuple(self.spacing))


def _format_point(point: Point) -> str:
    return "(" + ", ".join(f"{c:.6g}" for c in point) + ")"


def check_finite(values: np.ndarray, grid: Grid, what: str = "value") -> None:
    finite = np.isfinite(values)
    if not finite.all():
        index = tuple(int(i) for i in np.argwhere(~finite)[0])
        raise GridError(f"Non-finite {what} at {_format_point(grid.point(index))}", values[index].item())


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: Grid
    values: SampleArray
    boundary_policy: Optional[BoundaryPolicy] = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values)
        if np.iscomplexobj(values):
            values = values.astype(np.complex128, copy=True)
        else:
            values = values.astype(np.float64, copy=True)
        if values.shape != self.grid.shape:
            raise GridError(f"Expected {self.grid.shape} samples, got {values.shape}")
        check_finite(values, self.grid)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        policy = self.boundary_policy or settings.DEFAULT_BOUNDARY_POLICY
        object.__setattr__(self, "boundary_policy", BoundaryPolicy(policy))

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    def with_values(self, values: np.ndarray, grid: Optional[Grid] = None) -> "GridFunction":
        return GridFunction(grid or self.grid, values, self.boundary_policy)

    def restrict(self, sub: Grid) -> "GridFunction":
        if sub == self.grid:
            return self
        return GridFunction(sub, self.values[self.grid.slices_of(sub)], self.boundary_policy)

    def abs(self) -> "GridFunction":
        return self.with_values(np.abs(self.values))

    def power(self, exponent: float) -> "GridFunction":
        return self.with_values(np.power(self.values, exponent))

    def _check_grid(self, other: "GridFunction") -> None:
        if other.grid != self.grid:
            raise GridError("Grid mismatch", (self.grid, other.grid))

    def __add__(self, other: Union["GridFunction", float]) -> "GridFunction":
        if isinstance(other, GridFunction):
            return pointwise_add(self, other)
        return self.with_values(self.values + other)

    __radd__ = __add__

    def __sub__(self, other: Union["GridFunction", float]) -> "GridFunction":
        if isinstance(other, GridFunction):
            self._check_grid(other)
            return self.with_values(self.values - other.values)
        return self.with_values(self.values - other)

    def __neg__(self) -> "GridFunction":
        return self.with_values(-self.values)

    def __mul__(self, other: Union["GridFunction", complex]) -> "GridFunction":
        if isinstance(other, GridFunction):
            return pointwise_mul(self, other)
        return scalar_mul(other, self)

    __rmul__ = __mul__

    def __truediv__(self, other: Union["GridFunction", float]) -> "GridFunction":
        if isinstance(other, GridFunction):
            self._check_grid(other)
            return self.with_values(self.values / other.values)
        return self.with_values(self.values / other)


@dataclass(frozen=True)
class MultiIndex:
    orders: Tuple[int, ...]

    def __post_init__(self) -> None:
        orders = tuple(int(o) for o in self.orders)
        if any(o < 0 for o in orders):
            raise GridError(f"Derivative orders must be nonnegative, got {orders}")
        if sum(orders) > settings.MAX_DERIVATIVE_ORDER:
            raise GridError(f"Total derivative order {sum(orders)} exceeds the maximum {settings.MAX_DERIVATIVE_ORDER}")
        object.__setattr__(self, "orders", orders)

    @classmethod
    def zero(cls, dim: int = 1) -> "MultiIndex":
        return cls((0,) * dim)

    @classmethod
    def coerce(cls, value: Union["MultiIndex", int, Sequence[int]], dim: int = 1) -> "MultiIndex":
        if isinstance(value, MultiIndex):
            return value
        if isinstance(value, (int, np.integer)):
            return cls((int(value),) + (0,) * (dim - 1))
        return cls(tuple(value))

    @staticmethod
    def up_to(dim: int, total: int) -> List["MultiIndex"]:
        """All multi-indices with |γ| <= total, ordered by |γ| then lexicographically."""
        indices = [
            MultiIndex(orders)
            for orders in itertools.product(range(total + 1), repeat=dim)
            if sum(orders) <= total
        ]
        return sorted(indices, key=lambda m: (m.total, m.orders))

    @property
    def total(self) -> int:
        return sum(self.orders)

    @property
    def dim(self) -> int:
        return len(self.orders)

    def __str__(self) -> str:
        return "(" + ",".join(str(o) for o in self.orders) + ")"


# Central 4th-order stencils: integer numerators over a common denominator,
# offsets -radius..radius.
CENTRAL_STENCILS: Dict[int, Tuple[Tuple[int, ...], int]] = {
    1: ((1, -8, 0, 8, -1), 12),
    2: ((-1, 16, -30, 16, -1), 12),
    3: ((1, -8, 13, 0, -13, 8, -1), 8),
    4: ((-1, 12, -39, 56, -39, 12, -1), 6),
}
ACCURACY = 4


def stencil_radius(order: int) -> int:
    if order == 0:
        return 0
    return len(CENTRAL_STENCILS[order][0]) // 2


def one_sided_weights(order: int, offsets: Sequence[int]) -> FloatArray:
    '''
    Weights w with sum_j w_j s_j^m = m! [m == order] for m < len(offsets),
    i.e. the finite-difference rule of maximal accuracy on the given offsets.
    '''
    s = np.asarray(offsets, dtype=np.float64)
    vandermonde = np.vander(s, increasing=True).T
    rhs = np.zeros(len(s))
    rhs[order] = math.factorial(order)
    return np.linalg.solve(vandermonde, rhs)


def _take(values: np.ndarray, axis: int, index) -> np.ndarray:
    selector = [slice(None)] * values.ndim
    selector[axis] = index
    return values[tuple(selector)]


def _central(values: np.ndarray, axis: int, order: int, h: float, absolute: bool) -> np.ndarray:
    numerators, denominator = CENTRAL_STENCILS[order]
    r = len(numerators) // 2
    n = values.shape[axis]
    acc = None
    for k, c in zip(range(-r, r + 1), numerators):
        if c == 0:
            continue
        term = (abs(c) if absolute else c) * _take(values, axis, slice(r + k, n - r + k))
        acc = term if acc is None else acc + term
    return acc / (denominator * h ** order)


def _one_sided(values: np.ndarray, axis: int, order: int, h: float, absolute: bool) -> np.ndarray:
    r = stencil_radius(order)
    width = order + ACCURACY
    n = values.shape[axis]
    out = np.empty_like(values)
    interior = _central(values, axis, order, h, absolute)
    selector = [slice(None)] * values.ndim
    selector[axis] = slice(r, n - r)
    out[tuple(selector)] = interior
    for i in list(range(r)) + list(range(n - r, n)):
        start = 0 if i < r else n - width
        offsets = [j - i for j in range(start, start + width)]
        weights = one_sided_weights(order, offsets)
        if absolute:
            weights = np.abs(weights)
        acc = sum(w * _take(values, axis, start + j) for j, w in enumerate(weights))
        selector[axis] = i
        out[tuple(selector)] = acc / h ** order
    return out


def diff_axis(
        values: np.ndarray,
        axis: int,
        order: int,
        h: float,
        policy: BoundaryPolicy,
        absolute_weights: bool = False,
        ) -> Tuple[np.ndarray, int]:
    '''
    Applies d^order/dx^order along one axis of a sample array.

    @return: the derivative samples and the number of points dropped at
        each end of the axis
    @raises GridError: if the stencil does not fit on the axis
    '''
    if order == 0:
        return values, 0
    r = stencil_radius(order)
    n = values.shape[axis]
    if BoundaryPolicy(policy) is BoundaryPolicy.SHRINK:
        if n < 2 * r + 3:
            raise GridError(f"Stencil of order {order} exceeds the grid on axis {axis} ({n} points)")
        return _central(values, axis, order, h, absolute_weights), r
    if n < order + ACCURACY:
        raise GridError(f"One-sided stencil of order {order} exceeds the grid on axis {axis} ({n} points)")
    return _one_sided(values, axis, order, h, absolute_weights), 0


def finite_diff(
        f: GridFunction,
        gamma: Union[MultiIndex, int, Sequence[int]],
        boundary_policy: Optional[BoundaryPolicy] = None,
        absolute_weights: bool = False,
        ) -> GridFunction:
    '''
    Applies X^gamma with 4th-order stencils, one axis at a time.

    @type boundary_policy: L{BoundaryPolicy}
    @param boundary_policy: overrides the policy carried by f
    @type absolute_weights: C{bool}
    @param absolute_weights: apply |stencil| instead of the stencil, which
        bounds how pointwise errors propagate through the derivative
    @rtype: L{GridFunction}
    @return: derivative samples; under the shrink policy on the sub-grid
        reduced by the stencil radius per differentiated axis
    @raises GridError: if the stencil does not fit on an axis
    '''
    gamma = MultiIndex.coerce(gamma, f.grid.dim)
    if gamma.dim != f.grid.dim:
        raise GridError(f"Multi-index {gamma} does not match the grid dimension {f.grid.dim}")
    policy = BoundaryPolicy(boundary_policy or f.boundary_policy)
    if gamma.total == 0:
        return f.abs() if absolute_weights else f

    values = f.values
    radii = []
    for axis, order in enumerate(gamma.orders):
        values, r = diff_axis(values, axis, order, f.grid.spacing[axis], policy, absolute_weights)
        radii.append(r)

    grid = f.grid.shrink(radii) if any(radii) else f.grid
    return GridFunction(grid, values, policy)


def sample(expr: PointwiseFunction, grid: Grid, boundary_policy: Optional[BoundaryPolicy] = None) -> GridFunction:
    '''
    Evaluates a vectorized pointwise function at every lattice point.

    @raises GridError: if any sample is not finite; the message names the coordinate
    '''
    coords = grid.coordinates()
    with np.errstate(all="ignore"):
        raw = np.asarray(expr(*coords))
    if raw.dtype == object:
        raise GridError("Sampled expression did not produce numbers")
    values = np.array(np.broadcast_to(raw, grid.shape))
    check_finite(values, grid)
    return GridFunction(grid, values, boundary_policy)


def zeros(grid: Grid, boundary_policy: Optional[BoundaryPolicy] = None) -> GridFunction:
    return GridFunction(grid, np.zeros(grid.shape), boundary_policy)


def sup_norm(f: GridFunction) -> float:
    return float(np.max(np.abs(f.values)))


def trapezoid_weights(grid: Grid) -> Tuple[FloatArray, ...]:
    weights = []
    for n, h in zip(grid.shape, grid.spacing):
        w = np.full(n, h)
        w[0] = w[-1] = h / 2
        weights.append(w)
    return tuple(weights)


def integrate(f: GridFunction) -> Union[float, complex]:
    '''
    Tensor-product trapezoidal rule over the grid box.
    '''
    result = f.values
    for axis, w in reversed(list(enumerate(trapezoid_weights(f.grid)))):
        result = np.tensordot(result, w, axes=([axis], [0]))
    value = result.item()
    return value if isinstance(value, complex) else float(value)


def pointwise_mul(f: GridFunction, g: GridFunction) -> GridFunction:
    f._check_grid(g)
    return f.with_values(f.values * g.values)


def pointwise_add(f: GridFunction, g: GridFunction) -> GridFunction:
    f._check_grid(g)
    return f.with_values(f.values + g.values)


def scalar_mul(c: complex, f: GridFunction) -> GridFunction:
    return f.with_values(c * f.values)


