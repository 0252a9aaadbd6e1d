'''
Scale calculus on the grid: domination, equivalence, translational
equivalence, sub-polynomial growth, the scaled-space condition and the
properness heuristic. Every check returns a Certificate.
'''
import logging
from typing import List, Optional, Sequence, Tuple, Union

from django.conf import settings
import numpy as np

from grids.grid import Grid, GridError
from .certificate import (
    TRUNCATED_DOMAIN_FLAG,
    Certificate,
    grid_points,
    make_certificate,
    search_exponents,
)
from .scale import PointAction, Scale, ScaleError


LOGGER = logging.getLogger('main')

Shift = Union[float, Sequence[float]]


def exponent_bound(value: Optional[int], default: int, name: str = "d_max", minimum: int = 1) -> int:
    '''
    @raises ScaleError: an explicit bound below the minimum
    '''
    value = default if value is None else value
    if value < minimum:
        raise ScaleError(f"{name} must be at least {minimum}, got {value}")
    return value


def _check_same_grid(sigma: Scale, gamma: Scale) -> None:
    if sigma.grid != gamma.grid:
        raise GridError("Grid mismatch", (sigma.grid, gamma.grid))


def _as_shift(value: Shift, dim: int) -> Tuple[float, ...]:
    if isinstance(value, (int, float)):
        return (float(value),) + (0.0,) * (dim - 1)
    return tuple(float(v) for v in value)


def fit_domination(sigma: Scale, gamma: Scale, d_max: Optional[int] = None, cap: Optional[float] = None) -> Certificate:
    '''
    Fits gamma <= C*sigma^d + D with D = 1, taking the smallest d <= d_max
    whose max-ratio constant stays under the cap.
    '''
    _check_same_grid(sigma, gamma)
    d_max = exponent_bound(d_max, settings.SCALE_D_MAX)
    lhs = gamma.values.ravel()
    base = sigma.values.ravel()
    return search_exponents(
        "domination",
        lhs,
        lambda d: base ** d,
        ((d,) for d in range(1, d_max + 1)),
        ("d",),
        grid_points(sigma.grid),
        grid=sigma.grid,
        D=1.0,
        cap=cap,
    )


def equivalent(sigma: Scale, gamma: Scale, d_max: Optional[int] = None, cap: Optional[float] = None) -> Tuple[Certificate, Certificate]:
    """Domination both ways: (gamma by sigma, sigma by gamma)."""
    return fit_domination(sigma, gamma, d_max, cap), fit_domination(gamma, sigma, d_max, cap)


def check_translational_equivalence(
        sigma: Scale,
        shifts: Sequence[Shift],
        d_max: Optional[int] = None,
        cap: Optional[float] = None,
        ) -> Certificate:
    '''
    Fits sigma(m - h) <= C_K sigma(m)^d over the given shifts h. Without a
    closed form each shift is checked on the sub-grid where sigma(m - h)
    is sampled.

    @raises ScaleError: a shift is not lattice aligned or leaves the box
    '''
    if not shifts:
        raise ScaleError("No shifts to check")
    d_max = exponent_bound(d_max, settings.SCALE_D_MAX)
    dim = sigma.grid.dim
    lhs, base, points = [], [], []
    for value in shifts:
        shifted = sigma.shifted(_as_shift(value, dim))
        lhs.append(shifted.values.ravel())
        base.append(sigma.values[sigma.grid.slices_of(shifted.grid)].ravel())
        points.append(grid_points(shifted.grid))
    lhs_all = np.concatenate(lhs)
    base_all = np.concatenate(base)
    certificate = search_exponents(
        "translational_equivalence",
        lhs_all,
        lambda d: base_all ** d,
        ((d,) for d in range(1, d_max + 1)),
        ("d",),
        np.concatenate(points),
        grid=sigma.grid,
        cap=cap,
    )
    certificate.details["shifts"] = [list(_as_shift(v, dim)) for v in shifts]
    return certificate


def _default_pairs(omega: Scale) -> List[Tuple[float, float]]:
    axis = omega.grid.axes[0]
    lo, hi = float(axis[0]), float(axis[-1])
    tolerance = omega.grid.spacing[0] * 1e-9
    return [
        (float(g), float(h))
        for g in axis for h in axis
        if omega.closed_form is not None or lo - tolerance <= g + h <= hi + tolerance
    ]


def check_subpolynomial(
        omega: Scale,
        pair_samples: Optional[Sequence[Tuple[float, float]]] = None,
        d_max: Optional[int] = None,
        cap: Optional[float] = None,
        ) -> Certificate:
    '''
    Fits omega(g + h) <= C omega(g)^d omega(h)^d over sampled pairs of the
    additive group. By default every pair of lattice points is used whose
    sum is a lattice point of the window, or every pair when omega has a
    closed form.
    '''
    if omega.grid.dim != 1:
        raise ScaleError("Sub-polynomial growth is checked for one-dimensional groups")
    d_max = exponent_bound(d_max, settings.SCALE_D_MAX)
    pairs = np.array(list(pair_samples) if pair_samples is not None else _default_pairs(omega), dtype=np.float64)
    if pairs.size == 0:
        raise ScaleError("No pairs to check")
    lhs = omega.value_at(pairs.sum(axis=1)[:, None])
    base = omega.value_at(pairs[:, :1]) * omega.value_at(pairs[:, 1:])
    return search_exponents(
        "subpolynomial",
        lhs,
        lambda d: base ** d,
        ((d,) for d in range(1, d_max + 1)),
        ("d",),
        pairs,
        grid=omega.grid,
        cap=cap,
    )


def reflect(omega: Scale) -> Scale:
    '''
    The inverse scale omega_-(g) = omega(-g).

    @raises ScaleError: the grid is not symmetric about the origin
    '''
    if not omega.grid.is_symmetric:
        raise ScaleError("Reflection needs a grid symmetric about the origin", omega.grid.descriptor().dict())
    form = omega.closed_form if omega.closed_form is not None and omega.closed_form.is_radial else None
    return Scale(omega.f.with_values(np.flip(omega.values)), form, omega.kind)


def check_scaled_space(
        sigma: Scale,
        omega: Scale,
        action: PointAction,
        samples: Optional[Sequence[float]] = None,
        d_max: Optional[int] = None,
        l_max: Optional[int] = None,
        cap: Optional[float] = None,
        ) -> Certificate:
    '''
    Fits sigma(g.m) <= C omega(g)^d sigma(m)^l over sampled group elements g
    and every lattice point m where sigma(g.m) is available. Exponents are
    searched with l outermost, so the smallest l wins.
    '''
    d_max = exponent_bound(d_max, settings.SCALE_D_MAX)
    l_max = exponent_bound(l_max, settings.SCALE_L_MAX, "l_max")
    if samples is None:
        samples = [float(g) for g in omega.grid.axes[0]]
    dim = sigma.grid.dim
    lhs, base, weight, points = [], [], [], []
    for g in samples:
        displacement = action.displacement(float(g), dim)
        moved = sigma.shifted(tuple(-c for c in displacement))
        lhs.append(moved.values.ravel())
        base.append(sigma.values[sigma.grid.slices_of(moved.grid)].ravel())
        weight.append(np.full(moved.grid.size, float(omega.value_at([[g]])[0])))
        rows = grid_points(moved.grid)
        points.append(np.hstack([np.full((rows.shape[0], 1), float(g)), rows]))
    lhs_all = np.concatenate(lhs)
    base_all = np.concatenate(base)
    weight_all = np.concatenate(weight)
    candidates = [(d, l) for l in range(1, l_max + 1) for d in range(1, d_max + 1)]
    return search_exponents(
        "scaled_space",
        lhs_all,
        lambda d, l: weight_all ** d * base_all ** l,
        candidates,
        ("d", "l"),
        np.concatenate(points),
        grid=sigma.grid,
        cap=cap,
        notes=[f"action {action.kind.value} along axis {action.axis} with step {action.step:g}"],
    )


def shell_index(grid: Grid, shells: int) -> np.ndarray:
    '''
    Flat shell number of every lattice point: box-normalized radius
    rho = max_i |x_i|/L_i cut into <shells> equal bins, the last closed.
    '''
    widths = [max(-a, b) for a, b in zip(grid.lower, grid.upper)]
    coords = grid.coordinates()
    rho = np.max(np.stack([np.abs(c) / w for c, w in zip(coords, widths)]), axis=0).ravel()
    return np.minimum((rho * shells).astype(int), shells - 1)


def shell_profile(sigma: Scale, shells: int) -> List[Optional[int]]:
    """Flat index of the minimum of sigma in each shell, None for empty shells."""
    shell = shell_index(sigma.grid, shells)
    values = sigma.values.ravel()
    minima: List[Optional[int]] = []
    for k in range(shells):
        members = np.flatnonzero(shell == k)
        minima.append(int(members[np.argmin(values[members])]) if members.size else None)
    return minima


def check_proper(sigma: Scale, shells: Optional[int] = None, margin: Optional[float] = None) -> Certificate:
    '''
    Necessary-condition heuristic for properness on a truncated box: the
    minimum over the boundary shell must exceed (1 + margin) times the
    minimum over the inner half-box, and shell minima must not decrease
    toward the boundary.
    '''
    shells = shells or settings.SHELL_COUNT
    margin = settings.PROPER_GROWTH_MARGIN if margin is None else margin
    minima = shell_profile(sigma, shells)
    values = sigma.values.ravel()
    points = grid_points(sigma.grid)
    occupied = [i for i in minima if i is not None]

    inner = np.flatnonzero(shell_index(sigma.grid, 2) == 0)
    inner_min = float(np.min(values[inner]))
    boundary = occupied[-1]
    residual = [(1 + margin) * inner_min - float(values[boundary])]
    witness = [points[boundary]]
    for previous, current in zip(occupied, occupied[1:]):
        residual.append(float(values[previous] - values[current]))
        witness.append(points[current])

    return make_certificate(
        "proper",
        np.array(residual),
        np.array(witness),
        {"margin": margin, "shells": shells},
        grid=sigma.grid,
        flags=[TRUNCATED_DOMAIN_FLAG],
        details={
            "shell_minima": [float(values[i]) if i is not None else None for i in minima],
            "inner_minimum": inner_min,
        },
    )
