'''
Mollification of scales into differentiable scales.

sigma~(m) = sum_g w_g phi(g) sigma(m - g) over the lattice samples of a
compactly supported bump phi of unit mass. The result is equivalent to
sigma and its derivatives are dominated by powers of itself; each of the
three facts gets its own certificate.
'''
import logging
from typing import Dict, List, NamedTuple, Optional, Sequence

from django.conf import settings
import numpy as np

from grids.grid import Grid, GridError, GridFunction, MultiIndex, finite_diff, integrate, lattice_steps, trapezoid_weights
from util.perfmonitor import checkpoint, monitorperf
from .catalog import Mollified
from .calculus import exponent_bound
from .certificate import Certificate, fitted_constant, grid_points, make_certificate, residuals, search_exponents
from .scale import Scale, ScaleError


LOGGER = logging.getLogger('main')


class MollifiedScale(NamedTuple):
    scale: Scale
    upper: Certificate
    lower: Certificate
    derivative: Certificate


def _profile(grid: Grid, radius: float):
    coords = grid.coordinates()
    u2 = sum(c * c for c in coords) / radius ** 2
    inside = u2 < 1
    safe = np.where(inside, 1 - u2, 1.0)
    values = np.where(inside, np.exp(-1 / safe), 0.0)
    return coords, safe, inside, values


def _bump_grid(radius: float, spacing: Sequence[float], dim: int) -> Grid:
    if radius <= 0:
        raise ScaleError(f"Bump radius must be positive, got {radius}")
    spacing = (float(spacing),) if isinstance(spacing, (int, float)) else tuple(spacing)
    if len(spacing) == 1:
        spacing = spacing * dim
    try:
        for h in spacing:
            lattice_steps(radius, h, "Bump radius")
    except GridError as e:
        raise ScaleError("Bump radius must be a lattice multiple of the spacing", e)
    return Grid.symmetric(radius, spacing, dim)


def bump(radius: Optional[float] = None, spacing: Sequence[float] = (1 / 32,), dim: int = 1) -> GridFunction:
    '''
    The standard bump exp(-1/(1 - |x/R|^2)) sampled on [-R, R]^dim and
    renormalized so that its trapezoidal integral is exactly one.
    '''
    radius = radius or settings.MOLLIFIER_RADIUS
    grid = _bump_grid(radius, spacing, dim)
    _, _, _, values = _profile(grid, radius)
    f = GridFunction(grid, values)
    return f.with_values(values / integrate(f))


def bump_derivative(radius: Optional[float] = None, spacing: Sequence[float] = (1 / 32,), dim: int = 1, axis: int = 0) -> GridFunction:
    """Analytic partial derivative of bump() along <axis>, with the same normalization."""
    radius = radius or settings.MOLLIFIER_RADIUS
    grid = _bump_grid(radius, spacing, dim)
    coords, safe, inside, values = _profile(grid, radius)
    mass = integrate(GridFunction(grid, values))
    derivative = np.where(inside, values * (-2 * coords[axis]) / (radius ** 2 * safe ** 2), 0.0)
    return GridFunction(grid, derivative / mass)


def _check_bump(phi: GridFunction, box: float) -> None:
    if np.iscomplexobj(phi.values) or np.min(phi.values) < 0:
        raise ScaleError("Bump must be real and nonnegative")
    mass = integrate(phi)
    if abs(mass - 1) > settings.MOLLIFIER_MASS_TOLERANCE:
        raise ScaleError(f"Bump integral {mass!r} deviates from 1")
    support = phi.values > 0
    if support.any():
        extent = max(float(np.max(np.abs(c[support]))) for c in phi.grid.coordinates())
        if extent > box * (1 + 1e-9):
            raise ScaleError(f"Bump support reaches {extent:g}, outside the box of radius {box:g}")


def _quadrature(phi: GridFunction):
    weights = trapezoid_weights(phi.grid)
    w = phi.values.copy()
    for axis, axis_weights in enumerate(weights):
        shape = [1] * phi.grid.dim
        shape[axis] = -1
        w = w * axis_weights.reshape(shape)
    offsets = grid_points(phi.grid)
    flat = w.ravel()
    keep = flat != 0
    return offsets[keep], flat[keep]


def smooth_against(sigma: Scale, phi: GridFunction) -> GridFunction:
    '''
    Quadrature of phi(g) sigma(m - g) over the lattice samples g of phi.
    Without a closed form the result lives on the sub-grid where every
    shift is sampled.
    '''
    offsets, weights = _quadrature(phi)
    if sigma.closed_form is not None:
        target = sigma.grid
    else:
        radii = []
        for axis, h in enumerate(sigma.grid.spacing):
            try:
                radii.append(max(abs(lattice_steps(float(o), h, "Bump offset")) for o in offsets[:, axis]))
            except GridError as e:
                raise ScaleError("Bump lattice is not aligned with the scale lattice", e)
        try:
            target = sigma.grid.shrink(radii)
        except GridError as e:
            raise ScaleError("Bump support is wider than the scale grid", e)
    total = np.zeros(target.shape)
    for offset, w in zip(offsets, weights):
        total += w * sigma.shifted(offset).restrict(target).values
    return GridFunction(target, total, sigma.f.boundary_policy)


def check_derivative_bound(smooth: Scale, order: Optional[int] = None, d_max: Optional[int] = None, cap: Optional[float] = None) -> Certificate:
    '''
    Fits |X^gamma sigma| <= C_gamma sigma^d for 1 <= |gamma| <= order with
    one common d; the constants per multi-index go to details["per_index"].
    '''
    order = order or settings.MOLLIFIER_DERIVATIVE_ORDER
    d_max = exponent_bound(d_max, settings.SCALE_D_MAX)
    cap = cap or settings.CERTIFICATE_C_MAX
    gammas = [g for g in MultiIndex.up_to(smooth.grid.dim, order) if g.total > 0]
    pieces = []
    for gamma in gammas:
        derivative = finite_diff(smooth.f, gamma)
        base = smooth.values[smooth.grid.slices_of(derivative.grid)].ravel()
        pieces.append((gamma, np.abs(derivative.values).ravel(), base, grid_points(derivative.grid)))

    best = None
    for d in range(1, d_max + 1):
        per_index: Dict[str, float] = {str(g): fitted_constant(lhs, base ** d) for g, lhs, base, _ in pieces}
        worst = max(per_index.values())
        if worst <= cap:
            best = (d, per_index)
            break
        if best is None or worst < max(best[1].values()):
            best = (d, per_index)

    d, per_index = best
    residual: List[np.ndarray] = []
    for gamma, lhs, base, _ in pieces:
        residual.append(residuals(lhs, base ** d, min(per_index[str(gamma)], cap)))
    notes = []
    if max(per_index.values()) > cap:
        notes.append(f"derivative constants exceed the cap {cap:.6g}")
    return make_certificate(
        "derivative_bound",
        np.concatenate(residual),
        np.concatenate([p for *_, p in pieces]),
        {"C": min(max(per_index.values()), cap), "d": d, "C_max": cap, "order": order},
        grid=smooth.grid,
        notes=notes,
        details={"per_index": {k: min(v, cap) for k, v in per_index.items()}},
    )


@monitorperf
def mollify_scale(
        sigma: Scale,
        phi: Optional[GridFunction] = None,
        box: Optional[float] = None,
        d_max: Optional[int] = None,
        order: Optional[int] = None,
        cap: Optional[float] = None,
        ) -> MollifiedScale:
    '''
    Mollifies sigma against a bump supported in the box of radius <box>.

    @type phi: L{GridFunction}
    @param phi: nonnegative bump of unit mass; defaults to bump(box) on the
        lattice of sigma
    @rtype: L{MollifiedScale}
    @return: sigma~ with the certificates sigma~ <= C sigma^d,
        sigma <= C sigma~^d and |X^gamma sigma~| <= C_gamma sigma~^d for
        1 <= |gamma| <= order
    @raises ScaleError: bump mass or support violations, misaligned lattices
    '''
    box = box or settings.MOLLIFIER_RADIUS
    d_max = exponent_bound(d_max, settings.SCALE_D_MAX)
    order = order or settings.MOLLIFIER_DERIVATIVE_ORDER
    cap = cap or settings.CERTIFICATE_C_MAX
    if phi is None:
        phi = bump(box, sigma.grid.spacing, sigma.grid.dim)
    _check_bump(phi, box)

    smoothed = smooth_against(sigma, phi)
    form = None
    if sigma.closed_form is not None and not isinstance(sigma.closed_form, Mollified):
        offsets, weights = _quadrature(phi)
        form = Mollified(base=sigma.closed_form, offsets=offsets.tolist(), weights=weights.tolist())
    smooth = Scale(smoothed, form, sigma.kind)
    checkpoint("quadrature")

    base = sigma.restrict(smooth.grid).values.ravel()
    values = smooth.values.ravel()
    points = grid_points(smooth.grid)
    exponents = [(d,) for d in range(1, d_max + 1)]
    upper = search_exponents("mollified_upper", values, lambda d: base ** d, exponents, ("d",), points, smooth.grid, cap=cap)
    lower = search_exponents("mollified_lower", base, lambda d: values ** d, exponents, ("d",), points, smooth.grid, cap=cap)
    derivative = check_derivative_bound(smooth, order, d_max, cap)
    checkpoint("certificates")
    LOGGER.debug("Mollified scale on %s with %d bump samples", smooth.grid.shape, int(np.count_nonzero(phi.values)))
    return MollifiedScale(smooth, upper, lower, derivative)
