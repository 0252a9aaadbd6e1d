'''
The integrated representation F e = sum_g w F(g) alpha_g(e) of the
crossed product on grid functions, approximate units, Garding smoothing
and the factorization b e~ = alpha_f(a e~), with certificates for the
continuity estimates.
'''
from dataclasses import dataclass, replace
import logging
from typing import List, Optional, Sequence, Tuple

from django.conf import settings
import numpy as np

from grids.grid import GridFunction, lattice_steps, sup_norm, zeros
from scales.certificate import Certificate, make_certificate
from scales.mollify import bump
from scales.scale import Scale, ScaleKind
from factorization.modules import ModuleFactorization, SigmaModule, factorize_module_element
from schwartz.seminorms import seminorm_sigma
from util.pydantic import PydanticModel
from .groups import ActionSpec, CrossedProductError, GroupKind, GroupWindow
from .product import CrossedElement, convolve, crossed_seminorm


LOGGER = logging.getLogger('main')


def unit_omega(window: GroupWindow) -> Scale:
    return Scale(zeros(window.grid) + 1.0, kind=ScaleKind.ON_GROUP)


def _float_allowance(*magnitudes: float) -> float:
    return settings.FLOAT_BUDGET_FACTOR * np.finfo(np.float64).eps * sum(magnitudes)


def act_on_module(F: CrossedElement, e: GridFunction, action: ActionSpec) -> GridFunction:
    '''
    F e = sum_g w F(g) alpha_g(e), summed in window order.

    @raises CrossedProductError: e lives on another grid or the action on
        another window
    '''
    if e.grid != F.grid:
        raise CrossedProductError("The module element lives on another grid")
    if action.window != F.window:
        raise CrossedProductError("The action is defined on another window")
    w = F.window.haar_weight
    total = np.zeros(e.grid.shape, dtype=np.result_type(F.slices[0].values, e.values))
    for g, s in zip(F.window.points, F.slices):
        total = total + w * s.values * action.apply(float(g), e).values
    return e.with_values(total)


def garding_smooth(f: GridFunction, e: GridFunction, action: ActionSpec) -> GridFunction:
    '''
    alpha_f(e) = sum_g w f(g) alpha_g(e).

    @raises CrossedProductError: f is not sampled on the window
    '''
    if f.grid != action.window.grid:
        raise CrossedProductError("The group function must be sampled on the window", f.grid.descriptor().dict())
    w = action.window.haar_weight
    total = np.zeros(e.grid.shape, dtype=np.result_type(f.values, e.values))
    for g, weight in zip(action.window.points, f.values):
        if weight != 0:
            total = total + w * weight * action.apply(float(g), e).values
    return e.with_values(total)


def check_covariance(g: float, a: GridFunction, e: GridFunction, action: ActionSpec) -> Certificate:
    '''
    Residual of g(a e) = alpha_g(a) (g e) in the sup norm, less a float
    allowance.
    '''
    lhs = action.apply(g, a * e)
    rhs = action.apply(g, a) * action.apply(g, e)
    difference = sup_norm(lhs - rhs)
    return make_certificate(
        "covariance",
        np.array([difference - _float_allowance(sup_norm(rhs))]),
        np.array([[g]]),
        {"g": g},
        grid=e.grid,
        details={"difference": difference},
    )


def unit_weights(window: GroupWindow, radius: float) -> np.ndarray:
    '''
    Psi on the window: the point mass of unit Haar mass on Z, the
    normalized bump of the given radius on sampled R.

    @raises CrossedProductError: the bump does not fit the window or
        falls below its resolution
    '''
    weights = np.zeros(window.size)
    if window.kind is GroupKind.Z_WINDOW:
        weights[window.identity_index] = 1.0
        return weights
    steps = lattice_steps(radius, window.spacing, "Approximate unit radius")
    if steps > window.radius:
        raise CrossedProductError(f"Approximate unit of radius {radius} exceeds the window", window.radius * window.spacing)
    if steps < 2:
        raise CrossedProductError(f"Approximate unit of radius {radius} is below the window resolution", window.spacing)
    psi = bump(radius, (window.spacing,))
    weights[window.identity_index - steps:window.identity_index + steps + 1] = psi.values
    return weights


def approx_identity(
        n: int,
        a: GridFunction,
        window: GroupWindow,
        omega: Optional[Scale] = None,
        base_radius: Optional[float] = None,
        ) -> CrossedElement:
    '''
    Psi_n (x) a where Psi_n has support radius base_radius 2^-n on sampled
    R and is the point mass at the identity on Z.
    '''
    base_radius = base_radius or settings.APPROX_UNIT_RADIUS
    return CrossedElement.tensor(window, omega or unit_omega(window), unit_weights(window, base_radius * 2.0 ** -n), a)


def factorize_crossed(
        e: GridFunction,
        f: GridFunction,
        a: GridFunction,
        action: ActionSpec,
        omega: Optional[Scale] = None,
        ) -> Tuple[CrossedElement, float]:
    '''
    b(g) = f(g) alpha_g(a), returned with the sup norm residual of
    b e = alpha_f(a e).
    '''
    if f.grid != action.window.grid:
        raise CrossedProductError("The group function must be sampled on the window", f.grid.descriptor().dict())
    window = action.window
    b = CrossedElement(
        window,
        [action.apply(float(g), a) * float(weight) for g, weight in zip(window.points, f.values)],
        omega or unit_omega(window),
    )
    residual = sup_norm(act_on_module(b, e, action) - garding_smooth(f, a * e, action))
    return b, residual


def _tempered_constants(certificate: Certificate) -> Tuple[float, int]:
    if certificate.kind != "tempered":
        raise CrossedProductError(f"Expected a temperedness certificate, got {certificate.kind}")
    if not certificate.passed:
        raise CrossedProductError("The action is not tempered on the window", certificate.worst_residual)
    return certificate.constant("C"), int(certificate.constant("d"))


def check_action_estimate(
        F: CrossedElement,
        e: GridFunction,
        action: ActionSpec,
        omega: Scale,
        sigma: Scale,
        d: int = 0,
        tempered: Optional[Certificate] = None,
        ) -> Certificate:
    '''
    ||F e||_d <= C ||F||_(d',0,(0,0)) ||e||_d with C, d' from the
    temperedness certificate of the action.
    '''
    if tempered is None:
        tempered = action.tempered_for(d, omega, sigma)
    C, d_group = _tempered_constants(tempered)
    lhs = seminorm_sigma(act_on_module(F, e, action), sigma, (d, 0))
    rhs = C * crossed_seminorm(replace(F, omega=omega), (d_group, 0, (0, 0))) * seminorm_sigma(e, sigma, (d, 0))
    return make_certificate(
        "action_estimate",
        np.array([lhs - rhs * (1 + settings.CERTIFICATE_RTOL)]),
        np.array([[0.0]]),
        {"C": C, "d": d, "d_group": d_group},
        grid=e.grid,
        details={"lhs": lhs, "rhs": rhs},
    )


def check_smoothing_bound(
        f: GridFunction,
        a: GridFunction,
        action: ActionSpec,
        omega: Scale,
        sigma: Scale,
        d: int,
        m: int,
        tempered: Optional[Certificate] = None,
        ) -> Certificate:
    '''
    For b(g) = f(g) alpha_g(a): ||b||_(d,0,(m,0)) <= D ||a||_m with
    D = C sum_g w |f(g)| omega(g)^(d + d').
    '''
    if tempered is None:
        tempered = action.tempered_for(m, omega, sigma)
    C, d_group = _tempered_constants(tempered)
    b, _ = factorize_crossed(zeros(a.grid), f, a, action, omega)
    lhs = crossed_seminorm(b, (d, 0, (m, 0)), sigma)
    weights = omega.value_at(action.window.points[:, None])
    D = C * action.window.haar_weight * float(np.sum(np.abs(f.values) * weights ** (d + d_group)))
    rhs = D * seminorm_sigma(a, sigma, (m, 0))
    return make_certificate(
        "smoothing_bound",
        np.array([lhs - rhs * (1 + settings.CERTIFICATE_RTOL)]),
        np.array([[0.0]]),
        {"D": D, "C": C, "d": d, "m": m, "d_group": d_group},
        grid=a.grid,
        details={"lhs": lhs, "rhs": rhs},
    )


def check_convolution_continuity(
        F1: CrossedElement,
        F2: CrossedElement,
        action: ActionSpec,
        subpolynomial: Certificate,
        d: int,
        ) -> Certificate:
    '''
    ||F1 * F2||_d <= C^d ||F1||_(d d') ||F2||_(d d') in the seminorms
    sum_g w omega(g)^d sup |F(g)|, with omega(g h) <= C omega(g)^d' omega(h)^d'.
    '''
    if subpolynomial.kind != "subpolynomial" or not subpolynomial.passed:
        raise CrossedProductError("A passing sub-polynomial certificate of omega is required", subpolynomial.kind)
    C, dd = subpolynomial.constant("C"), int(subpolynomial.constant("d"))
    lhs = crossed_seminorm(convolve(F1, F2, action), (d, 0, (0, 0)))
    rhs = C ** d * crossed_seminorm(F1, (d * dd, 0, (0, 0))) * crossed_seminorm(F2, (d * dd, 0, (0, 0)))
    return make_certificate(
        "convolution_continuity",
        np.array([lhs - rhs * (1 + settings.CERTIFICATE_RTOL)]),
        np.array([[0.0]]),
        {"C": C, "d": d, "d_omega": dd},
        grid=F1.grid,
        details={"lhs": lhs, "rhs": rhs},
    )


class ApproximateUnitReport(PydanticModel):
    radii: List[float]
    defects: List[float]
    decreasing: bool


def check_right_approximate_unit(
        F: CrossedElement,
        a: GridFunction,
        window: GroupWindow,
        action: ActionSpec,
        radii: Sequence[float],
        ) -> ApproximateUnitReport:
    '''
    Defects sup |F * (Psi (x) a) - F alpha(a)| for approximate units Psi of
    the given radii, where (F alpha(a))(g) = F(g) alpha_g(a).
    '''
    if window != F.window:
        raise CrossedProductError("The element lives on another window")
    target = F.with_slices([s * action.apply(float(g), a) for g, s in zip(window.points, F.slices)])
    defects = []
    for radius in radii:
        unit = CrossedElement.tensor(window, F.omega, unit_weights(window, radius), a)
        defects.append((convolve(F, unit, action) - target).sup())
    decreasing = all(later < earlier for earlier, later in zip(defects, defects[1:]))
    return ApproximateUnitReport(radii=list(radii), defects=defects, decreasing=decreasing)


@dataclass(frozen=True, eq=False)
class CrossedFactorization:
    b: CrossedElement
    e_tilde: GridFunction
    factorization: ModuleFactorization
    residual: float
    certificate: Certificate


def factorize_crossed_element(
        e: GridFunction,
        f: GridFunction,
        action: ActionSpec,
        sigma: Scale,
        epsilon: Optional[float] = None,
        mollify: bool = True,
        ) -> CrossedFactorization:
    '''
    Factors e = theta e~ in the algebra acting on itself, then forms
    b(g) = f(g) alpha_g(theta), so that b e~ = alpha_f(theta e~) matches
    the Garding smoothing alpha_f(e) within sum_g w |f(g)| times the sup
    norm budget of the factorization.
    '''
    factorization = factorize_module_element(e, SigmaModule(sigma), sigma, epsilon, mollify)
    b, identity_residual = factorize_crossed(factorization.f, f, factorization.theta, action)
    target = garding_smooth(f, factorization.e, action)
    residual = sup_norm(act_on_module(b, factorization.f, action) - target)
    mass = action.window.haar_weight * float(np.sum(np.abs(f.values)))
    budget = mass * factorization.sup_budget() + identity_residual + _float_allowance(action.window.size * sup_norm(target))
    certificate = make_certificate(
        "crossed_factorization",
        np.array([residual - budget]),
        np.array([[0.0]]),
        {"mass": mass, "epsilon": factorization.lam.epsilon or 0.0},
        grid=factorization.e.grid,
        details={"residual": residual, "budget": budget, "identity_residual": identity_residual},
    )
    return CrossedFactorization(b, factorization.f, factorization, residual, certificate)
