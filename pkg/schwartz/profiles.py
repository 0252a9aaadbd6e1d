'''
Profiles on [1, oo) and their composition with a scale.

phi -> phi o sigma is an algebra homomorphism from S(R) into the
sigma-rapidly vanishing functions whenever sigma is proper and
differentiable. Profiles either come from the catalog below (named in job
files), from samples interpolated linearly on the range of sigma, or from
any vectorized callable such as chi_lambda.
'''
from dataclasses import dataclass
import logging
from typing import Annotated, Callable, List, Literal, Optional, Union

from django.conf import settings
import numpy as np
from pydantic import Field, confloat, parse_obj_as, root_validator

from grids.grid import GridFunction, MultiIndex
from scales.certificate import Certificate, make_certificate
from scales.scale import Scale
from util.pydantic import PydanticModel
from util.typing import FloatArray
from .seminorms import SeminormError, require_derivative_certificate, weighted_derivative


LOGGER = logging.getLogger('main')


class Profile(PydanticModel):
    name: str

    def __call__(self, t: FloatArray) -> FloatArray:
        raise NotImplementedError

    def derivative(self, t: FloatArray) -> Optional[FloatArray]:
        return None


class GaussianProfile(Profile):
    """e^(-rate t^2)"""
    name: Literal["gaussian"] = "gaussian"
    rate: confloat(gt=0) = 1.0

    def __call__(self, t):
        return np.exp(-self.rate * np.square(t))

    def derivative(self, t):
        return -2 * self.rate * t * np.exp(-self.rate * np.square(t))


class RationalProfile(Profile):
    """t^(-p), a rational decay profile; p = 1 gives 1/t"""
    name: Literal["rational"] = "rational"
    p: confloat(gt=0) = 1.0

    def __call__(self, t):
        return np.power(t, -self.p)

    def derivative(self, t):
        return -self.p * np.power(t, -self.p - 1)


class ConstantProfile(Profile):
    name: Literal["constant"] = "constant"
    value: float = 1.0

    def __call__(self, t):
        return np.full(np.shape(t), self.value)

    def derivative(self, t):
        return np.zeros(np.shape(t))


class SampledProfile(Profile):
    '''
    Samples (t_k, phi(t_k)) interpolated linearly. Evaluation outside
    [t_0, t_last] is an error.
    '''
    name: Literal["sampled"] = "sampled"
    t: List[float]
    values: List[float]

    @root_validator(skip_on_failure=True)
    def check_samples(cls, values):
        t = values["t"]
        if len(t) < 2 or len(t) != len(values["values"]):
            raise ValueError("needs at least two samples and one value per sample")
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ValueError("sample points must be strictly increasing")
        return values

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        if t.size and (np.min(t) < self.t[0] or np.max(t) > self.t[-1]):
            raise SeminormError(
                f"Range [{np.min(t):g}, {np.max(t):g}] exceeds the profile samples [{self.t[0]:g}, {self.t[-1]:g}]"
            )
        return np.interp(t, self.t, self.values)

    def derivative(self, t):
        t = np.asarray(t, dtype=np.float64)
        slopes = np.diff(self.values) / np.diff(self.t)
        cell = np.clip(np.searchsorted(self.t, t, side="right") - 1, 0, len(slopes) - 1)
        return slopes[cell]

    def interpolation_error(self) -> float:
        '''
        Estimate of the linear interpolation error: max over cells of
        |second difference| * h^2 / 8.
        '''
        t = np.asarray(self.t)
        v = np.asarray(self.values)
        if len(t) < 3:
            return 0.0
        slopes = np.diff(v) / np.diff(t)
        curvature = np.abs(np.diff(slopes)) / ((t[2:] - t[:-2]) / 2)
        h = np.diff(t)
        return float(np.max(curvature * np.maximum(h[1:], h[:-1]) ** 2 / 8))


@dataclass(frozen=True)
class CallableProfile:
    '''
    Any vectorized function of t, with an optional derivative.
    '''
    func: Callable[[FloatArray], FloatArray]
    name: str = "callable"
    func_derivative: Optional[Callable[[FloatArray], FloatArray]] = None

    def __call__(self, t):
        return self.func(np.asarray(t, dtype=np.float64))

    def derivative(self, t):
        if self.func_derivative is None:
            return None
        return self.func_derivative(np.asarray(t, dtype=np.float64))


CatalogProfile = Annotated[
    Union[GaussianProfile, RationalProfile, ConstantProfile, SampledProfile],
    Field(discriminator="name"),
]
AnyProfile = Union[Profile, CallableProfile]


def parse_profile(data) -> Profile:
    return parse_obj_as(CatalogProfile, data)  # type: ignore[arg-type]


def require_proper_certificate(certificate: Certificate, sigma: Scale) -> None:
    if certificate.kind != "proper" or not certificate.passed:
        raise SeminormError(f"Properness certificate of kind {certificate.kind} did not pass")
    if certificate.grid is not None and certificate.grid != sigma.grid.descriptor():
        raise SeminormError("Properness certificate was issued on another grid", certificate.grid.dict())


def compose_scale(phi: AnyProfile, sigma: Scale, proper: Optional[Certificate] = None) -> GridFunction:
    '''
    (phi o sigma)(m) = phi(sigma(m)) at every lattice point.

    phi o sigma inherits the decay of phi only when sigma is proper. A
    given properness certificate must pass on the grid of sigma; without
    one the composition is taken pointwise, which is all theta = chi o sigma
    needs since chi is defined on the whole range sigma >= 1.

    @raises SeminormError: sampled profile does not cover the range of
        sigma, or the properness certificate fails
    '''
    if proper is not None:
        require_proper_certificate(proper, sigma)
    values = np.asarray(phi(sigma.values))
    if isinstance(phi, SampledProfile):
        LOGGER.debug("Composed sampled profile, interpolation error %.3e", phi.interpolation_error())
    return GridFunction(sigma.grid, np.broadcast_to(values, sigma.grid.shape), sigma.f.boundary_policy)


def chain_rule_certificate(
        phi: AnyProfile,
        sigma: Scale,
        derivative_certificate: Certificate,
        l: int = 0,
        ) -> Certificate:
    '''
    Certifies sup |sigma^l X(phi o sigma)| <= C sup_t |t^(l+d) phi'(t)| for
    every first-order X, with |X sigma| <= C sigma^d from the derivative
    bound certificate and t ranging over the values of sigma.

    @raises SeminormError: the profile has no derivative, or the derivative
        certificate is missing or failing
    '''
    require_derivative_certificate(derivative_certificate, 1)
    t = sigma.values.ravel()
    dphi = phi.derivative(t)
    if dphi is None:
        raise SeminormError(f"Profile {phi.name} has no derivative")
    d = derivative_certificate.constants["d"]
    per_index = derivative_certificate.details.get("per_index", {})
    composed = compose_scale(phi, sigma)
    with np.errstate(over="ignore", invalid="ignore"):
        profile_sup = float(np.nanmax(np.abs(t ** (l + d) * dphi)))

    residual, witness, bounds = [], [], {}
    for axis in range(sigma.grid.dim):
        gamma = MultiIndex(tuple(int(i == axis) for i in range(sigma.grid.dim)))
        C = per_index.get(str(gamma), derivative_certificate.constants["C"])
        lhs_f = weighted_derivative(composed, sigma, l, gamma)
        lhs = np.abs(lhs_f.values)
        rhs = C * profile_sup * (1 + settings.CERTIFICATE_RTOL)
        index = np.unravel_index(int(np.argmax(lhs)), lhs.shape)
        residual.append(float(lhs[index]) - rhs)
        witness.append(lhs_f.grid.point(index))
        bounds[str(gamma)] = {"lhs": float(lhs[index]), "rhs": C * profile_sup}

    return make_certificate(
        "chain_rule",
        np.array(residual),
        np.array(witness),
        {"C": derivative_certificate.constants["C"], "d": d, "l": l},
        grid=sigma.grid,
        details={"bounds": bounds, "profile_sup": profile_sup},
    )
