'''
Seminorms of the weighted spaces: ||f||_{d,gamma} = sup |sigma^d X^gamma f|
for the sigma-rapidly vanishing functions, sup |r^d phi^(k)(r)| for S(R),
and the action of sigma itself as a multiplier.
'''
from dataclasses import dataclass
import itertools
import logging
import math
from typing import Iterable, List, Sequence, Tuple, Union

from django.conf import settings
import numpy as np

from grids.grid import GridError, GridFunction, MultiIndex, finite_diff, pointwise_mul
from scales.certificate import Certificate, make_certificate
from scales.scale import Scale


LOGGER = logging.getLogger('main')


class SeminormError(Exception):
    '''
    Seminorm requests that cannot be evaluated.
    '''
    def __init__(self, value, error=None):
        self.value = value
        self.error = error

    def __str__(self):
        if self.error is not None:
            return "%s: %s" % (str(self.value), repr(self.error))
        return str(self.value)


@dataclass(frozen=True)
class SeminormIndex:
    d: int
    gamma: MultiIndex

    def __post_init__(self) -> None:
        if self.d < 0:
            raise SeminormError(f"Scale power must be nonnegative, got {self.d}")
        if self.d > settings.REPORT_D_MAX:
            raise SeminormError(f"Scale power {self.d} exceeds the maximum {settings.REPORT_D_MAX}")

    @classmethod
    def coerce(cls, value: Union["SeminormIndex", Tuple[int, Union[int, Sequence[int]]]], dim: int = 1) -> "SeminormIndex":
        if isinstance(value, SeminormIndex):
            return value
        d, gamma = value
        return cls(int(d), MultiIndex.coerce(gamma, dim))

    @staticmethod
    def table(dim: int, d_max: int, l_max: int) -> List["SeminormIndex"]:
        """Every (d, gamma) with d <= d_max and |gamma| <= l_max, d outermost."""
        return [SeminormIndex(d, gamma) for d in range(d_max + 1) for gamma in MultiIndex.up_to(dim, l_max)]

    def __str__(self) -> str:
        return f"d={self.d},gamma={self.gamma}"


def _check_grids(f: GridFunction, sigma: Scale) -> None:
    if f.grid != sigma.grid:
        raise GridError("Grid mismatch", (f.grid, sigma.grid))


def weighted_derivative(f: GridFunction, sigma: Scale, d: float, gamma: MultiIndex) -> GridFunction:
    '''
    sigma^d X^gamma f on the domain where the derivative is available.
    '''
    _check_grids(f, sigma)
    derivative = finite_diff(f, gamma)
    weight = sigma.values[sigma.grid.slices_of(derivative.grid)]
    with np.errstate(over="ignore", invalid="ignore"):
        values = weight ** d * derivative.values
    # 0 * inf from overflow where X^gamma f vanishes
    values = np.where(derivative.values == 0, 0.0, values)
    return GridFunction(derivative.grid, values, f.boundary_policy)


def seminorm_sigma(f: GridFunction, sigma: Scale, idx: Union[SeminormIndex, Tuple[int, Union[int, Sequence[int]]]]) -> float:
    idx = SeminormIndex.coerce(idx, f.grid.dim)
    return float(np.max(np.abs(weighted_derivative(f, sigma, idx.d, idx.gamma).values)))


def seminorm_schwartz(phi: GridFunction, d: int, k: int) -> float:
    '''
    sup |r^d phi^(k)(r)| for a profile sampled on the real line.
    '''
    if phi.grid.dim != 1:
        raise SeminormError("Schwartz seminorms are defined on the real line")
    if d < 0 or k < 0:
        raise SeminormError(f"Negative seminorm index ({d}, {k})")
    derivative = finite_diff(phi, k)
    r = derivative.grid.axes[0]
    return float(np.max(np.abs(r ** d * derivative.values)))


def _leibniz_terms(gamma: MultiIndex) -> Iterable[Tuple[int, MultiIndex, MultiIndex]]:
    """(binomial coefficient, beta, gamma - beta) for every beta <= gamma."""
    for beta in itertools.product(*(range(o + 1) for o in gamma.orders)):
        rest = tuple(g - b for g, b in zip(gamma.orders, beta))
        coefficient = math.prod(math.comb(g, b) for g, b in zip(gamma.orders, beta))
        yield coefficient, MultiIndex(beta), MultiIndex(rest)


def require_derivative_certificate(certificate: Certificate, order: int) -> None:
    if certificate is None:
        raise SeminormError("sigma acts as a multiplier only with a derivative bound certificate")
    if certificate.kind != "derivative_bound" or not certificate.passed:
        raise SeminormError(f"Derivative bound certificate of kind {certificate.kind} did not pass")
    if certificate.constants.get("order", 0) < order:
        raise SeminormError(
            f"Derivative bound certificate covers order {certificate.constants.get('order', 0):g}, {order} needed"
        )


def multiplier_sigma(
        f: GridFunction,
        sigma: Scale,
        idx_list: Sequence[Union[SeminormIndex, Tuple[int, Union[int, Sequence[int]]]]],
        derivative_certificate: Certificate,
        ) -> Tuple[GridFunction, Certificate]:
    '''
    Multiplies f by sigma and certifies each requested seminorm of sigma*f
    against the Leibniz combination

        ||sigma f||_{d,gamma} <= sum_{beta <= gamma} binom(gamma, beta) c_{gamma-beta} ||f||_{d+e,beta}

    where c_0 = 1, e = 1 for beta = gamma and c_alpha = C_alpha, e = d' from
    the bound |X^alpha sigma| <= C_alpha sigma^d' otherwise. The right side
    is relaxed by CERTIFICATE_RTOL for the two discretizations it compares.

    @raises SeminormError: missing or failing derivative bound certificate
    '''
    indices = [SeminormIndex.coerce(i, f.grid.dim) for i in idx_list]
    if not indices:
        raise SeminormError("No seminorms requested")
    require_derivative_certificate(derivative_certificate, max(i.gamma.total for i in indices))
    _check_grids(f, sigma)
    per_index = derivative_certificate.details.get("per_index", {})
    d_sigma = derivative_certificate.constants["d"]

    product = pointwise_mul(f, sigma.f)
    residual, witness, rows = [], [], {}
    for idx in indices:
        lhs_f = weighted_derivative(product, sigma, idx.d, idx.gamma)
        lhs = float(np.max(np.abs(lhs_f.values)))
        rhs = 0.0
        for coefficient, beta, rest in _leibniz_terms(idx.gamma):
            if rest.total == 0:
                c, e = 1.0, 1.0
            else:
                c, e = per_index.get(str(rest), derivative_certificate.constants["C"]), d_sigma
            term = weighted_derivative(f, sigma, idx.d + e, beta)
            rhs += coefficient * c * float(np.max(np.abs(term.values)))
        residual.append(lhs - rhs * (1 + settings.CERTIFICATE_RTOL))
        index = np.unravel_index(int(np.argmax(np.abs(lhs_f.values))), lhs_f.grid.shape)
        witness.append(lhs_f.grid.point(index))
        rows[str(idx)] = {"lhs": lhs, "rhs": rhs}

    certificate = make_certificate(
        "sigma_multiplier",
        np.array(residual),
        np.array(witness),
        {"C": derivative_certificate.constants["C"], "d": d_sigma},
        grid=f.grid,
        details={"bounds": rows},
    )
    return product, certificate
