'''
Factorization of a rapidly vanishing function: psi = theta * phi with
theta = chi_lambda o sigma and phi = sum_{n <= N} alpha_n sigma^(2n) psi.

The scale is mollified first so that its derivatives are dominated by
its powers. The lambda sequence is chosen against the table

    M_{d,l,n} = max_{|gamma| <= l} || sigma^((d+1)l + 2n) X^gamma psi ||_oo

which is kept in log space since sigma^(2n) overflows for large n.
'''
from dataclasses import dataclass, field
import logging
import math
from typing import Dict, List, Optional, Tuple, Union

from django.conf import settings
import numpy as np

from grids.grid import GridDescriptor, GridFunction, MultiIndex, finite_diff
from scales.certificate import Certificate, make_certificate
from scales.mollify import MollifiedScale, check_derivative_bound, mollify_scale
from scales.scale import Scale
from schwartz.profiles import CallableProfile, compose_scale
from schwartz.reports import DecayReport, decay_report
from schwartz.seminorms import weighted_derivative
from util.perfmonitor import checkpoint, monitorperf
from util.pydantic import PydanticModel
from .products import (
    CapExhaustedError,
    FactorizationError,
    LambdaSequence,
    chi_decay_report,
    eval_chi_lambda,
    resolve_epsilon,
    select_lambda,
)


LOGGER = logging.getLogger('main')

# largest exponent handed to exp() on the direct path
LOG_FLOAT_MAX = math.log(np.finfo(np.float64).max) - 8


class ResidualBudget(PydanticModel):
    float_part: float
    series_tail: float
    product_tail: float

    @property
    def total(self) -> float:
        return self.float_part + self.series_tail + self.product_tail


def _log_or_none(values: np.ndarray):
    if np.ndim(values) == 0:
        return float(values) if np.isfinite(values) else None
    return [_log_or_none(v) for v in values]


class FactorizationSummary(PydanticModel):
    exponents: List[int]
    alphas: List[float]
    offset: int
    epsilon: float
    n_series: int
    residual: float
    tail_bound: float
    budget: ResidualBudget
    log_m_table: list
    certificates: Dict[str, Certificate]
    decay_report: DecayReport
    theta_report: DecayReport
    grid: GridDescriptor


@dataclass(frozen=True, eq=False)
class FactorizationResult:
    theta: GridFunction
    phi: GridFunction
    lam: LambdaSequence
    n_series: int
    residual: float
    tail_bound: float
    budget: ResidualBudget
    log_m_table: np.ndarray
    sigma: Scale
    psi: GridFunction
    certificates: Dict[str, Certificate] = field(default_factory=dict)
    report: Optional[DecayReport] = None
    theta_report: Optional[DecayReport] = None

    def summary(self) -> FactorizationSummary:
        return FactorizationSummary(
            exponents=self.lam.exponents,
            alphas=self.lam.alphas,
            offset=self.lam.offset,
            epsilon=self.lam.epsilon,
            n_series=self.n_series,
            residual=self.residual,
            tail_bound=self.tail_bound,
            budget=self.budget,
            log_m_table=_log_or_none(self.log_m_table),
            certificates=self.certificates,
            decay_report=self.report,
            theta_report=self.theta_report,
            grid=self.psi.grid.descriptor(),
        )


def prepare_scale(sigma: Union[Scale, MollifiedScale], mollify: bool = True) -> Tuple[Scale, Dict[str, Certificate]]:
    '''
    Returns the differentiable scale to factor against with its
    certificates. A mollified scale is used as is; otherwise sigma is
    mollified, or with mollify=False certified directly.

    @raises FactorizationError: the derivative bound does not hold
    '''
    if isinstance(sigma, MollifiedScale):
        smooth, certificates = sigma.scale, {"upper": sigma.upper, "lower": sigma.lower, "derivative": sigma.derivative}
    elif mollify:
        result = mollify_scale(sigma)
        smooth, certificates = result.scale, {"upper": result.upper, "lower": result.lower, "derivative": result.derivative}
    else:
        smooth, certificates = sigma, {"derivative": check_derivative_bound(sigma)}
    if not certificates["derivative"].passed:
        raise FactorizationError("The scale fails its derivative bound", certificates["derivative"].worst_residual)
    return smooth, certificates


def log_abs(values: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.abs(values))


def log_m_table(psi: GridFunction, sigma: Scale, d_max: int, l_max: int, n_cap: int) -> np.ndarray:
    '''
    log M_{d,l,n} for d <= d_max, l <= l_max, n <= n_cap; -inf where the
    weighted derivatives vanish.
    '''
    table = np.full((d_max + 1, l_max + 1, n_cap + 1), -np.inf)
    n = np.arange(n_cap + 1)
    for gamma in MultiIndex.up_to(psi.grid.dim, l_max):
        derivative = finite_diff(psi, gamma)
        log_d = log_abs(derivative.values).ravel()
        log_sigma = np.log(sigma.values[sigma.grid.slices_of(derivative.grid)]).ravel()
        keep = np.isfinite(log_d)
        if not keep.any():
            continue
        log_d, log_sigma = log_d[keep], log_sigma[keep]
        for l in range(gamma.total, l_max + 1):
            for d in range(d_max + 1):
                exponents = (d + 1) * l + 2 * n
                values = np.max(exponents[:, None] * log_sigma[None, :] + log_d[None, :], axis=1)
                table[d, l] = np.maximum(table[d, l], values)
    return table


def series_tail(lam: LambdaSequence, log_m: np.ndarray, N: int) -> float:
    """sum_{N < n <= K} alpha_n M_n"""
    total = 0.0
    for n in range(N + 1, lam.K + 1):
        if lam.alphas[n] > 0 and np.isfinite(log_m[n]):
            total += math.exp(math.log(lam.alphas[n]) + log_m[n])
    return total


def choose_series_length(lam: LambdaSequence, log_m: np.ndarray, epsilon: float) -> Tuple[int, float]:
    '''
    Smallest N whose certified tail sum_{N < n <= K} alpha_n M_n is at most
    epsilon.

    @raises CapExhaustedError: the table does not reach n = K
    '''
    if len(log_m) <= lam.K:
        raise CapExhaustedError(f"The M table stops at n={len(log_m) - 1}, below K={lam.K}", len(log_m))
    for N in range(lam.K + 1):
        tail = series_tail(lam, log_m, N)
        if tail <= epsilon:
            return N, tail
    return lam.K, 0.0


def sigma_power_series(psi: GridFunction, sigma: Scale, lam: LambdaSequence, first: int, last: int) -> GridFunction:
    '''
    sum_{first <= n <= last} alpha_n sigma^(2n) psi in fixed order. Powers
    come from repeated multiplication unless sigma^(2 last) would
    overflow; then each term is exp(log alpha_n + 2n log sigma + log|psi|)
    times the phase of psi.
    '''
    total = np.zeros(psi.grid.shape, dtype=psi.values.dtype)
    log_sigma = np.log(sigma.values)
    if 2 * last * float(np.max(log_sigma)) < LOG_FLOAT_MAX:
        square = sigma.values ** 2
        power = np.ones(psi.grid.shape)
        for n in range(last + 1):
            if n > 0:
                power = power * square
            if n >= first and lam.alpha(n) > 0:
                total = total + lam.alpha(n) * power * psi.values
    else:
        magnitude = log_abs(psi.values)
        phase = np.where(psi.values == 0, 0, psi.values / np.where(psi.values == 0, 1, np.abs(psi.values)))
        for n in range(first, last + 1):
            if lam.alpha(n) > 0:
                with np.errstate(over="ignore"):
                    total = total + phase * np.exp(math.log(lam.alpha(n)) + 2 * n * log_sigma + magnitude)
    return psi.with_values(total)


def theta_function(lam: LambdaSequence, sigma: Scale) -> GridFunction:
    chi = CallableProfile(lambda s: eval_chi_lambda(lam, s), name="chi_lambda")
    return compose_scale(chi, sigma)


def float_budget(psi: GridFunction, sigma: Scale, lam: LambdaSequence, N: int) -> float:
    log_span = 2 * N * float(np.max(np.log(sigma.values)))
    scale = float(np.max(np.abs(psi.values))) if psi.grid.size else 0.0
    return settings.FLOAT_BUDGET_FACTOR * np.finfo(np.float64).eps * (N + lam.K + 4 + 2 * log_span) * scale


def product_budget(psi: GridFunction, sigma: Scale, lam: LambdaSequence) -> float:
    """max |psi| (1 - exp(-sigma^2 tail_mass)): theta against the untruncated product."""
    return float(np.max(-np.expm1(-sigma.values ** 2 * lam.tail_mass) * np.abs(psi.values)))


@monitorperf
def factorize_function(
        psi: GridFunction,
        sigma: Union[Scale, MollifiedScale],
        d_max: Optional[int] = None,
        l_max: Optional[int] = None,
        epsilon: Optional[float] = None,
        mollify: bool = True,
        ) -> FactorizationResult:
    '''
    Factors psi = theta * phi with theta = chi_lambda o sigma~.

    @type sigma: L{Scale} or L{MollifiedScale}
    @param sigma: the scale; mollified first unless already mollified or
        mollify is False
    @rtype: L{FactorizationResult}
    @raises FactorizationError: the decay report is inconsistent, the
        derivative bound fails, or the residual exceeds its budget
    @raises CapExhaustedError: a numeric cap ran out
    '''
    d_max = settings.FACTOR_D_MAX if d_max is None else d_max
    l_max = settings.FACTOR_L_MAX if l_max is None else l_max
    epsilon = resolve_epsilon(epsilon)
    smooth, certificates = prepare_scale(sigma, mollify)
    psi = psi.restrict(smooth.grid)

    report = decay_report(psi, smooth, l_max=l_max)
    if not report.consistent:
        raise FactorizationError(
            f"psi fails the decay proxy at d={report.witness.d} gamma={report.witness.gamma}", report.witness.dict()
        )
    checkpoint("decay report")

    log_m = log_m_table(psi, smooth, d_max, l_max, settings.SERIES_N_CAP)
    checkpoint("M-table")
    log_m_n = np.max(log_m, axis=(0, 1))
    lam = select_lambda(log_m_n, epsilon, log_scale=True)
    checkpoint("lambda selection")

    N, tail = choose_series_length(lam, log_m_n, epsilon)
    phi = sigma_power_series(psi, smooth, lam, 0, N)
    checkpoint("series")
    theta = theta_function(lam, smooth)
    checkpoint("theta")

    residual = float(np.max(np.abs(theta.values * phi.values - psi.values)))
    budget = ResidualBudget(
        float_part=float_budget(psi, smooth, lam, N),
        series_tail=tail,
        product_tail=product_budget(psi, smooth, lam),
    )
    if residual > budget.total:
        raise FactorizationError(f"Residual {residual:.3e} exceeds its budget", budget.dict())

    theta_report = chi_decay_report(lam, s_min=float(np.max(smooth.values)))
    LOGGER.info(
        "Factorized on %s: offset=%d K=%d N=%d residual=%.3e budget=%.3e",
        psi.grid.shape, lam.offset, lam.K, N, residual, budget.total,
    )
    return FactorizationResult(
        theta=theta,
        phi=phi,
        lam=lam,
        n_series=N,
        residual=residual,
        tail_bound=tail,
        budget=budget,
        log_m_table=log_m,
        sigma=smooth,
        psi=psi,
        certificates=certificates,
        report=report,
        theta_report=theta_report,
    )


def partial_sum_certificate(result: FactorizationResult, n1: int, n2: int, d: int, gamma: MultiIndex) -> Certificate:
    '''
    Certifies that the partial sums of sum_n alpha_n sigma^(2n) psi are
    Cauchy with the table as modulus:

        || sum_{n1 < n <= n2} alpha_n sigma^(2n) psi ||_{d,gamma}
            <= sum_{n1 < n <= n2} alpha_n (1 + 3nC)^|gamma| M_{d,|gamma|,n}

    with C the largest constant of the derivative bound of sigma. The
    weights hold for |gamma| <= 2 and derivative exponents d' <= 2.
    '''
    derivative = result.certificates["derivative"]
    if gamma.total > 2 or derivative.constants["d"] > 2:
        raise FactorizationError("The partial sum modulus covers |gamma| <= 2 and derivative exponents up to 2")
    d_table, l_table, _ = result.log_m_table.shape
    if d >= d_table or gamma.total >= l_table:
        raise FactorizationError(f"(d={d}, |gamma|={gamma.total}) lies outside the M table")
    C = derivative.constants["C"]
    lam = result.lam
    difference = sigma_power_series(result.psi, result.sigma, lam, n1 + 1, n2)
    lhs_f = weighted_derivative(difference, result.sigma, d, gamma)
    lhs = float(np.max(np.abs(lhs_f.values)))
    rhs = 0.0
    for n in range(n1 + 1, min(n2, lam.K) + 1):
        log_m = result.log_m_table[d, gamma.total, n]
        if lam.alphas[n] > 0 and np.isfinite(log_m):
            rhs += math.exp(math.log(lam.alphas[n]) + gamma.total * math.log1p(3 * n * C) + log_m)
    index = np.unravel_index(int(np.argmax(np.abs(lhs_f.values))), lhs_f.grid.shape)
    return make_certificate(
        "partial_sums",
        np.array([lhs - rhs * (1 + settings.CERTIFICATE_RTOL)]),
        np.array([lhs_f.grid.point(index)]),
        {"C": C, "n1": n1, "n2": n2, "d": d},
        grid=result.sigma.grid,
        details={"lhs": lhs, "rhs": rhs, "gamma": list(gamma.orders)},
    )
