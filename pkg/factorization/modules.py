'''
Factorization of module elements e = theta * f and the extension of
multipliers through it.

Two concrete modules are provided: the sigma-rapidly vanishing grid
functions acting on themselves (seminorms ||.||_{d,gamma}) and grid
functions under the pointwise action with only the sup norm, the C_0
proxy. For a multiplier T of the algebra, T e is defined as (T theta) f.
'''
from dataclasses import dataclass, field, replace
import logging
import math
from typing import Annotated, Dict, List, Literal, Optional, Sequence, Tuple, Union

from django.conf import settings
import numpy as np
from pydantic import Field, conint

from grids.grid import Grid, GridFunction, MultiIndex, finite_diff, sup_norm
from scales.certificate import Certificate, make_certificate
from scales.mollify import MollifiedScale
from scales.scale import Scale
from schwartz.profiles import CatalogProfile, compose_scale
from schwartz.seminorms import SeminormIndex, _leibniz_terms
from util.perfmonitor import checkpoint, monitorperf
from util.pydantic import PydanticModel
from .engine import (
    choose_series_length,
    float_budget,
    log_abs,
    series_tail,
    prepare_scale,
    sigma_power_series,
    theta_function,
)
from .products import FactorizationError, LambdaSequence, resolve_epsilon, select_lambda


LOGGER = logging.getLogger('main')


class GridModule:
    '''
    A module of grid functions under the pointwise action of the algebra.
    '''
    name = "module"

    def indices(self, dim: int) -> List[SeminormIndex]:
        raise NotImplementedError

    def restrict(self, grid: Grid) -> "GridModule":
        return self

    def weighted(self, e: GridFunction, idx: SeminormIndex) -> GridFunction:
        '''The function whose sup norm is the seminorm idx of e.'''
        raise NotImplementedError

    def envelope(self, magnitude: GridFunction, idx: SeminormIndex) -> float:
        '''Bound on how pointwise errors of size <magnitude> enter seminorm idx.'''
        raise NotImplementedError

    def seminorm(self, e: GridFunction, idx: SeminormIndex) -> float:
        return sup_norm(self.weighted(e, idx))

    def act(self, a: GridFunction, e: GridFunction) -> GridFunction:
        return a.restrict(e.grid) * e


@dataclass(frozen=True, eq=False)
class SigmaModule(GridModule):
    '''
    Grid functions with the seminorms sup |sigma^d X^gamma e|.
    '''
    scale: Scale
    seminorm_list: Tuple[Tuple[int, Tuple[int, ...]], ...] = ()
    name = "sigma"

    def indices(self, dim: int) -> List[SeminormIndex]:
        if not self.seminorm_list:
            return SeminormIndex.table(dim, 2, 1)
        indices = [SeminormIndex.coerce(i, dim) for i in self.seminorm_list]
        zero = SeminormIndex(0, MultiIndex.zero(dim))
        return indices if zero in indices else [zero] + indices

    def restrict(self, grid: Grid) -> "SigmaModule":
        return replace(self, scale=self.scale.restrict(grid))

    def weighted(self, e, idx):
        derivative = finite_diff(e, idx.gamma)
        weight = self.scale.values[self.scale.grid.slices_of(derivative.grid)]
        return derivative.with_values(weight ** idx.d * derivative.values)

    def envelope(self, magnitude, idx):
        spread = finite_diff(magnitude, idx.gamma, absolute_weights=True)
        weight = self.scale.values[self.scale.grid.slices_of(spread.grid)]
        return float(np.max(weight ** idx.d * spread.values))


class ContinuousModule(GridModule):
    '''
    Grid functions with the sup norm only, standing in for C_0(M).
    '''
    name = "continuous"

    def indices(self, dim: int) -> List[SeminormIndex]:
        return [SeminormIndex(0, MultiIndex.zero(dim))]

    def weighted(self, e, idx):
        if idx.d or idx.gamma.total:
            raise FactorizationError("The continuous module only carries the sup norm")
        return e

    def envelope(self, magnitude, idx):
        return float(np.max(magnitude.values))


@dataclass(frozen=True, eq=False)
class ModuleFactorization:
    theta: GridFunction
    f: GridFunction
    e: GridFunction
    lam: LambdaSequence
    n_series: int
    residuals: Dict[str, float]
    budgets: Dict[str, float]
    certificate: Certificate
    sigma: Scale
    certificates: Dict[str, Certificate] = field(default_factory=dict)

    @property
    def residual(self) -> float:
        return max(self.residuals.values())

    def sup_budget(self) -> float:
        return self.budgets[str(SeminormIndex(0, MultiIndex.zero(self.e.grid.dim)))]


def normalized_power(e: GridFunction, sigma: Scale, n: int) -> Tuple[GridFunction, float]:
    '''
    sigma^(2n) e divided by exp(c) with c = max log|sigma^(2n) e|, and c.
    Seminorms are linear, so ||sigma^(2n) e||_m = exp(c) ||result||_m.
    '''
    exponent = 2 * n * np.log(sigma.values) + log_abs(e.values)
    c = float(np.max(exponent))
    if not np.isfinite(c):
        return e.with_values(np.zeros_like(e.values)), -math.inf
    phase = np.where(e.values == 0, 0, e.values / np.where(e.values == 0, 1, np.abs(e.values)))
    return e.with_values(np.exp(exponent - c) * phase), c


def log_module_table(
        e: GridFunction,
        sigma: Scale,
        module: GridModule,
        indices: Sequence[SeminormIndex],
        n_cap: int,
        ) -> Dict[SeminormIndex, np.ndarray]:
    """log ||sigma^(2n) e||_m for every index m and n <= n_cap."""
    table = {idx: np.full(n_cap + 1, -np.inf) for idx in indices}
    for n in range(n_cap + 1):
        power, c = normalized_power(e, sigma, n)
        for idx in indices:
            value = module.seminorm(power, idx)
            table[idx][n] = c + math.log(value) if value > 0 else -np.inf
    return table


def _needed_indices(indices: Sequence[SeminormIndex]) -> List[SeminormIndex]:
    needed: List[SeminormIndex] = []
    for idx in indices:
        for _, beta, _ in _leibniz_terms(idx.gamma):
            candidate = SeminormIndex(idx.d, beta)
            if candidate not in needed:
                needed.append(candidate)
    return needed


@monitorperf
def factorize_module_element(
        e: GridFunction,
        module: GridModule,
        sigma: Union[Scale, MollifiedScale],
        epsilon: Optional[float] = None,
        mollify: bool = True,
        ) -> ModuleFactorization:
    '''
    Factors e = theta f with theta = chi_lambda o sigma~ and
    f = sum_{n <= N} alpha_n sigma~^(2n) e, choosing lambda against
    M_{m,n} = ||sigma~^(2n) e||_m over the module seminorms m.

    Each seminorm of theta f - e = -theta sum_{N < n <= K} alpha_n sigma~^(2n) e
    is budgeted by the Leibniz bound with the derivatives of theta plus
    a floating point envelope.

    @raises FactorizationError: a seminorm residual exceeds its budget
    @raises CapExhaustedError: M_{m,n} diverges within the caps
    '''
    epsilon = resolve_epsilon(epsilon)
    smooth, certificates = prepare_scale(sigma, mollify)
    e = e.restrict(smooth.grid)
    module = module.restrict(smooth.grid)
    indices = module.indices(e.grid.dim)
    needed = _needed_indices(indices)

    table = log_module_table(e, smooth, module, needed, settings.SERIES_N_CAP)
    checkpoint("M-table")
    log_m_n = np.max(np.stack([table[idx] for idx in indices]), axis=0)
    lam = select_lambda(log_m_n, epsilon, log_scale=True)
    N, _ = choose_series_length(lam, log_m_n, epsilon)
    checkpoint("lambda selection")

    f = sigma_power_series(e, smooth, lam, 0, N)
    theta = theta_function(lam, smooth)
    checkpoint("series")
    product = theta * f
    difference = product - e
    magnitude = product.abs() + e.abs()
    float_factor = float_budget(e.with_values(np.ones(e.grid.shape)), smooth, lam, N)

    residual, witness, residuals, budgets = [], [], {}, {}
    for idx in indices:
        weighted = module.weighted(difference, idx)
        value = sup_norm(weighted)
        tail = 0.0
        for coefficient, beta, rest in _leibniz_terms(idx.gamma):
            theta_sup = sup_norm(finite_diff(theta, rest))
            tail += coefficient * theta_sup * series_tail(lam, table[SeminormIndex(idx.d, beta)], N)
        budget = tail * (1 + settings.CERTIFICATE_RTOL) + float_factor * module.envelope(magnitude, idx)
        residuals[str(idx)] = value
        budgets[str(idx)] = budget
        residual.append(value - budget)
        index = np.unravel_index(int(np.argmax(np.abs(weighted.values))), weighted.grid.shape)
        witness.append(weighted.grid.point(index))

    certificate = make_certificate(
        "module_factorization",
        np.array(residual),
        np.array(witness),
        {"N": N, "K": lam.K, "offset": lam.offset, "epsilon": epsilon},
        grid=e.grid,
        details={"residuals": residuals, "budgets": budgets, "module": module.name},
    )
    if not certificate.passed:
        raise FactorizationError("Module factorization residual exceeds its budget", residuals)
    return ModuleFactorization(theta, f, e, lam, N, residuals, budgets, certificate, smooth, certificates)


class Multiplier(PydanticModel):
    kind: str

    def values(self, sigma: Scale) -> np.ndarray:
        raise NotImplementedError


class IdentityMultiplier(Multiplier):
    kind: Literal["identity"] = "identity"

    def values(self, sigma):
        return np.ones(sigma.grid.shape)


class SigmaPower(Multiplier):
    kind: Literal["sigma_power"] = "sigma_power"
    k: conint(ge=0) = 1

    def values(self, sigma):
        return sigma.values ** self.k


class ProfileMultiplier(Multiplier):
    '''Multiplication by phi o sigma.'''
    kind: Literal["profile"] = "profile"
    profile: CatalogProfile

    def values(self, sigma):
        return compose_scale(self.profile, sigma).values


AnyMultiplier = Annotated[Union[IdentityMultiplier, SigmaPower, ProfileMultiplier], Field(discriminator="kind")]


@dataclass(frozen=True, eq=False)
class MultiplierExtension:
    value: GridFunction
    factorization: ModuleFactorization
    direct: GridFunction
    direct_difference: float
    budget: float


def extend_multiplier(
        T: Multiplier,
        e: GridFunction,
        module: GridModule,
        sigma: Union[Scale, MollifiedScale],
        epsilon: Optional[float] = None,
        mollify: bool = True,
        ) -> MultiplierExtension:
    '''
    T e = (T theta) f for the factorization e = theta f. The multiplier is
    applied to theta in the algebra; the direct pointwise action T e is
    computed alongside and must agree within sup|T| times the sup norm
    budget of the factorization.

    @raises FactorizationError: factorization failure or disagreement with
        the direct action
    '''
    factorization = factorize_module_element(e, module, sigma, epsilon, mollify)
    t = factorization.theta.with_values(T.values(factorization.sigma))
    value = module.act(t * factorization.theta, factorization.f)
    direct = module.act(t, factorization.e)
    difference = sup_norm(value - direct)
    budget = sup_norm(t) * factorization.sup_budget() + settings.FLOAT_BUDGET_FACTOR * np.finfo(np.float64).eps * sup_norm(direct)
    if difference > budget:
        raise FactorizationError(f"Extended multiplier differs from the direct action by {difference:.3e}", budget)
    LOGGER.debug("Extended multiplier %s with difference %.3e", T.kind, difference)
    return MultiplierExtension(value, factorization, direct, difference, budget)
