'''
The infinite products phi_lambda(x) = prod_k (1 + x^2/lambda_k^2) and
chi_lambda = 1/phi_lambda, their truncations and the choice of lambda.

A LambdaSequence stores K exponents k_j (lambda_j = 2^k_j) and the
coefficients alpha_n = e_n(1/lambda_0^2, ..., 1/lambda_{K-1}^2) of the
truncated product sum_n alpha_n x^(2n). The factors beyond K are taken
to continue the powers of two, lambda_j = 2^(k_last + j - K + 1), which
bounds the dropped mass sum_{j >= K} 1/lambda_j^2 by 4^(-k_last)/3.
'''
import logging
import math
from typing import List, Optional, Sequence, Tuple, Union

from django.conf import settings
import numpy as np
from pydantic import root_validator

from schwartz.reports import (
    C0_PROXY_FLAG,
    DecayReport,
    SeminormEntry,
    Verdict,
    Witness,
    is_growing,
)
from util.pydantic import PydanticModel
from util.typing import FloatArray


LOGGER = logging.getLogger('main')

LOG2 = math.log(2)


class FactorizationError(Exception):
    '''
    A factorization that cannot be certified.
    '''
    def __init__(self, value, error=None):
        self.value = value
        self.error = error

    def __str__(self):
        if self.error is not None:
            return "%s: %s" % (str(self.value), repr(self.error))
        return str(self.value)


class CapExhaustedError(FactorizationError):
    '''
    A numeric cap (K, N or the lambda offset) ran out before the bound held.
    '''
    def __init__(self, value, n: Optional[int] = None, error=None):
        super().__init__(value, error)
        self.n = n


def tail_mass(exponents: Sequence[int]) -> float:
    if not exponents:
        return 4 / 3
    return 4.0 ** (-exponents[-1]) / 3


def alpha_coefficients(exponents: Sequence[int], K: Optional[int] = None) -> List[float]:
    '''
    Elementary symmetric polynomials of 1/lambda_j^2 for the first K
    exponents, multiplying in one factor (1 + x^2/lambda_j^2) at a time.
    '''
    exponents = list(exponents)[:K] if K is not None else list(exponents)
    if any(b <= a for a, b in zip(exponents, exponents[1:])):
        raise FactorizationError(f"Exponents must be strictly increasing: {exponents}")
    alphas = np.zeros(len(exponents) + 1)
    alphas[0] = 1.0
    for j, k in enumerate(exponents):
        c = 4.0 ** (-k)
        alphas[1:j + 2] = alphas[1:j + 2] + c * alphas[:j + 1]
    return [float(a) for a in alphas]


class LambdaSequence(PydanticModel):
    exponents: List[int]
    alphas: List[float]
    tail_mass: float
    epsilon: Optional[float] = None
    offset: int = 0
    # log beta_n for n >= 1; entry 0 stands for alpha_0 = 1
    log_betas: List[float] = []

    @root_validator(skip_on_failure=True)
    def check_sequence(cls, values):
        exponents = values["exponents"]
        if any(k < 0 for k in exponents) or any(b <= a for a, b in zip(exponents, exponents[1:])):
            raise ValueError("exponents must be strictly increasing nonnegative integers")
        alphas = values["alphas"]
        if len(alphas) != len(exponents) + 1 or alphas[0] != 1 or any(a < 0 for a in alphas):
            raise ValueError("alphas must start with 1, be nonnegative and have K + 1 entries")
        return values

    @classmethod
    def from_exponents(cls, exponents: Sequence[int], **kwargs) -> "LambdaSequence":
        exponents = [int(k) for k in exponents]
        return cls(exponents=exponents, alphas=alpha_coefficients(exponents), tail_mass=tail_mass(exponents), **kwargs)

    @property
    def K(self) -> int:
        return len(self.exponents)

    @property
    def lambdas(self) -> List[float]:
        return [2.0 ** k for k in self.exponents]

    def alpha(self, n: int) -> float:
        return self.alphas[n] if n < len(self.alphas) else 0.0

    def log_factor_sum(self, x: Union[float, FloatArray]) -> FloatArray:
        """sum_j log(1 + x^2/lambda_j^2)"""
        x2 = np.square(np.asarray(x, dtype=np.float64))
        total = np.zeros(np.shape(x2))
        for k in self.exponents:
            total = total + np.log1p(x2 * 4.0 ** (-k))
        return total

    def series(self, x: Union[float, FloatArray], N: Optional[int] = None) -> FloatArray:
        """sum_{n <= N} alpha_n x^(2n) by Horner's rule."""
        N = self.K if N is None else min(N, self.K)
        x2 = np.square(np.asarray(x, dtype=np.float64))
        total = np.zeros(np.shape(x2))
        for n in range(N, -1, -1):
            total = total * x2 + self.alphas[n]
        return total


def eval_phi_lambda(
        lam: LambdaSequence,
        x: Union[float, FloatArray],
        with_tail_certificate: bool = True,
        ) -> Tuple[FloatArray, Optional[FloatArray]]:
    '''
    The truncated product and, optionally, the multiplicative bound
    exp(x^2 tail_mass) on the dropped factors: phi <= value * tail.
    '''
    x2 = np.square(np.asarray(x, dtype=np.float64))
    value = np.ones(np.shape(x2))
    with np.errstate(over="ignore"):
        for k in lam.exponents:
            value = value * (1 + x2 * 4.0 ** (-k))
        tail = np.exp(x2 * lam.tail_mass) if with_tail_certificate else None
    return value, tail


def eval_chi_lambda(lam: LambdaSequence, x: Union[float, FloatArray]) -> FloatArray:
    """1/phi_lambda, evaluated in log space so it underflows to 0 instead of overflowing."""
    return np.exp(-lam.log_factor_sum(x))


def _log1p_exp(log_m: np.ndarray) -> np.ndarray:
    """log(1 + M) from log M, with log 0 = -inf."""
    return np.logaddexp(0.0, log_m)


def _bound_violation(log_s: float, log_m: np.ndarray, log_epsilon: float) -> Optional[int]:
    '''
    First n >= 1 where S^n/n! (1 + M_n) > eps 2^-n or S^n/n! > 1/n^2.
    '''
    for n in range(1, len(log_m)):
        log_e = n * log_s - math.lgamma(n + 1)
        if log_e + _log1p_exp(log_m[n]) > log_epsilon - n * LOG2:
            return n
        if log_e > -2 * math.log(n):
            return n
    return None


def resolve_epsilon(epsilon: Optional[float]) -> float:
    '''
    @raises FactorizationError: an explicit epsilon that is not positive
    '''
    epsilon = settings.DEFAULT_EPSILON if epsilon is None else epsilon
    if not epsilon > 0:
        raise FactorizationError(f"epsilon must be positive, got {epsilon}")
    return epsilon


def select_lambda(
        M: Sequence[float],
        epsilon: Optional[float] = None,
        log_scale: bool = False,
        k_cap: Optional[int] = None,
        max_offset: Optional[int] = None,
        ) -> LambdaSequence:
    '''
    Chooses lambda_j = 2^(j + t), j < K, with the smallest offset t for which
    the bound e_n <= S^n/n!, S = sum_j 1/lambda_j^2, gives
    alpha_n <= min(beta_n, 1/n^2) with beta_n = eps 2^-n / (1 + M_n) for
    every 1 <= n < len(M). Raising t scales S by 4^-t, so the scan ends for
    any finite M.

    @type M: sequence of C{float}
    @param M: M_0, ..., M_{N_cap}; natural logarithms when log_scale is set
    @raises CapExhaustedError: no offset up to max_offset satisfies the
        bound, or the constructed alphas violate it; names the violating n
    '''
    epsilon = resolve_epsilon(epsilon)
    K = settings.LAMBDA_K_CAP if k_cap is None else k_cap
    max_offset = settings.LAMBDA_MAX_OFFSET if max_offset is None else max_offset
    M = np.asarray(M, dtype=np.float64)
    with np.errstate(divide="ignore"):
        log_m = M if log_scale else np.log(M)
    if np.any(np.isnan(log_m)) or np.any(log_m == np.inf):
        raise FactorizationError("M_n must be finite and nonnegative")
    log_epsilon = math.log(epsilon)
    series_length = min(len(log_m), settings.SERIES_N_CAP + 1)
    log_m = log_m[:series_length]

    violation = None
    for t in range(max_offset + 1):
        log_s = math.log(sum(4.0 ** -(j + t) for j in range(K))) if K else -math.inf
        violation = _bound_violation(log_s, log_m, log_epsilon)
        if violation is None:
            break
    else:
        raise CapExhaustedError(f"No lambda offset up to {max_offset} satisfies the coefficient bound at n={violation}", violation)

    log_betas = [0.0] + [log_epsilon - n * LOG2 - float(_log1p_exp(log_m[n])) for n in range(1, series_length)]
    lam = LambdaSequence.from_exponents(range(t, t + K), epsilon=epsilon, offset=t, log_betas=log_betas)
    for n in range(1, min(lam.K, series_length - 1) + 1):
        alpha = lam.alphas[n]
        if alpha > 0 and (math.log(alpha) > log_betas[n] or alpha > 1 / n ** 2):
            raise CapExhaustedError(f"alpha_{n} = {alpha:.3e} violates its bound", n)
    LOGGER.debug("Selected lambda offset %d with K=%d", t, K)
    return lam


def accepted_sum(lam: LambdaSequence, M: Sequence[float], log_scale: bool = False) -> float:
    """sum_{n >= 1} alpha_n M_n, which the selection keeps below 2 eps."""
    M = np.asarray(M, dtype=np.float64)
    total = 0.0
    for n in range(1, min(lam.K, len(M) - 1) + 1):
        if lam.alphas[n] > 0:
            total += math.exp(math.log(lam.alphas[n]) + M[n]) if log_scale else lam.alphas[n] * M[n]
    return total


def chi_decay_report(
        lam: LambdaSequence,
        s_min: float = 1.0,
        d_max: Optional[int] = None,
        shells: Optional[int] = None,
        points_per_octave: int = 16,
        ) -> DecayReport:
    '''
    Schwartz proxy for chi_lambda along the radial coordinate s: the sups
    of s^d chi_lambda(s) over geometric shells of [s_min, s_max] must not
    grow toward s_max = max(2^(k_last + 8), 256 s_min). Values are formed
    in log space.
    '''
    d_max = settings.REPORT_D_MAX if d_max is None else d_max
    shells = shells or settings.SHELL_COUNT
    k_last = lam.exponents[-1] if lam.exponents else 0
    log_lo = math.log2(max(s_min, 1.0))
    log_hi = max(k_last + 8.0, log_lo + 8)
    count = int(math.ceil((log_hi - log_lo) * points_per_octave)) + 1
    s = np.exp2(np.linspace(log_lo, log_hi, count))
    log_chi = -lam.log_factor_sum(s)
    shell = np.minimum(((np.log2(s) - log_lo) / (log_hi - log_lo) * shells).astype(int), shells - 1)

    entries, witness = [], None
    for d in range(d_max + 1):
        values = np.exp(d * np.log(s) + log_chi)
        sups = [float(np.max(values[shell == k])) for k in range(shells) if np.any(shell == k)]
        growing = is_growing(sups, settings.DECAY_GROWTH_TOLERANCE)
        entries.append(SeminormEntry(d=d, gamma=[0], value=max(sups), shell_sups=sups, growing=growing))
        if growing and witness is None:
            witness = Witness(d=d, gamma=[0])

    outer = s >= np.exp2((log_lo + log_hi) / 2)
    finite = outer & np.isfinite(log_chi)
    slope = float(np.polyfit(np.log(s[finite]), log_chi[finite], 1)[0]) if np.count_nonzero(finite) >= 2 else None
    return DecayReport(
        entries=entries,
        decay_exponents={"s": -slope if slope is not None else None},
        verdict=Verdict.INCONSISTENT if witness else Verdict.CONSISTENT,
        witness=witness,
        flags=[C0_PROXY_FLAG],
    )
