'''
Desk-scale demonstrations that l_1(Z) under pointwise multiplication is
self-differentiable without the factorization property, and that a
multiplier of C_0 need not map into it.
'''
import logging
from typing import List, Optional, Sequence

from django.conf import settings
import numpy as np

from scales.certificate import Certificate, make_certificate
from util.pydantic import PydanticModel
from .sequences import FiniteSequence, half_norm, half_sum, l1_norm, l2_norm, partial_sums


LOGGER = logging.getLogger('main')

WITNESS_WINDOWS = (100, 1000, 10000)


def random_pairs(trials: int, length: int, rng_seed: Optional[int] = None):
    '''
    Pairs of sequences with entries uniform in [-1, 1] on windows of the
    given length at random offsets, drawn from one seeded generator.
    '''
    rng = np.random.default_rng(settings.DEFAULT_SEED if rng_seed is None else rng_seed)
    for _ in range(trials):
        phi = FiniteSequence(rng.uniform(-1, 1, length), int(rng.integers(-length, length + 1)))
        psi = FiniteSequence(rng.uniform(-1, 1, length), int(rng.integers(-length, length + 1)))
        yield phi, psi


def _allowance(length: int, value: float) -> float:
    return settings.FLOAT_BUDGET_FACTOR * np.finfo(np.float64).eps * length * value


def _inequality_certificate(kind, residuals, witness, seed, trials, length, details) -> Certificate:
    return make_certificate(
        kind,
        np.array(residuals),
        np.array(witness, dtype=np.float64),
        {"trials": trials, "length": length, "seed": seed},
        details=details,
    )


def check_l1_counterexample(
        trials: int = 1000,
        length: int = 50,
        rng_seed: Optional[int] = None,
        windows: Sequence[int] = WITNESS_WINDOWS,
        ) -> Certificate:
    '''
    Checks half_norm(phi psi) <= l1(phi) l1(psi) and
    half_norm(phi + psi) <= 2 (half_norm(phi) + half_norm(psi)) on random
    pairs, and tabulates the partial sums of s_k = 1/k^2: the l_1 sums
    converge while the l_1/2 sums (sum of 1/k) keep growing.
    '''
    seed = settings.DEFAULT_SEED if rng_seed is None else rng_seed
    residuals, witness = [], []
    for trial, (phi, psi) in enumerate(random_pairs(trials, length, seed)):
        bound = l1_norm(phi) * l1_norm(psi)
        residuals.append(half_norm(phi * psi) - bound - _allowance(length, bound))
        witness.append([trial, 0])
        bound = 2 * (half_norm(phi) + half_norm(psi))
        residuals.append(half_norm(phi + psi) - bound - _allowance(length, bound))
        witness.append([trial, 1])
    delta = FiniteSequence.delta()
    residuals.append(half_norm(delta * delta) - l1_norm(delta) ** 2)
    witness.append([-1, 0])

    l1 = partial_sums(lambda k: 1 / k ** 2, windows)
    half = partial_sums(lambda k: 1 / k, windows)
    LOGGER.info("l_1/2 witness sums %s against l_1 sums %s", half, l1)
    return _inequality_certificate(
        "l1_counterexample", residuals, witness, seed, trials, length,
        {"witness": {"windows": sorted(windows), "l1": l1, "half": half}},
    )


def check_l2_variant(
        trials: int = 1000,
        length: int = 50,
        rng_seed: Optional[int] = None,
        windows: Sequence[int] = WITNESS_WINDOWS,
        ) -> Certificate:
    '''
    Checks l1(phi psi) <= l2(phi) l2(psi) on random pairs, so products of
    l_2 lie in l_1, and tabulates s_k = 1/k: the sums of s_k^2 converge
    while the sums of |s_k| keep growing.
    '''
    seed = settings.DEFAULT_SEED if rng_seed is None else rng_seed
    residuals, witness = [], []
    for trial, (phi, psi) in enumerate(random_pairs(trials, length, seed)):
        bound = l2_norm(phi) * l2_norm(psi)
        residuals.append(l1_norm(phi * psi) - bound - _allowance(length, bound))
        witness.append([trial, 0])

    l2_squared = partial_sums(lambda k: 1 / k ** 2, windows)
    l1 = partial_sums(lambda k: 1 / k, windows)
    return _inequality_certificate(
        "l2_variant", residuals, witness, seed, trials, length,
        {"witness": {"windows": sorted(windows), "l2_squared": l2_squared, "l1": l1}},
    )


class EscapeRow(PydanticModel):
    R: float
    inf_beyond: float
    expected: float
    value_at_R: float
    identity_residual: float


class EscapeReport(PydanticModel):
    rows: List[EscapeRow]
    limit: float


def multiplier_escape_demo(R_values: Sequence[float] = (0, 1, 10, 100)) -> EscapeReport:
    '''
    f(r) = 1/(1 + r^2) vanishes at infinity, but T f = r^2 f does not:
    inf_{r >= R} (T f)(r) = R^2/(1 + R^2) tends to 1. The infimum is taken
    over R and geometrically spaced points beyond it.
    '''
    rows = []
    for R in R_values:
        R = float(R)
        r = np.concatenate([[R], R + np.geomspace(1e-6, 1e6, 512)])
        f = 1 / (1 + r ** 2)
        Tf = r ** 2 * f
        rows.append(EscapeRow(
            R=R,
            inf_beyond=float(np.min(Tf)),
            expected=R ** 2 / (1 + R ** 2),
            value_at_R=float(Tf[0]),
            identity_residual=float(np.max(np.abs(Tf - (1 - f)))),
        ))
    return EscapeReport(rows=rows, limit=rows[-1].inf_beyond if rows else 0.0)
