'''
Membership diagnostics: a seminorm table plus the C_0 proxy.

On a truncated box X^gamma f in C_0 cannot be observed directly. The
proxy used here is that the shell sups of sigma^d X^gamma f do not grow
toward the boundary of the box.
'''
import csv
from enum import Enum
import io
import logging
from typing import Dict, List, Optional

from django.conf import settings
import numpy as np
from pydantic import root_validator

from grids.grid import GridDescriptor, GridFunction
from scales.calculus import shell_index
from scales.certificate import TRUNCATED_DOMAIN_FLAG
from scales.scale import Scale
from util.pydantic import PydanticModel
from .seminorms import SeminormIndex, weighted_derivative


LOGGER = logging.getLogger('main')

C0_PROXY_FLAG = "C0 proxy: shell sups toward the boundary"


class Verdict(str, Enum):
    CONSISTENT = "consistent"
    INCONSISTENT = "inconsistent"


class SeminormEntry(PydanticModel):
    d: int
    gamma: List[int]
    value: float
    shell_sups: List[float]
    growing: bool

    @root_validator(skip_on_failure=True)
    def check_nonnegative(cls, values):
        if values["value"] < 0 or any(s < 0 for s in values["shell_sups"]):
            raise ValueError("seminorm values are nonnegative")
        return values


class Witness(PydanticModel):
    d: int
    gamma: List[int]


class DecayReport(PydanticModel):
    entries: List[SeminormEntry]
    decay_exponents: Dict[str, Optional[float]]
    verdict: Verdict
    witness: Optional[Witness] = None
    grid: Optional[GridDescriptor] = None
    flags: List[str] = [C0_PROXY_FLAG, TRUNCATED_DOMAIN_FLAG]

    @root_validator(skip_on_failure=True)
    def check_witness(cls, values):
        if values["verdict"] is Verdict.INCONSISTENT and values.get("witness") is None:
            raise ValueError("an inconsistent verdict needs a witness")
        return values

    @property
    def consistent(self) -> bool:
        return self.verdict is Verdict.CONSISTENT

    def value(self, d: int, gamma: List[int]) -> float:
        for entry in self.entries:
            if entry.d == d and entry.gamma == list(gamma):
                return entry.value
        raise KeyError((d, gamma))

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["d", "gamma", "value", "growing"])
        for entry in self.entries:
            writer.writerow([entry.d, " ".join(str(g) for g in entry.gamma), repr(entry.value), int(entry.growing)])
        return out.getvalue()


def shell_sups(f: GridFunction, shells: int) -> List[float]:
    """sup |f| over each box-normalized shell, outermost last; empty shells are skipped."""
    shell = shell_index(f.grid, shells)
    values = np.abs(f.values).ravel()
    return [float(np.max(values[shell == k])) for k in range(shells) if np.any(shell == k)]


def is_growing(sups: List[float], tolerance: float) -> bool:
    if len(sups) < 2:
        return False
    return sups[-1] > sups[-2] * (1 + tolerance)


def decay_exponents(f: GridFunction, sigma: Scale) -> Dict[str, Optional[float]]:
    '''
    Least-squares slope of -log|f| against log sigma along each half-axis,
    over the outer half of the ray. None where f vanishes on the ray.
    '''
    exponents: Dict[str, Optional[float]] = {}
    center = tuple(-lo for lo, _ in f.grid.index_bounds)
    for axis in range(f.grid.dim):
        for sign, label in ((1, "+"), (-1, "-")):
            selector = list(center)
            n = f.grid.shape[axis]
            ray = np.arange(center[axis], n) if sign > 0 else np.arange(center[axis], -1, -1)
            ray = ray[len(ray) // 2:]
            selector[axis] = ray
            values = np.abs(f.values[tuple(selector)])
            weights = sigma.values[tuple(selector)]
            keep = (values > 0) & (weights > 1)
            key = f"{label}x{axis}"
            if np.count_nonzero(keep) < 2 or np.ptp(np.log(weights[keep])) == 0:
                exponents[key] = None
                continue
            slope = np.polyfit(np.log(weights[keep]), np.log(values[keep]), 1)[0]
            exponents[key] = float(-slope)
    return exponents


def decay_report(
        f: GridFunction,
        sigma: Scale,
        d_max: Optional[int] = None,
        l_max: Optional[int] = None,
        shells: Optional[int] = None,
        ) -> DecayReport:
    '''
    Tabulates ||f||_{d,gamma} for d <= d_max and |gamma| <= l_max. The
    verdict is inconsistent when some sigma^d X^gamma f has its outermost
    shell sup above the preceding one; the witness is the first such
    (d, gamma), scanning d outermost.
    '''
    d_max = settings.REPORT_D_MAX if d_max is None else d_max
    l_max = settings.REPORT_L_MAX if l_max is None else l_max
    shells = shells or settings.SHELL_COUNT
    entries, witness = [], None
    for idx in SeminormIndex.table(f.grid.dim, d_max, l_max):
        weighted = weighted_derivative(f, sigma, idx.d, idx.gamma)
        sups = shell_sups(weighted, shells)
        growing = is_growing(sups, settings.DECAY_GROWTH_TOLERANCE)
        entries.append(SeminormEntry(
            d=idx.d,
            gamma=list(idx.gamma.orders),
            value=max(sups),
            shell_sups=sups,
            growing=growing,
        ))
        if growing and witness is None:
            witness = Witness(d=idx.d, gamma=list(idx.gamma.orders))

    report = DecayReport(
        entries=entries,
        decay_exponents=decay_exponents(f, sigma),
        verdict=Verdict.INCONSISTENT if witness else Verdict.CONSISTENT,
        witness=witness,
        grid=f.grid.descriptor(),
    )
    if witness:
        LOGGER.info("Decay report inconsistent at d=%d gamma=%s", witness.d, witness.gamma)
    return report
