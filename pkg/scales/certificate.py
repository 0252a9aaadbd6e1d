'''
Certificates: numerically checked inequalities LHS <= RHS.

The residual convention is residual = LHS - RHS, so a certificate passes
exactly when its worst residual is <= 0. Fitted constants are inflated by
CERTIFICATE_SLACK so that float rounding at the extremal point never flips
the inequality, and normalized to C >= 1.
'''
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from django.conf import settings
import numpy as np
from pydantic import Field, root_validator

from grids.grid import Grid, GridDescriptor
from util.log import CertificateLog
from util.pydantic import PydanticModel


TRUNCATED_DOMAIN_FLAG = "truncated-domain heuristic"


class Certificate(PydanticModel):
    kind: str
    constants: Dict[str, float] = {}
    worst_residual: float
    witness: List[float] = []
    passed: bool = Field(alias="pass")
    grid: Optional[GridDescriptor] = None
    flags: List[str] = []
    notes: List[str] = []
    details: Dict[str, Any] = {}

    @root_validator(skip_on_failure=True)
    def check_pass_matches_residual(cls, values):
        if values["passed"] != (values["worst_residual"] <= 0):
            raise ValueError(
                f"pass={values['passed']} contradicts worst_residual={values['worst_residual']}"
            )
        return values

    def revalidate(self) -> bool:
        return self.passed == (self.worst_residual <= 0)

    def constant(self, name: str) -> float:
        return self.constants[name]


def fitted_constant(lhs: np.ndarray, factor: np.ndarray, D: float = 0.0) -> float:
    '''
    Smallest C >= 1 (up to slack) with lhs <= C*factor + D at every sample.
    '''
    if lhs.size == 0:
        return 1.0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        ratio = (lhs - D) / factor
    ratio = ratio[np.isfinite(ratio)]
    worst = float(np.max(ratio)) if ratio.size else 0.0
    return max(1.0, worst) * (1 + settings.CERTIFICATE_SLACK)


def residuals(lhs: np.ndarray, factor: np.ndarray, C: float, D: float = 0.0) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore"):
        res = lhs - (C * factor + D)
    return np.where(np.isnan(res), -np.inf, res)


def make_certificate(
        kind: str,
        residual: np.ndarray,
        witness_points: np.ndarray,
        constants: Dict[str, float],
        grid: Optional[Grid] = None,
        flags: Sequence[str] = (),
        notes: Sequence[str] = (),
        details: Optional[Dict[str, Any]] = None,
        log: bool = True,
        ) -> Certificate:
    '''
    Builds and logs a certificate from a flat residual array.

    @type witness_points: C{numpy.ndarray}
    @param witness_points: one row of coordinates per residual entry
    '''
    residual = np.asarray(residual, dtype=np.float64).ravel()
    if residual.size == 0 or not np.isfinite(residual).any():
        worst, witness = 0.0, []
    else:
        index = int(np.nanargmax(np.where(np.isfinite(residual), residual, -np.inf)))
        worst = float(residual[index])
        witness = [float(c) for c in np.atleast_1d(witness_points[index])]
    certificate = Certificate(
        kind=kind,
        constants={k: float(v) for k, v in constants.items()},
        worst_residual=worst,
        witness=witness,
        passed=worst <= 0,
        grid=grid.descriptor() if grid is not None else None,
        flags=list(flags),
        notes=list(notes),
        details=details or {},
    )
    if log:
        CertificateLog.record(certificate)
    return certificate


def search_exponents(
        kind: str,
        lhs: np.ndarray,
        factor: Callable[..., np.ndarray],
        candidates: Iterable[Tuple[int, ...]],
        names: Sequence[str],
        witness_points: np.ndarray,
        grid: Optional[Grid] = None,
        D: float = 0.0,
        cap: Optional[float] = None,
        flags: Sequence[str] = (),
        notes: Sequence[str] = (),
        ) -> Certificate:
    '''
    Fits lhs <= C*factor(*exponents) + D for the first exponent tuple whose
    fitted C stays within the cap. When no candidate qualifies the residual
    is evaluated with C = cap for the candidate with the smallest fitted C,
    so the certificate fails with a positive residual.
    '''
    cap = settings.CERTIFICATE_C_MAX if cap is None else cap
    best: Optional[Tuple[float, Tuple[int, ...], np.ndarray]] = None
    for exponents in candidates:
        f = factor(*exponents)
        C = fitted_constant(lhs, f, D)
        if C <= cap:
            constants = {"C": C, "D": D, "C_max": cap, **dict(zip(names, exponents))}
            return make_certificate(kind, residuals(lhs, f, C, D), witness_points, constants, grid, flags, notes)
        if best is None or C < best[0]:
            best = (C, exponents, f)

    if best is None:
        raise ValueError("No exponent candidates to fit")
    C_fit, exponents, f = best
    constants = {"C": cap, "D": D, "C_max": cap, **dict(zip(names, exponents))}
    notes = list(notes) + [f"fitted constant {C_fit:.6g} exceeds the cap {cap:.6g}"]
    return make_certificate(
        kind, residuals(lhs, f, cap, D), witness_points, constants, grid, flags, notes,
        details={"C_fit": C_fit},
    )


def grid_points(grid: Grid) -> np.ndarray:
    '''Lattice coordinates as rows, in the same C order as flattened values.'''
    return np.stack([c.ravel() for c in grid.coordinates()], axis=1)
