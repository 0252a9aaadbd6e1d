'''
Runs one job: loads its inputs, calls the library, writes certificates
and results, and condenses the outcome into an exit code.

    0  every certificate passed
    1  usage error (job file, grids, scales, windows)
    2  a certificate failed or a factorization missed its budget
    3  a numeric cap ran out
'''
import logging
import os
from typing import Callable, Dict, List, Optional, Tuple

from django.conf import settings
import numpy as np
from pydantic import ValidationError

from counterexamples.demos import check_l1_counterexample, check_l2_variant, multiplier_escape_demo
from crossed.groups import ActionSpec, CrossedProductError, GroupWindow, certify_action
from crossed.product import CrossedElement, convolve
from crossed.representation import (
    act_on_module,
    check_action_estimate,
    check_convolution_continuity,
    check_covariance,
    factorize_crossed_element,
)
from factorization.engine import factorize_function
from factorization.products import CapExhaustedError, FactorizationError
from grids.grid import Grid, GridError, GridFunction, sample, sup_norm
from scales.calculus import (
    check_proper,
    check_subpolynomial,
    check_translational_equivalence,
    equivalent,
)
from scales.certificate import Certificate, make_certificate
from scales.mollify import mollify_scale
from scales.scale import Scale, ScaleError
from schwartz.reports import decay_report
from schwartz.seminorms import SeminormError
from util.perfmonitor import checkpoint, monitorperf
from util.pydantic import PydanticModel, validation_error_str, validation_warning_str
from .artifacts import ArtifactWriter
from .parser import ConfigError, JobParser
from .spec import (
    CheckScaleJob,
    ConvolveDemoJob,
    CounterexamplesJob,
    CrossedFactorizeJob,
    FactorizeJob,
    JobBase,
    MollifyJob,
    ReportJob,
    parse_job,
    review_job,
)


LOGGER = logging.getLogger('main')

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CERTIFICATE = 2
EXIT_CAP = 3

USAGE_ERRORS = (ConfigError, GridError, ScaleError, SeminormError, CrossedProductError)

VERBOSITY_LEVELS = {
    0: logging.ERROR,
    1: logging.WARNING,
    2: logging.INFO,
    3: logging.DEBUG,
}


def set_verbosity(verbosity: int) -> None:
    level = VERBOSITY_LEVELS.get(verbosity, logging.DEBUG)
    root = logging.getLogger()
    root.setLevel(level)
    for handler in root.handlers:
        handler.setLevel(level)


class JobSummary(PydanticModel):
    command: str
    exit_code: int
    certificates: Dict[str, bool]
    artifacts: List[str]
    failing_kind: Optional[str] = None
    message: Optional[str] = None


class JobOutcome(PydanticModel):
    exit_code: int
    certificates: Dict[str, Certificate] = {}
    artifacts: List[str] = []
    failing_kind: Optional[str] = None
    message: Optional[str] = None


def load_job(path: str) -> Tuple[JobBase, str]:
    '''
    Parses and validates a job file.

    @rtype: C{tuple}
    @return: the job and the directory its relative paths refer to
    @raises ConfigError: unreadable, malformed or invalid job file
    '''
    data = JobParser.parse(path)
    try:
        job = parse_job(data)
    except ValidationError as e:
        raise ConfigError("Invalid job file %s:\n%s" % (path, validation_error_str(e)))
    warnings = validation_warning_str(review_job(job))
    if warnings:
        LOGGER.warning(warnings)
    return job, os.path.dirname(os.path.abspath(JobParser.get_config(path)))


class _Context:
    '''
    Collects the certificates of a running job in the order they are
    written.
    '''

    def __init__(self, writer: ArtifactWriter, base_dir: str):
        self.writer = writer
        self.base_dir = base_dir
        self.certificates: Dict[str, Certificate] = {}

    def certify(self, name: str, certificate: Certificate) -> Certificate:
        self.certificates[name] = certificate
        self.writer.certificate(name, certificate)
        return certificate


def _scalar_certificate(kind: str, residual: float, constants: Dict[str, float], grid: Optional[Grid] = None, **kwargs) -> Certificate:
    return make_certificate(kind, np.array([residual]), np.empty((1, 0)), constants, grid=grid, **kwargs)


def _run_factorize(job: FactorizeJob, ctx: _Context) -> None:
    grid = job.grid.to_grid()
    psi = job.psi.load(grid, ctx.base_dir)
    sigma = job.sigma.load(grid, ctx.base_dir)
    result = factorize_function(psi, sigma, job.d_max, job.l_max, job.epsilon, job.mollify)
    for name, certificate in sorted(result.certificates.items()):
        ctx.certify(f"scale_{name}", certificate)
    ctx.certify("factorization", _scalar_certificate(
        "factorization",
        result.residual - result.budget.total,
        {"residual": result.residual, "budget": result.budget.total, "N": result.n_series, "K": result.lam.K},
        result.psi.grid,
    ))
    ctx.writer.grid("theta", result.theta)
    ctx.writer.grid("phi", result.phi)
    ctx.writer.json("result", result.summary())
    ctx.writer.text("decay_report.csv", result.report.to_csv())


def _run_mollify(job: MollifyJob, ctx: _Context) -> None:
    grid = job.grid.to_grid()
    result = mollify_scale(job.sigma.load(grid, ctx.base_dir), box=job.radius)
    ctx.certify("mollified_upper", result.upper)
    ctx.certify("mollified_lower", result.lower)
    ctx.certify("derivative", result.derivative)
    ctx.writer.grid("sigma_smooth", result.scale.f)


def _run_check_scale(job: CheckScaleJob, ctx: _Context) -> None:
    grid = job.grid.to_grid()
    sigma = job.sigma.load(grid, ctx.base_dir)
    for check in job.checks:
        if check == "proper":
            ctx.certify("proper", check_proper(sigma))
        elif check == "translational":
            ctx.certify("translational", check_translational_equivalence(sigma, job.shifts))
        elif check == "subpolynomial":
            ctx.certify("subpolynomial", check_subpolynomial(sigma))
        elif check == "mollify":
            result = mollify_scale(sigma)
            ctx.certify("mollified_upper", result.upper)
            ctx.certify("mollified_lower", result.lower)
            ctx.certify("mollified_derivative", result.derivative)
        elif check == "equivalence":
            compare_by_sigma, sigma_by_compare = equivalent(sigma, job.compare.load(grid, ctx.base_dir))
            ctx.certify("compare_dominated", compare_by_sigma)
            ctx.certify("sigma_dominated", sigma_by_compare)


def _interior_mask(grid: Grid, margin: float) -> np.ndarray:
    inside = np.ones(grid.shape, dtype=bool)
    for c, low, high in zip(grid.coordinates(), grid.lower, grid.upper):
        inside &= (c >= low + margin) & (c <= high - margin)
    return inside


def _random_element(rng: np.random.Generator, window: GroupWindow, grid: Grid, omega: Scale, inside: np.ndarray) -> CrossedElement:
    '''Uniform slices on the interior, supported at |g| <= 1.'''
    slices = []
    for g in window.points:
        values = rng.uniform(-1, 1, grid.shape) * inside if abs(g) <= 1 else np.zeros(grid.shape)
        slices.append(GridFunction(grid, values))
    return CrossedElement(window, slices, omega)


def _run_convolve_demo(job: ConvolveDemoJob, ctx: _Context) -> None:
    grid = job.grid.to_grid()
    sigma = job.sigma.load(grid, ctx.base_dir)
    window = GroupWindow.integers(job.window_radius)
    omega = window.scale(job.omega)
    action = certify_action(ActionSpec.translation(window, grid, steps_per_unit=job.steps_per_unit), sigma, omega, order=1)
    ctx.certify("scaled_space", action.scaled_space)
    ctx.certify("tempered", action.tempered)
    seed = settings.DEFAULT_SEED if job.seed is None else job.seed
    rng = np.random.default_rng(seed)
    inside = _interior_mask(grid, window.radius * job.steps_per_unit * grid.spacing[0])
    e = sigma.f.with_values(1 / sigma.values)

    tolerance = settings.CROSSED_IDENTITY_TOLERANCE
    associativity, homomorphism = [], []
    for _ in range(job.trials):
        F1, F2, F3 = (_random_element(rng, window, grid, omega, inside) for _ in range(3))
        F12 = convolve(F1, F2, action)
        left = convolve(F12, F3, action)
        right = convolve(F1, convolve(F2, F3, action), action)
        associativity.append((left - right).sup())
        homomorphism.append(sup_norm(act_on_module(F12, e, action) - act_on_module(F1, act_on_module(F2, e, action), action)))
    checkpoint("identities")
    trials = np.arange(job.trials, dtype=np.float64)[:, None]
    constants = {"trials": job.trials, "seed": seed, "tolerance": tolerance}
    ctx.certify("associativity", make_certificate(
        "associativity", np.array(associativity) - tolerance, trials, constants, grid=grid,
    ))
    ctx.certify("homomorphism", make_certificate(
        "homomorphism", np.array(homomorphism) - tolerance, trials, constants, grid=grid,
    ))

    subpolynomial = ctx.certify("omega_subpolynomial", check_subpolynomial(omega))
    if subpolynomial.passed:
        ctx.certify("convolution_continuity", check_convolution_continuity(F1, F2, action, subpolynomial, d=1))
    if action.tempered.passed:
        ctx.certify("action_estimate", check_action_estimate(F12, e, action, omega, sigma, d=1))
    ctx.certify("covariance", check_covariance(1.0, sample(lambda *c: np.exp(-sum(x * x for x in c)), grid), e, action))
    ctx.writer.crossed_element("product", F12)


def _run_crossed_factorize(job: CrossedFactorizeJob, ctx: _Context) -> None:
    grid = job.grid.to_grid()
    e = job.e.load(grid, ctx.base_dir)
    sigma = job.sigma.load(grid, ctx.base_dir)
    window = GroupWindow.integers(job.window_radius)
    action = ActionSpec.translation(window, grid, steps_per_unit=job.steps_per_unit)
    f = sample(lambda g: np.exp(-job.group_rate * g ** 2), window.grid)
    result = factorize_crossed_element(e, f, action, sigma, job.epsilon, job.mollify)
    for name, certificate in sorted(result.factorization.certificates.items()):
        ctx.certify(f"scale_{name}", certificate)
    ctx.certify("module_factorization", result.factorization.certificate)
    ctx.certify("crossed_factorization", result.certificate)
    ctx.writer.crossed_element("b", result.b)
    ctx.writer.grid("e_tilde", result.e_tilde)
    ctx.writer.grid("theta", result.factorization.theta)
    ctx.writer.json("result", {
        "residual": result.residual,
        "module_residuals": result.factorization.residuals,
        "module_budgets": result.factorization.budgets,
        "exponents": result.factorization.lam.exponents,
        "n_series": result.factorization.n_series,
        "ad_bound_note": action.ad_bound_note,
    })


def _run_counterexamples(job: CounterexamplesJob, ctx: _Context) -> None:
    l1 = ctx.certify("l1_counterexample", check_l1_counterexample(job.trials, job.length, job.seed))
    report = {"l1_witness": l1.details.get("witness")}
    if job.l2_variant:
        l2 = ctx.certify("l2_variant", check_l2_variant(job.trials, job.length, job.seed))
        report["l2_witness"] = l2.details.get("witness")
    escape = multiplier_escape_demo(job.R_values)
    report["multiplier_escape"] = escape.dict()
    ctx.writer.json("report", report)


def _run_report(job: ReportJob, ctx: _Context) -> None:
    grid = job.grid.to_grid()
    psi = job.psi.load(grid, ctx.base_dir)
    sigma = job.sigma.load(grid, ctx.base_dir)
    report = decay_report(psi, sigma, job.d_max, job.l_max)
    if not report.consistent:
        LOGGER.warning("Decay report is inconsistent at d=%s gamma=%s", report.witness.d, report.witness.gamma)
    ctx.writer.json("report", report)
    ctx.writer.text("report.csv", report.to_csv())


HANDLERS: Dict[str, Callable] = {
    "factorize": _run_factorize,
    "mollify": _run_mollify,
    "check-scale": _run_check_scale,
    "convolve-demo": _run_convolve_demo,
    "crossed-factorize": _run_crossed_factorize,
    "counterexamples": _run_counterexamples,
    "report": _run_report,
}


def _failure_certificate(kind: str, error: Exception) -> Certificate:
    details = {"n": error.n} if isinstance(error, CapExhaustedError) else {}
    return _scalar_certificate(kind, 1.0, {}, notes=[str(error)], details=details)


def output_directory(job: JobBase, base_dir: str, out_dir: Optional[str] = None) -> str:
    if out_dir:
        return out_dir
    if job.output_dir:
        return os.path.join(base_dir, job.output_dir)
    return os.path.join(settings.OUTPUT_PATH, job.command)


@monitorperf
def run(job: JobBase, out_dir: str, base_dir: str = ".") -> JobOutcome:
    '''
    Runs a validated job, writing every artifact below out_dir and a
    summary.json last.

    @rtype: L{JobOutcome}
    @raises ConfigError, GridError, ScaleError, SeminormError,
        CrossedProductError: usage errors; nothing useful was computed
    '''
    writer = ArtifactWriter(out_dir)
    ctx = _Context(writer, base_dir)
    exit_code, message, failing_kind = EXIT_OK, None, None
    try:
        HANDLERS[job.command](job, ctx)
    except CapExhaustedError as e:
        LOGGER.error("Numeric cap exhausted: %s", e)
        failure = ctx.certify("cap_exhausted", _failure_certificate("cap_exhausted", e))
        exit_code, message, failing_kind = EXIT_CAP, str(e), failure.kind
    except FactorizationError as e:
        LOGGER.error("Factorization failed: %s", e)
        failure = ctx.certify("factorization_failure", _failure_certificate("factorization_failure", e))
        exit_code, message, failing_kind = EXIT_CERTIFICATE, str(e), failure.kind

    if exit_code == EXIT_OK:
        failing = next((c for c in ctx.certificates.values() if not c.passed), None)
        if failing is not None:
            exit_code, failing_kind = EXIT_CERTIFICATE, failing.kind
            message = f"Certificate {failing.kind} failed with worst residual {failing.worst_residual:.3e}"

    artifacts = list(writer.written)
    writer.json("summary", JobSummary(
        command=job.command,
        exit_code=exit_code,
        certificates={name: c.passed for name, c in ctx.certificates.items()},
        artifacts=artifacts,
        failing_kind=failing_kind,
        message=message,
    ))
    LOGGER.info("Job %s finished with exit code %d", job.command, exit_code)
    return JobOutcome(
        exit_code=exit_code,
        certificates=ctx.certificates,
        artifacts=artifacts,
        failing_kind=failing_kind,
        message=message,
    )
