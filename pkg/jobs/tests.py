import filecmp
import io
import json
import os
import tempfile

from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings
import numpy as np
from pydantic import ValidationError

from grids.formats import read_grid, write_grid
from grids.grid import Grid, sample
from scales.certificate import Certificate
from util.files import readfile, rm_path, write_atomic
from util.pydantic import validation_warning_str
from .artifacts import read_crossed_element, verify_directory
from .parser import ConfigError, JobParser
from .runner import EXIT_CAP, EXIT_CERTIFICATE, EXIT_USAGE, load_job
from .spec import CatalogScale, FactorizeJob, parse_job, review_job


JOBS = os.path.join(settings.TESTDATADIR, "jobs")


def job_path(name):
    return os.path.join(JOBS, name)


class TemporaryDirectoryMixin:

    def setUp(self):
        os.makedirs(settings.TESTDATADIR, exist_ok=True)
        self.tmp = tempfile.mkdtemp(prefix="jobs-", dir=settings.TESTDATADIR)

    def tearDown(self):
        rm_path(self.tmp)

    def out(self, name="out"):
        return os.path.join(self.tmp, name)

    def write_job(self, name, data):
        path = os.path.join(self.tmp, name)
        write_atomic(path, json.dumps(data))
        return path

    def runjob(self, path, out=None):
        call_command("runjob", job=path, out=out or self.out(), verbosity=0, stdout=io.StringIO())

    def runjob_fails(self, path, out=None):
        with self.assertRaises(CommandError) as cm:
            self.runjob(path, out)
        return cm.exception.returncode

    def load(self, *parts):
        return json.loads(readfile(os.path.join(*parts)))


class JobParserTest(TemporaryDirectoryMixin, SimpleTestCase):

    def test_json_and_yaml(self):
        self.assertEqual(JobParser.parse(job_path("counterexamples.json"))["seed"], 42)
        self.assertEqual(JobParser.parse(job_path("check_constant.yaml"))["checks"], ["proper"])

    def test_suffix_is_optional(self):
        self.assertEqual(JobParser.get_config(job_path("check_constant")), job_path("check_constant.yaml"))

    def test_rivalling_files(self):
        write_atomic(os.path.join(self.tmp, "job.json"), "{}")
        write_atomic(os.path.join(self.tmp, "job.yaml"), "{}")
        with self.assertRaises(ConfigError):
            JobParser.get_config(os.path.join(self.tmp, "job"))

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            JobParser.parse(os.path.join(self.tmp, "nothing.json"))

    def test_syntax_error(self):
        with self.assertRaises(ConfigError):
            JobParser.parse(job_path("broken_syntax.json"))

    def test_not_a_mapping(self):
        path = os.path.join(self.tmp, "list.yaml")
        write_atomic(path, "- factorize\n")
        with self.assertRaises(ConfigError):
            JobParser.parse(path)


class JobSpecTest(SimpleTestCase):

    def test_defaults(self):
        job = parse_job({
            "command": "factorize",
            "grid": {"half_width": 2, "spacing": 0.25},
            "psi": {"source": "catalog", "name": "gaussian"},
        })
        self.assertIsInstance(job, FactorizeJob)
        self.assertIsInstance(job.sigma, CatalogScale)
        self.assertEqual(job.sigma.form.coefficients, [1, 0, 1])
        self.assertTrue(job.mollify)
        self.assertEqual(job.grid.to_grid(), Grid.symmetric(2, 0.25))

    def test_explicit_box(self):
        job = parse_job({
            "command": "report",
            "grid": {"lower": [0], "upper": [1], "spacing": 0.125},
            "psi": {"source": "catalog", "name": "zero"},
        })
        self.assertEqual(job.grid.to_grid().shape, (9,))

    def test_box_must_be_unambiguous(self):
        with self.assertRaises(ValidationError):
            parse_job({
                "command": "report",
                "grid": {"half_width": 1, "lower": [-1], "upper": [1], "spacing": 0.125},
                "psi": {"source": "catalog", "name": "zero"},
            })

    def test_unknown_command(self):
        with self.assertRaises(ValidationError):
            parse_job({"command": "plot"})

    def test_equivalence_needs_compare(self):
        with self.assertRaises(ValidationError):
            parse_job({
                "command": "check-scale",
                "grid": {"half_width": 1, "spacing": 0.125},
                "sigma": {"source": "catalog", "form": {"name": "constant"}},
                "checks": ["equivalence"],
            })

    def test_review_warnings(self):
        job = review_job(parse_job({
            "command": "factorize",
            "grid": {"half_width": 2, "spacing": 0.5},
            "psi": {"source": "catalog", "name": "gaussian"},
            "mollify": False,
        }))
        self.assertEqual(set(job.get_warnings_nested()), {".mollify", "grid.spacing"})
        self.assertTrue(validation_warning_str(job).startswith("2 validation warnings for FactorizeJob"))

    def test_load_job_reports_field_path(self):
        with self.assertRaises(ConfigError) as cm:
            load_job(job_path("malformed.json"))
        message = str(cm.exception)
        self.assertIn("spacing", message)
        self.assertIn("unexpected", message)

    def test_load_job_base_dir(self):
        _job, base_dir = load_job(job_path("counterexamples.json"))
        self.assertEqual(base_dir, os.path.abspath(JOBS))


class RunJobTest(TemporaryDirectoryMixin, SimpleTestCase):

    def test_factorize_gaussian(self):
        self.runjob(job_path("factorize_gaussian.json"))
        out = self.out()
        for name in ("theta.bin", "theta.csv", "phi.bin", "result.json", "summary.json", "decay_report.csv"):
            self.assertTrue(os.path.isfile(os.path.join(out, name)), name)
        result = self.load(out, "result.json")
        self.assertLessEqual(result["residual"], 1e-6)
        summary = self.load(out, "summary.json")
        self.assertEqual(summary["exit_code"], 0)
        self.assertTrue(all(summary["certificates"].values()))
        theta, phi = read_grid(os.path.join(out, "theta.bin")), read_grid(os.path.join(out, "phi.bin"))
        self.assertEqual(theta.grid, phi.grid)
        self.assertGreater(float(np.min(theta.values)), 0)

    def test_constant_scale_is_not_proper(self):
        self.assertEqual(self.runjob_fails(job_path("check_constant.yaml")), EXIT_CERTIFICATE)
        certificate = Certificate.parse_raw(readfile(os.path.join(self.out(), "certificates", "proper.json")))
        self.assertFalse(certificate.passed)
        summary = self.load(self.out(), "summary.json")
        self.assertEqual(summary["failing_kind"], certificate.kind)
        self.assertEqual(summary["exit_code"], EXIT_CERTIFICATE)

    def test_counterexamples(self):
        self.runjob(job_path("counterexamples.json"))
        report = self.load(self.out(), "report.json")
        self.assertEqual(set(report), {"l1_witness", "l2_witness", "multiplier_escape"})
        self.assertEqual(report["multiplier_escape"]["limit"], 1.0)
        summary = self.load(self.out(), "summary.json")
        self.assertEqual(summary["certificates"], {"l1_counterexample": True, "l2_variant": True})

    def test_malformed_job(self):
        self.assertEqual(self.runjob_fails(job_path("malformed.json")), EXIT_USAGE)
        self.assertFalse(os.path.exists(self.out()))

    def test_syntax_error(self):
        self.assertEqual(self.runjob_fails(job_path("broken_syntax.json")), EXIT_USAGE)

    def test_report(self):
        self.runjob(job_path("report_rational.json"))
        report = self.load(self.out(), "report.json")
        self.assertEqual(report["verdict"], "inconsistent")
        self.assertEqual(report["witness"]["d"], 2)
        self.assertTrue(readfile(os.path.join(self.out(), "report.csv")).startswith("d,gamma,value,growing\n"))

    def test_mollify(self):
        self.runjob(job_path("mollify_power.json"))
        summary = self.load(self.out(), "summary.json")
        self.assertEqual(summary["certificates"], {"mollified_upper": True, "mollified_lower": True, "derivative": True})
        smooth = read_grid(os.path.join(self.out(), "sigma_smooth.bin"))
        self.assertGreaterEqual(float(np.min(smooth.values)), 1.0)

    def test_convolve_demo(self):
        self.runjob(job_path("convolve_demo.json"))
        summary = self.load(self.out(), "summary.json")
        for name in (
                "scaled_space",
                "tempered",
                "associativity",
                "homomorphism",
                "omega_subpolynomial",
                "convolution_continuity",
                "action_estimate",
                "covariance",
                ):
            self.assertTrue(summary["certificates"][name], name)
        estimate = self.load(self.out(), "certificates", "action_estimate.json")
        tempered = self.load(self.out(), "certificates", "tempered.json")
        self.assertEqual(estimate["constants"]["C"], tempered["constants"]["C"])
        self.assertEqual(estimate["constants"]["d_group"], tempered["constants"]["d"])
        product = read_crossed_element(os.path.join(self.out(), "product"))
        self.assertEqual(product.window.radius, 3)
        self.assertEqual(product.grid, Grid.symmetric(4, 0.0625))
        for g in (-3, 3):
            self.assertEqual(float(np.max(np.abs(product.at(g).values))), 0.0)

    def test_crossed_factorize(self):
        self.runjob(job_path("crossed_factorize.json"))
        result = self.load(self.out(), "result.json")
        self.assertLessEqual(result["residual"], 1e-6)
        b = read_crossed_element(os.path.join(self.out(), "b"))
        self.assertEqual(b.window.size, 9)
        self.assertTrue(os.path.isfile(os.path.join(self.out(), "certificates", "crossed_factorization.json")))

    def test_factorization_failure(self):
        path = self.write_job("slow.json", {
            "command": "factorize",
            "grid": {"half_width": 8, "spacing": 0.03125},
            "psi": {"source": "catalog", "name": "rational"},
        })
        self.assertEqual(self.runjob_fails(path), EXIT_CERTIFICATE)
        certificate = Certificate.parse_raw(
            readfile(os.path.join(self.out(), "certificates", "factorization_failure.json"))
        )
        self.assertFalse(certificate.passed)
        self.assertTrue(certificate.notes)

    def test_grid_file_input(self):
        grid = Grid.symmetric(8, 0.03125)
        write_grid(os.path.join(self.tmp, "psi.bin"), sample(lambda x: np.exp(-x ** 2), grid))
        path = self.write_job("file.json", {
            "command": "report",
            "grid": {"half_width": 8, "spacing": 0.03125},
            "psi": {"source": "file", "path": "psi.bin"},
            "output_dir": "from_job",
        })
        call_command("runjob", job=path, verbosity=0, stdout=io.StringIO())
        self.assertEqual(self.load(self.tmp, "from_job", "report.json")["verdict"], "consistent")

    def test_grid_file_mismatch(self):
        write_grid(os.path.join(self.tmp, "psi.bin"), sample(lambda x: np.exp(-x ** 2), Grid.symmetric(2, 0.0625)))
        path = self.write_job("file.json", {
            "command": "report",
            "grid": {"half_width": 4, "spacing": 0.0625},
            "psi": {"source": "file", "path": "psi.bin"},
        })
        self.assertEqual(self.runjob_fails(path), EXIT_USAGE)

    @override_settings(LAMBDA_MAX_OFFSET=0)
    def test_cap_exhausted(self):
        self.assertEqual(self.runjob_fails(job_path("factorize_gaussian.json")), EXIT_CAP)
        certificate = Certificate.parse_raw(readfile(os.path.join(self.out(), "certificates", "cap_exhausted.json")))
        self.assertFalse(certificate.passed)
        self.assertEqual(certificate.details["n"], 1)
        self.assertEqual(self.load(self.out(), "summary.json")["failing_kind"], "cap_exhausted")


class DeterminismTest(TemporaryDirectoryMixin, SimpleTestCase):

    def assertSameTree(self, a, b):
        comparison = filecmp.dircmp(a, b)
        self.assertEqual(comparison.left_only + comparison.right_only, [])
        names = sorted(
            os.path.relpath(os.path.join(root, f), a) for root, _dirs, files in os.walk(a) for f in files
        )
        _match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
        self.assertEqual(mismatch + errors, [])

    def exit_code(self, path, out):
        try:
            self.runjob(path, out)
        except CommandError as e:
            return e.returncode
        return 0

    def test_every_job_fixture(self):
        trees = 0
        for name in sorted(os.listdir(JOBS)):
            with self.subTest(job=name):
                first, second = self.out(f"{name}-first"), self.out(f"{name}-second")
                self.assertEqual(self.exit_code(job_path(name), first), self.exit_code(job_path(name), second))
                self.assertEqual(os.path.isdir(first), os.path.isdir(second))
                if os.path.isdir(first):
                    self.assertSameTree(first, second)
                    trees += 1
        self.assertEqual(trees, 7)


class VerifyArtifactsTest(TemporaryDirectoryMixin, SimpleTestCase):

    def verify(self, path):
        call_command("verifyartifacts", path, stdout=io.StringIO(), stderr=io.StringIO())

    def test_fresh_output_verifies(self):
        self.runjob(job_path("mollify_power.json"))
        self.verify(self.out())
        report = verify_directory(self.out())
        self.assertEqual(report.certificates, 3)
        self.assertEqual(report.grids, 1)

    def test_failing_certificate_still_verifies(self):
        self.runjob_fails(job_path("check_constant.yaml"))
        self.verify(self.out())

    def test_tampered_certificate(self):
        self.runjob(job_path("mollify_power.json"))
        path = os.path.join(self.out(), "certificates", "derivative.json")
        data = json.loads(readfile(path))
        data["worst_residual"] = 1.0
        write_atomic(path, json.dumps(data))
        with self.assertRaises(CommandError) as cm:
            self.verify(self.out())
        self.assertEqual(cm.exception.returncode, EXIT_CERTIFICATE)

    def test_truncated_grid(self):
        self.runjob(job_path("mollify_power.json"))
        path = os.path.join(self.out(), "sigma_smooth.bin")
        write_atomic(path, b"\x01")
        self.assertEqual(len(verify_directory(self.out()).failures), 1)

    def test_missing_directory(self):
        with self.assertRaises(CommandError) as cm:
            self.verify(self.out("nothing"))
        self.assertEqual(cm.exception.returncode, EXIT_USAGE)
