import json
import os
import tempfile
from typing import List
from unittest.mock import patch

from django.conf import settings
from django.test import SimpleTestCase, override_settings
import numpy as np
from pydantic import ValidationError, confloat

from .files import readbytes, readfile, rm_path, walk_files, write_atomic
from .perfmonitor import PerfMonitor, checkpoint, monitor_logger, monitorperf
from .pydantic import PydanticModel, json_default, validation_error_str


class Inner(PydanticModel):
    epsilon: confloat(gt=0)


class Outer(PydanticModel):
    name: str
    parameters: Inner
    values: List[float] = []


class FilesTest(SimpleTestCase):

    def setUp(self):
        os.makedirs(settings.TESTDATADIR, exist_ok=True)
        self.tmp = tempfile.mkdtemp(prefix="util-", dir=settings.TESTDATADIR)

    def tearDown(self):
        rm_path(self.tmp)

    def test_write_atomic_creates_parents(self):
        path = os.path.join(self.tmp, "a", "b", "c.txt")
        write_atomic(path, "text")
        self.assertEqual(readfile(path), "text")
        write_atomic(path, b"\x00\x01")
        self.assertEqual(readbytes(path), b"\x00\x01")
        self.assertEqual(os.listdir(os.path.dirname(path)), ["c.txt"])

    def test_walk_files_sorted(self):
        for name in ("b.json", "a.json", os.path.join("sub", "c.json"), "d.bin"):
            write_atomic(os.path.join(self.tmp, name), "{}")
        found = [str(p.relative_to(self.tmp)) for p in walk_files(self.tmp, ".json")]
        self.assertEqual(found, ["a.json", "b.json", os.path.join("sub", "c.json")])

    def test_rm_path(self):
        path = os.path.join(self.tmp, "dir", "file")
        write_atomic(path, "x")
        rm_path(os.path.join(self.tmp, "dir"))
        self.assertFalse(os.path.exists(os.path.join(self.tmp, "dir")))
        rm_path(os.path.join(self.tmp, "missing"))


class PydanticTest(SimpleTestCase):

    def test_extra_fields_rejected(self):
        with self.assertRaises(ValidationError):
            Inner(epsilon=1.0, other=2)

    def test_error_path(self):
        with self.assertRaises(ValidationError) as cm:
            Outer.parse_obj({"name": "x", "parameters": {"epsilon": -1}})
        message = validation_error_str(cm.exception)
        self.assertTrue(message.startswith("1 validation error for Outer"))
        self.assertIn("parameters -> epsilon:", message)

    def test_deterministic_json(self):
        model = Outer(name="x", parameters=Inner(epsilon=0.5), values=[1.0, 2.5])
        text = model.to_json()
        self.assertEqual(text, Outer.parse_raw(text).to_json())
        self.assertEqual(list(json.loads(text)), ["name", "parameters", "values"])
        self.assertEqual(json.loads(text)["values"], [1.0, 2.5])

    def test_json_default(self):
        data = {"a": np.float64(0.25), "b": np.arange(3)}
        self.assertEqual(json.dumps(data, default=json_default, sort_keys=True), '{"a": 0.25, "b": [0, 1, 2]}')
        with self.assertRaises(TypeError):
            json_default(object())

    def test_warnings(self):
        model = Outer(name="x", parameters=Inner(epsilon=1.0))
        model.parameters.add_warning("large epsilon", "epsilon")
        model.add_warning("top level")
        self.assertEqual(model.get_warnings_nested(), {
            "": ["top level"],
            "parameters.epsilon": ["large epsilon"],
        })


class PerfMonitorTest(SimpleTestCase):

    def test_checkpoints(self):
        monitor = PerfMonitor("job")
        monitor.start()
        monitor.checkpoint("phase")
        monitor.end()
        self.assertEqual([tag for tag, _ in monitor.checkpoints], ["start job", "phase", "end job"])
        self.assertIn("Total:", monitor.formatted())

    @override_settings(ENABLE_PERFORMANCE_MONITORING=True)
    def test_monitorperf_logs(self):
        @monitorperf
        def work(x):
            checkpoint("halfway")
            return 2 * x

        with self.assertLogs("perfmonitor", level="INFO") as logs:
            self.assertEqual(work(3), 6)
        self.assertIn("halfway", logs.output[0])

    @override_settings(ENABLE_PERFORMANCE_MONITORING=False)
    def test_monitorperf_disabled(self):
        @monitorperf
        def work():
            checkpoint("ignored")
            return 1

        with patch.object(monitor_logger, "info") as info:
            self.assertEqual(work(), 1)
        info.assert_not_called()
