import json
import logging
import os
import shutil
import tempfile
import unittest

import numpy as np

from config import Config
from utils import logging_utils
from utils.logging_utils import Timer, log_error, log_record, log_step, setup_logging


class TestLogging(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.mkdtemp()
        self.path = os.path.join(self.tmp, "logs", "lab.log")
        setup_logging(self.path)

    def tearDown(self):
        # hand the logger back to the suite-wide file
        setup_logging(Config.LOG_FILE)
        shutil.rmtree(self.tmp, ignore_errors=True)

    def _lines(self):
        for handler in logging_utils.get_logger().handlers:
            handler.flush()
        with open(self.path, encoding="utf-8") as handle:
            return handle.read().splitlines()

    def test_stage_prefix(self):
        log_step("density", "theta cache miss", level="debug")
        self.assertTrue(self._lines()[-1].endswith("[DENSITY] theta cache miss"))

    def test_records_are_json(self):
        log_record("ORACLE", "halfspace", {"estimate": np.float64(0.25), "nu": np.array([0.6, 0.8])})
        line = self._lines()[-1]
        payload = json.loads(line.split("RECORD ", 1)[1])
        self.assertEqual(payload["data"], {"estimate": 0.25, "nu": [0.6, 0.8]})
        self.assertEqual(payload["source"], "ORACLE")

    def test_error_carries_context(self):
        try:
            raise ValueError("epsilon below 4h")
        except ValueError as e:
            log_error("NONLOCAL", "build_stencil", e, {"epsilon": 0.01})
        text = "\n".join(self._lines())
        self.assertIn("[NONLOCAL] build_stencil raised ValueError: epsilon below 4h | epsilon=0.01", text)
        self.assertIn("Traceback", text)

    def test_logger_does_not_propagate(self):
        self.assertFalse(logging_utils.get_logger().propagate)

    def test_timer(self):
        timer = Timer("idle")
        self.assertEqual(timer.get_elapsed(), 0.0)
        with timer:
            pass
        self.assertGreaterEqual(timer.get_elapsed(), 0.0)
        self.assertEqual(timer.get_elapsed(), timer.end_time - timer.start_time)


if __name__ == '__main__':
    unittest.main()
