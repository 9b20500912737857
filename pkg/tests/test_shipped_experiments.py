import os
import unittest

from config import Config
from lab.experiments import ExperimentRunner
from utils.config_parser import ExperimentConfigParser

CONFIGS = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), Config.CONFIGS_DIR)


def _load(name: str):
    return ExperimentConfigParser().parse_file(os.path.join(CONFIGS, name))


class TestBallSweeps(unittest.TestCase):
    """Ball r=0.3 swept from eps=1/8 to 1/64 with h = eps/8."""

    def test_identity_profile(self):
        cfg = _load("ball_identity.cfg")
        self.assertEqual(cfg.schedule.epsilons(), [0.125, 0.0625, 0.03125, 0.015625])
        self.assertEqual(cfg.schedule.points_per_epsilon, 8)
        report = ExperimentRunner(cfg).run_convergence()

        self.assertEqual([row.resolution for row in report.rows], [64, 128, 256, 512])
        self.assertTrue(report.monotone, [row.rel_error for row in report.rows])
        self.assertLessEqual(report.final_rel_error, 0.02)
        self.assertLessEqual(report.extrapolated_rel_error, 0.02)
        self.assertTrue(report.passed)

    def test_power_profile(self):
        cfg = _load("ball_power2.cfg")
        self.assertEqual(cfg.schedule.tolerance, 0.05)
        report = ExperimentRunner(cfg).run_convergence()

        self.assertEqual(len(report.rows), 4)
        self.assertLessEqual(report.final_rel_error, 0.05)
        self.assertLessEqual(report.extrapolated_rel_error, 0.05)
        self.assertTrue(report.passed)


class TestGraphLowerBound(unittest.TestCase):
    """u_h = u + cos(4 pi x)/h with eps_h = 1/(8h) for h = 8 ... 64."""

    def test_shipped_schedule(self):
        cfg = _load("graph_lower_bound.cfg")
        report = ExperimentRunner(cfg).run_lower_bound()

        self.assertEqual([row.h for row in report.rows], [8, 16, 32, 64])
        self.assertEqual(report.rows[-1].epsilon, 0.125 / 64)
        allowance = 0.03 * report.reference
        self.assertLessEqual(report.rows[-1].deficit, allowance)
        self.assertTrue(report.passed)
        # F_eps(E_h) settles onto F(E) instead of passing by a margin
        self.assertLess(abs(report.rows[-1].deficit), allowance)
        self.assertLess(abs(report.rows[-1].deficit), abs(report.rows[0].deficit))

    def test_unperturbed_graph_matches_limit(self):
        cfg = _load("graph_lower_bound.cfg")
        runner = ExperimentRunner(cfg)
        spec = cfg.perturbation.model_copy(update={"kind": "none", "h_values": [8, 16, 32]})
        report = runner.run_lower_bound(spec)
        for row in report.rows:
            self.assertLess(abs(row.deficit) / report.reference, 0.02)


if __name__ == '__main__':
    unittest.main()
