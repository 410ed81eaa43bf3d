"""Tests for the coarse-grid + simplex optimiser and the sweep harness."""

import numpy as np
import pytest

from iafc.optimize import OptResult, PulseParams, optimize_storage, sweep
from iafc.spectral import MediumSpec, make_ideal_comb
from iafc.storage import ScalarEngine, optimize_scalar_storage, reference_weight

DELTA = 2 * np.pi * 400e6
GAMMA = 5e6
LENGTH = 1e-3


def quadratic(params):
    x, y = params["x"], params["y"]
    eta = 1.0 - (x - 0.3) ** 2 - 2.0 * (y + 0.4) ** 2
    return eta, 0.5


class TestOptimizeStorage:
    def test_recovers_quadratic_maximum(self):
        res = optimize_storage(quadratic, {"x": (-1, 1), "y": (-1, 1)})
        assert res.best["x"] == pytest.approx(0.3, abs=1e-5)
        assert res.best["y"] == pytest.approx(-0.4, abs=1e-5)
        assert res.eta == pytest.approx(1.0, abs=1e-9)

    def test_never_worse_than_coarse_grid(self):
        def rough(params):
            x = params["x"]
            return np.sin(5 * x) / (1 + x ** 2), 0.0

        res = optimize_storage(rough, {"x": (-3, 3)}, points_per_axis=21)
        grid = np.linspace(-3, 3, 21)
        coarse_best = max(rough({"x": v})[0] for v in grid)
        assert res.eta >= coarse_best - 1e-15

    def test_deterministic(self):
        r1 = optimize_storage(quadratic, {"x": (-1, 1), "y": (-1, 1)})
        r2 = optimize_storage(quadratic, {"x": (-1, 1), "y": (-1, 1)})
        assert r1.best == r2.best and r1.eta == r2.eta
        assert r1.evaluations == r2.evaluations

    def test_empty_bounds_rejected(self):
        with pytest.raises(ValueError):
            optimize_storage(quadratic, {})

    def test_bad_bounds_rejected(self):
        with pytest.raises(ValueError):
            optimize_storage(quadratic, {"x": (1.0, -1.0)})

    def test_objective_errors_propagate(self):
        def broken(params):
            raise RuntimeError("boom")

        with pytest.raises(RuntimeError):
            optimize_storage(broken, {"x": (0, 1)})

    def test_matches_dense_grid_oracle_within_half_point(self):
        comb = make_ideal_comb(9, DELTA, GAMMA, 1.0)
        med = MediumSpec(LENGTH, comb.scaled(reference_weight(comb, LENGTH)))
        res, _ = optimize_scalar_storage(med, mode="width-and-mean")
        engine = ScalarEngine(med, bandwidth=2 * np.pi * 1.6e9)
        span = 8 * DELTA
        dense = max(
            engine.efficiency(b, mu)
            for b in np.linspace(0.1 * span, 0.5 * span, 41)
            for mu in np.linspace(-0.5 * span, 0.5 * span, 41)
        )
        assert res.eta >= dense - 0.005

    def test_unimodal_in_width_on_scan_grid(self):
        comb = make_ideal_comb(9, DELTA, GAMMA, 1.0)
        med = MediumSpec(LENGTH, comb.scaled(reference_weight(comb, LENGTH)))
        engine = ScalarEngine(med, bandwidth=2 * np.pi * 1.6e9)
        span = 8 * DELTA
        widths = np.linspace(0.1 * span, 0.5 * span, 21)
        etas = np.array([engine.efficiency(b) for b in widths])
        k = int(np.argmax(etas))
        assert 0 < k < len(etas) - 1
        assert np.all(np.diff(etas[:k + 1]) > 0)
        assert np.all(np.diff(etas[k:]) < 0)


class TestPulseParams:
    def test_width_must_be_positive(self):
        with pytest.raises(ValueError):
            PulseParams(width_b=0.0)

    def test_defaults(self):
        p = PulseParams(width_b=1.0)
        assert p.mean_offset == 0.0


class TestSweep:
    def test_rows_in_grid_order(self):
        rows = sweep("x", [3, 1, 2], lambda v: {"y": v * v})
        assert [r["x"] for r in rows] == [3, 1, 2]
        assert [r["y"] for r in rows] == [9, 1, 4]

    def test_empty_grid_gives_empty_table(self):
        assert sweep("x", [], lambda v: {}) == []

    def test_threaded_matches_serial(self):
        rows_serial = sweep("x", list(range(8)), lambda v: {"y": v ** 3})
        rows_threaded = sweep("x", list(range(8)), lambda v: {"y": v ** 3},
                              max_workers=4)
        assert rows_serial == rows_threaded


class TestOptResult:
    def test_carries_evaluation_count(self):
        def parabola(params):
            return 1.0 - params["x"] ** 2, 0.0

        res = optimize_storage(parabola, {"x": (-1, 1)}, points_per_axis=5,
                               refine=False)
        assert isinstance(res, OptResult)
        assert res.evaluations == 5
