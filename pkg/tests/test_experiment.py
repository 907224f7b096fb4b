import math

import numpy as np
import pytest

from helpers import synthetic_log
from windmpc import (Metrics, OnlineMpc, SimLog, compute_metrics,
                     equilibrium, generate_wind, reference, run_closed_loop,
                     run_experiment, torque_total_variation)
from windmpc.config import build_config
from windmpc.errors import SimulationError


class TestComputeMetrics:
    def test_perfect_tracking_zero_error(self, params):
        metrics = compute_metrics(synthetic_log(100, params), params)
        assert metrics.rms_power_error == 0.0
        assert metrics.rms_speed_error == 0.0
        assert metrics.constraint_violations == 0

    def test_single_record_error(self, params):
        log = synthetic_log(1, params, power_error=np.array([100.0]))
        assert compute_metrics(log, params).rms_power_error == pytest.approx(100.0)

    def test_sinusoidal_error_rms(self, params):
        n = 1000
        cycles = 5
        amplitude = 321.0
        err = amplitude * np.sin(2.0 * np.pi * cycles * np.arange(n) / n)
        log = synthetic_log(n, params, power_error=err)
        assert compute_metrics(log, params).rms_power_error == pytest.approx(
            amplitude / math.sqrt(2.0), abs=1e-9)

    def test_energy_is_power_sum_times_sampling(self, params):
        log = synthetic_log(200, params)
        assert compute_metrics(log, params).energy == pytest.approx(
            200 * 1e5 * params.t_s)

    def test_violation_counting(self, params):
        log = synthetic_log(10, params)
        log.beta_ref = np.array([0, 0, 0.6, 0.6, 0.6, 0, 0, 0, 0, 0],
                                dtype=float)  # one +0.6 move, one -0.6 move
        metrics = compute_metrics(log, params)
        assert metrics.constraint_violations == 2

    def test_empty_log_zero_metrics(self, params):
        assert compute_metrics(SimLog(), params) == Metrics()


class TestRunClosedLoop:
    def test_regulation_at_constant_wind(self, params, weights):
        profile = generate_wind("constant", 0, 60.0, params, level=7.0)
        x0 = np.asarray(equilibrium(7.0, params).x_bar, dtype=float)
        x0[1] *= 0.9
        from windmpc import PlantState
        log = run_closed_loop(profile, OnlineMpc(params, weights), params,
                              PlantState(*x0))
        ref = reference(7.0, params).omega_g_ref
        assert abs(log.omega_g[-1] - ref) / ref < 0.01
        assert len(log) == 1200

    def test_zero_length_profile(self, params, weights):
        profile = generate_wind("constant", 0, 0.0, params)
        log = run_closed_loop(profile, OnlineMpc(params, weights), params)
        assert len(log) == 0

    def test_controller_failure_carries_step_index(self, params, weights):
        profile = generate_wind("constant", 0, 1.0, params, level=7.0)

        class Broken:
            def __init__(self):
                self.calls = 0

            def step(self, state, v):
                if self.calls >= 3:
                    raise RuntimeError("synthetic")
                self.calls += 1
                from windmpc import ControlInput
                return ControlInput(3e3, 0.0), type("I", (), {
                    "mode": "online", "qp_status": "optimal",
                    "qp_iterations": 1, "n_active": 0, "cost": 0.0,
                    "solve_time": 0.0, "d_hat": 0.0})()

        with pytest.raises(SimulationError) as err:
            run_closed_loop(profile, Broken(), params)
        assert err.value.step == 3


class TestRunExperiment:
    def test_comparison_shares_profile_and_start(self, params):
        config = build_config(overrides={
            "controller": "both", "wind_kind": "constant", "wind_level": 7.0,
            "duration": 2.0, "seed": 1})
        results = run_experiment(config)
        assert set(results) == {"offline", "online"}
        off_log, on_log = results["offline"][0], results["online"][0]
        assert np.array_equal(off_log.v, on_log.v)
        assert off_log.omega_g[0] == on_log.omega_g[0]

    def test_single_controller_run(self, params):
        config = build_config(overrides={
            "controller": "online", "wind_kind": "constant",
            "wind_level": 7.0, "duration": 1.0})
        results = run_experiment(config)
        assert list(results) == ["online"]
        log, metrics = results["online"]
        assert len(log) == 20
        assert metrics.step_time_mean > 0.0


class TestTorqueTotalVariation:
    def test_constant_torque_zero(self, params):
        assert torque_total_variation(synthetic_log(50, params)) == 0.0

    def test_known_staircase(self, params):
        log = synthetic_log(4, params)
        log.t_g_ref = np.array([0.0, 10.0, 5.0, 25.0])
        assert torque_total_variation(log) == pytest.approx(35.0)
