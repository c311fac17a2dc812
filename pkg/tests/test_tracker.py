import numpy as np
import pytest

from renormesh.integrate import IntegratorSettings
from renormesh.models import CoefficientVector, ModelKind
from renormesh.tracker import (
    ExperimentConfig,
    Trace,
    TraceRecord,
    _Run,
    calibrate_tol,
    detect_turning_point,
    run_case1_detect,
    run_case2_detect,
    run_detect,
    run_follow,
    run_refine,
    second_eigenvalue_crossing,
    solve_coefficients,
)

FIXED = IntegratorSettings(mode="fixed", cfl=0.6)


def tiny_config(**kw) -> ExperimentConfig:
    base = dict(
        nu=0.0, n_start=32, tol=1e-16, model=ModelKind.t_model(),
        case="I", t_end=0.5, record_stride=4, integrator=FIXED,
    )
    base.update(kw)
    return ExperimentConfig(**base)


def synthetic_trace(t, eig2) -> Trace:
    trace = Trace(config=tiny_config())
    for ti, yi in zip(t, eig2):
        trace.records.append(
            TraceRecord(
                t=float(ti), n_current=32, eig1=1.0 + 0j, eig2=complex(yi),
                detB=1.0, digits1=16, digits2=16,
                E1_full=0.5, E2_full=0.125, E1_red=0.5, E2_red=0.125,
                dE1_full=0.0, dE1_red=0.0,
            )
        )
    return trace


class TestConfigValidation:
    def test_negative_viscosity(self):
        with pytest.raises(ValueError):
            tiny_config(nu=-0.1)

    def test_resolutions_ordered(self):
        with pytest.raises(ValueError):
            tiny_config(n_start=512, n_final=256)

    def test_tol_floor(self):
        with pytest.raises(ValueError):
            tiny_config(tol=1e-18)

    def test_case_names(self):
        with pytest.raises(ValueError):
            tiny_config(case="III")

    def test_reduced_fraction_range(self):
        with pytest.raises(ValueError):
            tiny_config(reduced_fraction=1.0)

    def test_reduced_size_power_of_two(self):
        cfg = tiny_config(reduced_fraction=0.3)
        with pytest.raises(ValueError):
            cfg.reduced_size(32)


class TestDetect:
    def test_detb_exactly_zero_at_start(self):
        trace = run_case1_detect(tiny_config(t_end=0.1))
        assert trace.records[0].t == 0.0
        assert trace.records[0].detB == 0.0
        assert trace.records[0].b_singular

    def test_energy_conserved_pre_shock_inviscid(self):
        trace = run_case1_detect(tiny_config(n_start=64, t_end=0.5))
        e1 = trace.series("E1_full")
        assert np.max(np.abs(e1 - 0.5)) <= 1e-9

    def test_case2_early_times_a_equals_b(self):
        cfg = tiny_config(case="II", t_end=0.2, n_start=64)
        run = _Run(cfg)
        run.advance(0.2)
        _, state, _ = run.snapshot()
        np.testing.assert_allclose(state.A, state.B, rtol=1e-12, atol=1e-15)

    def test_case2_digits_reported_saturated(self):
        trace = run_case2_detect(tiny_config(case="II", t_end=0.2))
        assert all(r.digits1 == 16 and r.digits2 == 16 for r in trace.records)

    def test_dispatch_matches_case(self):
        with pytest.raises(ValueError):
            run_case1_detect(tiny_config(case="II"))
        with pytest.raises(ValueError):
            run_case2_detect(tiny_config(case="I"))
        trace = run_detect(tiny_config(t_end=0.1))
        assert trace.config.case == "I"

    def test_force_record_instant(self):
        cfg = tiny_config(t_end=0.5, force_record_at=(0.333,))
        trace = run_case1_detect(cfg)
        assert np.min(np.abs(trace.times() - 0.333)) < 1e-12

    def test_rate_reconstruction(self):
        # recorded dE1 columns must be consistent with the energy slope
        cfg = tiny_config(n_start=64, t_end=0.6, record_stride=1)
        trace = run_case1_detect(cfg)
        t = trace.times()
        e1r = trace.series("E1_red")
        de1 = trace.series("dE1_red")
        mid = (de1[1:-1]).astype(float)
        slope = (e1r[2:] - e1r[:-2]) / (t[2:] - t[:-2])
        assert np.max(np.abs(slope - mid)) < 1e-3


class TestRefine:
    def test_doubles_until_exhaustion(self):
        cfg = tiny_config(n_start=32, n_final=128, t_end=1.2)
        trace = run_refine(cfg)
        sizes = trace.series("n_current")
        assert sizes[0] == 32
        assert sizes.max() == 128
        assert np.all(np.diff(sizes) >= 0)
        assert trace.exhausted_time is not None

    def test_refinement_preserves_quantities_bitwise(self):
        cfg = tiny_config(n_start=32, n_final=64)
        run = _Run(cfg)
        run.advance(0.3)
        before, _, _ = run.snapshot()
        run.refine()
        after, _, _ = run.snapshot()
        assert after.E1_full == before.E1_full
        assert after.E2_full == before.E2_full

    def test_looser_tol_exhausts_later(self):
        lo = run_refine(tiny_config(n_start=32, n_final=64, tol=1e-16, t_end=1.2))
        hi = run_refine(tiny_config(n_start=32, n_final=64, tol=1e-6, t_end=1.2))
        assert lo.exhausted_time is not None and hi.exhausted_time is not None
        assert hi.exhausted_time >= lo.exhausted_time

    def test_events_are_marked(self):
        trace = run_refine(tiny_config(n_start=32, n_final=128, t_end=1.2))
        events = [r for r in trace.records if r.refinement_event]
        assert len(events) == 2  # 32 -> 64 -> 128


class TestFollow:
    def test_case1_switchover(self):
        cfg = tiny_config(n_start=32, n_final=64, t_end=1.4)
        trace = run_follow(cfg)
        assert trace.switch_time is not None
        post = [r for r in trace.records if r.t > trace.switch_time]
        assert post and all(r.n_current == 32 for r in post)
        switches = [r for r in trace.records if r.switchover_event]
        assert len(switches) == 1

    def test_case2_records_coefficients(self):
        cfg = tiny_config(case="II", n_start=32, n_final=64, t_end=1.4)
        trace = run_follow(cfg)
        assert trace.switch_time is not None
        assert trace.coefficients is not None

    def test_case2_exploratory_history(self):
        cfg = tiny_config(
            case="II", n_start=64, n_final=64, t_end=1.0, resolve_per_record=True
        )
        trace = run_detect(cfg)
        assert trace.coefficient_history
        ts = [t for t, _ in trace.coefficient_history]
        assert ts == sorted(ts)


class TestSolveCoefficients:
    def test_identity(self):
        a = solve_coefficients(np.eye(2), np.array([1.0, 1.0]))
        assert a == CoefficientVector(1.0, 1.0)

    def test_round_trip(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            b = rng.normal(size=(2, 2))
            if abs(np.linalg.det(b)) < 1e-3:
                continue
            a0 = rng.normal(size=2)
            a = solve_coefficients(b, b @ a0)
            assert abs(a.a1 - a0[0]) <= 1e-10
            assert abs(a.a2 - a0[1]) <= 1e-10

    def test_singular_rejected(self):
        with pytest.raises(ValueError):
            solve_coefficients(np.zeros((2, 2)), np.array([1.0, 0.0]))


class TestTurningPoint:
    def test_synthetic_tanh_inflection(self):
        t = np.linspace(0.5, 1.5, 101)
        report = detect_turning_point(synthetic_trace(t, np.tanh(50 * (t - 1.0))))
        assert report is not None
        assert abs(report.t_turn - 1.0) <= 0.011  # one record stride

    def test_flat_trace_has_no_turning(self):
        t = np.linspace(0.0, 1.0, 50)
        assert detect_turning_point(synthetic_trace(t, np.ones_like(t))) is None

    def test_still_accelerating_has_no_turning(self):
        t = np.linspace(0.0, 1.0, 50)
        assert detect_turning_point(synthetic_trace(t, np.exp(5 * t))) is None

    def test_short_trace_absent(self):
        t = np.linspace(0.0, 1.0, 4)
        assert detect_turning_point(synthetic_trace(t, t)) is None


class TestCrossing:
    def test_synthetic_crossing_time(self):
        t = np.linspace(0.5, 1.5, 201)
        low = synthetic_trace(t, 10 * (t - 0.5))  # leads early
        high = synthetic_trace(t, 12 * (t - 0.6))  # overtakes at t = 1.1
        c = second_eigenvalue_crossing(low, high)
        assert c == pytest.approx(1.1, abs=0.01)

    def test_no_crossing(self):
        t = np.linspace(0.5, 1.5, 101)
        low = synthetic_trace(t, 2 * t)
        high = synthetic_trace(t, t)
        assert second_eigenvalue_crossing(low, high) is None


class TestCalibrate:
    def test_target_zero_keeps_tol(self):
        cfg = tiny_config(n_start=32, n_final=64)
        assert calibrate_tol(cfg, 0) == cfg.tol

    def test_target_out_of_range(self):
        with pytest.raises(ValueError):
            calibrate_tol(tiny_config(), 11)

    def test_tight_tol_meets_modest_target(self):
        cfg = tiny_config(n_start=32, n_final=64, tol=1e-16, t_end=1.2)
        assert calibrate_tol(cfg, 3) == 1e-16
