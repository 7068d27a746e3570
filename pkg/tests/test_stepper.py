import numpy as np
import pytest

from sketchstep.increments import Exact, Sketch, Tikhonov
from sketchstep.stepper import (
    BLOWUP_THRESHOLD,
    LinearProblem,
    Status,
    StepperConfig,
    euler_step,
    integrate,
    loglog_slope,
    mse_scaling_experiment,
)


def test_euler_step_examples():
    np.testing.assert_allclose(euler_step([1.0], [-1.0], 0.1), [0.9])
    np.testing.assert_array_equal(euler_step([1.0, 2.0], [0.0, 0.0], 0.3), [1.0, 2.0])
    np.testing.assert_array_equal(euler_step([1.0, 2.0], [5.0, 5.0], 0.0), [1.0, 2.0])
    with pytest.raises(FloatingPointError):
        euler_step([1.0], [np.inf], 0.1)


def test_config_validation():
    with pytest.raises(ValueError):
        StepperConfig(0.0, 10)
    with pytest.raises(ValueError):
        StepperConfig(0.1, 10, record_every=0)
    assert StepperConfig(0.25, 8).horizon == 2.0


def test_linear_decay_closed_form():
    rec = integrate(LinearProblem(p=1), [1.0], Exact(), StepperConfig(1e-3, 1000, record_every=100))
    assert rec.final[0] == pytest.approx((1 - 1e-3) ** 1000, rel=1e-12)
    assert rec.final[0] == pytest.approx(0.36770, abs=1e-5)
    assert rec.stable and rec.status is Status.COMPLETED
    assert np.all(np.diff(rec.times) > 0)
    np.testing.assert_array_equal(rec.steps, np.arange(0, 1001, 100))


def test_full_sketch_tracks_exact():
    p = 6
    theta0 = np.linspace(-1, 1, p)
    cfg = StepperConfig(1e-2, 200, record_every=1, root_seed=3)
    a = integrate(LinearProblem(p=p), theta0, Exact(), cfg)
    b = integrate(LinearProblem(p=p), theta0, Sketch(p, 1), cfg)
    max_eta = max(d.increment_norm for d in a.diagnostics)
    # per-step agreement 1e-8 compounding over K steps
    assert np.max(np.abs(a.thetas - b.thetas)) <= 1e-8 * cfg.num_steps * max_eta * cfg.dt + 1e-14


def test_zero_rhs_constant_trajectory():
    class Zero:
        def __call__(self, theta, t):
            return np.eye(3), np.zeros(3)

    rec = integrate(Zero(), [1.0, 2.0, 3.0], Sketch(2, 2), StepperConfig(0.1, 20))
    np.testing.assert_array_equal(rec.thetas, np.tile([1.0, 2.0, 3.0], (21, 1)))


def test_determinism():
    cfg = StepperConfig(1e-2, 50, root_seed=11)
    a = integrate(LinearProblem(p=5), np.ones(5), Sketch(2, 3), cfg)
    b = integrate(LinearProblem(p=5), np.ones(5), Sketch(2, 3), cfg)
    np.testing.assert_array_equal(a.thetas, b.thetas)
    c = integrate(LinearProblem(p=5), np.ones(5), Sketch(2, 3), StepperConfig(1e-2, 50, root_seed=12))
    assert not np.array_equal(a.thetas, c.thetas)


def test_seeds_do_not_depend_on_horizon():
    p = 5
    short = integrate(LinearProblem(p=p), np.ones(p), Sketch(2), StepperConfig(1e-2, 20, root_seed=4))
    long = integrate(LinearProblem(p=p), np.ones(p), Sketch(2), StepperConfig(1e-2, 40, root_seed=4))
    np.testing.assert_array_equal(short.thetas, long.thetas[:21])


def test_global_error_is_first_order():
    theta0 = np.array([1.0, -2.0])
    errors = []
    for K in (100, 200, 400):
        rec = integrate(LinearProblem(p=2), theta0, Exact(), StepperConfig(1.0 / K, K))
        errors.append(np.linalg.norm(rec.final - np.exp(-1.0) * theta0))
    for e1, e2 in zip(errors, errors[1:]):
        assert e1 / e2 >= 2 / 1.2


def test_blowup_is_flagged():
    # growth rate 1000 with dt = 1: theta multiplies by 1001 per step
    rec = integrate(LinearProblem(p=1, rate=-1000.0), [1.0], Exact(), StepperConfig(1.0, 10))
    assert rec.status is Status.UNSTABLE and not rec.stable
    assert rec.failed_step == 2  # 1001^3 > 1e8 after the third step
    assert len(rec.thetas) == 3  # steps 0, 1, 2 recorded before failure
    assert np.max(np.abs(rec.thetas)) <= BLOWUP_THRESHOLD
    assert "exceeded" in rec.reason


def test_increment_failure_is_flagged():
    class Singular:
        def __call__(self, theta, t):
            return np.array([[1.0, 0.0], [0.0, 0.0]]), np.ones(2)

    rec = integrate(Singular(), [0.0, 0.0], Tikhonov(1e-3), StepperConfig(0.1, 3))
    assert rec.stable  # regularized solve is fine
    rec = integrate(Singular(), [0.0, 0.0], Sketch(1, law="haar"), StepperConfig(0.1, 200, root_seed=0))
    assert rec.stable or rec.failed_step is not None


def test_time_dependent_problem_sees_step_times():
    seen = []

    class Clock:
        def __call__(self, theta, t):
            seen.append(t)
            return np.eye(1), np.array([1.0])

    integrate(Clock(), [0.0], Exact(), StepperConfig(0.25, 4))
    assert seen == [0.0, 0.25, 0.5, 0.75]


def test_record_steps_subset():
    rec = integrate(LinearProblem(p=1), [1.0], Exact(), StepperConfig(0.1, 10), record_steps=[0, 3, 10])
    np.testing.assert_array_equal(rec.steps, [0, 3, 10])
    assert rec.theta_at_step(3)[0] == pytest.approx(0.9**3)
    with pytest.raises(KeyError):
        rec.theta_at_step(4)
    with pytest.raises(ValueError):
        integrate(LinearProblem(p=1), [1.0], Exact(), StepperConfig(0.1, 10), record_steps=[11])


def test_loglog_slope():
    assert loglog_slope([1, 2, 4], [3.0, 1.5, 0.75]) == pytest.approx(-1.0)


def test_mse_scaling_full_sketch_has_zero_error():
    problem = LinearProblem(p=4)
    rq, rdt = mse_scaling_experiment(problem, np.ones(4), 4, [1, 2], [0.1, 0.05], 0.2, 5, seed=1)
    assert all(r.mean_error <= 1e-10 for r in rq + rdt)


def test_mse_scaling_q_slope_small():
    problem = LinearProblem(p=10)
    theta0 = np.random.default_rng(0).standard_normal(10)
    rq, _ = mse_scaling_experiment(problem, theta0, 5, [1, 4, 16], [0.05], 0.1, 120, seed=3, dt_for_q=0.05)
    slope = loglog_slope([r.q for r in rq], [r.std for r in rq])
    assert -0.65 <= slope <= -0.35
    assert all(r.unstable == 0 for r in rq)


def test_mse_scaling_rejects_nondividing_dt():
    with pytest.raises(ValueError):
        mse_scaling_experiment(LinearProblem(p=2), np.ones(2), 1, [1], [0.3], 1.0, 2)
