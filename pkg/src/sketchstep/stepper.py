"""Explicit Euler integration of ``theta' = F(theta)`` for any increment method."""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Protocol

import numpy as np

from .increments import (
    Exact,
    IncrementDiagnostics,
    IncrementFailure,
    IncrementMethod,
    Sketch,
    compute_increment,
)

#: ``max |theta_i|`` above which a trajectory is declared unstable.
BLOWUP_THRESHOLD = 1e8


class IncrementProblem(Protocol):
    def __call__(self, theta: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Return the least-squares pair ``(J, f)`` at parameters ``theta``, time ``t``."""


class Status(str, enum.Enum):
    COMPLETED = "completed"
    UNSTABLE = "unstable"


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    num_steps: int
    record_every: int = 1
    root_seed: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.num_steps < 0 or self.record_every < 1:
            raise ValueError("num_steps must be >= 0 and record_every >= 1")

    @property
    def horizon(self) -> float:
        return self.dt * self.num_steps


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    thetas: np.ndarray
    steps: np.ndarray
    diagnostics: list[IncrementDiagnostics] = field(default_factory=list)
    status: Status = Status.COMPLETED
    failed_step: int | None = None
    reason: str | None = None
    runtime_seconds: float = 0.0

    @property
    def stable(self) -> bool:
        return self.status is Status.COMPLETED

    @property
    def final(self) -> np.ndarray:
        return self.thetas[-1]

    def theta_at_step(self, k: int) -> np.ndarray:
        idx = np.searchsorted(self.steps, k)
        if idx >= len(self.steps) or self.steps[idx] != k:
            raise KeyError(f"step {k} was not recorded")
        return self.thetas[idx]


def euler_step(theta, eta, dt: float) -> np.ndarray:
    """``theta + dt * eta``; raises ``FloatingPointError`` on non-finite output."""
    out = np.asarray(theta, dtype=np.float64) + dt * np.asarray(eta, dtype=np.float64)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("Euler step produced non-finite parameters")
    return out


def integrate(
    problem: IncrementProblem,
    theta0,
    method: IncrementMethod,
    cfg: StepperConfig,
    record_steps: Iterable[int] | None = None,
    callback: Callable[[int, np.ndarray], None] | None = None,
) -> TrajectoryRecord:
    """Run ``cfg.num_steps`` explicit Euler steps from ``theta0``.

    Snapshots are stored every ``cfg.record_every`` steps (always including
    the first and last), or exactly at ``record_steps`` when given.  A step
    whose increment fails, or which leaves ``max |theta|`` above
    ``BLOWUP_THRESHOLD`` or non-finite, ends the run with status
    ``UNSTABLE``; everything recorded before it is kept.
    """
    theta = np.array(theta0, dtype=np.float64)
    K = cfg.num_steps
    if record_steps is None:
        wanted = set(range(0, K + 1, cfg.record_every)) | {K}
    else:
        wanted = {int(k) for k in record_steps}
        if min(wanted, default=0) < 0 or max(wanted, default=0) > K:
            raise ValueError("record_steps outside [0, num_steps]")

    steps, thetas, diags = [], [], []

    def record(k):
        steps.append(k)
        thetas.append(theta.copy())

    if 0 in wanted:
        record(0)
    status, failed, reason = Status.COMPLETED, None, None
    start = time.perf_counter()
    for k in range(K):
        t = k * cfg.dt
        try:
            J, f = problem(theta, t)
            eta, diag = compute_increment(J, f, method, cfg.root_seed, k)
            theta = euler_step(theta, eta, cfg.dt)
        except (IncrementFailure, FloatingPointError, ValueError) as exc:
            status, failed, reason = Status.UNSTABLE, k, str(exc)
            break
        diags.append(diag)
        if np.max(np.abs(theta)) > BLOWUP_THRESHOLD:
            status, failed = Status.UNSTABLE, k
            reason = f"max |theta| exceeded {BLOWUP_THRESHOLD:g}"
            break
        if callback is not None:
            callback(k + 1, theta)
        if k + 1 in wanted:
            record(k + 1)
    runtime = time.perf_counter() - start

    steps_arr = np.asarray(steps, dtype=np.int64)
    thetas_arr = np.array(thetas) if thetas else np.empty((0, theta.size))
    return TrajectoryRecord(
        times=steps_arr * cfg.dt,
        thetas=thetas_arr,
        steps=steps_arr,
        diagnostics=diags,
        status=status,
        failed_step=failed,
        reason=reason,
        runtime_seconds=runtime,
    )


class LinearProblem:
    """Synthetic linear system with ``J = A`` and ``f(theta) = -rate * A theta``.

    The exact increment is ``-rate * theta`` for any full-column-rank ``A``.
    """

    def __init__(self, A=None, p: int | None = None, rate: float = 1.0):
        if A is None:
            if p is None:
                raise ValueError("give either A or p")
            A = np.eye(p)
        self.A = np.asarray(A, dtype=np.float64)
        self.rate = rate

    @property
    def p(self) -> int:
        return self.A.shape[1]

    def __call__(self, theta, t):
        return self.A, -self.rate * (self.A @ theta)


@dataclass
class ScalingRow:
    q: int
    dt: float
    num_steps: int
    mean_error: float
    std: float
    unstable: int


def _replicate_finals(problem, theta0, method, dt, K, replicates, seed, tag):
    finals, unstable = [], 0
    for r in range(replicates):
        rec = integrate(
            problem, theta0, method,
            StepperConfig(dt, K, record_every=max(K, 1), root_seed=_sub_seed(seed, tag, r)),
        )
        if rec.stable:
            finals.append(rec.final)
        else:
            unstable += 1
    return np.array(finals), unstable


def _sub_seed(seed: int, *keys: int) -> int:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _row(finals, target, q, dt, K, unstable) -> ScalingRow:
    if len(finals) == 0:
        return ScalingRow(q, dt, K, float("nan"), float("nan"), unstable)
    err = np.linalg.norm(finals - target, axis=1)
    centered = finals - finals.mean(axis=0)
    # total standard deviation: sqrt of the trace of the sample covariance
    std = float(np.sqrt(np.sum(centered**2) / max(len(finals) - 1, 1)))
    return ScalingRow(q, dt, K, float(err.mean()), std, unstable)


def mse_scaling_experiment(
    problem,
    theta0,
    m: int,
    q_grid,
    dt_grid,
    horizon: float,
    replicates: int,
    seed: int = 0,
    dt_for_q: float | None = None,
    q_for_dt: int = 1,
    law="haar",
):
    """Monte Carlo estimate of ``E ||theta~_K - theta*_K||`` versus ``q`` and ``dt``.

    ``theta*_K`` is the deterministic Euler trajectory with the exact
    increment at the same ``dt``.  Returns ``(rows_vs_q, rows_vs_dt)``.

    Replicate ``r`` uses the same root seed at every ``dt`` (common random
    numbers), so the differences between ``dt`` levels are much less noisy
    than the levels themselves.
    """
    theta0 = np.asarray(theta0, dtype=np.float64)
    dt_for_q = dt_grid[0] if dt_for_q is None else dt_for_q

    def steps_for(dt):
        K = int(round(horizon / dt))
        if not np.isclose(K * dt, horizon):
            raise ValueError(f"dt={dt} does not divide the horizon {horizon}")
        return K

    def exact_final(dt, K):
        return integrate(problem, theta0, Exact(), StepperConfig(dt, K, record_every=max(K, 1))).final

    K = steps_for(dt_for_q)
    target = exact_final(dt_for_q, K)
    rows_q = []
    for j, q in enumerate(q_grid):
        finals, bad = _replicate_finals(
            problem, theta0, Sketch(m, int(q), law), dt_for_q, K, replicates, seed, 2 * j
        )
        rows_q.append(_row(finals, target, int(q), dt_for_q, K, bad))

    rows_dt = []
    for j, dt in enumerate(dt_grid):
        K = steps_for(dt)
        target = exact_final(dt, K)
        finals, bad = _replicate_finals(
            problem, theta0, Sketch(m, q_for_dt, law), dt, K, replicates, seed, 1
        )
        rows_dt.append(_row(finals, target, q_for_dt, dt, K, bad))
    return rows_q, rows_dt


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])
