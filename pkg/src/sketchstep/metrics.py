"""Relative errors against a reference and best-of-replicates summaries."""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field

import numpy as np

DEFAULT_TEST_POINTS = 500
DEFAULT_TEST_TIMES = 200
BEST_OF = 10


def test_times(horizon: float, count: int = DEFAULT_TEST_TIMES) -> np.ndarray:
    """``count`` equidistant times in ``[0, horizon]``, both endpoints included."""
    return np.linspace(0.0, horizon, count)


def test_points(left: float, length: float, count: int = DEFAULT_TEST_POINTS) -> np.ndarray:
    return left + length * np.arange(count) / count


def _as_rows(values) -> np.ndarray:
    """Pointwise output vectors, shape ``(points, outputs)``; complex is split into Re/Im."""
    arr = np.asarray(values)
    if np.iscomplexobj(arr):
        arr = np.stack([arr.real, arr.imag], axis=-1)
    if arr.ndim == 1:
        arr = arr[:, None]
    return arr.reshape(arr.shape[0], -1).astype(np.float64)


def relative_error_at(ng_values, ref_values) -> float:
    """``sum_x |ref(x) - ng(x)| / sum_x |ref(x)|`` with ``|.|`` the output-vector 2-norm."""
    ng, ref = _as_rows(ng_values), _as_rows(ref_values)
    if ng.shape != ref.shape:
        raise ValueError(f"shape mismatch: {ng.shape} vs {ref.shape}")
    denom = np.linalg.norm(ref, axis=1).sum()
    if denom == 0:
        raise ZeroDivisionError("reference is identically zero")
    return float(np.linalg.norm(ref - ng, axis=1).sum() / denom)


@dataclass
class ErrorReport:
    times: np.ndarray
    errors: np.ndarray
    runtime_seconds: float = 0.0
    stable: bool = True
    replicate: int = 0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.errors = np.asarray(self.errors, dtype=np.float64)
        if self.times.shape != self.errors.shape:
            raise ValueError("times and errors must have equal length")

    @property
    def per_time_errors(self):
        return list(zip(self.times.tolist(), self.errors.tolist()))

    @property
    def end_time_error(self) -> float:
        return float(self.errors[-1]) if self.errors.size else float("nan")

    @property
    def mean_error(self) -> float:
        return float(self.errors.mean()) if self.errors.size else float("nan")


@dataclass
class ReplicateSummary:
    total_replicates: int
    unstable_count: int
    selected: list[int] = field(default_factory=list)
    mean_of_selected: float = float("nan")
    std_of_selected: float = float("nan")

    @property
    def empty(self) -> bool:
        return not self.selected


def _usable(report: ErrorReport) -> bool:
    return report.stable and np.isfinite(report.mean_error)


def summarize_replicates(reports, best_of: int = BEST_OF) -> ReplicateSummary:
    """Mean and (population) std of the ``best_of`` lowest mean errors among stable runs.

    Replicates are identified by ``report.replicate``; ties sort by that index.
    """
    reports = list(reports)
    if not reports:
        raise ValueError("need at least one report")
    stable = [r for r in reports if _usable(r)]
    ranked = sorted(stable, key=lambda r: (r.mean_error, r.replicate))[:best_of]
    summary = ReplicateSummary(len(reports), len(reports) - len(stable))
    if ranked:
        vals = [r.mean_error for r in ranked]
        summary.selected = [r.replicate for r in ranked]
        # exactly rounded, so identical errors give std 0
        summary.mean_of_selected = statistics.fmean(vals)
        summary.std_of_selected = statistics.pstdev(vals)
    return summary
