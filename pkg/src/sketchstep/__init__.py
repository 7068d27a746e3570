"""Randomized right-sketching for sequential-in-time neural Galerkin training.

The time stepper solves, at every step, a least-squares problem for the
parameter increment.  Instead of regularizing that problem, the increment is
restricted to the range of a random ``p x m`` embedding, which caps the
conditioning and cuts the cost of each solve.
"""

from .embeddings import Law, draw_embedding, gaussian_factor, haar_factor, haar_stiefel, make_rng
from .increments import (
    Exact,
    IncrementDiagnostics,
    IncrementFailure,
    Sketch,
    Tikhonov,
    TruncSVD,
    compute_increment,
    randomized_increment,
    sketched_increment,
)
from .stepper import LinearProblem, StepperConfig, TrajectoryRecord, integrate

__all__ = [
    "Law", "draw_embedding", "gaussian_factor", "haar_factor", "haar_stiefel", "make_rng",
    "Exact", "IncrementDiagnostics", "IncrementFailure", "Sketch", "Tikhonov", "TruncSVD",
    "compute_increment", "randomized_increment", "sketched_increment",
    "LinearProblem", "StepperConfig", "TrajectoryRecord", "integrate",
]

__version__ = "0.1.0"
