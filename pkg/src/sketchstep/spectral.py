"""Fourier spectral reference solver with adaptive RK4 in time.

Space: ``N`` equispaced points on the periodic domain, second derivatives
by multiplying Fourier mode ``k`` with ``-(2 pi k / L)^2``.  Nonlinear terms
are evaluated pointwise on the grid without dealiasing.

Time: classical RK4 with step-doubling error control.  A step of size
``h`` is compared against two steps of size ``h/2``; it is accepted when
``|y_half - y_full| / 15 <= abs_tol + rel_tol |y_half|`` componentwise, and
the two-half-step result is kept.  Step sizes are clipped so that every
requested output time is hit exactly.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .pdes import AllenCahnProblem, SchrodingerProblem


class ReferenceSolveError(RuntimeError):
    def __init__(self, message, t_reached: float):
        super().__init__(f"{message} (reached t = {t_reached!r})")
        self.t_reached = t_reached


@dataclass(frozen=True)
class AdaptiveRkConfig:
    rel_tol: float = 1e-5
    abs_tol: float = 1e-5
    dt_initial: float = 1e-4
    dt_min: float = 1e-12
    safety: float = 0.9
    max_growth: float = 4.0
    min_shrink: float = 0.2

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not 0 < self.dt_min <= self.dt_initial:
            raise ValueError("need 0 < dt_min <= dt_initial")


@dataclass(frozen=True)
class SpectralGrid:
    left: float
    length: float
    size: int

    def __post_init__(self):
        if self.size < 2 or self.size % 2:
            raise ValueError(f"grid size must be even and >= 2, got {self.size}")

    @property
    def points(self) -> np.ndarray:
        return self.left + self.length * np.arange(self.size) / self.size

    @property
    def wavenumbers(self) -> np.ndarray:
        # fftfreq puts the Nyquist mode at -N/2; only k^2 is used for derivatives
        return 2 * np.pi * np.fft.fftfreq(self.size, d=self.length / self.size)


def spectral_second_derivative(values, length: float) -> np.ndarray:
    """``u_xx`` of periodic grid values (real or complex) on a domain of ``length``."""
    values = np.asarray(values)
    N = values.shape[-1]
    k = 2 * np.pi * np.fft.fftfreq(N, d=length / N)
    if np.iscomplexobj(values):
        return np.fft.ifft(-(k**2) * np.fft.fft(values))
    kr = 2 * np.pi * np.fft.rfftfreq(N, d=length / N)
    return np.fft.irfft(-(kr**2) * np.fft.rfft(values), n=N)


def grid_for(pde, size: int) -> SpectralGrid:
    return SpectralGrid(pde.left, pde.length, size)


def semidiscrete_rhs(pde, grid: SpectralGrid):
    x = grid.points

    def rhs(t, u):
        return pde.pointwise_rhs(t, x, u, spectral_second_derivative(u, grid.length))

    return rhs


def _rk4(rhs, t, y, h):
    k1 = rhs(t, y)
    k2 = rhs(t + h / 2, y + (h / 2) * k1)
    k3 = rhs(t + h / 2, y + (h / 2) * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


@dataclass
class ReferenceSolution:
    pde: object
    grid: SpectralGrid
    times: np.ndarray
    values: np.ndarray  # (len(times), N), complex for Schrodinger
    config: AdaptiveRkConfig
    accepted_steps: int = 0
    rejected_steps: int = 0

    def index_of(self, t: float) -> int:
        hits = np.flatnonzero(np.abs(self.times - t) <= 1e-12 * max(1.0, abs(t)))
        if hits.size == 0:
            raise KeyError(f"t = {t!r} is not one of the stored output times")
        return int(hits[0])


def reference_solve(pde, u0, cfg: AdaptiveRkConfig, output_times, grid: SpectralGrid | None = None):
    """Integrate from ``t = 0`` and store the grid solution at each output time.

    ``u0`` holds grid values (complex for the Schrodinger problem).  Raises
    :class:`ReferenceSolveError` if the controller needs a step below
    ``cfg.dt_min``.
    """
    u = np.array(u0, dtype=np.complex128 if pde.is_complex else np.float64)
    grid = grid or grid_for(pde, u.size)
    if grid.size != u.size:
        raise ValueError("initial data does not match the grid size")
    targets = np.asarray(output_times, dtype=np.float64)
    if targets.size == 0 or np.any(np.diff(targets) <= 0) or targets[0] < 0:
        raise ValueError("output times must be nonnegative and strictly increasing")
    rhs = semidiscrete_rhs(pde, grid)

    out = np.empty((targets.size, u.size), dtype=u.dtype)
    t, h = 0.0, cfg.dt_initial
    accepted = rejected = 0
    for j, target in enumerate(targets):
        while t < target:
            h_try = min(h, target - t)
            landing = h_try == target - t
            full = _rk4(rhs, t, u, h_try)
            half = _rk4(rhs, t + h_try / 2, _rk4(rhs, t, u, h_try / 2), h_try / 2)
            err = np.abs(half - full) / 15.0
            scale = cfg.abs_tol + cfg.rel_tol * np.abs(half)
            ratio = float(np.max(err / scale))
            if not np.isfinite(ratio):
                ratio = np.inf
            if ratio <= 1.0:
                t = target if landing else t + h_try
                u = half
                accepted += 1
            else:
                rejected += 1
            factor = cfg.max_growth if ratio == 0 else cfg.safety * ratio ** -0.2
            factor = min(cfg.max_growth, max(cfg.min_shrink, factor))
            # a step shortened only to land on an output time says nothing about growth
            h = max(h, h_try * factor) if landing and ratio <= 1.0 else h_try * factor
            if h < cfg.dt_min:
                raise ReferenceSolveError(f"step size {h:.3e} fell below dt_min={cfg.dt_min:g}", t)
        out[j] = u
    return ReferenceSolution(pde, grid, targets, out, cfg, accepted, rejected)


def trig_interpolate(values, grid: SpectralGrid, xs) -> np.ndarray:
    """Evaluate the ``N``-mode trigonometric interpolant of grid ``values`` at ``xs``.

    The Nyquist mode is split evenly between ``+N/2`` and ``-N/2``, so real
    data gives a real interpolant.
    """
    values = np.asarray(values)
    N = grid.size
    coef = np.fft.fft(values) / N
    k = 2 * np.pi * np.fft.fftfreq(N, d=grid.length / N)
    x = np.asarray(xs, dtype=np.float64).reshape(-1) - grid.left
    phase = np.exp(1j * np.outer(x, k))
    nyq = N // 2
    phase[:, nyq] = np.cos(k[nyq] * x)
    res = phase @ coef
    return res if np.iscomplexobj(values) else res.real


def evaluate_reference(solution: ReferenceSolution, t: float, xs) -> np.ndarray:
    """Reference values at stored output time ``t`` and arbitrary points ``xs``."""
    return trig_interpolate(solution.values[solution.index_of(t)], solution.grid, xs)


HEADER_PREFIX = "# sketchstep-reference"


def _pde_from(name: str, params: dict):
    if name == SchrodingerProblem.name:
        params["quadratic"] = params["quadratic"] in (True, "True")
        return SchrodingerProblem(**{k: (v if k == "quadratic" else float(v)) for k, v in params.items()})
    if name == AllenCahnProblem.name:
        return AllenCahnProblem(**{k: float(v) for k, v in params.items()})
    raise ValueError(f"unknown PDE name {name!r}")


def save_reference(path, solution: ReferenceSolution) -> None:
    """CSV table, one row per output time: ``t`` then grid values (Re and Im for complex)."""
    pde, cfg = solution.pde, solution.config
    params = ";".join(f"{k}={v if isinstance(v, bool) else float(v)!r}" for k, v in asdict(pde).items())
    header = (
        f"{HEADER_PREFIX} pde={pde.name} N={solution.grid.size} "
        f"rel_tol={float(cfg.rel_tol)!r} abs_tol={float(cfg.abs_tol)!r} params={params}"
    )
    vals = solution.values
    cols = np.hstack([vals.real, vals.imag]) if np.iscomplexobj(vals) else vals
    table = np.column_stack([solution.times, cols])
    with open(path, "w") as fh:
        fh.write(header + "\n")
        np.savetxt(fh, table, delimiter=",", fmt="%.17g")


def load_reference(path) -> ReferenceSolution:
    with open(path) as fh:
        header = fh.readline().strip()
    if not header.startswith(HEADER_PREFIX):
        raise ValueError(f"{path} is not a reference-solution file")
    meta = dict(tok.split("=", 1) for tok in header[len(HEADER_PREFIX):].split())
    params = dict(item.split("=", 1) for item in meta["params"].split(";"))
    pde = _pde_from(meta["pde"], params)
    N = int(meta["N"])
    table = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    times, cols = table[:, 0], table[:, 1:]
    values = cols[:, :N] + 1j * cols[:, N:] if pde.is_complex else cols
    cfg = AdaptiveRkConfig(rel_tol=float(meta["rel_tol"]), abs_tol=float(meta["abs_tol"]))
    return ReferenceSolution(pde, grid_for(pde, N), times, values, cfg)
