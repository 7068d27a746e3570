"""Benchmark PDEs and their coupling to the neural field.

Each problem knows its periodic domain, horizon, initial condition and a
pointwise right-hand side written in terms of ``(t, x, u, u_xx)``.  The
same pointwise form drives the Neural Galerkin least-squares systems here
and the spectral reference solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .nnfield import NetworkSpec, NeuralField, batch_jacobian, spatial_derivatives

DEFAULT_COLLOCATION = 1000


@dataclass(frozen=True)
class CollocationGrid:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1)
        if pts.size == 0 or np.any(np.diff(pts) <= 0):
            raise ValueError("collocation points must be non-empty and strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def equidistant(cls, left: float, length: float, n: int) -> "CollocationGrid":
        return cls(left + length * np.arange(n) / n)

    def __len__(self):
        return self.points.size


@dataclass(frozen=True)
class SchrodingerProblem:
    """``i psi_t = -psi_xx / 2 + V(x) psi`` on ``[-6, 6)``.

    ``V(x) = alpha2 * x + alpha4 * x**4`` by default; ``quadratic=True``
    switches the first term to ``alpha2 * x**2``.
    """

    alpha2: float = -0.125
    alpha4: float = 0.125**2
    quadratic: bool = False
    left: float = -6.0
    length: float = 12.0
    horizon: float = 12.0

    name = "schrodinger"
    outputs = 2
    is_complex = True

    def potential(self, x):
        x = np.asarray(x, dtype=np.float64)
        lead = x**2 if self.quadratic else x
        return self.alpha2 * lead + self.alpha4 * x**4

    def pointwise_rhs(self, t, x, psi, psi_xx):
        """``psi_t = -i H psi`` for complex ``psi``."""
        return -1j * (-0.5 * psi_xx + self.potential(x) * psi)

    def initial(self, x) -> np.ndarray:
        """``(Re, Im)`` of the Gaussian wave packet, shape ``(n, 2)``."""
        x = np.asarray(x, dtype=np.float64)
        re = np.pi**-0.25 * np.exp(-((x + 2) ** 2) / 2)
        return np.stack([re, np.zeros_like(re)], axis=-1)

    def initial_complex(self, x) -> np.ndarray:
        u0 = self.initial(x)
        return u0[..., 0] + 1j * u0[..., 1]


def phi_bump(x, center: float):
    """Periodic bump ``exp(-20 sin^2(pi (x - center)))`` on the unit interval."""
    return np.exp(-20.0 * np.sin(np.pi * (np.asarray(x, dtype=np.float64) - center)) ** 2)


@dataclass(frozen=True)
class AllenCahnProblem:
    """``u_t = eps u_xx - a(t, x)(u - u^3)`` on ``[0, 1)``.

    ``a(t, x) = a_mean + a_growth * t * sin(2 pi x)``; the defaults give the
    benchmark coefficient ``1.05 + t sin(2 pi x)``.
    """

    epsilon: float = 5e-4
    a_mean: float = 1.05
    a_growth: float = 1.0
    left: float = 0.0
    length: float = 1.0
    horizon: float = 2.0

    name = "allen-cahn"
    outputs = 1
    is_complex = False

    def coefficient(self, t, x):
        return self.a_mean + self.a_growth * t * np.sin(2 * np.pi * np.asarray(x, dtype=np.float64))

    def pointwise_rhs(self, t, x, u, u_xx):
        return self.epsilon * u_xx - self.coefficient(t, x) * (u - u**3)

    def initial(self, x) -> np.ndarray:
        """Shape ``(n, 1)``."""
        return (phi_bump(x, 0.03) - phi_bump(x, 0.7))[..., None]


PDEProblem = Union[SchrodingerProblem, AllenCahnProblem]


def _grid_points(xs):
    return xs.points if isinstance(xs, CollocationGrid) else np.asarray(xs, dtype=np.float64).reshape(-1)


def schrodinger_rhs(field: NeuralField, t: float, xs, pde: SchrodingerProblem | None = None):
    """Real form ``(u_t, v_t) = (Im H psi, -Re H psi)``, interleaved per point (length ``2n``)."""
    pde = pde or SchrodingerProblem()
    if field.spec.outputs != 2:
        raise ValueError("the Schrodinger field needs 2 outputs (Re, Im)")
    x = _grid_points(xs)
    u, _, uxx = spatial_derivatives(field, x)
    dpsi = pde.pointwise_rhs(t, x, u[:, 0] + 1j * u[:, 1], uxx[:, 0] + 1j * uxx[:, 1])
    return np.stack([dpsi.real, dpsi.imag], axis=1).reshape(-1)


def allen_cahn_rhs(field: NeuralField, t: float, xs, pde: AllenCahnProblem | None = None):
    pde = pde or AllenCahnProblem()
    if field.spec.outputs != 1:
        raise ValueError("the Allen-Cahn field needs 1 output")
    x = _grid_points(xs)
    u, _, uxx = spatial_derivatives(field, x)
    return pde.pointwise_rhs(t, x, u[:, 0], uxx[:, 0])


def pde_rhs(pde, field: NeuralField, t: float, xs) -> np.ndarray:
    if isinstance(pde, SchrodingerProblem):
        return schrodinger_rhs(field, t, xs, pde)
    if isinstance(pde, AllenCahnProblem):
        return allen_cahn_rhs(field, t, xs, pde)
    raise TypeError(f"unknown PDE {pde!r}")


class NeuralGalerkinProblem:
    """``(theta, t) -> (J, f)`` for a PDE, a network layout and a collocation grid."""

    def __init__(self, pde, spec: NetworkSpec, grid: CollocationGrid):
        if spec.outputs != pde.outputs:
            raise ValueError(f"{pde.name} needs {pde.outputs} network outputs, spec has {spec.outputs}")
        if not np.isclose(spec.period_length, pde.length):
            raise ValueError("network period does not match the PDE domain length")
        self.pde, self.spec, self.grid = pde, spec, grid

    def __call__(self, theta, t):
        field = NeuralField(self.spec, theta)
        return batch_jacobian(field, self.grid.points), pde_rhs(self.pde, field, t, self.grid)


def make_increment_problem(pde, spec: NetworkSpec, grid: CollocationGrid | None = None):
    if grid is None:
        grid = CollocationGrid.equidistant(pde.left, pde.length, DEFAULT_COLLOCATION)
    return NeuralGalerkinProblem(pde, spec, grid)


def schrodinger_initial(x):
    return SchrodingerProblem().initial(x)


def allen_cahn_initial(x):
    return AllenCahnProblem().initial(x)[..., 0]
