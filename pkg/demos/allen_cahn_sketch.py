"""Sketched Neural Galerkin time stepping on the Allen-Cahn equation.

A small swish network (3 hidden layers of width 12, p = 361 parameters) is
fitted to two bumps on the unit interval and then advanced in time by
explicit Euler steps.  Each step solves J eta = f for the parameter velocity.
J is numerically singular, so the plain least-squares solve blows up.
Tikhonov regularization and a rank-30 sketch both keep the run stable.
The sketch is cheaper per step.

The run uses 500 steps (t in [0, 0.5]) and one replicate to finish in a
couple of minutes; the CLI's ``pde`` experiment runs the full benchmark.

    python demos/allen_cahn_sketch.py
"""

import numpy as np

from sketchstep.experiments import PdeSetup, pde_sweep
from sketchstep.increments import Exact, Sketch, Tikhonov
from sketchstep.nnfield import AdamSchedule, NetworkSpec
from sketchstep.pdes import AllenCahnProblem

pde = AllenCahnProblem()
spec = NetworkSpec(pde.length, embedding_frequencies=1, hidden_layers=3, hidden_width=12)
setup = PdeSetup(pde, spec, collocation=500, dt=1e-3, num_steps=500,
                 fit=AdamSchedule(iters=3000, lr_max=1e-1, lr_min=1e-6))
print(f"network parameters: {spec.num_params}")

methods = [Exact(), Tikhonov(1e-4), Sketch(30)]
rows, _, timing = pde_sweep(setup, methods, replicates=1, seed=0, time_count=50)

print(f"\n{'method':>9} {'param':>20} {'stable':>7} {'mean rel. error':>16} {'ms/step':>8}")
for r, t in zip(rows, timing):
    err = r["mean_error"]
    err = f"{err:.4f}" if np.isfinite(err) else "-"
    print(f"{r['method']:>9} {r['param']:>20} {r['stable']:>7} {err:>16} {1e3 * t['seconds_per_step']:>8.2f}")
