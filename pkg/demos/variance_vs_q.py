"""Averaging sketches and shrinking the time step.

On the linear system theta' = -theta each Euler step solves a sketched
least-squares problem with m = 10 of p = 20 directions.  Averaging q
independent sketches per step cuts the spread of the final state like
1/sqrt(q).  Refining the step size dt, however, does not drive the error to
zero: the sketch only sees part of the space at every step, which leaves an
error floor.  With m = p the floor vanishes.

    python demos/variance_vs_q.py
"""

from sketchstep.experiments import mse_scaling

rows = mse_scaling(p=20, m=10, q_grid=[1, 4, 16, 64], dt_grid=[1e-2, 5e-3, 2.5e-3, 1.25e-3],
                   horizon=0.1, replicates=200, dt_for_q=0.02, seed=1)

print("spread of the final state versus q (dt = 0.02)")
for r in rows:
    if r["table"] == "vs_q":
        print(f"  q={r['q']:>3}  std={r['std']:.4f}")
print(f"  log-log slope {rows[0]['slope']:.3f} (expect about -0.5)")

print("\nmean error versus dt")
for table, label in (("vs_dt", "m = 10"), ("full_vs_dt", "m = p ")):
    errs = "  ".join(f"{r['mean_error']:.2e}" for r in rows if r["table"] == table)
    print(f"  {label}: {errs}")
