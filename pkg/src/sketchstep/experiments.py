"""Experiment drivers behind the CLI.

Each driver takes plain keyword parameters and returns a list of row dicts
with a fixed column order (``*_COLUMNS``), so results can be consumed from
Python as well as written to CSV.  All randomness is derived from a single
root seed through :func:`make_rng` key paths, which makes every table
independent of evaluation order and worker count.
"""

from __future__ import annotations

import hashlib
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import linalg
from .embeddings import Law, draw_embedding, gaussian_factor, haar_factor, haar_stiefel, make_rng
from .increments import Exact, Sketch, Tikhonov, TruncSVD
from .metrics import ErrorReport, relative_error_at, summarize_replicates, test_points, test_times
from .nnfield import AdamSchedule, NetworkSpec, NeuralField, fit_initial, forward, load_params, save_params
from .pdes import AllenCahnProblem, CollocationGrid, SchrodingerProblem, make_increment_problem
from .spectral import AdaptiveRkConfig, evaluate_reference, grid_for, load_reference, reference_solve, save_reference
from .stepper import LinearProblem, StepperConfig, integrate, loglog_slope, mse_scaling_experiment


def power_law_matrix(n: int, p: int, omega: float, rng):
    """``A = U diag(i^-omega) V^T`` with Haar ``U`` (``n x p``) and ``V`` (``p x p``).

    Returns ``(A, A_pinv, sigma)``.
    """
    if n < p:
        raise ValueError("need n >= p")
    gen = make_rng(rng)
    U = haar_stiefel(n, p, gen).matrix
    V = haar_stiefel(p, p, gen).matrix
    sigma = np.arange(1, p + 1, dtype=np.float64) ** -float(omega)
    return (U * sigma) @ V.T, (V / sigma) @ U.T, sigma


def _laws(laws) -> list[Law]:
    return [Law(l) for l in laws]


# --------------------------------------------------------------------------
# conditioning of the sketched matrix

CONDITIONING_COLUMNS = [
    "law", "m", "gamma", "kappa_mean", "kappa_min", "kappa_max",
    "sv_ratio_m", "sv_ratio_nu1.2", "sv_ratio_nu2.0",
    "alpha_nu1.2", "alpha_nu2.0", "rho_nu1.2", "rho_nu2.0",
]


def _factor_or_nan(fn, gamma, nu):
    return fn(gamma, nu) if 0 < gamma < nu <= 1 else float("nan")


def conditioning(p: int, omega: float, m_grid, trials: int, laws=("haar", "gaussian"), n: int | None = None, seed: int = 0):
    """Statistics of ``kappa(A Gamma)`` for the power-law test matrix."""
    n = p if n is None else n
    A, _, sigma = power_law_matrix(n, p, omega, make_rng(seed, 0))
    rows = []
    for li, law in enumerate(_laws(laws)):
        for m in m_grid:
            kappas = np.array([
                linalg.cond(A @ draw_embedding(law, p, m, make_rng(seed, 1, li, m, t)).matrix)
                for t in range(trials)
            ])
            gamma = m / p
            row = {
                "law": law.value, "m": m, "gamma": gamma,
                "kappa_mean": kappas.mean(), "kappa_min": kappas.min(), "kappa_max": kappas.max(),
                "sv_ratio_m": sigma[0] / sigma[m - 1],
            }
            for ratio in (1.2, 2.0):
                ell = int(math.ceil(ratio * m))
                nu = ratio * gamma
                row[f"sv_ratio_nu{ratio}"] = sigma[0] / sigma[ell - 1] if ell <= p else float("nan")
                row[f"alpha_nu{ratio}"] = _factor_or_nan(haar_factor, gamma, nu)
                row[f"rho_nu{ratio}"] = _factor_or_nan(gaussian_factor, gamma, nu)
            rows.append(row)
    return rows


# --------------------------------------------------------------------------
# concentration of the conditioning factors

RHO_COLUMNS = [
    "m", "ell", "gamma", "nu", "haar_mean", "haar_min", "haar_max", "alpha",
    "gauss_mean", "gauss_min", "gauss_max", "rho", "frac_gauss_gt_haar",
]


def rho_statistics(p: int, ratio: float, m_grid, trials: int, seed: int = 0):
    """Haar ``1/sigma_min(Gamma_1)`` and Gaussian ``sigma_max(G)/sigma_min(G_1)``.

    ``Gamma_1`` is the leading ``ell = ratio * m`` rows of the ``p x m`` draw.
    """
    rows = []
    for m in m_grid:
        ell = int(round(ratio * m))
        if ell > p:
            raise ValueError(f"ell = {ell} exceeds p = {p} at m = {m}")
        haar, gauss = np.empty(trials), np.empty(trials)
        for t in range(trials):
            Q = haar_stiefel(p, m, make_rng(seed, 0, m, t)).matrix
            haar[t] = 1.0 / linalg.singular_values(Q[:ell])[-1]
            G = draw_embedding(Law.GAUSSIAN, p, m, make_rng(seed, 1, m, t)).matrix
            gauss[t] = linalg.singular_values(G)[0] / linalg.singular_values(G[:ell])[-1]
        gamma, nu = m / p, ell / p
        rows.append({
            "m": m, "ell": ell, "gamma": gamma, "nu": nu,
            "haar_mean": haar.mean(), "haar_min": haar.min(), "haar_max": haar.max(),
            "alpha": _factor_or_nan(haar_factor, gamma, nu),
            "gauss_mean": gauss.mean(), "gauss_min": gauss.min(), "gauss_max": gauss.max(),
            "rho": _factor_or_nan(gaussian_factor, gamma, nu),
            "frac_gauss_gt_haar": float(np.mean(gauss > haar)),
        })
    return rows


# --------------------------------------------------------------------------
# bias and variance constants

BIASVAR_COLUMNS = ["omega", "m", "law", "c_bias", "c_var"]


def _sketch_operator(A, gamma):
    """``Gamma (A Gamma)^+`` as a dense ``p x n`` matrix."""
    fac = linalg.svd(A @ gamma)
    if not fac.s[-1] > linalg.RANK_TOL * fac.s[0]:
        raise linalg.LinAlgFailure("sketched matrix is rank deficient")
    return (gamma @ fac.v / fac.s) @ fac.u.T


def _nested_embedding(law: Law, gaussians: np.ndarray, m: int) -> np.ndarray:
    """``law`` embedding built from the first ``m`` columns of a standard Gaussian matrix.

    Gram-Schmidt on a column prefix only sees that prefix, so the Haar draw
    is exact for every ``m``; the Gaussian law just rescales.
    """
    z = gaussians[:, :m]
    if law is Law.HAAR:
        return linalg.qr_reduced(z).q
    return z / np.sqrt(m)


def bias_variance_constants(A, A_pinv, rhs, m: int, draws: int, law, seed_path: tuple):
    """Empirical bias and variance constants over ``draws`` embeddings.

    ``rhs`` holds right-hand sides as columns.  Draw ``i`` uses the first
    ``m`` columns of a ``p x p`` Gaussian matrix from ``make_rng(*seed_path, i)``,
    so calls that differ only in ``m`` share their randomness (common random
    numbers keep the curves in ``m`` smooth).  Returns ``(c_bias, c_var)``,
    each the maximum over right-hand sides of the ratio to ``||A^+ f||^2``.
    """
    p, n = A_pinv.shape
    law = Law(law)
    ops = np.empty((draws, p, n))
    for i in range(draws):
        gaussians = make_rng(*seed_path, i).standard_normal((p, p))
        ops[i] = _sketch_operator(A, _nested_embedding(law, gaussians, m))
    mean_op = ops.mean(axis=0)
    exact = A_pinv @ rhs
    denom = np.sum(exact**2, axis=0)
    bias = np.sum(((mean_op - A_pinv) @ rhs) ** 2, axis=0)
    dev = (ops - mean_op).reshape(draws * p, n)
    # E_i ||(M_i - M) f||^2 = f^T S f with S = sum_i (M_i - M)^T (M_i - M) / draws
    S = dev.T @ dev / draws
    var = np.einsum("ij,ij->j", rhs, S @ rhs)
    return float(np.max(bias / denom)), float(np.max(var / denom))


def biasvar(n: int, p: int, omega_grid, m_grid, gamma_draws: int = 100, rhs_draws: int | None = None, law="haar", seed: int = 0):
    rhs_draws = 4 * n if rhs_draws is None else rhs_draws
    law = Law(law)
    rows = []
    for wi, omega in enumerate(omega_grid):
        A, A_pinv, _ = power_law_matrix(n, p, omega, make_rng(seed, 0, wi))
        rhs = make_rng(seed, 1, wi).standard_normal((n, rhs_draws))
        for m in m_grid:
            cb, cv = bias_variance_constants(A, A_pinv, rhs, m, gamma_draws, law, (seed, 2, wi))
            rows.append({"omega": omega, "m": m, "law": law.value, "c_bias": cb, "c_var": cv})
    return rows


# --------------------------------------------------------------------------
# variance/bias scaling on the synthetic linear system

MSE_COLUMNS = ["table", "m", "q", "dt", "num_steps", "mean_error", "std", "unstable", "slope"]


def mse_scaling(p: int, m: int, q_grid, dt_grid, horizon: float, replicates: int,
                dt_for_q: float | None = None, q_for_dt: int = 1, law="haar",
                include_full: bool = True, seed: int = 0):
    """Error of the randomized trajectory versus ``q`` and ``dt`` for ``J = I``, ``f = -theta``.

    With ``include_full`` the ``dt`` sweep is repeated at ``m = p`` (zero floor).
    """
    problem = LinearProblem(p=p)
    theta0 = make_rng(seed, 0).standard_normal(p)
    rows = []

    def emit(table, mm, rs, slope_key):
        slope = loglog_slope([getattr(r, slope_key) for r in rs], [r.std for r in rs]) \
            if all(r.std > 0 for r in rs) and len(rs) > 1 else float("nan")
        for r in rs:
            rows.append({
                "table": table, "m": mm, "q": r.q, "dt": r.dt, "num_steps": r.num_steps,
                "mean_error": r.mean_error, "std": r.std, "unstable": r.unstable, "slope": slope,
            })

    rq, rdt = mse_scaling_experiment(problem, theta0, m, q_grid, dt_grid, horizon, replicates,
                                     seed=seed, dt_for_q=dt_for_q, q_for_dt=q_for_dt, law=law)
    emit("vs_q", m, rq, "q")
    emit("vs_dt", m, rdt, "dt")
    if include_full:
        _, full = mse_scaling_experiment(problem, theta0, p, [], dt_grid, horizon, min(replicates, 20),
                                         seed=seed, q_for_dt=q_for_dt, law=law)
        emit("full_vs_dt", p, full, "dt")
    return rows


# --------------------------------------------------------------------------
# PDE benchmark sweeps

PDE_COLUMNS = [
    "pde", "method", "param", "replicate", "stable", "failed_step",
    "end_error", "mean_error", "max_condition",
]
PDE_SUMMARY_COLUMNS = [
    "pde", "method", "param", "total_replicates", "unstable_count", "selected",
    "mean_of_selected", "std_of_selected",
]
PDE_TIMING_COLUMNS = ["pde", "method", "param", "replicate", "runtime_seconds", "seconds_per_step"]


def make_pde(name: str, **params):
    if name == "schrodinger":
        return SchrodingerProblem(**params)
    if name in ("allen-cahn", "allen_cahn", "allencahn"):
        return AllenCahnProblem(**params)
    raise ValueError(f"unknown PDE {name!r}")


def method_label(method) -> tuple[str, str]:
    if isinstance(method, Exact):
        return "none", ""
    if isinstance(method, Tikhonov):
        return "tikhonov", repr(method.alpha)
    if isinstance(method, TruncSVD):
        return "tsvd", str(method.r)
    return "sketch", f"m={method.m};q={method.q};law={method.law.value}"


def build_methods(methods, alphas=(), ranks=(), sketch_m=(), sketch_q=(1,), law="haar"):
    out = []
    for name in methods:
        if name == "none":
            out.append(Exact())
        elif name == "tikhonov":
            out += [Tikhonov(a) for a in alphas]
        elif name == "tsvd":
            out += [TruncSVD(r) for r in ranks]
        elif name == "sketch":
            out += [Sketch(m, q, law) for m in sketch_m for q in sketch_q]
        else:
            raise ValueError(f"unknown method {name!r}")
    return out


@dataclass(frozen=True)
class PdeSetup:
    pde: object
    spec: NetworkSpec
    collocation: int
    dt: float
    num_steps: int
    fit: AdamSchedule
    fit_points: int = 2000


def evaluation_steps(horizon: float, dt: float, count: int) -> np.ndarray:
    """Time-step indices closest to ``count`` equidistant test times in ``[0, horizon]``."""
    steps = np.rint(test_times(horizon, count) / dt).astype(np.int64)
    return np.unique(steps)


def fitted_initial_parameters(setup: PdeSetup, replicate: int, seed: int, checkpoint_dir=None):
    """Fit (or reload) the initial network for one replicate."""
    path = None
    fit_seed = int(np.random.SeedSequence(seed, spawn_key=(3, replicate)).generate_state(1)[0])
    if checkpoint_dir is not None:
        f = setup.fit
        tag = f"{setup.pde.name}_{setup.spec.digest()}_{f.iters}_{f.lr_max!r}_{f.lr_min!r}_{setup.fit_points}"
        path = os.path.join(checkpoint_dir, f"params_{tag}_seed{fit_seed}.txt")
        if os.path.exists(path):
            _, theta, _ = load_params(path, setup.spec)
            return theta
    pde = setup.pde
    xs = pde.left + pde.length * np.arange(setup.fit_points) / setup.fit_points
    theta, _ = fit_initial(setup.spec, xs, pde.initial(xs), setup.fit, fit_seed)
    if path is not None:
        save_params(path, setup.spec, theta, fit_seed)
    return theta


def reference_for(setup: PdeSetup, steps, grid_size: int, rk: AdaptiveRkConfig, checkpoint_dir=None):
    pde = setup.pde
    times = steps * setup.dt
    path = None
    if checkpoint_dir is not None:
        blob = f"{pde!r}|{grid_size}|{rk.rel_tol!r}|{rk.abs_tol!r}|".encode() + times.tobytes()
        key = hashlib.sha256(blob).hexdigest()[:12]
        path = os.path.join(checkpoint_dir, f"reference_{pde.name}_N{grid_size}_{key}.csv")
        if os.path.exists(path):
            ref = load_reference(path)
            if ref.times.shape == times.shape and np.allclose(ref.times, times, rtol=0, atol=1e-12):
                return ref
    grid = grid_for(pde, grid_size)
    u0 = pde.initial(grid.points)
    u0 = u0[:, 0] + 1j * u0[:, 1] if pde.is_complex else u0[:, 0]
    ref = reference_solve(pde, u0, rk, times, grid)
    if path is not None:
        save_reference(path, ref)
    return ref


def run_replicate(setup: PdeSetup, method, theta0, ref, steps, replicate: int, seed: int, test_count: int):
    """One Neural Galerkin trajectory scored against the reference."""
    pde = setup.pde
    problem = make_increment_problem(pde, setup.spec, CollocationGrid.equidistant(pde.left, pde.length, setup.collocation))
    root = int(np.random.SeedSequence(seed, spawn_key=(4, replicate)).generate_state(1)[0])
    cfg = StepperConfig(setup.dt, setup.num_steps, root_seed=root)
    rec = integrate(problem, theta0, method, cfg, record_steps=steps)
    xs = test_points(pde.left, pde.length, test_count)
    errors = []
    for k, theta in zip(rec.steps, rec.thetas):
        ng = forward(NeuralField(setup.spec, theta), xs)
        if pde.is_complex:
            ng = ng[:, 0] + 1j * ng[:, 1]
        else:
            ng = ng[:, 0]
        errors.append(relative_error_at(ng, evaluate_reference(ref, k * setup.dt, xs)))
    report = ErrorReport(rec.times, np.array(errors), rec.runtime_seconds, rec.stable, replicate)
    max_cond = max((d.condition for d in rec.diagnostics), default=float("nan"))
    return report, rec, max_cond


def _job(args):
    setup, method, theta0, ref, steps, r, seed, test_count = args
    report, rec, max_cond = run_replicate(setup, method, theta0, ref, steps, r, seed, test_count)
    return report, rec.failed_step, len(rec.diagnostics), max_cond


def pde_sweep(setup: PdeSetup, methods, replicates: int, seed: int = 0, reference_size: int = 256,
              rk: AdaptiveRkConfig | None = None, test_count: int = 500, time_count: int = 200,
              checkpoint_dir=None, workers: int = 1):
    """Run every method on every replicate; returns ``(rows, summary_rows, timing_rows)``.

    Replicate ``r`` starts from the same fitted network for every method, so
    methods are compared on identical initial conditions.  Unstable runs are
    scored over the steps they reached and flagged.
    """
    rk = rk or AdaptiveRkConfig()
    steps = evaluation_steps(setup.dt * setup.num_steps, setup.dt, time_count)
    ref = reference_for(setup, steps, reference_size, rk, checkpoint_dir)
    thetas = [fitted_initial_parameters(setup, r, seed, checkpoint_dir) for r in range(replicates)]
    jobs = [(setup, meth, thetas[r], ref, steps, r, seed, test_count) for meth in methods for r in range(replicates)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]

    rows, summaries, timing = [], [], []
    by_method: dict[int, list] = {}
    for (_, meth, _, _, _, r, _, _), (report, failed, done, max_cond) in zip(jobs, results):
        name, param = method_label(meth)
        by_method.setdefault(id(meth), [meth, []])[1].append(report)
        stable = report.stable and report.times.size == steps.size
        rows.append({
            "pde": setup.pde.name, "method": name, "param": param, "replicate": r,
            "stable": int(stable), "failed_step": "" if failed is None else failed,
            "end_error": report.end_time_error if stable else float("nan"),
            "mean_error": report.mean_error, "max_condition": max_cond,
        })
        timing.append({
            "pde": setup.pde.name, "method": name, "param": param, "replicate": r,
            "runtime_seconds": report.runtime_seconds,
            "seconds_per_step": report.runtime_seconds / max(done, 1),
        })
    for meth, reports in by_method.values():
        name, param = method_label(meth)
        s = summarize_replicates(reports)
        summaries.append({
            "pde": setup.pde.name, "method": name, "param": param,
            "total_replicates": s.total_replicates, "unstable_count": s.unstable_count,
            "selected": " ".join(map(str, s.selected)),
            "mean_of_selected": s.mean_of_selected, "std_of_selected": s.std_of_selected,
        })
    return rows, summaries, timing
