"""Ensemble studies for the penalized scheme.

Estimator conventions (per penalization level n, horizon T, M paths):

    est_sup4         E[ sup_t |X|_H^4 ]
    est_weighted_pen n * E[ int_0^T |X|_H^2 <X, X - pi(X)>_H dt ]
    est_var2         E[ (n * int_0^T |X - pi(X)|_H dt)^2 ]
    est_pen_l2       n * E[ int_0^T |X - pi(X)|_H^2 dt ]
    est_v_energy     E[ int_0^T ||X||_V^alpha dt ]
    est_pen_sup4     E[ sup_t |X - pi(X)|_H^4 ]

Radial identities make every integrand a function of r = |X|_H alone:
|X - pi(X)| = (r-1)^+ and <X, X - pi(X)> = r (r-1)^+.  Time integrals use the
left-endpoint rule on the scheme grid, matching the stepper's own quadrature.

Coupling: every penalization level consumes the same per-path Brownian matrix
(common random numbers), which is what makes the Cauchy and oracle studies
meaningful at modest path counts.

Determinism: paths are split into at most 10 contiguous batches; batches are
the unit of (optional) parallelism and are reduced in index order, so results
are byte-identical for any thread count.  Standard errors are the standard
deviation of batch means over sqrt(#batches).

A path whose state turns non-finite or leaves |x|_H <= 1e6 is counted as a
failure for that level, pinned to zero, and excluded from all statistics.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .hilbert import norm_h, norm_v
from .models import ModelSpec, NoiseSpec, make_oracle_1d
from .penalize import SchemeConfig, brownian_increments, simulate_path, step_penalized

__all__ = [
    "EstimateRow",
    "EstimateReport",
    "CauchyRow",
    "CauchyReport",
    "UniquenessReport",
    "OracleRow",
    "OracleReport",
    "run_estimates",
    "cauchy_study",
    "uniqueness_check",
    "oracle_compare_1d",
    "max_min_ratio",
    "count_inversions",
    "trend_decreasing",
    "format_value",
    "write_csv",
]

_MAX_BATCHES = 10
_FAILURE_NORM = 1e6


# --------------------------------------------------------------------------
# CSV plumbing (shared by the report types and the CLI)


def format_value(x) -> str:
    """Canonical cell text: strings verbatim, integers verbatim, floats at 17
    significant digits."""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path, header, rows) -> None:
    """Write rows with an exact header, LF endings, no quoting or padding."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(x) for x in row))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


# --------------------------------------------------------------------------
# report types


@dataclass(frozen=True)
class EstimateRow:
    n: float
    est_sup4: float
    se_sup4: float
    est_weighted_pen: float
    se_weighted_pen: float
    est_var2: float
    se_var2: float
    est_pen_l2: float
    se_pen_l2: float
    est_v_energy: float
    se_v_energy: float
    est_pen_sup4: float
    se_pen_sup4: float
    failures: int

    def as_tuple(self):
        return (
            self.n,
            self.est_sup4,
            self.se_sup4,
            self.est_weighted_pen,
            self.se_weighted_pen,
            self.est_var2,
            self.se_var2,
            self.est_pen_l2,
            self.se_pen_l2,
            self.est_v_energy,
            self.se_v_energy,
            self.est_pen_sup4,
            self.se_pen_sup4,
            self.failures,
        )


ESTIMATES_HEADER = (
    "n",
    "est_sup4",
    "se_sup4",
    "est_weighted_pen",
    "se_weighted_pen",
    "est_var2",
    "se_var2",
    "est_pen_l2",
    "se_pen_l2",
    "est_v_energy",
    "se_v_energy",
    "est_pen_sup4",
    "se_pen_sup4",
    "failures",
)


@dataclass(frozen=True)
class EstimateReport:
    rows: tuple[EstimateRow, ...]

    header = ESTIMATES_HEADER

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def to_csv(self, path) -> None:
        write_csv(path, self.header, [r.as_tuple() for r in self.rows])


CAUCHY_HEADER = ("n_lo", "n_hi", "est_supdiff2", "se")


@dataclass(frozen=True)
class CauchyRow:
    n_lo: float
    n_hi: float
    est_supdiff2: float
    se: float


@dataclass(frozen=True)
class CauchyReport:
    rows: tuple[CauchyRow, ...]

    header = CAUCHY_HEADER

    def diffs(self) -> np.ndarray:
        return np.array([r.est_supdiff2 for r in self.rows])

    def ses(self) -> np.ndarray:
        return np.array([r.se for r in self.rows])

    def to_csv(self, path) -> None:
        write_csv(
            path, self.header, [(r.n_lo, r.n_hi, r.est_supdiff2, r.se) for r in self.rows]
        )


@dataclass(frozen=True)
class UniquenessReport:
    perturbation: float
    sup_diff: float
    terminal_diff: float
    stability_factor: float  # sup_diff / perturbation (0 when perturbation is 0)


ORACLE_HEADER = (
    "n",
    "est_supdiff",
    "se_supdiff",
    "est_tv_diff",
    "se_tv_diff",
    "est_terminal_diff",
)


@dataclass(frozen=True)
class OracleRow:
    n: float
    est_supdiff: float
    se_supdiff: float
    est_tv_diff: float
    se_tv_diff: float
    est_terminal_diff: float


@dataclass(frozen=True)
class OracleReport:
    rows: tuple[OracleRow, ...]

    header = ORACLE_HEADER

    def supdiffs(self) -> np.ndarray:
        return np.array([r.est_supdiff for r in self.rows])

    def to_csv(self, path) -> None:
        write_csv(
            path,
            self.header,
            [
                (r.n, r.est_supdiff, r.se_supdiff, r.est_tv_diff, r.se_tv_diff, r.est_terminal_diff)
                for r in self.rows
            ],
        )


# --------------------------------------------------------------------------
# batching helpers


def _batches(paths: int) -> list[np.ndarray]:
    if paths < 2:
        raise ValueError("need at least 2 paths for batch-mean standard errors")
    parts = np.array_split(np.arange(paths), min(_MAX_BATCHES, paths))
    return [p for p in parts if p.size]


def _brownian_batch(seed: int, indices: np.ndarray, modes: int, steps: int, dt: float):
    return np.stack(
        [brownian_increments(seed, int(i), modes, steps, dt) for i in indices]
    )


def _se_from_batch_means(means: list[float]) -> float:
    vals = np.array([m for m in means if np.isfinite(m)])
    if vals.size < 2:
        return 0.0
    return float(np.std(vals, ddof=1) / np.sqrt(vals.size))


def _run_batched(worker, batches, threads):
    if threads is not None and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(worker, batches))
    return [worker(b) for b in batches]


def _mean_and_se(per_path: list[np.ndarray], alive: list[np.ndarray]):
    """Overall mean over surviving paths + batch-mean standard error."""
    kept = np.concatenate([v[a] for v, a in zip(per_path, alive)])
    if kept.size == 0:
        return float("nan"), float("nan")
    means = [float(np.mean(v[a])) for v, a in zip(per_path, alive) if np.any(a)]
    return float(np.mean(kept)), _se_from_batch_means(means)


# --------------------------------------------------------------------------
# fused penalized ensembles


def _step_ensemble(model, noise, cfg, states, t, dW_j, alive):
    """One explicit/splitting move for a whole batch; returns (states, alive)."""
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        new, _dl = step_penalized(states, t, cfg, model, dW_j, noise=noise, check=False)
        bad = ~np.all(np.isfinite(new), axis=-1) | (norm_h(model.space, new) > _FAILURE_NORM)
    alive = alive & ~bad
    new[~alive] = 0.0
    return new, alive


def _penalized_batch_stats(model, noise, cfg, x0, dW):
    """Per-path estimator ingredients for one batch at one penalization level."""
    space = model.space
    m_b = dW.shape[0]
    dt = cfg.dt
    states = np.repeat(x0[None, :], m_b, axis=0)
    alive = np.ones(m_b, dtype=bool)
    r0 = norm_h(space, states)
    sup_r = r0.copy()
    sup_ex = np.maximum(r0 - 1.0, 0.0)
    int_pen = np.zeros(m_b)
    int_pen_sq = np.zeros(m_b)
    int_weighted = np.zeros(m_b)
    int_v = np.zeros(m_b)
    for j in range(cfg.steps):
        r = norm_h(space, states)
        ex = np.maximum(r - 1.0, 0.0)
        sup_r = np.maximum(sup_r, r)
        sup_ex = np.maximum(sup_ex, ex)
        int_pen += dt * ex
        int_pen_sq += dt * ex * ex
        int_weighted += dt * r**3 * ex
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            int_v += dt * norm_v(space, states) ** model.alpha
        states, alive = _step_ensemble(model, noise, cfg, states, j * dt, dW[:, j], alive)
    r = norm_h(space, states)
    sup_r = np.maximum(sup_r, r)
    sup_ex = np.maximum(sup_ex, np.maximum(r - 1.0, 0.0))
    return {
        "sup4": sup_r**4,
        "weighted": int_weighted,
        "var_base": int_pen,
        "pen_l2": int_pen_sq,
        "v_energy": int_v,
        "pen_sup4": sup_ex**4,
        "alive": alive,
    }


def run_estimates(
    model: ModelSpec,
    noise: NoiseSpec | None,
    cfg: SchemeConfig,
    n_grid,
    paths: int,
    *,
    x0: np.ndarray,
    threads: int | None = None,
) -> EstimateReport:
    """Moment/variation estimators over a penalization grid on coupled noise."""
    noise = model.noise if noise is None else noise
    n_grid = [float(n) for n in n_grid]
    if not n_grid:
        raise ValueError("n_grid must be nonempty")
    x0 = model.space.check_coeffs(x0)
    batches = _batches(paths)

    def worker(indices):
        dW = _brownian_batch(cfg.seed, indices, noise.mode_count, cfg.steps, cfg.dt)
        return [_penalized_batch_stats(model, noise, cfg.with_n(n), x0, dW) for n in n_grid]

    per_batch = _run_batched(worker, batches, threads)

    rows = []
    for i, n in enumerate(n_grid):
        stats = [b[i] for b in per_batch]
        alive = [s["alive"] for s in stats]
        failures = int(sum(np.count_nonzero(~a) for a in alive))
        est_sup4, se_sup4 = _mean_and_se([s["sup4"] for s in stats], alive)
        w_est, w_se = _mean_and_se([s["weighted"] for s in stats], alive)
        v2_est, v2_se = _mean_and_se([(n * s["var_base"]) ** 2 for s in stats], alive)
        l2_est, l2_se = _mean_and_se([s["pen_l2"] for s in stats], alive)
        ve_est, ve_se = _mean_and_se([s["v_energy"] for s in stats], alive)
        ps_est, ps_se = _mean_and_se([s["pen_sup4"] for s in stats], alive)
        rows.append(
            EstimateRow(
                n=n,
                est_sup4=est_sup4,
                se_sup4=se_sup4,
                est_weighted_pen=n * w_est,
                se_weighted_pen=n * w_se,
                est_var2=v2_est,
                se_var2=v2_se,
                est_pen_l2=n * l2_est,
                se_pen_l2=n * l2_se,
                est_v_energy=ve_est,
                se_v_energy=ve_se,
                est_pen_sup4=ps_est,
                se_pen_sup4=ps_se,
                failures=failures,
            )
        )
    return EstimateReport(rows=tuple(rows))


def cauchy_study(
    model: ModelSpec,
    noise: NoiseSpec | None,
    cfg: SchemeConfig,
    n_grid,
    paths: int,
    *,
    x0: np.ndarray,
    threads: int | None = None,
) -> CauchyReport:
    """E[sup_t |X^n_lo - X^n_hi|_H^2] for consecutive levels on coupled noise."""
    noise = model.noise if noise is None else noise
    n_grid = [float(n) for n in n_grid]
    if len(n_grid) < 2:
        raise ValueError("cauchy study needs at least 2 penalization levels")
    x0 = model.space.check_coeffs(x0)
    batches = _batches(paths)
    space = model.space
    cfgs = [cfg.with_n(n) for n in n_grid]

    def worker(indices):
        dW = _brownian_batch(cfg.seed, indices, noise.mode_count, cfg.steps, cfg.dt)
        m_b = dW.shape[0]
        states = [np.repeat(x0[None, :], m_b, axis=0) for _ in n_grid]
        alive = np.ones(m_b, dtype=bool)
        sup_diff = np.zeros((len(n_grid) - 1, m_b))
        for j in range(cfg.steps):
            for i, cfg_n in enumerate(cfgs):
                states[i], alive = _step_ensemble(
                    model, noise, cfg_n, states[i], j * cfg.dt, dW[:, j], alive
                )
            for i in range(len(n_grid) - 1):
                d = norm_h(space, states[i] - states[i + 1])
                sup_diff[i] = np.maximum(sup_diff[i], d)
        return sup_diff**2, alive

    per_batch = _run_batched(worker, batches, threads)
    rows = []
    for i in range(len(n_grid) - 1):
        vals = [sd[i] for sd, _ in per_batch]
        alive = [a for _, a in per_batch]
        est, se = _mean_and_se(vals, alive)
        rows.append(CauchyRow(n_lo=n_grid[i], n_hi=n_grid[i + 1], est_supdiff2=est, se=se))
    return CauchyReport(rows=tuple(rows))


def uniqueness_check(
    model: ModelSpec,
    noise: NoiseSpec | None,
    cfg: SchemeConfig,
    x0: np.ndarray,
    perturbation: float,
) -> UniquenessReport:
    """Two runs on identical noise, initial states `perturbation` apart in H."""
    if perturbation < 0:
        raise ValueError("perturbation must be nonnegative")
    noise = model.noise if noise is None else noise
    space = model.space
    x0 = space.check_coeffs(x0)
    r0 = float(norm_h(space, x0))
    if perturbation == 0.0:
        x0_other = x0.copy()
    elif r0 > 0:
        x0_other = x0 * (1.0 - perturbation / r0)  # radial shift of exactly that H-norm
    else:
        e0 = np.zeros_like(x0)
        e0[0] = perturbation / np.sqrt(space.h_weights[0])
        x0_other = e0
    first = simulate_path(model, cfg, x0, noise=noise, path_index=0)
    second = simulate_path(model, cfg, x0_other, noise=noise, path_index=0)
    diff = norm_h(space, first.states - second.states)
    sup_diff = float(np.max(diff))
    terminal = float(diff[-1])
    factor = sup_diff / perturbation if perturbation > 0 else 0.0
    return UniquenessReport(
        perturbation=float(perturbation),
        sup_diff=sup_diff,
        terminal_diff=terminal,
        stability_factor=factor,
    )


# --------------------------------------------------------------------------
# 1-D oracle: projected (Skorokhod) Euler with clamp displacement as local time


def oracle_compare_1d(
    kappa: float,
    sigma: float,
    cfg: SchemeConfig,
    n_grid,
    paths: int,
    *,
    threads: int | None = None,
) -> OracleReport:
    """Penalized scalar runs vs the clamped Euler scheme on the same noise."""
    n_grid = [float(n) for n in n_grid]
    if not n_grid:
        raise ValueError("n_grid must be nonempty")
    bundle = make_oracle_1d(kappa=kappa, sigma=sigma)
    model = bundle.model
    noise = model.noise
    x0 = bundle.x0
    dt = cfg.dt
    batches = _batches(paths)
    cfgs = [cfg.with_n(n) for n in n_grid]

    def worker(indices):
        dW = _brownian_batch(cfg.seed, indices, 1, cfg.steps, dt)
        m_b = dW.shape[0]
        # clamp oracle is penalization-free: one pass per batch
        x_or = np.full(m_b, float(x0[0]))
        oracle_states = np.empty((cfg.steps + 1, m_b))
        oracle_states[0] = x_or
        tv_or = np.zeros(m_b)
        for j in range(cfg.steps):
            free = x_or + dt * kappa * x_or + sigma * dW[:, j, 0]
            x_or = np.clip(free, -1.0, 1.0)
            tv_or += np.abs(free - x_or)
            oracle_states[j + 1] = x_or
        out = []
        for cfg_n in cfgs:
            states = np.repeat(x0[None, :], m_b, axis=0)
            alive = np.ones(m_b, dtype=bool)
            sup_diff = np.zeros(m_b)
            tv_pen = np.zeros(m_b)
            for j in range(cfg.steps):
                new, dl = step_penalized(states, j * dt, cfg_n, model, dW[:, j], check=False)
                tv_pen += np.abs(dl[:, 0])
                states = new
                sup_diff = np.maximum(sup_diff, np.abs(states[:, 0] - oracle_states[j + 1]))
            out.append(
                {
                    "supdiff": sup_diff,
                    "tv_diff": np.abs(tv_pen - tv_or),
                    "terminal": np.abs(states[:, 0] - oracle_states[-1]),
                    "alive": alive,
                }
            )
        return out

    per_batch = _run_batched(worker, batches, threads)
    rows = []
    for i, n in enumerate(n_grid):
        stats = [b[i] for b in per_batch]
        alive = [s["alive"] for s in stats]
        sd_est, sd_se = _mean_and_se([s["supdiff"] for s in stats], alive)
        tv_est, tv_se = _mean_and_se([s["tv_diff"] for s in stats], alive)
        term_est, _ = _mean_and_se([s["terminal"] for s in stats], alive)
        rows.append(
            OracleRow(
                n=n,
                est_supdiff=sd_est,
                se_supdiff=sd_se,
                est_tv_diff=tv_est,
                se_tv_diff=tv_se,
                est_terminal_diff=term_est,
            )
        )
    return OracleReport(rows=tuple(rows))


# --------------------------------------------------------------------------
# trend helpers for the Monte Carlo acceptance checks


def max_min_ratio(values) -> float:
    vals = np.asarray(values, dtype=float)
    lo = float(np.min(vals))
    if lo <= 0:
        return float("inf")
    return float(np.max(vals) / lo)


def count_inversions(values) -> int:
    """Number of consecutive rises in a sequence expected to decrease."""
    vals = np.asarray(values, dtype=float)
    return int(np.count_nonzero(np.diff(vals) > 0))


def trend_decreasing(values, ses=None, allowed_inversions: int = 1) -> bool:
    """Decreasing trend, tolerating `allowed_inversions` rises; a rise within
    the combined standard errors of its endpoints is not counted."""
    vals = np.asarray(values, dtype=float)
    slack = np.zeros(vals.size - 1)
    if ses is not None:
        se = np.asarray(ses, dtype=float)
        slack = se[:-1] + se[1:]
    rises = np.count_nonzero(np.diff(vals) > slack)
    return int(rises) <= allowed_inversions
