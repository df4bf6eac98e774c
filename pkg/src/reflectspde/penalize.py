"""Time discretization of the penalized dynamics with reflection recording.

The continuous model adds a penalty drift -n (X - pi(X)) to the SPDE; its
running integral L^n(t) = -n \\int_0^t (X^n - pi(X^n)) ds approximates the
reflection process.  Two steppers are provided:

explicit
    Euler-Maruyama transcription; the penalty increment is evaluated at the
    pre-step state, so dL_j = -n dt (X_j - pi(X_j)) exactly and the recorded
    variation is n dt sum |X_j - pi(X_j)|.  Requires n dt <= 1.
splitting
    Drift+noise move to an intermediate state, then the exact flow of
    r' = -n (r - 1)_+ applied to the H radius; stable for arbitrary n dt.

Models with a stiff diagonal linear part declare linear_symbol; the
drift+noise move then uses the Lawson integrating factor
exp(symbol dt) * (x + dt * nonstiff(x)), which is exact on the linear flow.
All stepping code broadcasts over leading axes, so a single path (m,) and an
ensemble (M, m) share one code path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BlowUpError, ConfigurationError
from .hilbert import SpaceSpec, norm_h, norm_v, penalty_gap
from .models import ModelSpec, NoiseSpec, apply_noise

__all__ = [
    "SchemeConfig",
    "PathRecord",
    "brownian_increments",
    "one_step_move",
    "step_penalized",
    "simulate_path",
]

# norm beyond which a trajectory is declared divergent
BLOWUP_NORM = 1e10


@dataclass(frozen=True)
class SchemeConfig:
    dt: float
    steps: int
    n: float
    method: str = "explicit"
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ConfigurationError("dt must be positive and finite")
        if self.steps < 1:
            raise ConfigurationError("steps must be >= 1")
        if not (np.isfinite(self.n) and self.n >= 0):
            raise ConfigurationError("penalization level n must be >= 0")
        if self.method not in ("explicit", "splitting"):
            raise ConfigurationError(f"unknown method {self.method!r}")
        if self.method == "explicit" and self.n * self.dt > 1.0 + 1e-12:
            raise ConfigurationError(
                f"explicit stepper needs n*dt <= 1 (got {self.n * self.dt:g}); "
                "use method=splitting for large n"
            )
        if self.seed < 0:
            raise ConfigurationError("seed must be nonnegative")

    @property
    def t_final(self) -> float:
        return self.dt * self.steps

    def with_n(self, n: float) -> "SchemeConfig":
        return SchemeConfig(self.dt, self.steps, n, self.method, self.seed)


@dataclass(frozen=True, eq=False)
class PathRecord:
    """One trajectory of (X^n, L^n) plus left-endpoint quadrature totals."""

    times: np.ndarray  # (steps+1,)
    states: np.ndarray  # (steps+1, m)
    l_increments: np.ndarray  # (steps, m)
    int_pen: float  # int |X - pi(X)|_H dt
    int_pen_sq: float  # int |X - pi(X)|_H^2 dt
    int_weighted_pen: float  # int |X|_H^2 (X, X - pi(X)) dt
    int_v_energy: float  # int ||X||_V^alpha dt
    sup_h: float
    sup_pen: float
    n: float
    method: str


def brownian_increments(
    seed: int, path_index: int, mode_count: int, steps: int, dt: float
) -> np.ndarray:
    """(steps, mode_count) Gaussian increments of variance dt.

    Counter-based generator keyed on (seed, path_index); draws are laid out
    (step, mode) row-major, so every penalization level replays the identical
    increments for a given path — the common-random-numbers coupling.
    """
    if mode_count < 1 or steps < 1:
        raise ConfigurationError("mode_count and steps must be >= 1")
    bits = np.random.Philox(np.random.SeedSequence((int(seed), int(path_index))))
    rng = np.random.Generator(bits)
    return np.sqrt(dt) * rng.standard_normal((steps, mode_count))


def one_step_move(
    model: ModelSpec,
    t: float,
    dt: float,
    state: np.ndarray,
    dW: np.ndarray,
    noise: NoiseSpec | None = None,
) -> np.ndarray:
    """Drift+noise move (no penalty): the x-tilde of the splitting stepper."""
    state = np.asarray(state, dtype=float)
    if model.linear_symbol is not None:
        damp = np.exp(model.linear_symbol * dt)
        drift_incr = damp * (state + dt * model.nonstiff_drift(t, state)) - state
    else:
        drift_incr = dt * model.state_rhs(t, state)
    return state + drift_incr + apply_noise(noise or model.noise, state, dW)


def step_penalized(
    state: np.ndarray,
    t: float,
    cfg: SchemeConfig,
    model: ModelSpec,
    dW: np.ndarray,
    noise: NoiseSpec | None = None,
    check: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Advance one step; returns (state', dL).

    check=True raises BlowUpError on a non-finite or divergent state';
    ensemble drivers pass check=False and handle bad rows themselves.
    """
    space = model.space
    x_tilde = one_step_move(model, t, cfg.dt, state, dW, noise)
    if cfg.method == "explicit":
        gap, _ = penalty_gap(space, state)
        dL = (-cfg.n * cfg.dt) * gap
        new = x_tilde + dL
    else:
        r = norm_h(space, x_tilde)
        excess = np.maximum(r - 1.0, 0.0)
        scale = (1.0 + excess * np.exp(-cfg.n * cfg.dt)) / np.maximum(r, 1.0)
        new = x_tilde * scale[..., None]
        dL = new - x_tilde
    if check:
        rn = norm_h(space, new)
        if not np.all(np.isfinite(rn)) or np.any(rn > BLOWUP_NORM):
            raise BlowUpError(-1, t + cfg.dt, float(np.max(rn)))
    return new, dL


def simulate_path(
    model: ModelSpec,
    cfg: SchemeConfig,
    x0: np.ndarray,
    noise: NoiseSpec | None = None,
    path_index: int = 0,
    dW: np.ndarray | None = None,
) -> PathRecord:
    """Iterate the stepper over the grid and fill all accumulators.

    Deterministic given (cfg.seed, path_index); dW may be supplied explicitly
    for coupling experiments and must then have shape (steps, K).
    """
    space = model.space
    noise = noise or model.noise
    x0 = space.check_coeffs(np.asarray(x0, dtype=float))
    if x0.ndim != 1:
        raise ConfigurationError("simulate_path takes a single initial state")
    if norm_h(space, x0) > 1.0 + 1e-12:
        raise ConfigurationError("initial state must lie in the closed unit ball")
    if dW is None:
        dW = brownian_increments(cfg.seed, path_index, noise.mode_count, cfg.steps, cfg.dt)
    dW = np.asarray(dW, dtype=float)
    if dW.shape != (cfg.steps, noise.mode_count):
        raise ConfigurationError(
            f"dW must have shape {(cfg.steps, noise.mode_count)}, got {dW.shape}"
        )

    m = space.n_coeffs
    states = np.empty((cfg.steps + 1, m))
    l_increments = np.empty((cfg.steps, m))
    states[0] = x0
    x = x0
    for j in range(cfg.steps):
        try:
            x, dL = step_penalized(x, j * cfg.dt, cfg, model, dW[j], noise)
        except BlowUpError as err:
            raise BlowUpError(j + 1, (j + 1) * cfg.dt, err.h_norm) from None
        states[j + 1] = x
        l_increments[j] = dL

    r = norm_h(space, states)
    excess = np.maximum(r - 1.0, 0.0)
    left_r = r[:-1]
    left_e = excess[:-1]
    dt = cfg.dt
    return PathRecord(
        times=dt * np.arange(cfg.steps + 1),
        states=states,
        l_increments=l_increments,
        int_pen=float(dt * np.sum(left_e)),
        int_pen_sq=float(dt * np.sum(left_e**2)),
        # |X|^2 (X, X - pi(X)) = r^3 (r-1)_+ for the radial gap
        int_weighted_pen=float(dt * np.sum(left_r**3 * left_e)),
        int_v_energy=float(dt * np.sum(norm_v(space, states[:-1]) ** space.alpha)),
        sup_h=float(np.max(r)),
        sup_pen=float(np.max(excess)),
        n=cfg.n,
        method=cfg.method,
    )
