"""Geometry of the closed unit ball in a (weighted) coefficient Hilbert space.

States are coefficient arrays of shape ``(..., m)`` against a fixed
orthonormal-in-H basis; the H inner product is a weighted dot product so a
single code path covers plain L^2-type spaces (unit weights) and Sobolev-type
spaces (polynomial weights).  All operations broadcast over leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DimensionMismatchError

__all__ = [
    "SpaceSpec",
    "SpectralField",
    "inner_h",
    "norm_h",
    "norm_v",
    "project_ball",
    "penalty_gap",
    "distance_to_ball",
]


@dataclass(frozen=True, eq=False)
class SpaceSpec:
    """Coefficient-space description of a Gelfand triple V ⊂ H ⊂ V*.

    dimension / modes
        Spatial dimension of the torus (1 or 3) and retained basis functions
        per dimension; bookkeeping only — all arithmetic runs on the flat
        coefficient axis of length ``n_coeffs``.
    h_weights
        Diagonal of the H inner product, shape (m,).  Strictly positive.
    v_weights
        Diagonal of the squared V norm when V is itself a weighted l2 space
        (alpha = 2); None when the V norm is not quadratic.
    alpha
        Coercivity exponent of the model family living on this space; the
        V energy integrated along paths is ``norm_v ** alpha``.
    v_norm_fn
        Override for non-quadratic V norms (e.g. W^{1,p}); takes coefficient
        arrays (..., m) and returns norms (...).  Exactly one of v_weights /
        v_norm_fn must be set.
    wavenumbers
        Optional per-coordinate wavenumber bookkeeping for spectral models.
    transform
        Optional grid transform object (opaque here; models use it).
    """

    label: str
    dimension: int
    modes: int
    h_weights: np.ndarray
    v_weights: np.ndarray | None
    alpha: float
    v_norm_fn: Callable[[np.ndarray], np.ndarray] | None = None
    wavenumbers: np.ndarray | None = None
    transform: object | None = None

    def __post_init__(self):
        if self.dimension not in (1, 3):
            raise ConfigurationError("dimension must be 1 or 3")
        if self.modes < 1:
            raise ConfigurationError("modes must be positive")
        w = np.asarray(self.h_weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ConfigurationError("h_weights must be a non-empty 1-D array")
        if not np.all(np.isfinite(w)) or not np.all(w > 0):
            raise ConfigurationError("h_weights must be strictly positive and finite")
        object.__setattr__(self, "h_weights", w)
        if self.v_weights is not None:
            vw = np.asarray(self.v_weights, dtype=float)
            if vw.shape != w.shape:
                raise ConfigurationError("v_weights must match h_weights in shape")
            if not np.all(np.isfinite(vw)) or not np.all(vw > 0):
                raise ConfigurationError("v_weights must be strictly positive and finite")
            object.__setattr__(self, "v_weights", vw)
        if (self.v_weights is None) == (self.v_norm_fn is None):
            raise ConfigurationError("exactly one of v_weights / v_norm_fn must be given")
        if not self.alpha > 1:
            raise ConfigurationError("alpha must exceed 1")

    @property
    def n_coeffs(self) -> int:
        return self.h_weights.shape[0]

    @property
    def embedding_const(self) -> float:
        """c with norm_v >= c * norm_h, exact for quadratic V norms."""
        if self.v_weights is None:
            return float("nan")
        return float(np.sqrt(np.min(self.v_weights / self.h_weights)))

    def check_coeffs(self, coeffs: np.ndarray) -> np.ndarray:
        arr = np.asarray(coeffs, dtype=float)
        if arr.ndim == 0 or arr.shape[-1] != self.n_coeffs:
            raise DimensionMismatchError(
                f"expected trailing axis of size {self.n_coeffs}, got shape {arr.shape}"
            )
        return arr


def inner_h(space: SpaceSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """H inner product, broadcasting over leading axes."""
    x = space.check_coeffs(x)
    y = space.check_coeffs(y)
    return np.sum(space.h_weights * x * y, axis=-1)


def norm_h(space: SpaceSpec, x: np.ndarray) -> np.ndarray:
    x = space.check_coeffs(x)
    return np.sqrt(np.sum(space.h_weights * x * x, axis=-1))


def norm_v(space: SpaceSpec, x: np.ndarray) -> np.ndarray:
    x = space.check_coeffs(x)
    if space.v_norm_fn is not None:
        return np.asarray(space.v_norm_fn(x), dtype=float)
    return np.sqrt(np.sum(space.v_weights * x * x, axis=-1))


def _ball_scale(space: SpaceSpec, x: np.ndarray) -> np.ndarray:
    r = norm_h(space, x)
    return 1.0 / np.maximum(r, 1.0)


def project_ball(space: SpaceSpec, x: np.ndarray) -> np.ndarray:
    """Metric projection onto the closed unit ball: identity inside, radial
    rescale outside.  Points on the sphere are fixed."""
    x = space.check_coeffs(x)
    return x * _ball_scale(space, x)[..., None]


def penalty_gap(space: SpaceSpec, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(x - project_ball(x), half squared distance to the ball)``.

    The gap is radial: lambda(r) * x with lambda(r) = 1 - 1/max(r, 1), so its
    H norm is exactly (r - 1)_+ and the second output is (r - 1)_+^2 / 2.
    Computing both in one pass keeps the scheme loop cheap.
    """
    x = space.check_coeffs(x)
    r = norm_h(space, x)
    lam = 1.0 - 1.0 / np.maximum(r, 1.0)
    excess = np.maximum(r - 1.0, 0.0)
    return lam[..., None] * x, 0.5 * excess * excess


def distance_to_ball(space: SpaceSpec, x: np.ndarray) -> np.ndarray:
    return np.maximum(norm_h(space, x) - 1.0, 0.0)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """A batch of H elements: coefficients (..., m) tied to their space."""

    coeffs: np.ndarray
    space: SpaceSpec

    def __post_init__(self):
        object.__setattr__(self, "coeffs", self.space.check_coeffs(self.coeffs))

    def norm_h(self) -> np.ndarray:
        return norm_h(self.space, self.coeffs)

    def norm_v(self) -> np.ndarray:
        return norm_v(self.space, self.coeffs)

    def project(self) -> "SpectralField":
        return SpectralField(project_ball(self.space, self.coeffs), self.space)

    def gap(self) -> np.ndarray:
        return penalty_gap(self.space, self.coeffs)[0]
