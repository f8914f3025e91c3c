"""Samplers for the circular, Gaussian and (windowed) sine beta ensembles.

The circular ensemble is drawn through independent Verblunsky coefficients
and the support extraction in :mod:`betabead.opuc`. The Gaussian ensemble is
drawn either by iterating the corners transition from one point (the native
route) or from the tridiagonal matrix model (an independent cross-check).
Sine-beta windows are cut from a randomly shifted lift of a large circular
ensemble, so the mean density on the line is ``1/(2 pi)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Union

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

from .core import (
    TWO_PI,
    CircularConfiguration,
    ConfigurationError,
    FiniteLine,
    PointConfiguration,
    RngLike,
    as_generator,
)
from .opuc import VerblunskySequence, support_angles_batch

# above this size the tridiagonal eigensolver beats batched dense eigvalsh
_DENSE_TRIDIAGONAL_MAX = 48


@dataclass(frozen=True)
class CircularBeta:
    n: int


@dataclass(frozen=True)
class GaussianBeta:
    n: int


@dataclass(frozen=True)
class SineBetaWindow:
    window_halfwidth: float
    approx_n: int | None = None

    @property
    def lift_n(self) -> int:
        if self.approx_n is not None:
            return int(self.approx_n)
        return max(256, math.ceil(8 * self.window_halfwidth))


EnsembleKind = Union[CircularBeta, GaussianBeta, SineBetaWindow]


@dataclass(frozen=True)
class EnsembleSpec:
    kind: EnsembleKind
    beta: float

    def __post_init__(self):
        check_beta(self.beta)
        k = self.kind
        if isinstance(k, (CircularBeta, GaussianBeta)):
            if int(k.n) < 1:
                raise ConfigurationError("n must be at least 1")
        elif isinstance(k, SineBetaWindow):
            check_window(k)
        else:
            raise ConfigurationError(f"unknown ensemble kind {k!r}")


def check_beta(beta: float) -> None:
    if not (beta > 0 and math.isfinite(beta)):
        raise ConfigurationError("beta must be a positive real")


def check_window(spec: SineBetaWindow) -> None:
    w = spec.window_halfwidth
    if not (w > 0 and math.isfinite(w)):
        raise ConfigurationError("window half-width must be positive")
    n = spec.lift_n
    if n < 1:
        raise ConfigurationError("approx_n must be at least 1")
    if TWO_PI * n <= 4 * w:
        raise ConfigurationError("approx_n too small: the window must fit in half a period")


# ------------------------------------------------------------ circular ensemble


def cbe_verblunsky_batch(count: int, n: int, beta: float, rng: RngLike) -> np.ndarray:
    """``(count, n)`` independent coefficient rows.

    ``|alpha_j|**2 ~ Beta(1, beta*(n-j-1)/2)`` with uniform phase for
    ``j <= n-2``; ``alpha_{n-1}`` is uniform on the unit circle.
    """
    if n < 1:
        raise ConfigurationError("n must be at least 1")
    check_beta(beta)
    gen = as_generator(rng)
    out = np.empty((count, n), dtype=complex)
    phase = gen.uniform(0.0, TWO_PI, (count, n))
    if n > 1:
        b = 0.5 * beta * (n - 1 - np.arange(n - 1))
        r2 = gen.beta(1.0, b, (count, n - 1))
        # Beta(1, b) can round to exactly 1 for small b
        r2 = np.minimum(r2, 1.0 - 2.0**-52)
        out[:, :-1] = np.sqrt(r2) * np.exp(1j * phase[:, :-1])
    out[:, -1] = np.exp(1j * phase[:, -1])
    return out


def sample_cbe_verblunsky(n: int, beta: float, rng: RngLike) -> VerblunskySequence:
    return VerblunskySequence(cbe_verblunsky_batch(1, n, beta, rng)[0])


def cbe_batch(count: int, n: int, beta: float, rng: RngLike) -> np.ndarray:
    """``(count, n)`` sorted angles in ``[0, 2 pi)``."""
    return support_angles_batch(cbe_verblunsky_batch(count, n, beta, rng))


def sample_cbe(n: int, beta: float, rng: RngLike) -> CircularConfiguration:
    return CircularConfiguration(cbe_batch(1, n, beta, rng)[0])


# -------------------------------------------------------------- sine windows


def sine_window_batch(count: int, spec: SineBetaWindow, beta: float, rng: RngLike) -> list[np.ndarray]:
    """Windowed lifts of ``count`` circular ensembles (one sorted array each)."""
    check_window(spec)
    gen = as_generator(rng)
    n = spec.lift_n
    period = TWO_PI * n
    w = spec.window_halfwidth
    lifted = n * cbe_batch(count, n, beta, gen)
    shift = gen.uniform(0.0, period, (count, 1))
    x = np.mod(lifted - shift, period) - 0.5 * period
    out = []
    for row in x:
        row = np.sort(row)
        out.append(row[np.abs(row) <= w])
    return out


def sample_sine_beta_window(spec: SineBetaWindow, beta: float, rng: RngLike) -> PointConfiguration:
    """Points of a shifted, lifted circular ensemble inside ``[-w, w]``."""
    return PointConfiguration(sine_window_batch(1, spec, beta, rng)[0], FiniteLine())


# -------------------------------------------------------------- Gaussian ensemble


def gbe_tridiagonal_batch(count: int, n: int, beta: float, rng: RngLike) -> np.ndarray:
    """``(count, n)`` sorted eigenvalues of the tridiagonal model.

    Diagonal ``N(0, 2)/sqrt(beta)``, off-diagonal ``chi_{beta*k}/sqrt(beta)``
    for ``k = n-1 .. 1``; the eigenvalue density is proportional to
    ``exp(-beta sum x^2 / 4) prod |x_i - x_j|**beta``.
    """
    if n < 1:
        raise ConfigurationError("n must be at least 1")
    check_beta(beta)
    gen = as_generator(rng)
    scale = 1.0 / math.sqrt(beta)
    diag = gen.normal(0.0, math.sqrt(2.0), (count, n)) * scale
    dof = beta * np.arange(n - 1, 0, -1)
    off = np.sqrt(gen.chisquare(dof, (count, n - 1))) * scale if n > 1 else np.empty((count, 0))
    if n == 1:
        return diag
    if n <= _DENSE_TRIDIAGONAL_MAX:
        m = np.zeros((count, n, n))
        idx = np.arange(n)
        m[:, idx, idx] = diag
        m[:, idx[:-1], idx[1:]] = off
        m[:, idx[1:], idx[:-1]] = off
        return np.linalg.eigvalsh(m)
    return np.stack([eigvalsh_tridiagonal(d, e) for d, e in zip(diag, off)])


def gbe_corners_batch(count: int, n: int, beta: float, rng: RngLike) -> np.ndarray:
    """``(count, n)`` points from ``n - 1`` corners transitions started at one Gaussian point."""
    from .chains import corners_batch_step

    if n < 1:
        raise ConfigurationError("n must be at least 1")
    check_beta(beta)
    gen = as_generator(rng)
    pts = gen.normal(0.0, math.sqrt(2.0 / beta), (count, 1))
    for _ in range(n - 1):
        pts = corners_batch_step(pts, beta, gen)
    return pts


GbeMethod = Literal["corners_bootstrap", "tridiagonal_oracle"]


def gbe_batch(count: int, n: int, beta: float, rng: RngLike,
              method: GbeMethod = "corners_bootstrap") -> np.ndarray:
    if method == "corners_bootstrap":
        return gbe_corners_batch(count, n, beta, rng)
    if method == "tridiagonal_oracle":
        return gbe_tridiagonal_batch(count, n, beta, rng)
    raise ConfigurationError(f"unknown GbE method {method!r}")


def sample_gbe(n: int, beta: float, method: GbeMethod = "corners_bootstrap",
               rng: RngLike = None) -> PointConfiguration:
    return PointConfiguration(gbe_batch(1, n, beta, rng, method)[0], FiniteLine())


def sample(spec: EnsembleSpec, rng: RngLike, method: GbeMethod = "corners_bootstrap"):
    """Dispatch on the ensemble kind."""
    k = spec.kind
    if isinstance(k, CircularBeta):
        return sample_cbe(k.n, spec.beta, rng)
    if isinstance(k, GaussianBeta):
        return sample_gbe(k.n, spec.beta, method, rng)
    return sample_sine_beta_window(k, spec.beta, rng)
