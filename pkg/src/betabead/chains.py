"""Markov chains built from Stieltjes level sets.

Three chains share one mechanism (the new line is the level set of the
Stieltjes transform of the old line weighted by fresh random weights):

* periodic: ``n`` points on the ``2 pi n``-periodic lift, weights
  ``2n * Dirichlet(beta/2, ..., beta/2)``, cotangent transform;
* bead: a finite window of a sine-beta configuration, i.i.d. weights
  ``(4/beta) Gamma(beta/2)`` (mean 2), symmetric window sum;
* corners: Gaussian beta corners, ``g - z - sum w_j / (lambda_j - z) = 0`` with
  ``g ~ N(0, 2/beta)`` and ``w_j ~ (2/beta) Gamma(beta/2)``, optionally in the
  bulk-rescaled coordinates ``(lambda - alpha sqrt(n)) sqrt(n (4 - alpha^2))``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .core import (
    TWO_PI,
    ConfigurationError,
    FiniteLine,
    PointConfiguration,
    RngLike,
    WeightedConfiguration,
    as_generator,
    configurations_to_csv,
    gamma_variates,
    sample_dirichlet_weights,
    sample_gamma_weights,
)
from .stieltjes import eval_compensated, solve_finite_batch, solve_periodic_batch

WeightLaw = Literal["dirichlet_periodic", "iid_gamma"]

#: mean weight of the bead-chain weights ``(4/beta) Gamma(beta/2)``
BEAD_MEAN_WEIGHT = 2.0


# ------------------------------------------------------------ parameter maps


def level_from_alpha(alpha: float) -> float:
    """Bead level reached by the corners chain rescaled around ``alpha sqrt(n)``.

    Stated for weights of mean 2 (density ``1/(2 pi)``); with the mean-1
    corners weights the same limit reads ``-alpha / (2 sqrt(4 - alpha^2))``.
    """
    if not -2.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (-2, 2)")
    return -alpha / math.sqrt(4.0 - alpha * alpha) + 0.0


def boutillier_gamma(h: float) -> float:
    """Parameter of the beta = 2 bead process at level ``h``."""
    return -h / math.sqrt(1.0 + h * h) + 0.0


def eta_from_level(h: float) -> complex:
    return (h - 1j) / (h + 1j)


# ------------------------------------------------------------------- types


@dataclass(frozen=True)
class ChainParams:
    beta: float
    level_h: float = 0.0
    weight_law: WeightLaw = "dirichlet_periodic"
    steps: int = 1
    # optional ("normal", mean, sd) law for a fresh level at every step
    level_law: tuple | None = None

    def __post_init__(self):
        if not self.beta > 0:
            raise ConfigurationError("beta must be positive")
        if self.steps < 0:
            raise ConfigurationError("steps must be nonnegative")
        if self.weight_law not in ("dirichlet_periodic", "iid_gamma"):
            raise ConfigurationError(f"unknown weight law {self.weight_law!r}")
        if not math.isfinite(self.level_h):
            raise ConfigurationError("level must be finite")
        if self.level_law is not None and self.level_law[0] != "normal":
            raise ConfigurationError("only a normal level law is supported")

    @property
    def eta(self) -> complex:
        return eta_from_level(self.level_h)

    def draw_level(self, gen: np.random.Generator) -> float:
        if self.level_law is None:
            return self.level_h
        _, mean, sd = self.level_law
        return float(gen.normal(mean, sd))

    def to_dict(self) -> dict:
        return {"beta": self.beta, "level_h": self.level_h, "weight_law": self.weight_law,
                "steps": self.steps, "level_law": self.level_law}


@dataclass(frozen=True)
class Rescale:
    alpha: float
    base_n: int

    def __post_init__(self):
        if not -2.0 < self.alpha < 2.0:
            raise ConfigurationError("alpha must lie in (-2, 2)")
        if self.base_n < 1:
            raise ConfigurationError("base_n must be positive")

    @property
    def scale(self) -> float:
        return math.sqrt(self.base_n * (4.0 - self.alpha**2))

    @property
    def center(self) -> float:
        return self.alpha * math.sqrt(self.base_n)

    @property
    def level(self) -> float:
        return level_from_alpha(self.alpha)

    def forward(self, lam):
        return (np.asarray(lam) - self.center) * self.scale

    def inverse(self, x):
        return self.center + np.asarray(x) / self.scale


@dataclass(frozen=True)
class CornersState:
    points: PointConfiguration
    rescale: Rescale | None = None

    def __post_init__(self):
        if self.points.is_periodic:
            raise ConfigurationError("corners states live on the finite line")

    @property
    def dimension(self) -> int:
        return len(self.points)


@dataclass
class BeadTrajectory:
    lines: list
    params: ChainParams
    # per-level (lo, hi) of the region where roots are trusted; None = everywhere
    trusted: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.lines)

    def to_csv(self) -> str:
        return configurations_to_csv(self.lines)

    def metadata(self) -> dict:
        meta = {"params": self.params.to_dict(), "levels": len(self.lines),
                "trusted": [None if t is None else list(t) for t in self.trusted]}
        meta.update(self.extra)
        return meta

    def metadata_json(self) -> str:
        return json.dumps(self.metadata(), sort_keys=True, indent=2)


# ------------------------------------------------------------ batch kernels


def periodic_batch_step(poles: np.ndarray, beta: float, h, rng: RngLike,
                        weights: np.ndarray | None = None) -> np.ndarray:
    """One periodic transition for each row of ``poles`` ``(R, n)``.

    Rows are lifted representatives in ``[0, 2 pi n)``. Unless given, weights
    are drawn as ``2n * Dirichlet(beta/2, ...)``. Returns sorted ``(R, n)`` roots.
    """
    poles = np.atleast_2d(poles)
    R, n = poles.shape
    if weights is None:
        weights = 2 * n * sample_dirichlet_weights(n, beta, rng, size=R)
    roots, _, _ = solve_periodic_batch(poles, weights, h)
    return roots


def corners_weights(shape, beta: float, gen: np.random.Generator) -> np.ndarray:
    """``(2/beta) Gamma(beta/2)`` draws (mean 1)."""
    return (2.0 / beta) * gamma_variates(beta / 2.0, shape, gen)


def corners_batch_step(points: np.ndarray, beta: float, rng: RngLike, *,
                       g: np.ndarray | None = None, weights: np.ndarray | None = None,
                       rescale: Rescale | None = None) -> np.ndarray:
    """One corners transition per row of ``points`` ``(R, m)``; returns ``(R, m+1)``.

    Without ``rescale`` solves ``sum w/(lambda - z) + z = g``. With ``rescale``
    the rows are rescaled coordinates and the equation is
    ``sum w/(x - z) + z/s^2 = g/s - alpha/sqrt(4 - alpha^2)`` with
    ``s = sqrt(base_n (4 - alpha^2))``.
    """
    points = np.atleast_2d(points)
    R, m = points.shape
    gen = as_generator(rng) if (g is None or weights is None) else None
    if g is None:
        g = gen.normal(0.0, math.sqrt(2.0 / beta), R)
    if weights is None:
        weights = corners_weights((R, m), beta, gen)
    g = np.broadcast_to(np.asarray(g, dtype=float).reshape(-1), (R,))
    if rescale is None:
        slope, level = 1.0, g
    else:
        s = rescale.scale
        slope = 1.0 / (s * s)
        level = g / s - rescale.alpha / math.sqrt(4.0 - rescale.alpha**2)
    roots, _, _ = solve_finite_batch(points, np.broadcast_to(weights, (R, m)), level,
                                     slope=slope, exterior=True)
    return roots


def bead_batch_roots(window: np.ndarray, weights: np.ndarray, h: float) -> np.ndarray:
    """Interior-gap roots of the symmetric window sum ``sum w/(x - z) = h``."""
    roots, _, _ = solve_finite_batch(np.atleast_2d(window), np.atleast_2d(weights), h)
    return roots


# ------------------------------------------------------------ single steps


def _periodic_measure(line, beta, rng) -> WeightedConfiguration:
    if isinstance(line, WeightedConfiguration):
        return line
    if beta is None:
        raise ConfigurationError("beta is needed to draw fresh weights")
    n = len(line)
    w = 2 * n * sample_dirichlet_weights(n, beta, rng)
    return WeightedConfiguration(line, w, normalized=True)


def periodic_step(line: PointConfiguration | WeightedConfiguration, h: float,
                  rng: RngLike = None, *, beta: float | None = None) -> PointConfiguration:
    """Level set of the periodic transform; one new point per gap.

    A bare ``PointConfiguration`` gets fresh ``2n * Dirichlet(beta/2)``
    weights; a ``WeightedConfiguration`` is used as given.
    """
    measure = _periodic_measure(line, beta, rng)
    if not measure.config.is_periodic:
        raise ConfigurationError("periodic_step needs a PeriodicLift")
    roots = periodic_batch_step(measure.points[None, :], 0.0, h, None,
                                weights=measure.weights[None, :])
    return PointConfiguration(roots[0], measure.config.geometry)


@dataclass(frozen=True)
class BeadStep:
    roots: PointConfiguration
    # indices of roots sitting in the outermost gaps of the window
    boundary: tuple[int, ...]
    residual: float


def bead_step(window: PointConfiguration | WeightedConfiguration, h: float,
              rng: RngLike = None, *, beta: float | None = None) -> BeadStep:
    """Roots of the windowed, weight-compensated transform in the interior gaps.

    The window sum is the compensated form with mean weight 2 and a
    vanishing tail correction (symmetric windows). Roots in the first and
    last gaps are reported in ``boundary``: they feel the missing points
    outside the window most.
    """
    if isinstance(window, WeightedConfiguration):
        measure = window
    else:
        if beta is None:
            raise ConfigurationError("beta is needed to draw fresh weights")
        measure = WeightedConfiguration(window, sample_gamma_weights(len(window), beta, rng))
    if measure.config.is_periodic:
        raise ConfigurationError("bead_step needs a finite window")
    if len(measure) < 2:
        raise ConfigurationError("bead window needs at least 2 points")
    roots = bead_batch_roots(measure.points, measure.weights, h)[0]
    residual = max((abs(eval_compensated(measure, z, BEAD_MEAN_WEIGHT).real - h) for z in roots),
                   default=0.0)
    boundary = (0, roots.size - 1) if roots.size > 1 else (0,)
    return BeadStep(PointConfiguration(roots, FiniteLine()), boundary, float(residual))


def corners_step(state: CornersState, beta: float, rng: RngLike = None, *,
                 g: float | None = None, weights=None) -> CornersState:
    """Add one point: the ``m + 1`` roots of the corners equation."""
    if len(state.points) < 1:
        raise ConfigurationError("corners state needs at least one point")
    pts = state.points.points[None, :]
    w = None if weights is None else np.asarray(weights, dtype=float)[None, :]
    gg = None if g is None else np.array([g], dtype=float)
    gen = as_generator(rng) if (g is None or weights is None) else None
    roots = corners_batch_step(pts, beta, gen, g=gg, weights=w, rescale=state.rescale)[0]
    if roots.size != pts.shape[1] + 1:
        raise ConfigurationError("corners step lost a root")
    return CornersState(PointConfiguration(roots, FiniteLine()), state.rescale)


def corners_rescaled_step(state: CornersState, beta: float, rng: RngLike = None, *,
                          g: float | None = None, weights=None) -> CornersState:
    if state.rescale is None:
        raise ConfigurationError("state carries no rescaling")
    return corners_step(state, beta, rng, g=g, weights=weights)


def rescale_state(state: CornersState, alpha: float, base_n: int | None = None) -> CornersState:
    """Map a raw corners state to bulk coordinates around ``alpha sqrt(base_n)``."""
    if state.rescale is not None:
        raise ConfigurationError("state is already rescaled")
    r = Rescale(alpha, base_n or state.dimension)
    return CornersState(PointConfiguration(r.forward(state.points.points)), r)


# ------------------------------------------------------------------ chains


def run_chain(initial: PointConfiguration | CornersState, params: ChainParams,
              rng: RngLike) -> BeadTrajectory:
    """Iterate the step matching ``initial`` with fresh weights at every step.

    * periodic lift + ``dirichlet_periodic`` weights: periodic chain;
    * finite window + ``iid_gamma`` weights: bead chain. Roots in the two
      outermost gaps are dropped and the trusted region shrinks by one mean
      gap ``2 pi`` per side per step;
    * ``CornersState``: corners chain (rescaled if the state says so).
    """
    gen = as_generator(rng)
    beta = params.beta
    if isinstance(initial, CornersState):
        lines = [initial.points]
        state = initial
        for _ in range(params.steps):
            state = corners_step(state, beta, gen)
            lines.append(state.points)
        extra = {"dimension": [len(p) for p in lines]}
        if initial.rescale is not None:
            r = initial.rescale
            extra.update(alpha=r.alpha, base_n=r.base_n, level_h=r.level,
                         boutillier_gamma=boutillier_gamma(r.level))
        return BeadTrajectory(lines, params, [None] * len(lines), extra)

    if initial.is_periodic:
        if params.weight_law != "dirichlet_periodic":
            raise ConfigurationError("periodic chains use Dirichlet weights")
        lines = [initial]
        line = initial
        for _ in range(params.steps):
            line = periodic_step(line, params.draw_level(gen), gen, beta=beta)
            lines.append(line)
        return BeadTrajectory(lines, params, [None] * len(lines))

    if params.weight_law != "iid_gamma":
        raise ConfigurationError("windowed bead chains use i.i.d. Gamma weights")
    pts = initial.points
    lo, hi = (float(pts[0]), float(pts[-1])) if pts.size else (0.0, 0.0)
    lines, trusted = [initial], [(lo, hi)]
    line = initial
    for _ in range(params.steps):
        if len(line) < 2:
            raise ConfigurationError("bead window ran out of points")
        step = bead_step(line, params.draw_level(gen), gen, beta=beta)
        roots = step.roots.points
        if roots.size >= 3:
            roots = roots[1:-1]
        line = PointConfiguration(roots, FiniteLine())
        lo, hi = lo + TWO_PI, hi - TWO_PI
        lines.append(line)
        trusted.append((lo, hi))
    return BeadTrajectory(lines, params, trusted)


def periodic_chain_batch(initial: np.ndarray, beta: float, h: float, steps: int,
                         rng: RngLike) -> list[np.ndarray]:
    """Run the periodic chain on ``(R, n)`` rows; returns ``steps + 1`` arrays."""
    gen = as_generator(rng)
    out = [np.atleast_2d(initial)]
    for _ in range(steps):
        out.append(periodic_batch_step(out[-1], beta, h, gen))
    return out


def corners_chain_batch(initial: np.ndarray, beta: float, steps: int, rng: RngLike,
                        rescale: Rescale | None = None) -> list[np.ndarray]:
    gen = as_generator(rng)
    out = [np.atleast_2d(initial)]
    for _ in range(steps):
        out.append(corners_batch_step(out[-1], beta, gen, rescale=rescale))
    return out


def lines_interlace(lines: Sequence[PointConfiguration], kind: str) -> bool:
    """Interlacing of every consecutive pair for a trajectory of the given kind."""
    from .core import interlaces

    for a, b in zip(lines[:-1], lines[1:]):
        if kind == "periodic":
            ok = interlaces(a.points, b.points, period=a.period)
        elif kind == "corners":
            ok = interlaces(a.points, b.points, exterior=True)
        else:
            p = a.points
            ok = interlaces(p[1:-1], b.points) if len(b) + 3 == len(a) else interlaces(p, b.points)
        if not ok:
            return False
    return True
