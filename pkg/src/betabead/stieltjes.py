"""Stieltjes transforms of point measures and their level sets.

For a weighted configuration ``Lambda = sum_j gamma_j delta(lambda_j)`` the
transform is ``S(z) = sum_j gamma_j / (lambda_j - z)``. On a ``2*pi*n``-periodic
lift the symmetric principal-value sum over all translates has the closed form
``(1/2n) sum_j gamma_j cot((lambda_j - z) / 2n)``.

On the real axis ``S`` is strictly increasing between consecutive poles and
sweeps all of R, so every level set ``S(z) + slope*z = h`` (``slope >= 0``)
has exactly one root per gap. The solvers below exploit this: bisection on
each gap, then a bracketed Newton polish.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from .core import (
    ConfigurationError,
    FiniteLine,
    PointConfiguration,
    WeightedConfiguration,
)

RESIDUAL_RTOL = 1e-10
WIDTH_RTOL = 1e-13
DEGENERATE_RTOL = 1e-12
POLE_RTOL = 1e-14
NEWTON_MAX = 20
BISECT_FALLBACK_MAX = 200
EXTERIOR_DOUBLINGS = 60
#: Largest ``rows * roots * poles`` evaluated in one vectorised pass.
MAX_BATCH_ELEMENTS = 2**21


class PoleCollision(ValueError):
    """Evaluation point coincides with a pole of the transform."""


class BracketError(RuntimeError):
    """An exterior root could not be bracketed (signals corrupted input)."""


# ------------------------------------------------------------------ evaluation


def _gap_scale(points: np.ndarray, period: float | None = None) -> float:
    if period is not None:
        return period / max(points.size, 1)
    if points.size < 2:
        return 1.0
    return float((points[-1] - points[0]) / (points.size - 1)) or 1.0


def _check_pole(points, z, period=None):
    d = np.asarray(points) - np.real(z)
    if period is not None:
        d = np.mod(d + period / 2, period) - period / 2
    dist = np.min(np.hypot(d, np.imag(z))) if d.size else np.inf
    if dist <= POLE_RTOL * _gap_scale(np.asarray(points), period):
        raise PoleCollision(f"z={z} is a pole")


def eval_finite(measure: WeightedConfiguration, z) -> complex:
    """Plain finite sum ``sum gamma_j / (lambda_j - z)``."""
    _check_pole(measure.points, z)
    return complex(np.sum(measure.weights / (measure.points - z)))


def eval_periodic(measure: WeightedConfiguration, z) -> complex:
    """Principal-value sum over all translates of a periodic lift (cotangent form)."""
    if not measure.config.is_periodic:
        raise ConfigurationError("periodic evaluation needs a PeriodicLift")
    n = measure.config.geometry.n
    _check_pole(measure.points, z, measure.config.period)
    arg = (measure.points - z) / (2 * n)
    return complex(np.sum(measure.weights / np.tan(arg)) / (2 * n))


def eval_derivative(measure: WeightedConfiguration, z) -> complex:
    """``S'(z) = sum gamma_j / (lambda_j - z)**2`` (periodic lifts: closed form)."""
    if measure.config.is_periodic:
        n = measure.config.geometry.n
        _check_pole(measure.points, z, measure.config.period)
        s = np.sin((measure.points - z) / (2 * n))
        return complex(np.sum(measure.weights / s**2) / (4 * n * n))
    _check_pole(measure.points, z)
    return complex(np.sum(measure.weights / (measure.points - z) ** 2))


def weight_discrepancy(weights: np.ndarray, origin_index: int, mean_weight: float) -> np.ndarray:
    """Cumulative weight excess ``Delta_m`` relative to ``mean_weight * m``.

    Index ``m`` runs over ``-origin_index .. len(weights) - origin_index``; the
    returned array is aligned so that ``out[k]`` is ``Delta`` at label
    ``k - origin_index``. Consecutive differences are ``gamma_k - mean_weight``
    and ``Delta_0 = 0``.
    """
    excess = np.asarray(weights, dtype=float) - mean_weight
    delta = np.concatenate([[0.0], np.cumsum(excess)])
    return delta - delta[origin_index]


def eval_compensated(window: WeightedConfiguration, z, mean_weight: float,
                     h_tail: float = 0.0) -> complex:
    """Window sum re-expressed around the linear mean weight, plus a tail term.

    The window part ``sum gamma_k / (lambda_k - z)`` is evaluated by summation
    by parts against the weight discrepancy ``Delta``::

        mean_weight * sum 1/(lambda_k - z)
          + Delta_K / (lambda_{K-1} - z) - Delta_k0 / (lambda_k0 - z)
          + sum_k Delta_k (lambda_k - lambda_{k-1}) / ((lambda_{k-1} - z)(lambda_k - z))

    and the contribution of the points outside the window is modelled as
    ``mean_weight * h_tail`` with ``h_tail`` supplied by the caller (the
    unweighted principal-value tail ``sum_{|lambda| > c} 1/(lambda - z)``).
    """
    pts = window.points
    if pts.size < 2:
        raise ConfigurationError("compensated window needs at least 2 points")
    _check_pole(pts, z)
    f = 1.0 / (pts - z)
    delta = weight_discrepancy(window.weights, window.config.origin_index, mean_weight)
    inner = np.sum(delta[1:-1] * (pts[1:] - pts[:-1]) * f[:-1] * f[1:])
    boundary = delta[-1] * f[-1] - delta[0] * f[0]
    return complex(mean_weight * np.sum(f) + boundary + inner + mean_weight * h_tail)


@dataclass(frozen=True)
class StieltjesEvaluator:
    """Bundles a measure with an evaluation mode.

    ``mode`` is ``"finite"``, ``"periodic"`` or ``"compensated"``; the
    compensated mode uses ``mean_weight`` and ``h_tail``.
    """

    measure: WeightedConfiguration
    mode: Literal["finite", "periodic", "compensated"] = "finite"
    mean_weight: float | None = None
    h_tail: float = 0.0

    def __post_init__(self):
        periodic = self.measure.config.is_periodic
        if self.mode == "periodic" and not periodic:
            raise ConfigurationError("periodic mode needs a PeriodicLift")
        if self.mode in ("finite", "compensated") and periodic:
            raise ConfigurationError(f"{self.mode} mode needs a FiniteLine")
        if self.mode == "compensated" and not self.mean_weight:
            raise ConfigurationError("compensated mode needs a mean weight")

    def __call__(self, z) -> complex:
        if self.mode == "periodic":
            return eval_periodic(self.measure, z)
        if self.mode == "compensated":
            return eval_compensated(self.measure, z, self.mean_weight, self.h_tail)
        return eval_finite(self.measure, z)

    def derivative(self, z) -> complex:
        return eval_derivative(self.measure, z)


# -------------------------------------------------------------- root finding


def _ulp(x):
    return np.spacing(np.abs(x)) + 1e-300


def solve_brackets(func: Callable, lo: np.ndarray, hi: np.ndarray, level,
                   width_tol) -> tuple[np.ndarray, int]:
    """Find ``func(x) == level`` with ``func`` increasing on each ``(lo, hi)``.

    ``func(x)`` returns ``(F, dF)`` elementwise. The function is never
    evaluated at the bracket ends. Bisection narrows each bracket to 1e-3 of
    its width, bracketed Newton polishes (at most ``NEWTON_MAX`` steps), and
    anything Newton could not settle falls back to plain bisection.
    Returns the roots and the total iteration count.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    level = np.broadcast_to(np.asarray(level, dtype=float), lo.shape)
    width_tol = np.broadcast_to(np.asarray(width_tol, dtype=float), lo.shape)
    res_tol = RESIDUAL_RTOL * (1.0 + np.abs(level))
    # smallest residual seen so far; a root within an ulp of a bracket end
    # is otherwise only approached by halving
    best = np.full(lo.shape, np.nan)
    best_r = np.full(lo.shape, np.inf)

    def evaluate(x, active):
        F, dF = func(x)
        r = F - level
        better = active & (np.abs(r) < best_r)
        best[better] = x[better]
        best_r[better] = np.abs(r[better])
        return r, dF

    iters = 0
    everywhere = np.ones(lo.shape, dtype=bool)
    x = 0.5 * (lo + hi)
    for _ in range(10):
        r, _ = evaluate(x, everywhere)
        below = r < 0
        lo = np.where(below, x, lo)
        hi = np.where(below, hi, x)
        x = 0.5 * (lo + hi)
        iters += 1

    done = np.zeros(lo.shape, dtype=bool)
    for _ in range(NEWTON_MAX):
        r, dF = evaluate(x, ~done)
        iters += 1
        ok = (np.abs(r) <= res_tol) | (hi - lo <= width_tol)
        below = r < 0
        lo = np.where(done | ~below, lo, x)
        hi = np.where(done | below, hi, x)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = r / dF
        ok |= np.abs(step) <= 2 * _ulp(x)
        xn = x - step
        inside = (xn > lo) & (xn < hi)
        # the Newton step is already paid for, so converged entries take it too
        x = np.where(done, x, np.where(inside, xn, np.where(ok, x, 0.5 * (lo + hi))))
        taken = ok & inside & ~done
        best[taken] = x[taken]
        best_r[taken] = 0.0
        done |= ok
        if done.all():
            break

    if not done.all():
        # Newton did not settle these; finish by bisection on the bracket.
        for _ in range(BISECT_FALLBACK_MAX):
            active = ~done & (hi - lo > np.maximum(width_tol, 4 * _ulp(x)))
            if not active.any():
                break
            x = np.where(active, 0.5 * (lo + hi), x)
            r, _ = evaluate(x, active)
            iters += 1
            below = r < 0
            lo = np.where(active & below, x, lo)
            hi = np.where(active & ~below, hi, x)
    return np.where(np.isnan(best), x, best), iters


def _finite_func(poles, weights, slope):
    """Evaluator for ``S(x) + slope*x`` with batched poles ``(R, n)``, x ``(R, m)``."""
    def func(x):
        d = poles[:, None, :] - x[:, :, None]
        # degenerate gaps put x on a pole; those rows are overwritten later
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / d
            F = np.einsum("rmn,rn->rm", inv, weights) + slope * x
            dF = np.einsum("rmn,rn->rm", inv * inv, weights) + slope
        return F, dF
    return func


def _periodic_func(poles, weights, n):
    def func(x):
        a = (poles[:, None, :] - x[:, :, None]) / (2 * n)
        s = np.sin(a)
        c = np.cos(a)
        with np.errstate(divide="ignore", invalid="ignore"):
            F = np.einsum("rmn,rn->rm", c / s, weights) / (2 * n)
            dF = np.einsum("rmn,rn->rm", 1.0 / (s * s), weights) / (4 * n * n)
        return F, dF
    return func


def _row_chunks(rows: int, per_row: int):
    step = max(1, MAX_BATCH_ELEMENTS // max(per_row, 1))
    return [slice(i, min(i + step, rows)) for i in range(0, rows, step)]


def _chunked(solver, poles, weights, h, *args):
    """Run ``solver`` over row chunks and stitch ``(roots, degenerate, iters)``."""
    R, n = poles.shape
    h = np.asarray(h, dtype=float)
    parts = []
    for sl in _row_chunks(R, (n + 1) * n):
        hs = h[sl] if h.ndim else h
        parts.append(solver(poles[sl], weights[sl], hs, *args))
    return (np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]),
            sum(p[2] for p in parts))


def _inward(lo, hi):
    off = np.maximum(1e-13 * (hi - lo), 1e-300)
    return lo + off, hi - off


def solve_periodic_batch(poles: np.ndarray, weights: np.ndarray, h) -> tuple[np.ndarray, np.ndarray, int]:
    """Level set of the periodic transform for a batch of lifted configurations.

    ``poles`` is ``(R, n)`` sorted in ``[0, 2*pi*n)``; ``h`` is a scalar or an
    ``(R,)`` array. Returns ``(roots, degenerate, iterations)`` where ``roots``
    is ``(R, n)`` sorted in ``[0, 2*pi*n)`` and ``degenerate`` flags gaps
    narrower than ``1e-12`` mean gaps (root reported at the midpoint).
    """
    poles = np.atleast_2d(np.asarray(poles, dtype=float))
    weights = np.atleast_2d(np.asarray(weights, dtype=float))
    R, n = poles.shape
    if R > 1 and R * n * n > MAX_BATCH_ELEMENTS:
        hh = np.asarray(h, dtype=float).reshape(-1) if np.ndim(h) else h
        return _chunked(solve_periodic_batch, poles, weights, hh)
    period = 2 * math.pi * n
    h = np.broadcast_to(np.asarray(h, dtype=float).reshape(-1, 1) if np.ndim(h) else h, (R, n))
    upper = np.concatenate([poles[:, 1:], poles[:, :1] + period], axis=1)
    width = upper - poles
    degenerate = width < DEGENERATE_RTOL * 2 * math.pi
    lo, hi = _inward(poles, upper)
    roots, iters = solve_brackets(_periodic_func(poles, weights, n), lo, hi, h,
                                  WIDTH_RTOL * width)
    roots = np.where(degenerate, 0.5 * (poles + upper), roots)
    roots = np.mod(roots, period)
    order = np.argsort(roots, axis=1)
    return (np.take_along_axis(roots, order, axis=1),
            np.take_along_axis(degenerate, order, axis=1), iters)


def _exterior_bracket(func, pole, level, d0, side):
    """Expand from ``pole`` until ``func`` crosses ``level`` on the given side."""
    d = np.array(d0, dtype=float)
    for _ in range(EXTERIOR_DOUBLINGS):
        x = pole + side * d
        F, _ = func(x)
        crossed = F > level if side > 0 else F < level
        if crossed.all():
            return x
        d = np.where(crossed, d, 2 * d)
    raise BracketError("could not bracket an exterior root")


def solve_finite_batch(poles: np.ndarray, weights: np.ndarray, h, slope: float = 0.0,
                       exterior: bool = False) -> tuple[np.ndarray, np.ndarray, int]:
    """Roots of ``S(x) + slope*x = h`` for a batch of finite configurations.

    Interior gaps always get one root each. With ``exterior=True`` the two
    unbounded intervals are searched as well (one root each when
    ``slope > 0``). Returns ``(roots, degenerate, iterations)``.
    """
    poles = np.atleast_2d(np.asarray(poles, dtype=float))
    weights = np.atleast_2d(np.asarray(weights, dtype=float))
    R, n = poles.shape
    if R > 1 and R * (n + 1) * n > MAX_BATCH_ELEMENTS:
        hh = np.asarray(h, dtype=float).reshape(-1) if np.ndim(h) else h
        return _chunked(solve_finite_batch, poles, weights, hh, slope, exterior)
    hcol = np.asarray(h, dtype=float).reshape(-1, 1) if np.ndim(h) else np.full((R, 1), float(h))
    hcol = np.broadcast_to(hcol, (R, 1))
    func = _finite_func(poles, weights, slope)
    los, his, tols, degs = [], [], [], []
    if n >= 2:
        width = np.diff(poles, axis=1)
        mean_gap = (poles[:, -1:] - poles[:, :1]) / (n - 1)
        lo, hi = _inward(poles[:, :-1], poles[:, 1:])
        los.append(lo), his.append(hi), tols.append(WIDTH_RTOL * width)
        degs.append(width < DEGENERATE_RTOL * mean_gap)
        min_gap = np.min(width, axis=1, keepdims=True)
    else:
        min_gap = np.ones((R, 1))
    if exterior:
        d0 = 1.0 + np.abs(hcol) + weights.sum(axis=1, keepdims=True) / np.maximum(min_gap, 1e-300)
        first, last = poles[:, :1], poles[:, -1:]
        left = _exterior_bracket(func, first, hcol, d0, -1)
        right = _exterior_bracket(func, last, hcol, d0, +1)
        lo_l, hi_l = _inward(left, first)
        lo_r, hi_r = _inward(last, right)
        scale = np.maximum(np.abs(first), 1.0)
        los = [lo_l] + los + [lo_r]
        his = [hi_l] + his + [hi_r]
        tols = [WIDTH_RTOL * scale] + tols + [WIDTH_RTOL * np.maximum(np.abs(last), 1.0)]
        degs = [np.zeros((R, 1), bool)] + degs + [np.zeros((R, 1), bool)]
    if not los:
        return np.empty((R, 0)), np.empty((R, 0), bool), 0
    lo = np.concatenate(los, axis=1)
    hi = np.concatenate(his, axis=1)
    tol = np.concatenate(tols, axis=1)
    deg = np.concatenate(degs, axis=1)
    roots, iters = solve_brackets(func, lo, hi, np.broadcast_to(hcol, lo.shape), tol)
    roots = np.where(deg, 0.5 * (lo + hi), roots)
    return roots, deg, iters


# ------------------------------------------------------------ single instance


@dataclass(frozen=True)
class LevelSetResult:
    roots: PointConfiguration
    residual: float
    degenerate_gaps: tuple[int, ...] = ()
    iterations: int = 0
    bracket_stats: dict = field(default_factory=dict)

    def sidecar(self) -> str:
        return json.dumps({
            "residual": self.residual,
            "degenerate_gaps": list(self.degenerate_gaps),
            "iterations": self.iterations,
        }, sort_keys=True)


def solve_level_set(measure: WeightedConfiguration, h: float, *, slope: float = 0.0,
                    exterior: bool = False) -> LevelSetResult:
    """Solve ``S(z) + slope*z = h`` on the real line.

    Periodic lifts give ``n`` roots per period (one per gap, including the
    wrap-around gap). Finite configurations give one root per interior gap,
    plus one in each unbounded interval when ``exterior`` is set.
    """
    if not np.isfinite(h):
        raise ValueError("level h must be finite")
    if slope < 0:
        raise ValueError("slope must be nonnegative")
    pts = measure.points[None, :]
    w = measure.weights[None, :]
    if measure.config.is_periodic:
        if slope:
            raise ConfigurationError("affine term is not defined on a periodic lift")
        roots, deg, iters = solve_periodic_batch(pts, w, h)
        config = PointConfiguration(roots[0], measure.config.geometry)
        n = measure.config.geometry.n
        a = (pts[0][None, :] - roots[0][:, None]) / (2 * n)
        values = (w[0][None, :] / np.tan(a)).sum(axis=1) / (2 * n)
    else:
        roots, deg, iters = solve_finite_batch(pts, w, h, slope, exterior)
        config = PointConfiguration(roots[0], FiniteLine())
        values = (w[0][None, :] / (pts[0][None, :] - roots[0][:, None])).sum(axis=1)
        values = values + slope * roots[0]
    ok = ~deg[0]
    resid = float(np.max(np.abs(values[ok] - h))) if ok.any() else 0.0
    return LevelSetResult(
        roots=config,
        residual=resid,
        degenerate_gaps=tuple(int(i) for i in np.flatnonzero(deg[0])),
        iterations=iters,
        bracket_stats={"gaps": int(roots.shape[1])},
    )
