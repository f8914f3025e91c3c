"""Verification suites shared by ``betabead verify`` and the acceptance tests.

Every suite takes an ``RngSpec`` and size knobs and returns a list of
``StatsReport``. Replicas are generated in fixed-size chunks; chunk ``i`` of
purpose ``p`` always draws from stream ``base + 1000 p + i``, so results do not
depend on the number of worker processes.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import chains, ensembles, stats
from .core import (
    TWO_PI,
    CircularConfiguration,
    PeriodicLift,
    PointConfiguration,
    RngSpec,
    WeightedConfiguration,
    circular_hausdorff,
    count_periodic,
    interlaces,
    sample_dirichlet_weights,
)
from .opuc import eta_to_h, transition_oracle
from .stieltjes import eval_derivative, eval_periodic, solve_level_set

CHUNK = 1000


# ------------------------------------------------------------------ chunking


def _run_chunk(job):
    func, args, spec = job
    return func(*args, spec)


def map_chunks(func: Callable, total: int, chunk: int, args: tuple, rng: RngSpec,
               purpose: int, jobs: int = 1) -> list:
    """Call ``func(*args, count, RngSpec)`` per chunk; results in chunk order."""
    sizes = [min(chunk, total - i) for i in range(0, total, chunk)]
    work = [(func, args + (s,), rng.spawn(1 + 1000 * purpose + i)) for i, s in enumerate(sizes)]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_chunk, work))
    return [_run_chunk(w) for w in work]


# ------------------------------------------------------------------ chunk bodies


def _periodic_stats_chunk(n, beta, h, steps, count, spec):
    """Arc count over ``[0, pi n)`` and the gap after a random index, at line ``steps``."""
    gen = spec.generator()
    pts = n * ensembles.cbe_batch(count, n, beta, gen)
    for _ in range(steps):
        pts = chains.periodic_batch_step(pts, beta, h, gen)
    arc = np.count_nonzero(pts < math.pi * n, axis=1)
    j = gen.integers(0, n, count)
    nxt = np.concatenate([pts[:, 1:], pts[:, :1] + TWO_PI * n], axis=1)
    gap = np.take_along_axis(nxt - pts, j[:, None], axis=1)[:, 0]
    return np.stack([arc, gap], axis=1)


def _corners_bootstrap_chunk(n, beta, method, count, spec):
    pts = ensembles.gbe_batch(count, n, beta, spec, method)
    c = n // 2
    return np.stack([pts[:, -1], pts[:, c] - pts[:, c - 1]], axis=1)


def _corners_transition_chunk(lam, beta, count, spec):
    return chains.corners_batch_step(np.full((count, 1), lam), beta, spec)


def _sine_counts_chunk(approx_n, halfwidth, beta, xs, count, spec):
    win = ensembles.sine_window_batch(count, ensembles.SineBetaWindow(halfwidth, approx_n), beta, spec)
    return np.array([[np.count_nonzero((w >= 0) & (w <= x)) for x in xs] for w in win])


def _gbe_counts_chunk(n, beta, xs, count, spec):
    lam = ensembles.gbe_tridiagonal_batch(count, n, beta, spec)
    x = chains.Rescale(0.0, n).forward(lam)
    return np.array([[np.count_nonzero((r >= 0) & (r <= b)) for b in xs] for r in x])


def _bead_limit_corners_chunk(base_n, beta, steps, halfwidth, count, spec):
    gen = spec.generator()
    r = chains.Rescale(0.0, base_n)
    pts = r.forward(ensembles.gbe_tridiagonal_batch(count, base_n, beta, gen))
    for _ in range(steps):
        pts = chains.corners_batch_step(pts, beta, gen, rescale=r)
    return stats.region_spacings(pts, (-halfwidth, halfwidth))


def _bead_limit_periodic_chunk(n, beta, h, steps, halfwidth, count, spec):
    gen = spec.generator()
    pts = n * ensembles.cbe_batch(count, n, beta, gen)
    for _ in range(steps):
        pts = chains.periodic_batch_step(pts, beta, h, gen)
    mid = math.pi * n
    return stats.region_spacings(pts, (mid - halfwidth, mid + halfwidth))


def _bead_window_chunk(halfwidth, approx_n, beta, h, steps, count, spec):
    """Arc count and first gap right of 0 after ``steps`` bead steps, per window."""
    gen = spec.generator()
    wins = ensembles.sine_window_batch(count, ensembles.SineBetaWindow(halfwidth, approx_n), beta, gen)
    out = []
    for w in wins:
        line = PointConfiguration(w)
        for _ in range(steps):
            line = chains.bead_step(line, h, gen, beta=beta).roots
        p = line.points
        right = p[p >= 0]
        gap = right[1] - right[0] if right.size > 1 else np.nan
        out.append((np.count_nonzero(np.abs(p) <= halfwidth / 3), gap))
    return np.array(out)


# ------------------------------------------------------------------ suites


def suite_oracle_opuc(rng: RngSpec, trials: int = 200, n: int | None = None,
                      beta: float | None = None, tol: float = 1e-8, jobs: int = 1):
    """Periodic level-set transition against the rotated-coefficient oracle."""
    gen = rng.spawn(1).generator()
    worst = 0.0
    for _ in range(trials):
        nn = int(n or gen.integers(2, 9))
        bb = float(beta or gen.choice([1.0, 2.0, 4.0]))
        ang = ensembles.cbe_batch(1, nn, bb, gen)[0]
        rho = sample_dirichlet_weights(nn, bb, gen)
        eta = np.exp(1j * gen.uniform(0, TWO_PI))
        h = eta_to_h(eta)
        measure = WeightedConfiguration.from_arrays(nn * ang, 2 * nn * rho, PeriodicLift(nn))
        roots = chains.periodic_step(measure, h)
        oracle = transition_oracle(CircularConfiguration(ang, rho / rho.sum()), eta)
        got = np.mod(roots.points / nn, TWO_PI)
        worst = max(worst, circular_hausdorff(got, oracle.angles))
    return [stats.StatsReport.from_bound("oracle-opuc", worst, tol, trials, rng)]


def suite_invariance_periodic(rng: RngSpec, n=(4,), beta=(2.0,), h=(0.0,), replicas: int = 20000,
                              steps: int = 3, threshold: float | None = None, jobs: int = 1):
    """Step-0 against step-``steps`` laws of arc count and spacing, independent replica sets."""
    configs = [(nn, bb, hh) for nn in n for bb in beta for hh in h]
    if threshold is None:
        threshold = stats.bonferroni(0.01, 2 * len(configs))
    reports = []
    for k, (nn, bb, hh) in enumerate(configs):
        base = np.concatenate(map_chunks(_periodic_stats_chunk, replicas, CHUNK,
                                         (nn, bb, hh, 0), rng, 2 * k, jobs))
        moved = np.concatenate(map_chunks(_periodic_stats_chunk, replicas, CHUNK,
                                          (nn, bb, hh, steps), rng, 2 * k + 1, jobs))
        tag = f"n={nn},beta={bb:g},h={hh:g}"
        for col, name in ((0, "arc-count"), (1, "spacing")):
            d, p = stats.ks_two_sample(base[:, col], moved[:, col])
            reports.append(stats.StatsReport.from_p_value(
                f"invariance-periodic[{tag},{name}]", d, p, threshold, replicas, rng))
    return reports


def suite_invariance_sine(rng: RngSpec, beta: float = 2.0, h: float = 0.0, replicas: int = 1000,
                          halfwidth: float = 60.0, approx_n: int = 256, steps: int = 1,
                          threshold: float = 0.005, jobs: int = 1):
    """Central-third statistics of sine windows before and after bead steps."""
    base = np.concatenate(map_chunks(_bead_window_chunk, replicas, 250,
                                     (halfwidth, approx_n, beta, h, 0), rng, 0, jobs))
    moved = np.concatenate(map_chunks(_bead_window_chunk, replicas, 250,
                                      (halfwidth, approx_n, beta, h, steps), rng, 1, jobs))
    reports = []
    for col, name in ((0, "central-count"), (1, "first-gap")):
        a, b = base[:, col], moved[:, col]
        d, p = stats.ks_two_sample(a[np.isfinite(a)], b[np.isfinite(b)])
        reports.append(stats.StatsReport.from_p_value(
            f"invariance-sine[{name}]", d, p, threshold, replicas, rng))
    return reports


@dataclass
class VarianceFit:
    xs: list
    variances: list
    errors: list
    intercept: float
    slope: float


def sine_variance_fit(rng: RngSpec, beta=2.0, approx_n=512, xs=(5, 10, 20, 40, 80),
                      replicas=1000, jobs=1) -> VarianceFit:
    counts = np.concatenate(map_chunks(_sine_counts_chunk, replicas, 100,
                                       (approx_n, max(xs), beta, list(xs)), rng, 0, jobs))
    centered = counts - np.asarray(xs) / TWO_PI
    sq = centered**2
    var = sq.mean(axis=0)
    err = np.array([stats.jackknife_mean_se(c) for c in sq.T])
    a, b = stats.fit_log(xs, var, err)
    return VarianceFit(list(xs), var.tolist(), err.tolist(), a, b)


def suite_variance_log(rng: RngSpec, beta: float = 2.0, approx_n: int = 512,
                       xs=(5, 10, 20, 40, 80), replicas: int = 1000, gbe_n: int = 2000,
                       gbe_replicas: int = 200, jobs: int = 1):
    """Counting variance against ``a + b log x``; GbE bulk constant reported."""
    fit = sine_variance_fit(rng, beta, approx_n, xs, replicas, jobs)
    pred = fit.intercept + fit.slope * np.log(fit.xs)
    ratio = float(np.max(np.asarray(fit.variances) / pred)) if np.all(pred > 0) else math.inf
    details = {"xs": fit.xs, "variance": fit.variances, "se": fit.errors,
               "a": fit.intercept, "b": fit.slope}
    reports = [
        stats.StatsReport.from_bound("variance-log[slope>=0]", -fit.slope, 1e-300, replicas, rng, details),
        stats.StatsReport.from_bound("variance-log[max var/fit]", ratio, 2.0, replicas, rng, details),
    ]
    if gbe_replicas:
        counts = np.concatenate(map_chunks(_gbe_counts_chunk, gbe_replicas, 25,
                                           (gbe_n, beta, list(xs)), rng, 1, jobs))
        s = chains.Rescale(0.0, gbe_n).scale
        expected = np.array([stats.semicircle_count(gbe_n, 0.0, x / s) for x in xs])
        var = ((counts - expected) ** 2).mean(axis=0)
        bound = np.log(2 + np.minimum(math.sqrt(gbe_n) * np.asarray(xs) / s, gbe_n))
        const = float(np.max(var / bound))
        reports.append(stats.StatsReport.from_bound(
            "variance-log[GbE constant, reported]", const, math.inf, gbe_replicas, rng,
            {"n": gbe_n, "xs": list(xs), "variance": var.tolist(), "log_bound": bound.tolist()}))
    return reports


def suite_corners_marginal(rng: RngSpec, beta=(1.0, 2.0), n: int = 12, replicas: int = 20000,
                           threshold: float = 0.01, jobs: int = 1):
    reports = []
    for k, bb in enumerate(beta):
        boot = np.concatenate(map_chunks(_corners_bootstrap_chunk, replicas, CHUNK,
                                         (n, bb, "corners_bootstrap"), rng, 2 * k, jobs))
        tri = np.concatenate(map_chunks(_corners_bootstrap_chunk, replicas, CHUNK,
                                        (n, bb, "tridiagonal_oracle"), rng, 2 * k + 1, jobs))
        for col, name in ((0, "lambda_max"), (1, "central-gap")):
            d, p = stats.ks_two_sample(boot[:, col], tri[:, col])
            reports.append(stats.StatsReport.from_p_value(
                f"corners-marginal[beta={bb:g},n={n},{name}]", d, p, threshold, replicas, rng))
    return reports


# Forrester-form density of (mu_1, mu_2) given lambda, in a = lambda - mu_1,
# b = mu_2 - lambda; the substitution s = a**(beta/2) removes the endpoint
# singularity of |a|**(beta/2 - 1).
DENSITY_EDGES = (0.0, 0.1, 0.3, 0.6, 1.0, 1.5, 2.2, 3.2, 14.0)


def _gauss_legendre(lo, hi, nodes):
    x, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


def forrester_bin_probabilities(lam: float, beta: float, edges=DENSITY_EDGES,
                                nodes: int = 24) -> np.ndarray:
    """Probabilities of the ``(a, b)`` grid cells under the one-point transition density."""
    e = np.asarray(edges, dtype=float)
    p = 2.0 / beta
    se = e ** (beta / 2.0)
    k = e.size - 1
    out = np.zeros((k, k))
    for i in range(k):
        s, ws = _gauss_legendre(se[i], se[i + 1], nodes)
        a = s**p
        for j in range(k):
            t, wt = _gauss_legendre(se[j], se[j + 1], nodes)
            b = t**p
            A, B = np.meshgrid(a, b, indexing="ij")
            f = (A + B) * np.exp(-beta / 4.0 * ((lam - A) ** 2 + (lam + B) ** 2 - lam**2))
            out[i, j] = ws @ f @ wt
    return out / out.sum()


def suite_corners_density(rng: RngSpec, beta=(1.0, 2.0), lambdas=(-1.0, 0.0, 1.5),
                          draws: int = 50000, threshold: float = 0.01, jobs: int = 1):
    reports = []
    e = np.asarray(DENSITY_EDGES)
    k = 0
    for bb in beta:
        for lam in lambdas:
            mu = np.concatenate(map_chunks(_corners_transition_chunk, draws, 10000,
                                           (lam, bb), rng, k, jobs))
            k += 1
            a, b = lam - mu[:, 0], mu[:, 1] - lam
            ia = np.clip(np.searchsorted(e, a, side="right") - 1, 0, e.size - 2)
            ib = np.clip(np.searchsorted(e, b, side="right") - 1, 0, e.size - 2)
            obs = np.zeros((e.size - 1, e.size - 1))
            np.add.at(obs, (ia, ib), 1)
            prob = forrester_bin_probabilities(lam, bb)
            stat, dof, p = stats.chi_square_gof(obs, prob)
            reports.append(stats.StatsReport.from_p_value(
                f"corners-density[beta={bb:g},lambda={lam:g}]", stat, p, threshold, draws, rng,
                {"dof": dof}))
    return reports


def bead_limit_samples(rng: RngSpec, beta=2.0, base_n=400, periodic_n=256, steps=3,
                       halfwidth=100.0, spacings=10000, jobs=1):
    """Central spacings of the rescaled corners chain and of the periodic chain."""
    per_rep = max(1, int(2 * halfwidth / TWO_PI) - 2)
    reps = spacings // per_rep + 2

    def collect(func, args, purpose):
        out = np.concatenate(map_chunks(func, reps, 50, args, rng, purpose, jobs))
        while out.size < spacings:
            purpose += 100
            out = np.concatenate([out] + map_chunks(func, reps // 4 + 1, 50, args, rng, purpose, jobs))
        return out[:spacings]

    corners = collect(_bead_limit_corners_chunk, (base_n, beta, steps, halfwidth), 0)
    periodic = collect(_bead_limit_periodic_chunk, (periodic_n, beta, 0.0, steps, halfwidth), 1)
    return corners, periodic


def suite_bead_limit(rng: RngSpec, beta: float = 2.0, base_n: int = 400, periodic_n: int = 256,
                     steps: int = 3, spacings: int = 10000, threshold: float = 0.05, jobs: int = 1):
    corners, periodic = bead_limit_samples(rng, beta, base_n, periodic_n, steps, spacings=spacings,
                                           jobs=jobs)
    d, p = stats.ks_two_sample(corners, periodic)
    return [stats.StatsReport.from_bound(
        "bead-limit[KS distance]", d, threshold, spacings, rng,
        {"p_value": p, "mean_corners": float(corners.mean()), "mean_periodic": float(periodic.mean())})]


def _random_interval_counts_ok(old, new, lo, hi, gen, period=None, intervals=10):
    for _ in range(intervals):
        a, b = np.sort(gen.uniform(lo, hi, 2))
        if period is None:
            c_old = np.count_nonzero((old >= a) & (old <= b))
            c_new = np.count_nonzero((new >= a) & (new <= b))
        else:
            c_old = count_periodic(old, period, a, b)
            c_new = count_periodic(new, period, a, b)
        if abs(c_old - c_new) > 1:
            return False
    return True


def interlacing_violations(rng: RngSpec, periodic_steps=4000, corners_steps=3000,
                           bead_steps=3000) -> dict:
    """Count alternation / interval-count violations over random steps of every chain."""
    gen = rng.spawn(1).generator()
    bad = {"periodic": 0, "corners": 0, "bead": 0}
    done = {"periodic": 0, "corners": 0, "bead": 0}
    while done["periodic"] < periodic_steps:
        n = int(gen.integers(2, 13))
        beta = float(gen.choice([0.5, 1.0, 2.0, 4.0]))
        rows = min(200, periodic_steps - done["periodic"])
        old = n * ensembles.cbe_batch(rows, n, beta, gen)
        new = chains.periodic_batch_step(old, beta, float(gen.normal(0, 2)), gen)
        P = TWO_PI * n
        for o, r in zip(old, new):
            ok = interlaces(o, r, period=P) and _random_interval_counts_ok(o, r, 0, 2 * P, gen, P)
            bad["periodic"] += not ok
        done["periodic"] += rows
    while done["corners"] < corners_steps:
        m = int(gen.integers(1, 13))
        beta = float(gen.choice([0.5, 1.0, 2.0, 4.0]))
        rows = min(200, corners_steps - done["corners"])
        old = ensembles.gbe_tridiagonal_batch(rows, m, beta, gen)
        rescale = chains.Rescale(float(gen.uniform(-1.5, 1.5)), m) if gen.random() < 0.5 else None
        if rescale is not None:
            old = rescale.forward(old)
        new = chains.corners_batch_step(old, beta, gen, rescale=rescale)
        for o, r in zip(old, new):
            span = r[-1] - r[0]
            ok = interlaces(o, r, exterior=True) and _random_interval_counts_ok(
                o, r, r[0] - 0.1 * span, r[-1] + 0.1 * span, gen)
            bad["corners"] += not ok
        done["corners"] += rows
    while done["bead"] < bead_steps:
        beta = float(gen.choice([0.5, 1.0, 2.0, 4.0]))
        w = float(gen.uniform(30, 100))
        line = ensembles.sine_window_batch(1, ensembles.SineBetaWindow(w, 256), beta, gen)[0]
        while line.size >= 2 and done["bead"] < bead_steps:
            roots = chains.bead_step(PointConfiguration(line), float(gen.normal(0, 2)), gen,
                                     beta=beta).roots.points
            ok = interlaces(line, roots) and _random_interval_counts_ok(
                line, roots, line[0], line[-1], gen)
            bad["bead"] += not ok
            done["bead"] += 1
            line = roots
    return {"violations": bad, "steps": done}


def suite_interlacing(rng: RngSpec, steps: int = 10000, jobs: int = 1):
    split = (int(0.4 * steps), int(0.3 * steps), steps - int(0.4 * steps) - int(0.3 * steps))
    res = interlacing_violations(rng, *split)
    total = sum(res["violations"].values())
    return [stats.StatsReport.from_bound("interlacing[violations]", total, 0.5,
                                         sum(res["steps"].values()), rng, res)]


def periodic_partial_sum(points, weights, n, z, K):
    """Symmetric partial sum over translates ``|k| <= K`` of the periodic lift."""
    k = np.arange(-K, K + 1)[:, None]
    return complex(np.sum(weights[None, :] / (points[None, :] + TWO_PI * n * k - z)))


def richardson_periodic_sum(points, weights, n, z, K=100):
    """Partial sums at ``K, 2K, 4K`` with the ``1/K`` and ``1/K^2`` errors removed."""
    s1, s2, s4 = (periodic_partial_sum(points, weights, n, z, m * K) for m in (1, 2, 4))
    r1 = 2 * s2 - s1
    r2 = 2 * s4 - s2
    return (4 * r2 - r1) / 3


def stieltjes_checks(rng: RngSpec, cases: int = 1000) -> dict:
    gen = rng.spawn(1).generator()
    worst_sum = worst_deriv = worst_shift = 0.0
    for c in range(cases):
        n = int(gen.integers(1, 11))
        P = TWO_PI * n
        pts = np.sort(gen.uniform(0, P, n))
        w = gen.gamma(1.0, 2.0, n)
        m = WeightedConfiguration(PointConfiguration(pts, PeriodicLift(n)), w)
        # evaluation point at least a tenth of a mean gap from every pole
        while True:
            x = gen.uniform(0, P)
            d = np.abs(np.mod(pts - x + P / 2, P) - P / 2)
            if d.min() > 0.1 * TWO_PI:
                break
        z = x + (1j * gen.exponential(1.0) if c % 2 else 0.0)
        brute = richardson_periodic_sum(pts, w, n, z)
        worst_sum = max(worst_sum, abs(eval_periodic(m, z) - brute))
        if c % 2 == 0:
            e = 1e-4
            fd = (eval_periodic(m, x + e).real - eval_periodic(m, x - e).real) / (2 * e)
            exact = eval_derivative(m, x).real
            worst_deriv = max(worst_deriv, abs(fd - exact) / abs(exact))
        if c % 10 == 0:
            h = float(gen.normal(0, 2))
            y = float(gen.uniform(-50, 50))
            r0 = solve_level_set(m, h).roots.points
            r1 = solve_level_set(WeightedConfiguration.from_arrays(pts + y, w, PeriodicLift(n)), h).roots.points
            d = np.mod(np.sort(np.mod(r0 + y, P)) - r1 + P / 2, P) - P / 2
            worst_shift = max(worst_shift, float(np.max(np.abs(d))))
            fpts = np.sort(gen.normal(0, 5, n + 1))
            fw = gen.gamma(1.0, 1.0, n + 1)
            fm = WeightedConfiguration(PointConfiguration(fpts), fw)
            f0 = solve_level_set(fm, h).roots.points
            f1 = solve_level_set(WeightedConfiguration(PointConfiguration(fpts + y), fw), h).roots.points
            if f0.size:
                worst_shift = max(worst_shift, float(np.max(np.abs(f0 + y - f1))))
    return {"partial_sums": worst_sum, "derivative": worst_deriv, "translation": worst_shift}


def suite_stieltjes(rng: RngSpec, cases: int = 1000, jobs: int = 1):
    r = stieltjes_checks(rng, cases)
    return [
        stats.StatsReport.from_bound("stieltjes[partial sums]", r["partial_sums"], 1e-6, cases, rng),
        stats.StatsReport.from_bound("stieltjes[derivative]", r["derivative"], 1e-6, cases, rng),
        stats.StatsReport.from_bound("stieltjes[translation]", r["translation"], 1e-9, cases, rng),
    ]


PARAMETER_CASES = (
    # alpha, level, boutillier gamma; hand values
    (0.0, 0.0, 0.0),
    (1.0, -1.0 / math.sqrt(3.0), 0.5),
    (-1.0, 1.0 / math.sqrt(3.0), -0.5),
)


def suite_parameter_maps(rng: RngSpec, jobs: int = 1):
    worst = 0.0
    for alpha, level, gamma in PARAMETER_CASES:
        worst = max(worst, abs(chains.level_from_alpha(alpha) - level),
                    abs(chains.boutillier_gamma(level) - gamma))
    return [stats.StatsReport.from_bound("parameter-maps", worst, 1e-15, len(PARAMETER_CASES), rng)]


SUITES = {
    "oracle-opuc": suite_oracle_opuc,
    "invariance-periodic": suite_invariance_periodic,
    "invariance-sine": suite_invariance_sine,
    "variance-log": suite_variance_log,
    "corners-marginal": suite_corners_marginal,
    "corners-density": suite_corners_density,
    "bead-limit": suite_bead_limit,
    "interlacing": suite_interlacing,
    "stieltjes": suite_stieltjes,
    "parameter-maps": suite_parameter_maps,
}
