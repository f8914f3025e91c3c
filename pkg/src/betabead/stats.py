"""Counting statistics, log-variance fits and goodness-of-fit tests."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy import integrate
from scipy.stats import chi2, kstwobign

from .core import TWO_PI, ConfigurationError

SPACING_BINS = 64
SPACING_RANGE = (0.0, 4.0 * TWO_PI)
MIN_REPLICAS = 100


# ------------------------------------------------------------ semicircle count


def semicircle_count(n: int, lo: float, hi: float) -> float:
    """Expected number of GbE(n) points in ``[lo, hi]`` under the semicircle law.

    ``(n / 2 pi) * int_{lo/sqrt(n)}^{hi/sqrt(n)} sqrt((4 - x^2)_+) dx``.
    """
    if not lo < hi:
        raise ValueError("interval must satisfy lo < hi")
    if n < 1:
        raise ValueError("n must be positive")
    a = min(max(lo / math.sqrt(n), -2.0), 2.0)
    b = min(max(hi / math.sqrt(n), -2.0), 2.0)
    if a == b:
        return 0.0
    val, _ = integrate.quad(lambda x: math.sqrt(max(4.0 - x * x, 0.0)), a, b,
                            epsabs=1e-14, epsrel=1e-13, limit=200)
    return n / TWO_PI * val


# ------------------------------------------------------------ counting profile


@dataclass(frozen=True)
class CountingStat:
    interval: tuple[float, float]
    counts: np.ndarray
    centered: np.ndarray

    @property
    def second_moment(self) -> float:
        return float(np.mean(self.centered**2))


def _as_points(sample) -> np.ndarray:
    return np.asarray(getattr(sample, "points", sample), dtype=float)


def counts_in(samples, lo: float, hi: float) -> np.ndarray:
    """Number of points in ``[lo, hi]`` for each sample."""
    return np.array([np.count_nonzero((p >= lo) & (p <= hi))
                     for p in map(_as_points, samples)], dtype=np.int64)


def counting_stat(samples, lo: float, hi: float, reference) -> CountingStat:
    counts = counts_in(samples, lo, hi)
    if reference == "linear_2pi":
        expected = (hi - lo) / TWO_PI
    elif isinstance(reference, tuple) and reference[0] == "semicircle":
        expected = semicircle_count(int(reference[1]), lo, hi)
    else:
        raise ValueError(f"unknown reference {reference!r}")
    return CountingStat((lo, hi), counts, counts - expected)


def jackknife_mean_se(values: np.ndarray) -> float:
    """Leave-one-out jackknife standard error of the sample mean."""
    v = np.asarray(values, dtype=float)
    r = v.size
    loo = (v.sum() - v) / (r - 1)
    return float(math.sqrt((r - 1) / r * np.sum((loo - loo.mean()) ** 2)))


def counting_variance_profile(samples: Sequence, reference, xs: Sequence[float],
                              start: float = 0.0) -> list[tuple[float, float, float]]:
    """``(x, E[(N[start, start+x] - expected)^2], jackknife SE)`` for each ``x``."""
    if len(samples) < MIN_REPLICAS:
        raise ValueError(f"need at least {MIN_REPLICAS} replicas")
    out = []
    for x in xs:
        if x == 0:
            out.append((0.0, 0.0, 0.0))
            continue
        st = counting_stat(samples, start, start + x, reference)
        sq = st.centered**2
        out.append((float(x), float(sq.mean()), jackknife_mean_se(sq)))
    return out


def fit_log(xs, values, errors=None) -> tuple[float, float]:
    """Weighted least squares fit of ``values ~ a + b log(x)``."""
    x = np.log(np.asarray(xs, dtype=float))
    y = np.asarray(values, dtype=float)
    w = np.ones_like(y) if errors is None else 1.0 / np.maximum(np.asarray(errors, float), 1e-300)
    design = np.stack([np.ones_like(x), x], axis=1) * w[:, None]
    (a, b), *_ = np.linalg.lstsq(design, y * w, rcond=None)
    return float(a), float(b)


def pathwise_discrepancy(samples, xs: Sequence[float], start: float = 0.0) -> np.ndarray:
    """Per-sample ``max_x |N[start, start+x] - x/(2 pi)|`` over the grid ``xs``."""
    xs = np.asarray(xs, dtype=float)
    out = []
    for p in map(_as_points, samples):
        q = np.sort(p[p >= start]) - start
        n = np.searchsorted(q, xs, side="right")
        out.append(np.max(np.abs(n - xs / TWO_PI)))
    return np.array(out)


# -------------------------------------------------------------- KS two sample


def ks_distance(a, b) -> float:
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    both = np.concatenate([a, b])
    fa = np.searchsorted(a, both, side="right") / a.size
    fb = np.searchsorted(b, both, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_two_sample(a, b) -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov distance and its asymptotic p-value."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("KS test needs two nonempty samples")
    d = ks_distance(a, b)
    en = a.size * b.size / (a.size + b.size)
    p = 1.0 if d == 0 else float(kstwobign.sf(math.sqrt(en) * d))
    return d, min(max(p, 0.0), 1.0)


# ---------------------------------------------------------------- chi-square


def chi_square_gof(observed, probabilities, min_expected: float = 5.0) -> tuple[float, int, float]:
    """Pearson goodness of fit; cells with small expectation are pooled.

    Cells are sorted by expected count and the smallest ones merged until
    every pooled cell expects at least ``min_expected``. Returns
    ``(statistic, dof, p_value)``.
    """
    obs = np.asarray(observed, dtype=float).ravel()
    prob = np.asarray(probabilities, dtype=float).ravel()
    if obs.size != prob.size:
        raise ValueError("observed and probabilities must align")
    total = obs.sum()
    exp = prob / prob.sum() * total
    order = np.argsort(exp)
    obs, exp = obs[order], exp[order]
    pooled_o, pooled_e = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(obs, exp):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            pooled_o.append(acc_o)
            pooled_e.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 and pooled_e:
        pooled_o[-1] += acc_o
        pooled_e[-1] += acc_e
    o = np.array(pooled_o)
    e = np.array(pooled_e)
    stat = float(np.sum((o - e) ** 2 / e))
    dof = o.size - 1
    return stat, dof, float(chi2.sf(stat, dof))


# -------------------------------------------------------------- spacings


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    mass: np.ndarray
    count: int

    def to_csv(self) -> str:
        rows = ["bin_left,bin_right,mass"]
        rows += [f"{l:.17g},{r:.17g},{m:.17g}"
                 for l, r, m in zip(self.edges[:-1], self.edges[1:], self.mass)]
        return "\n".join(rows) + "\n"


def region_spacings(lines, region: tuple[float, float]) -> np.ndarray:
    """Gaps between consecutive points when both ends lie in ``region``."""
    lo, hi = region
    out = []
    for p in map(_as_points, lines):
        q = np.sort(p[(p >= lo) & (p <= hi)])
        if q.size > 1:
            out.append(np.diff(q))
    return np.concatenate(out) if out else np.empty(0)


def spacing_distribution(lines, region: tuple[float, float]) -> Histogram:
    """Nearest-neighbour spacing histogram on 64 bins over ``[0, 8 pi]``.

    Spacings beyond ``8 pi`` are counted in the last bin so the mass sums to 1.
    """
    s = region_spacings(lines, region)
    if s.size == 0:
        raise ValueError("no spacings inside the region")
    edges = np.linspace(*SPACING_RANGE, SPACING_BINS + 1)
    idx = np.clip(np.searchsorted(edges, s, side="right") - 1, 0, SPACING_BINS - 1)
    mass = np.bincount(idx, minlength=SPACING_BINS) / s.size
    return Histogram(edges, mass, int(s.size))


# ---------------------------------------------------------------- reports


@dataclass
class StatsReport:
    """One verdict. ``rule`` is ``"p_value>threshold"`` or ``"statistic<threshold"``."""

    test: str
    statistic: float
    threshold: float
    p_value: float | None
    verdict: bool
    n_replicas: int
    seed: str
    rule: str = "p_value>threshold"
    details: dict | None = None

    @classmethod
    def from_p_value(cls, test, statistic, p_value, threshold, n_replicas, seed, details=None):
        return cls(test, float(statistic), float(threshold), float(p_value),
                   bool(p_value > threshold), int(n_replicas), str(seed), "p_value>threshold", details)

    @classmethod
    def from_bound(cls, test, statistic, threshold, n_replicas, seed, details=None):
        return cls(test, float(statistic), float(threshold), None,
                   bool(statistic < threshold), int(n_replicas), str(seed), "statistic<threshold", details)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["verdict"] = "pass" if self.verdict else "fail"
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, default=_json_default)

    def summary(self) -> str:
        tag = "PASS" if self.verdict else "FAIL"
        if self.p_value is not None:
            return f"{tag} {self.test}: stat={self.statistic:.4g} p={self.p_value:.4g} (> {self.threshold:.3g})"
        return f"{tag} {self.test}: stat={self.statistic:.4g} (< {self.threshold:.3g})"


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def bonferroni(alpha: float, tests: int) -> float:
    if tests < 1:
        raise ConfigurationError("need at least one test")
    return alpha / tests
