"""Point configurations, circle/line lifting, weight samplers and the RNG contract.

Positions on the line live either on a finite segment (``FiniteLine``) or on a
``2*pi*n``-periodic lift of ``n`` points of the unit circle (``PeriodicLift``).
A lifted configuration stores only its ``n`` representatives in ``[0, 2*pi*n)``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

TWO_PI = 2.0 * math.pi

#: Relative tolerance (w.r.t. the mean gap) below which two points are duplicates.
DUPLICATE_RTOL = 1e-12

RNG_ALGORITHM = "philox4x64"


class ConfigurationError(ValueError):
    """Raised for invalid point or weight configurations."""


# --------------------------------------------------------------------------- RNG


@dataclass(frozen=True)
class RngSpec:
    """Reproducible random stream: Philox-4x64 keyed by ``(seed, stream)``.

    The 128-bit Philox key is ``seed + 2**64 * stream``, so distinct stream
    indices give independent counter-based sequences for the same seed.
    """

    seed: int
    stream: int = 0
    algorithm_id: str = RNG_ALGORITHM

    def __post_init__(self):
        if self.algorithm_id != RNG_ALGORITHM:
            raise ValueError(f"unsupported generator {self.algorithm_id!r}")
        for name in ("seed", "stream"):
            value = getattr(self, name)
            if not 0 <= int(value) < 2**64:
                raise ValueError(f"{name} must be a 64-bit unsigned integer")

    def generator(self) -> np.random.Generator:
        key = int(self.seed) + (int(self.stream) << 64)
        return np.random.Generator(np.random.Philox(key=key))

    def spawn(self, index: int) -> "RngSpec":
        """Stream ``index`` positions after this one (same seed)."""
        return RngSpec(self.seed, (self.stream + index) % 2**64)

    def __str__(self):
        return f"{self.algorithm_id}:{self.seed}:{self.stream}"

    @classmethod
    def parse(cls, text: str) -> "RngSpec":
        algo, seed, stream = text.split(":")
        return cls(int(seed), int(stream), algo)


RngLike = Union[RngSpec, np.random.Generator, int, None]


def as_generator(rng: RngLike) -> np.random.Generator:
    """Turn an ``RngSpec`` (or bare seed) into a generator; pass generators through."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        raise ValueError("an explicit RngSpec (or generator) is required")
    if isinstance(rng, (int, np.integer)):
        rng = RngSpec(int(rng))
    return rng.generator()


# ------------------------------------------------------------------ geometries


@dataclass(frozen=True)
class FiniteLine:
    pass


@dataclass(frozen=True)
class PeriodicLift:
    n: int

    @property
    def period(self) -> float:
        return TWO_PI * self.n


Geometry = Union[FiniteLine, PeriodicLift]


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _check_distinct(points: np.ndarray, period: float | None) -> None:
    if points.size < 2:
        return
    gaps = np.diff(points)
    if period is not None:
        gaps = np.append(gaps, points[0] + period - points[-1])
        scale = period / points.size
    else:
        scale = (points[-1] - points[0]) / (points.size - 1)
    if scale <= 0 or np.any(gaps <= DUPLICATE_RTOL * scale):
        raise ConfigurationError("duplicate points (distinct poles are required)")


@dataclass(frozen=True)
class PointConfiguration:
    """Sorted points on a finite line segment or on a periodic lift.

    Points are canonicalised at construction: sorted, and for a
    ``PeriodicLift`` reduced to ``[0, 2*pi*n)``.
    """

    points: np.ndarray
    geometry: Geometry = field(default_factory=FiniteLine)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).ravel()
        if not np.all(np.isfinite(pts)):
            raise ConfigurationError("points must be finite")
        period = None
        if isinstance(self.geometry, PeriodicLift):
            if pts.size != self.geometry.n:
                raise ConfigurationError(
                    f"periodic lift needs exactly n={self.geometry.n} representatives"
                )
            period = self.geometry.period
            pts = np.mod(pts, period)
            pts[pts >= period] = 0.0
        pts = np.sort(pts)
        _check_distinct(pts, period)
        object.__setattr__(self, "points", _readonly(pts))

    def __len__(self):
        return self.points.size

    @property
    def is_periodic(self) -> bool:
        return isinstance(self.geometry, PeriodicLift)

    @property
    def period(self) -> float | None:
        return self.geometry.period if self.is_periodic else None

    @property
    def origin_index(self) -> int:
        """Index of the first nonnegative point (``len`` if there is none)."""
        return int(np.searchsorted(self.points, 0.0, side="left"))

    def translate(self, y: float) -> "PointConfiguration":
        return PointConfiguration(self.points + y, self.geometry)

    def count(self, a: float, b: float) -> int:
        """Number of points in ``[a, b]`` (all translates for periodic lifts)."""
        if not self.is_periodic:
            return int(np.count_nonzero((self.points >= a) & (self.points <= b)))
        return count_periodic(self.points, self.period, a, b)


def count_periodic(points: np.ndarray, period: float, a: float, b: float) -> int:
    """Count translates ``p + k*period`` lying in ``[a, b]``."""
    hi = np.floor((b - points) / period)
    lo = np.ceil((a - points) / period)
    return int(np.sum(np.maximum(hi - lo + 1, 0)))


@dataclass(frozen=True)
class WeightedConfiguration:
    """Point measure ``sum_j gamma_j * delta(lambda_j)`` with positive weights."""

    config: PointConfiguration
    weights: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        if w.size != len(self.config):
            raise ConfigurationError("weights must align with points")
        if not np.all(w > 0):
            raise ConfigurationError("weights must be strictly positive")
        if self.normalized and self.config.is_periodic:
            n = self.config.geometry.n
            if abs(w.sum() - 2 * n) > 1e-9 * 2 * n:
                raise ConfigurationError("normalized periodic weights must sum to 2n")
        object.__setattr__(self, "weights", _readonly(w))

    @classmethod
    def from_arrays(cls, points, weights, geometry: Geometry | None = None,
                    normalized: bool = False) -> "WeightedConfiguration":
        """Build from unsorted points, keeping each weight attached to its point."""
        geometry = geometry or FiniteLine()
        pts = np.asarray(points, dtype=float).ravel()
        w = np.asarray(weights, dtype=float).ravel()
        if pts.size != w.size:
            raise ConfigurationError("weights must align with points")
        if isinstance(geometry, PeriodicLift):
            pts = np.mod(pts, geometry.period)
        order = np.argsort(pts, kind="stable")
        return cls(PointConfiguration(pts[order], geometry), w[order], normalized)

    @property
    def points(self) -> np.ndarray:
        return self.config.points

    def __len__(self):
        return len(self.config)


@dataclass(frozen=True)
class CircularConfiguration:
    """``n`` points ``exp(i*theta_j)`` on the unit circle, optionally weighted.

    With weights present the object is the probability measure
    ``sigma = sum_j rho_j * delta(u_j)``.
    """

    angles: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        th = np.mod(np.asarray(self.angles, dtype=float).ravel(), TWO_PI)
        th[th >= TWO_PI] = 0.0
        order = np.argsort(th, kind="stable")
        th = th[order]
        _check_distinct(th, TWO_PI)
        object.__setattr__(self, "angles", _readonly(th))
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float).ravel()
            if w.size != th.size:
                raise ConfigurationError("weights must align with angles")
            if not np.all(w > 0):
                raise ConfigurationError("weights must be strictly positive")
            if abs(w.sum() - 1.0) > 1e-12:
                raise ConfigurationError("weights must sum to 1")
            object.__setattr__(self, "weights", _readonly(w[order]))

    def __len__(self):
        return self.angles.size

    @property
    def support(self) -> np.ndarray:
        return np.exp(1j * self.angles)


# --------------------------------------------------------------------- lifting


def lift_circle_to_line(c: CircularConfiguration, n: int) -> PointConfiguration:
    if len(c) != n:
        raise ConfigurationError(f"expected {n} angles, got {len(c)}")
    return PointConfiguration(n * c.angles, PeriodicLift(n))


def project_line_to_circle(p: PointConfiguration) -> CircularConfiguration:
    if not p.is_periodic:
        raise ConfigurationError("only periodic lifts project to the circle")
    return CircularConfiguration(p.points / p.geometry.n)


def circular_distance(a, b) -> np.ndarray:
    """Elementwise angular distance on the circle, in ``[0, pi]``."""
    d = np.mod(np.asarray(a) - np.asarray(b), TWO_PI)
    return np.minimum(d, TWO_PI - d)


def circular_hausdorff(a, b) -> float:
    """Symmetric Hausdorff distance between two angle sets (wrap-safe)."""
    d = circular_distance(np.asarray(a)[:, None], np.asarray(b)[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


# -------------------------------------------------------------- weight samplers


def gamma_variates(shape: float, size, gen: np.random.Generator) -> np.ndarray:
    """Gamma(shape, 1) draws; shapes below 1 use ``G(shape+1) * U**(1/shape)``."""
    if shape <= 0:
        raise ValueError("gamma shape must be positive")
    if shape >= 1:
        return gen.standard_gamma(shape, size)
    g = gen.standard_gamma(shape + 1.0, size)
    u = gen.random(size)
    return g * u ** (1.0 / shape)


def sample_gamma_weights(count: int, beta: float, rng: RngLike) -> np.ndarray:
    """I.i.d. weights ``(4/beta) * Gamma(beta/2)``, each with mean 2."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    if count < 0:
        raise ValueError("count must be nonnegative")
    return (4.0 / beta) * gamma_variates(beta / 2.0, count, as_generator(rng))


def sample_dirichlet_weights(n: int, beta: float, rng: RngLike, size=None) -> np.ndarray:
    """Dirichlet(beta/2, ..., beta/2) vector(s) of length ``n``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if beta <= 0:
        raise ValueError("beta must be positive")
    shape = (n,) if size is None else (size, n)
    g = gamma_variates(beta / 2.0, shape, as_generator(rng))
    return g / g.sum(axis=-1, keepdims=True)


# ------------------------------------------------------------------------ CSV

CSV_HEADER = ("level", "index", "position", "weight")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def configurations_to_csv(lines: Sequence[PointConfiguration | WeightedConfiguration]) -> str:
    """Serialise lines to ``level,index,position,weight`` rows (weight may be empty)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for level, line in enumerate(lines):
        if isinstance(line, WeightedConfiguration):
            pts, w = line.points, line.weights
        else:
            pts, w = np.asarray(line.points if hasattr(line, "points") else line), None
        for j, x in enumerate(pts):
            writer.writerow((level, j, _fmt(x), "" if w is None else _fmt(w[j])))
    return buf.getvalue()


def write_configurations_csv(path, lines) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(configurations_to_csv(lines))


def read_configurations_csv(path_or_text, geometry: Geometry | None = None):
    """Inverse of :func:`write_configurations_csv`; returns a list indexed by level."""
    text = path_or_text
    if "\n" not in str(path_or_text):
        with open(path_or_text) as fh:
            text = fh.read()
    rows = list(csv.DictReader(io.StringIO(text)))
    levels: dict[int, list] = {}
    for row in rows:
        levels.setdefault(int(row["level"]), []).append(row)
    out = []
    for level in sorted(levels):
        rs = sorted(levels[level], key=lambda r: int(r["index"]))
        pts = [float(r["position"]) for r in rs]
        geom = geometry or FiniteLine()
        if all(r["weight"] != "" for r in rs) and rs:
            out.append(WeightedConfiguration.from_arrays(pts, [float(r["weight"]) for r in rs], geom))
        else:
            out.append(PointConfiguration(pts, geom))
    return out


def interlaces(poles: Iterable[float], roots: Iterable[float], period: float | None = None,
               exterior: bool = False) -> bool:
    """Strict alternation of two sorted point sets.

    ``period`` set: both sets are representatives of periodic configurations
    and alternation is checked cyclically (equal counts). Otherwise the roots
    either sit one per interior gap (``exterior=False``, ``len-1`` roots) or
    additionally one on each side (``exterior=True``, ``len+1`` roots).
    """
    p = np.sort(np.asarray(poles, dtype=float))
    r = np.sort(np.asarray(roots, dtype=float))
    if period is not None:
        if p.size != r.size or p.size == 0:
            return False
        # rotate so the first root follows the first pole
        r = np.mod(r - p[0], period) + p[0]
        r = np.sort(r)
        upper = np.append(p[1:], p[0] + period)
        return bool(np.all(p < r) and np.all(r < upper))
    if exterior:
        if r.size != p.size + 1:
            return False
        return bool(np.all(r[:-1] < p) and np.all(p < r[1:]))
    if r.size != p.size - 1:
        return False
    return bool(np.all(p[:-1] < r) and np.all(r < p[1:]))
