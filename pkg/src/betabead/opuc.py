"""Orthogonal polynomials on the unit circle for finitely supported measures.

Conventions: Szego recursion ``Phi_{k+1}(z) = z Phi_k(z) - conj(alpha_k) Phi_k^*(z)``,
Schur function ``f = R_{alpha_0} o M_u o R_{alpha_1} o ... o M_u (alpha_{n-1})``
with ``R_a(z) = (a + z) / (1 + conj(a) z)``, and Caratheodory function
``F(u) = int (v + u)/(v - u) dsigma(v) = (1 + u f(u)) / (1 - u f(u))``.

An ``n``-atom probability measure has ``alpha_0 .. alpha_{n-2}`` in the open
disc and ``|alpha_{n-1}| = 1``; its atoms are the zeros of the
paraorthogonal polynomial ``Phi_n`` (equivalently the solutions of
``u f(u) = 1``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .core import TWO_PI, CircularConfiguration, ConfigurationError

MAX_ATOMS = 64


@dataclass(frozen=True)
class VerblunskySequence:
    alphas: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.alphas, dtype=complex).ravel()
        if a.size == 0:
            raise ConfigurationError("empty Verblunsky sequence")
        if np.any(np.abs(a[:-1]) >= 1):
            raise ConfigurationError("alpha_0..alpha_{n-2} must lie in the open disc")
        if abs(abs(a[-1]) - 1) > 1e-12:
            raise ConfigurationError("alpha_{n-1} must lie on the unit circle")
        a.setflags(write=False)
        object.__setattr__(self, "alphas", a)

    def __len__(self):
        return self.alphas.size

    def to_csv(self) -> str:
        rows = ["index,re,im"]
        rows += [f"{j},{a.real:.17g},{a.imag:.17g}" for j, a in enumerate(self.alphas)]
        return "\n".join(rows) + "\n"


@dataclass(frozen=True)
class SchurFunction:
    alphas: VerblunskySequence

    def __call__(self, u):
        return schur_eval(self, u)


def schur_eval(f: SchurFunction, u: complex) -> complex:
    """Evaluate the Geronimus composition in homogeneous coordinates.

    A Mobius pole in an intermediate stage is carried as ``(p : 0)`` and
    composed onward; only a final ``q == 0`` yields ``inf``.
    """
    if abs(u) > 1 + 1e-12:
        raise ValueError("Schur functions are evaluated on the closed disc")
    alphas = f.alphas.alphas
    p, q = complex(alphas[-1]), 1.0 + 0j
    for a in alphas[-2::-1]:
        p = u * p
        p, q = a * q + p, q + a.conjugate() * p
        s = max(abs(p), abs(q))
        p, q = p / s, q / s
    if q == 0:
        return complex(math.inf, 0.0)
    return p / q


def caratheodory_from_schur(f: SchurFunction, u: complex) -> complex:
    """``i (1 + u f(u)) / (1 - u f(u))`` -- the integral of ``i (v+u)/(v-u)`` against sigma."""
    w = u * schur_eval(f, u)
    if abs(1 - w) < 1e-14:
        raise ValueError("u lies in the support of the measure")
    return 1j * (1 + w) / (1 - w)


def h_to_eta(h: float) -> complex:
    """Unit complex ``eta`` with ``h = i (1 + eta) / (1 - eta)``."""
    return (h - 1j) / (h + 1j)


def eta_to_h(eta: complex) -> float:
    if abs(eta - 1) < 1e-15:
        return math.inf
    return float(np.real(1j * (1 + eta) / (1 - eta)))


def measure_to_verblunsky(sigma: CircularConfiguration) -> VerblunskySequence:
    """Verblunsky coefficients of ``sum rho_j delta(u_j)``.

    Runs the Szego recursion on the values ``Phi_k(u_j)``, ``Phi_k^*(u_j)`` at
    the atoms, with ``conj(alpha_k) = int z Phi_k dsigma / ||Phi_k||^2``.
    """
    if sigma.weights is None:
        raise ConfigurationError("measure_to_verblunsky needs weights")
    n = len(sigma)
    if n > MAX_ATOMS:
        raise ConfigurationError(f"at most {MAX_ATOMS} atoms are supported")
    u = sigma.support
    rho = sigma.weights
    phi = np.ones(n, dtype=complex)
    phis = np.ones(n, dtype=complex)
    alphas = np.empty(n, dtype=complex)
    for k in range(n):
        norm2 = np.sum(rho * np.abs(phi) ** 2)
        a = np.conj(np.sum(rho * u * phi)) / norm2
        alphas[k] = a
        phi, phis = u * phi - np.conj(a) * phis, phis - a * u * phi
    last = alphas[-1]
    if abs(abs(last) - 1) > 1e-6:
        raise ConfigurationError("ill-conditioned measure: last coefficient off the circle")
    alphas[-1] = last / abs(last)
    alphas[:-1] = np.where(np.abs(alphas[:-1]) < 1, alphas[:-1], alphas[:-1] * (1 - 1e-15))
    return VerblunskySequence(alphas)


def rotate_verblunsky(v: VerblunskySequence, eta: complex) -> VerblunskySequence:
    """Multiply every coefficient by ``eta**-1``."""
    if abs(abs(eta) - 1) > 1e-12:
        raise ValueError("eta must have modulus 1")
    return VerblunskySequence(v.alphas / eta)


def paraorthogonal_coefficients(v: VerblunskySequence) -> np.ndarray:
    """Monomial coefficients of ``Phi_n`` (highest degree first)."""
    phi = np.array([1.0 + 0j])
    for a in v.alphas:
        star = np.conj(phi[::-1])
        phi = np.append(phi, 0) - np.conj(a) * np.concatenate([[0], star])
    return phi


# --------------------------------------------------------- support extraction
#
# On |z| = 1, b_k = z Phi_k / Phi_k^* is a Blaschke product with b_0 = z and
# b_{k+1} = z (b_k - conj(a_k)) / (1 - a_k b_k); zeros of Phi_n solve
# b_{n-1} = conj(alpha_{n-1}). Running the recursion forward turns every
# coefficient near the circle into a staircase in theta, so we run it backward
# from the boundary value instead: c_{n-1} = conj(alpha_{n-1}),
# c_k = (y + conj(a_k)) / (1 + a_k y) with y = c_{k+1} / z, and solve c_0 = z.
# The lifted mismatch G(theta) = theta - arg c_0 is smooth and increasing, with
# G(theta + 2 pi) = G(theta) + 2 pi n, and each root solves G = 2 pi m.


@numba.njit(cache=True)
def _phase(alphas, theta, start):
    n = alphas.shape[0]
    zc = complex(math.cos(theta), -math.sin(theta))
    c = complex(math.cos(start), math.sin(start))
    acc = 0.0
    dc = 0.0
    for k in range(n - 2, -1, -1):
        a = alphas[k]
        y = c * zc
        v = 1.0 + a * y
        v2 = v.real * v.real + v.imag * v.imag
        acc += math.atan2(v.imag, v.real)
        dc = (1.0 - (a.real * a.real + a.imag * a.imag)) / v2 * (dc - 1.0)
        c = y * (v.conjugate() / v)
        c = c / abs(c)
    return n * theta + 2.0 * acc - start, 1.0 - dc


@numba.njit(cache=True)
def _support_angles(alphas, out):
    n = alphas.shape[0]
    last = alphas[n - 1]
    start = -math.atan2(last.imag, last.real)
    two_pi = 2.0 * math.pi
    g0, d0 = _phase(alphas, 0.0, start)
    m0 = math.floor(g0 / two_pi) + 1.0
    prev = 0.0
    x = (two_pi * m0 - g0) / d0
    for m in range(n):
        t = two_pi * (m0 + m)
        lo = prev
        hi = two_pi
        if x <= lo or x >= hi:
            x = 0.5 * (lo + hi)
        tol = 1e-15 * (abs(t) + n)
        df = 1.0
        dx_old = hi - lo
        dx = dx_old
        for _ in range(200):
            f, df = _phase(alphas, x, start)
            f -= t
            if f < 0.0:
                lo = x
            else:
                hi = x
            if abs(f) <= tol or hi - lo <= 8e-16 * max(hi, 1.0):
                break
            # safeguarded Newton: Newton can cycle across an inflection, so
            # bisect when its step leaves the bracket or fails to halve
            xn = x - f / df
            if not (lo < xn < hi) or abs(2.0 * f) > abs(dx_old * df):
                xn = 0.5 * (lo + hi)
            dx_old = dx
            dx = xn - x
            x = xn
        out[m] = x
        step = two_pi / df
        if m > 0:
            step = 0.5 * (step + x - prev)
        prev = x
        x = x + step


@numba.njit(cache=True)
def _support_angles_batch(alphas, out):
    for r in range(alphas.shape[0]):
        _support_angles(alphas[r], out[r])


def support_angles_batch(alphas: np.ndarray) -> np.ndarray:
    """Sorted atom angles in ``[0, 2 pi)`` for each row of ``alphas`` ``(R, n)``."""
    alphas = np.ascontiguousarray(np.atleast_2d(alphas), dtype=np.complex128)
    out = np.empty(alphas.shape, dtype=float)
    _support_angles_batch(alphas, out)
    out = np.mod(out, TWO_PI)
    return np.sort(out, axis=1)


def verblunsky_to_support(v: VerblunskySequence) -> CircularConfiguration:
    """Atoms of the measure with coefficients ``v`` (zeros of ``Phi_n``)."""
    angles = support_angles_batch(v.alphas[None, :])[0]
    u = np.exp(1j * angles)
    # the phase equation has exactly one solution per turn of 2 pi; a
    # collapsed pair means the coefficients were not valid
    if angles.size > 1 and np.min(np.diff(np.append(angles, angles[0] + TWO_PI))) <= 0:
        raise ConfigurationError("paraorthogonal roots are not simple")
    if np.max(np.abs(np.abs(u) - 1)) > 1e-10:
        raise ConfigurationError("root off the unit circle")
    return CircularConfiguration(angles)


def transition_oracle(sigma: CircularConfiguration, eta: complex) -> CircularConfiguration:
    """Solutions of the circle level-set equation via rotated Verblunsky coefficients.

    Solves ``sum_j i rho_j (u_j + u)/(u_j - u) = i (1 + eta)/(1 - eta)`` as the
    support of the measure whose coefficients are ``alpha_j / eta``.
    """
    return verblunsky_to_support(rotate_verblunsky(measure_to_verblunsky(sigma), eta))


def cmv_matrix(v: VerblunskySequence) -> np.ndarray:
    """Finite CMV matrix ``L M`` (its eigenvalues are the atoms)."""
    a = v.alphas
    n = a.size

    def theta_blocks(start):
        m = np.zeros((n, n), dtype=complex)
        j = 0
        if start == 1:
            m[0, 0] = 1.0
            j = 1
        k = start
        while j < n:
            if j + 1 < n:
                rho = math.sqrt(max(1 - abs(a[k]) ** 2, 0.0))
                m[j:j + 2, j:j + 2] = [[np.conj(a[k]), rho], [rho, -a[k]]]
                j += 2
            else:
                m[j, j] = np.conj(a[k])
                j += 1
            k += 2
        return m

    return theta_blocks(0) @ theta_blocks(1)
