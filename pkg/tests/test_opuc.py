import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from betabead import ensembles
from betabead.core import TWO_PI, CircularConfiguration, ConfigurationError, RngSpec, circular_distance
from betabead.opuc import (
    SchurFunction,
    VerblunskySequence,
    caratheodory_from_schur,
    cmv_matrix,
    eta_to_h,
    h_to_eta,
    measure_to_verblunsky,
    paraorthogonal_coefficients,
    rotate_verblunsky,
    schur_eval,
    support_angles_batch,
    transition_oracle,
    verblunsky_to_support,
)


def schur_series_oracle(angles, weights, dps=60):
    """Schur algorithm on truncated power series in high precision.

    ``F(u) = 1 + 2 sum_m c_m u^m`` with ``c_m = sum rho_j conj(u_j)^m``,
    ``u f(u) = (F - 1)/(F + 1)``, then ``alpha_k = f_k(0)`` and
    ``f_{k+1} = (f_k - alpha_k) / (u (1 - conj(alpha_k) f_k))``.
    """
    n = len(angles)
    with mpmath.workdps(dps):
        u = [mpmath.expj(mpmath.mpf(a)) for a in angles]
        rho = [mpmath.mpf(w) for w in weights]
        m = n + 2
        c = [sum(r * mpmath.conj(x) ** k for r, x in zip(rho, u)) for k in range(m + 1)]
        num = [mpmath.mpc(0)] + [2 * c[k] for k in range(1, m + 1)]   # F - 1
        den = [mpmath.mpc(2)] + [2 * c[k] for k in range(1, m + 1)]   # F + 1
        uf = series_div(num, den)
        f = uf[1:]
        out = []
        for _ in range(n):
            a = f[0]
            out.append(complex(a))
            top = [f[0] - a] + f[1:]
            bottom = [1 - mpmath.conj(a) * f[0]] + [-mpmath.conj(a) * t for t in f[1:]]
            if abs(bottom[0]) < mpmath.mpf(10) ** (-dps // 2):
                break
            f = series_div(top, bottom)[1:]
    return np.array(out)


def series_div(a, b):
    out = []
    for k in range(len(a)):
        s = a[k] - sum(out[j] * b[k - j] for j in range(k))
        out.append(s / b[0])
    return out


def random_measure(gen, n):
    while True:
        ang = np.sort(gen.uniform(0, TWO_PI, n))
        if n == 1 or np.min(circular_distance(ang, np.roll(ang, 1))) > 0.05:
            break
    w = gen.dirichlet(np.full(n, 2.0))
    return CircularConfiguration(ang, w / w.sum())


# ------------------------------------------------------------ Schur function


def test_schur_constant_for_one_coefficient():
    c = cmath.exp(0.7j)
    f = SchurFunction(VerblunskySequence([c]))
    for u in (0, 0.3 + 0.2j, -1):
        assert abs(f(u) - c) < 1e-15


def test_schur_two_coefficients():
    c = cmath.exp(-1.1j)
    f = SchurFunction(VerblunskySequence([0, c]))
    for u in (0.5, 0.1 - 0.9j, 1j):
        assert abs(f(u) - u * c) < 1e-15


@pytest.mark.parametrize("n", [1, 3, 6])
def test_schur_power_for_zero_coefficients(n):
    c = cmath.exp(2.0j)
    f = SchurFunction(VerblunskySequence([0] * (n - 1) + [c]))
    u = 0.6 * cmath.exp(0.4j)
    assert abs(f(u) - u ** (n - 1) * c) < 1e-14


def test_schur_matches_naive_composition():
    gen = RngSpec(19).generator()
    v = ensembles.sample_cbe_verblunsky(7, 1.0, gen)
    for u in 0.9 * np.exp(1j * gen.uniform(0, TWO_PI, 20)):
        z = v.alphas[-1]
        for a in v.alphas[-2::-1]:
            z = u * z
            z = (a + z) / (1 + np.conj(a) * z)
        assert abs(schur_eval(SchurFunction(v), u) - z) < 1e-13


@given(st.integers(1, 16), st.integers(0, 2**32))
@settings(max_examples=60, deadline=None)
def test_schur_bound(n, seed):
    gen = np.random.default_rng(seed)
    r = np.sqrt(gen.uniform(0, 1, n - 1)) * 0.999
    alphas = np.append(r * np.exp(1j * gen.uniform(0, TWO_PI, n - 1)), np.exp(1j * gen.uniform(0, TWO_PI)))
    f = SchurFunction(VerblunskySequence(alphas))
    us = np.sqrt(gen.uniform(0, 1, 1000)) * np.exp(1j * gen.uniform(0, TWO_PI, 1000))
    assert max(abs(f(u)) for u in us) <= 1 + 1e-12


def test_schur_rejects_outside_disc():
    with pytest.raises(ValueError):
        schur_eval(SchurFunction(VerblunskySequence([1.0])), 1.5)


# ------------------------------------------------------- Caratheodory


def test_caratheodory_zero_schur():
    # f = 0 is the limit of the all-zero sequence; u f(u) = u^n c vanishes at u = 0
    f = SchurFunction(VerblunskySequence([0, 0, 0, 1]))
    assert abs(caratheodory_from_schur(f, 0) - 1j) < 1e-15


def test_caratheodory_point_mass_antipode():
    u0 = cmath.exp(0.9j)
    f = SchurFunction(VerblunskySequence([u0.conjugate()]))
    assert abs(caratheodory_from_schur(f, -u0)) < 1e-15


def test_caratheodory_real_on_circle_and_matches_measure():
    gen = RngSpec(20).generator()
    sigma = random_measure(gen, 5)
    f = SchurFunction(measure_to_verblunsky(sigma))
    for t in gen.uniform(0, TWO_PI, 20):
        u = cmath.exp(1j * t)
        if np.min(circular_distance(t, sigma.angles)) < 1e-3:
            continue
        val = caratheodory_from_schur(f, u)
        direct = np.sum(1j * sigma.weights * (sigma.support + u) / (sigma.support - u))
        assert abs(val.imag) < 1e-10
        assert abs(val - direct) < 1e-9 * max(1.0, abs(direct))


def test_caratheodory_on_support_raises():
    u0 = cmath.exp(0.2j)
    f = SchurFunction(VerblunskySequence([u0.conjugate()]))
    with pytest.raises(ValueError):
        caratheodory_from_schur(f, u0)


# --------------------------------------------------------- measure map


def test_point_mass_coefficient():
    t = 1.3
    v = measure_to_verblunsky(CircularConfiguration([t], [1.0]))
    assert abs(v.alphas[0] - cmath.exp(-1j * t)) < 1e-15


def test_symmetric_two_point_measure():
    v = measure_to_verblunsky(CircularConfiguration([0.0, math.pi], [0.5, 0.5]))
    assert abs(v.alphas[0]) < 1e-15
    assert abs(abs(v.alphas[1]) - 1) < 1e-15


@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_measure_map_matches_series_schur_algorithm(n):
    gen = RngSpec(21 + n).generator()
    sigma = random_measure(gen, n)
    got = measure_to_verblunsky(sigma).alphas
    want = schur_series_oracle(sigma.angles, sigma.weights)
    assert np.max(np.abs(got - want)) < 1e-10


def test_measure_map_errors():
    with pytest.raises(ConfigurationError):
        measure_to_verblunsky(CircularConfiguration([0.0, 1.0]))


@given(st.integers(1, 6), st.integers(0, 2**32))
@settings(max_examples=150, deadline=None)
def test_round_trip_support(n, seed):
    sigma = random_measure(np.random.default_rng(seed), n)
    back = verblunsky_to_support(measure_to_verblunsky(sigma))
    assert np.max(circular_distance(back.angles, sigma.angles)) < 1e-8


# ------------------------------------------------------------ rotation


def test_rotation_examples():
    v = VerblunskySequence([0.5, 1.0])
    assert np.array_equal(rotate_verblunsky(v, 1.0).alphas, v.alphas)
    assert np.allclose(rotate_verblunsky(v, -1.0).alphas, [-0.5, -1.0])
    with pytest.raises(ValueError):
        rotate_verblunsky(v, 1.1)


@given(st.floats(0, TWO_PI), st.integers(0, 2**32))
@settings(max_examples=50, deadline=None)
def test_rotation_keeps_moduli(phi, seed):
    v = ensembles.sample_cbe_verblunsky(7, 2.0, np.random.default_rng(seed))
    w = rotate_verblunsky(v, cmath.exp(1j * phi))
    assert np.allclose(np.abs(w.alphas), np.abs(v.alphas), rtol=0, atol=1e-15)


def test_rotation_invariance_of_coefficient_law():
    a = ensembles.cbe_verblunsky_batch(10**5, 4, 2.0, RngSpec(22))
    eta = cmath.exp(0.83j)
    rot = a / eta
    assert np.array_equal(np.abs(rot), np.abs(a / eta))
    assert np.allclose(np.abs(rot), np.abs(a))
    for j in range(4):
        phase = np.mod(np.angle(rot[:, j]), TWO_PI) / TWO_PI
        assert sps.kstest(phase, "uniform").statistic < 0.01


def test_h_eta_conversions():
    for h in (-3.0, 0.0, 0.5, 10.0):
        eta = h_to_eta(h)
        assert abs(abs(eta) - 1) < 1e-15
        assert eta_to_h(eta) == pytest.approx(h, abs=1e-12)
        assert (1j * (1 + eta) / (1 - eta)).real == pytest.approx(h)
    assert eta_to_h(1.0) == math.inf


# ------------------------------------------------------------ support


@pytest.mark.parametrize("n", [1, 2, 5, 9])
def test_zero_coefficients_give_roots_of_unity(n):
    v = VerblunskySequence([0] * (n - 1) + [1.0])
    got = verblunsky_to_support(v).angles
    want = TWO_PI * np.arange(n) / n
    assert np.max(np.min(circular_distance(got[:, None], want[None, :]), axis=1)) < 1e-12


def test_single_coefficient_support():
    t = 2.2
    got = verblunsky_to_support(VerblunskySequence([cmath.exp(-1j * t)])).angles
    assert got[0] == pytest.approx(t, abs=1e-14)


@pytest.mark.parametrize("n, beta", [(3, 2.0), (12, 1.0), (30, 4.0), (40, 0.5)])
def test_support_matches_companion_and_cmv(n, beta):
    gen = RngSpec(23).generator()
    for _ in range(10):
        v = ensembles.sample_cbe_verblunsky(n, beta, gen)
        got = verblunsky_to_support(v).angles
        cmv = np.sort(np.mod(np.angle(np.linalg.eigvals(cmv_matrix(v))), TWO_PI))
        comp = np.sort(np.mod(np.angle(np.roots(paraorthogonal_coefficients(v))), TWO_PI))
        assert np.max(circular_distance(got, cmv)) < 1e-9
        if n <= 12:
            assert np.max(circular_distance(got, comp)) < 1e-8


def test_support_solves_schur_equation():
    gen = RngSpec(24).generator()
    v = ensembles.sample_cbe_verblunsky(6, 2.0, gen)
    f = SchurFunction(v)
    for t in verblunsky_to_support(v).angles:
        u = cmath.exp(1j * t)
        assert abs(u * f(u) - 1) < 1e-10


def test_support_near_circle_coefficients():
    # coefficients with modulus close to 1 make the phase function steep
    gen = RngSpec(25).generator()
    for _ in range(200):
        n = int(gen.integers(2, 9))
        r = 1 - 10.0 ** gen.uniform(-8, -1, n - 1)
        a = np.append(r * np.exp(1j * gen.uniform(0, TWO_PI, n - 1)), np.exp(1j * gen.uniform(0, TWO_PI)))
        v = VerblunskySequence(a)
        got = verblunsky_to_support(v).angles
        cmv = np.sort(np.mod(np.angle(np.linalg.eigvals(cmv_matrix(v))), TWO_PI))
        assert np.max(circular_distance(got, cmv)) < 1e-7


def test_batch_support_sorted_in_range():
    a = ensembles.cbe_verblunsky_batch(50, 10, 2.0, RngSpec(26))
    out = support_angles_batch(a)
    assert out.shape == (50, 10)
    assert np.all(np.diff(out, axis=1) > 0)
    assert out.min() >= 0 and out.max() < TWO_PI


# ------------------------------------------------------------ transition


def test_transition_point_mass_rotates():
    t, phi = 0.4, 1.7
    sigma = CircularConfiguration([t], [1.0])
    got = transition_oracle(sigma, cmath.exp(1j * phi)).angles
    assert got[0] == pytest.approx(t + phi, abs=1e-14)


def test_transition_identity_rotation():
    sigma = random_measure(RngSpec(27).generator(), 5)
    got = transition_oracle(sigma, 1.0).angles
    assert np.max(circular_distance(got, sigma.angles)) < 1e-9


def test_transition_solves_level_equation():
    gen = RngSpec(28).generator()
    sigma = random_measure(gen, 6)
    eta = cmath.exp(1j * gen.uniform(0.1, TWO_PI - 0.1))
    h = eta_to_h(eta)
    for t in transition_oracle(sigma, eta).angles:
        u = cmath.exp(1j * t)
        lhs = np.sum(1j * sigma.weights * (sigma.support + u) / (sigma.support - u))
        assert abs(lhs - h) < 1e-8 * (1 + abs(h))
