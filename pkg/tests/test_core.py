import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from betabead.core import (
    TWO_PI,
    CircularConfiguration,
    ConfigurationError,
    PeriodicLift,
    PointConfiguration,
    RngSpec,
    WeightedConfiguration,
    circular_distance,
    circular_hausdorff,
    configurations_to_csv,
    count_periodic,
    gamma_variates,
    interlaces,
    lift_circle_to_line,
    project_line_to_circle,
    read_configurations_csv,
    sample_dirichlet_weights,
    sample_gamma_weights,
)


# ---------------------------------------------------------------- RNG


def test_rng_replay_is_bit_identical():
    a = RngSpec(42, 3).generator().random(16)
    b = RngSpec(42, 3).generator().random(16)
    assert a.tobytes() == b.tobytes()


def test_rng_streams_differ():
    a = RngSpec(42, 0).generator().random(8)
    b = RngSpec(42, 1).generator().random(8)
    assert not np.array_equal(a, b)


def test_rng_string_round_trip():
    spec = RngSpec(7, 11)
    assert str(spec) == "philox4x64:7:11"
    assert RngSpec.parse(str(spec)) == spec
    assert spec.spawn(5) == RngSpec(7, 16)


@pytest.mark.parametrize("seed", [-1, 2**64])
def test_rng_rejects_out_of_range(seed):
    with pytest.raises(ValueError):
        RngSpec(seed)


# --------------------------------------------------------- configurations


def test_point_configuration_sorted_and_readonly():
    p = PointConfiguration([3.0, -1.0, 0.5])
    assert p.points.tolist() == [-1.0, 0.5, 3.0]
    assert p.origin_index == 1
    with pytest.raises(ValueError):
        p.points[0] = 9.0


def test_origin_index_convention():
    p = PointConfiguration([-2.0, -0.1, 0.0, 4.0])
    k = p.origin_index
    assert p.points[k - 1] < 0 <= p.points[k]


def test_duplicates_rejected():
    with pytest.raises(ConfigurationError):
        PointConfiguration([0.0, 1.0, 1.0])
    with pytest.raises(ConfigurationError):
        CircularConfiguration([0.0, TWO_PI])


def test_periodic_lift_canonicalises():
    p = PointConfiguration([-1.0, 2 * TWO_PI + 1.0], PeriodicLift(2))
    assert np.allclose(p.points, [1.0, 2 * TWO_PI - 1.0])
    assert p.period == pytest.approx(2 * TWO_PI)
    with pytest.raises(ConfigurationError):
        PointConfiguration([0.0], PeriodicLift(2))


def test_periodic_count_includes_translates():
    p = PointConfiguration([1.0], PeriodicLift(1))
    assert p.count(0.0, 3 * TWO_PI) == 3
    assert count_periodic(np.array([1.0]), TWO_PI, -TWO_PI, 0.5) == 1


def test_weighted_configuration_rules():
    cfg = PointConfiguration([0.0, 1.0], PeriodicLift(2))
    WeightedConfiguration(cfg, [1.5, 2.5], normalized=True)
    with pytest.raises(ConfigurationError):
        WeightedConfiguration(cfg, [1.0, 2.0], normalized=True)
    with pytest.raises(ConfigurationError):
        WeightedConfiguration(cfg, [1.0, 0.0])
    m = WeightedConfiguration.from_arrays([3.0, 1.0], [30.0, 10.0])
    assert m.points.tolist() == [1.0, 3.0]
    assert m.weights.tolist() == [10.0, 30.0]


def test_circular_weights_must_sum_to_one():
    with pytest.raises(ConfigurationError):
        CircularConfiguration([0.0, 1.0], [0.5, 0.6])


# ------------------------------------------------------------ lifting


@pytest.mark.parametrize(
    "angles, n, reps",
    [
        ([math.pi], 1, [math.pi]),
        ([0.0, math.pi], 2, [0.0, TWO_PI]),
        ([0.1, 2.0, 5.0], 3, [0.3, 6.0, 15.0]),
    ],
)
def test_lift_examples(angles, n, reps):
    line = lift_circle_to_line(CircularConfiguration(angles), n)
    assert np.allclose(line.points, reps, atol=1e-14)
    assert line.period == pytest.approx(TWO_PI * n)
    back = project_line_to_circle(line)
    assert np.allclose(back.angles, np.sort(angles), atol=1e-14)


def test_lift_points_lie_over_the_circle():
    c = CircularConfiguration([0.4, 1.9, 3.3, 6.0])
    line = lift_circle_to_line(c, 4)
    u = np.exp(1j * line.points / 4)
    assert np.allclose(np.sort(np.angle(u) % TWO_PI), c.angles)


def test_lift_errors():
    with pytest.raises(ConfigurationError):
        lift_circle_to_line(CircularConfiguration([0.1, 0.2]), 3)
    with pytest.raises(ConfigurationError):
        project_line_to_circle(PointConfiguration([0.1]))


@given(st.lists(st.floats(0.0, TWO_PI, exclude_max=True), min_size=1, max_size=12, unique=True))
@settings(max_examples=200, deadline=None)
def test_lift_project_round_trip(angles):
    a = np.sort(np.array(angles))
    if a.size > 1 and np.min(np.diff(np.append(a, a[0] + TWO_PI))) < 1e-6:
        return
    c = CircularConfiguration(a)
    back = project_line_to_circle(lift_circle_to_line(c, len(a)))
    assert np.max(circular_distance(back.angles, c.angles)) < 1e-12


# ------------------------------------------------------------ weights


def test_gamma_weight_mean():
    w = sample_gamma_weights(10**6, 2.0, RngSpec(1))
    assert abs(w.mean() - 2.0) < 0.01


def test_gamma_weight_exponential_median():
    # beta = 2 gives 2 * Exp(1), whose median is 2 ln 2
    w = sample_gamma_weights(10**6, 2.0, RngSpec(2))
    assert abs(np.mean(w > 2 * math.log(2)) - 0.5) < 0.005


def test_gamma_weight_edge_cases():
    assert sample_gamma_weights(0, 1.0, RngSpec(0)).size == 0
    with pytest.raises(ValueError):
        sample_gamma_weights(3, 0.0, RngSpec(0))


@pytest.mark.parametrize("shape", [0.25, 0.5, 0.9])
def test_small_shape_gamma_moments(shape):
    g = gamma_variates(shape, 10**6, RngSpec(3).generator())
    se_mean = math.sqrt(shape / 10**6)
    assert abs(g.mean() - shape) < 3 * se_mean
    # variance of the sample variance for Gamma(k): (mu4 - var^2)/N with mu4 = 3k^2 + 6k
    se_var = math.sqrt((3 * shape**2 + 6 * shape - shape**2) / 10**6)
    assert abs(g.var() - shape) < 3 * se_var


def test_dirichlet_normalised_and_uniform_marginal():
    w = sample_dirichlet_weights(2, 2.0, RngSpec(4), size=10**5)
    assert np.allclose(w.sum(axis=1), 1.0, atol=1e-12)
    assert sps.kstest(w[:, 0], "uniform").statistic < 0.01
    assert sample_dirichlet_weights(1, 3.0, RngSpec(5)).tolist() == [1.0]
    with pytest.raises(ValueError):
        sample_dirichlet_weights(0, 1.0, RngSpec(5))


# ------------------------------------------------------------ CSV


def test_csv_round_trip_full_precision():
    lines = [PointConfiguration([0.1, 1 / 3]),
             WeightedConfiguration.from_arrays([-2.0, math.pi], [1.25, math.e])]
    text = configurations_to_csv(lines)
    assert text.splitlines()[0] == "level,index,position,weight"
    back = read_configurations_csv(text)
    assert back[0].points.tolist() == lines[0].points.tolist()
    assert back[1].weights.tolist() == lines[1].weights.tolist()
    assert configurations_to_csv(back) == text


# ------------------------------------------------------------ interlacing


def test_interlaces_modes():
    assert interlaces([0, 2, 4], [1, 3])
    assert not interlaces([0, 2, 4], [1, 5])
    assert interlaces([0, 2], [-1, 1, 3], exterior=True)
    assert interlaces([1.0, 3.0], [2.0, 5.0], period=6.0)
    assert not interlaces([1.0, 3.0], [2.0, 2.5], period=6.0)


def test_circular_hausdorff_wraps():
    assert circular_hausdorff([TWO_PI - 1e-9, 1.0], [0.0, 1.0]) < 2e-9
    assert circular_hausdorff([0.0], [math.pi]) == pytest.approx(math.pi)
