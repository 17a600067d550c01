"""Tests for sample-based estimation of distributions and functions."""

import numpy as np
import pytest

from hdtransform.core import Hypervector
from hdtransform.empirical import (
    DensityPolicy,
    Sample,
    density_eval,
    empirical_distribution,
    empirical_function,
    load_sample,
)
from hdtransform.encoders import BIPOLAR_SIGN, EncoderSpec, Interval, make_encoder
from hdtransform.errors import RejectedInputError
from hdtransform.normalization import solve_normalized
from hdtransform.transform import DISTRIBUTION, TransformVec, inverse_eval_many


# -- oracles ----------------------------------------------------------------

def two_bump_density(x, sigma=0.12):
    x = np.asarray(x, dtype=np.float64)
    z = 1.0 / (sigma * np.sqrt(2.0 * np.pi))
    return 0.5 * z * (np.exp(-((x - 0.3) ** 2) / (2 * sigma**2))
                      + np.exp(-((x - 0.7) ** 2) / (2 * sigma**2)))


def draw_two_bump(rng, m, sigma=0.12):
    out = []
    while len(out) < m:
        c = 0.3 if rng.random() < 0.5 else 0.7
        v = rng.normal(c, sigma)
        if 0.0 <= v <= 1.0:
            out.append(v)
    return tuple(out)


def ne_for(dims=20000, l=0.1, seed=0):
    spec = EncoderSpec(domain=Interval(0.0, 1.0), flavor=BIPOLAR_SIGN,
                       dims=dims, seed=seed, length_scale=l)
    return solve_normalized(make_encoder(spec))


@pytest.fixture(scope="module")
def ne():
    return ne_for()


# -- sample container and CSV loading ---------------------------------------

class TestSample:
    def test_label_length_mismatch(self):
        with pytest.raises(RejectedInputError):
            Sample((0.1, 0.2), (1.0,))

    def test_non_finite_labels(self):
        with pytest.raises(RejectedInputError):
            Sample((0.1,), (np.nan,))

    def test_basic_accessors(self):
        s = Sample((0.1, 0.2), (1.0, 2.0))
        assert len(s) == 2 and s.labelled
        assert not Sample((0.1,)).labelled

    def test_csv_unlabelled_floats(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("0.1\n0.25\n0.9\n")
        s = load_sample(p)
        assert s.inputs == (0.1, 0.25, 0.9) and s.labels is None

    def test_csv_labelled(self, tmp_path):
        p = tmp_path / "xy.csv"
        p.write_text("0.1,1.5\n0.2,-0.5\n")
        s = load_sample(p, labelled=True)
        assert s.inputs == (0.1, 0.2)
        assert s.labels == (1.5, -0.5)

    def test_csv_sequences_stay_strings(self, tmp_path):
        p = tmp_path / "seq.csv"
        p.write_text("ACDKL\nGHKLM\n")
        s = load_sample(p)
        assert s.inputs == ("ACDKL", "GHKLM")

    def test_csv_multi_field_inputs(self, tmp_path):
        p = tmp_path / "pairs.csv"
        p.write_text("0.1,0.2,3.0\n0.4,0.5,4.0\n")
        s = load_sample(p, labelled=True)
        assert s.inputs == ((0.1, 0.2), (0.4, 0.5))
        assert s.labels == (3.0, 4.0)

    def test_csv_labelled_needs_two_fields(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("0.1\n")
        with pytest.raises(RejectedInputError):
            load_sample(p, labelled=True)


class TestDensityPolicy:
    def test_floor_must_be_positive(self):
        with pytest.raises(RejectedInputError):
            DensityPolicy(density_floor=0.0)

    def test_default_floor_tracks_length_scale(self, ne):
        assert np.isclose(DensityPolicy().floor_for(ne), 0.05 / np.sqrt(0.1))
        assert DensityPolicy(density_floor=0.4).floor_for(ne) == 0.4


# -- distribution estimation ------------------------------------------------

class TestEmpiricalDistribution:
    def test_single_point_is_delta(self, ne):
        P = empirical_distribution(Sample((0.37,)), ne)
        assert np.array_equal(P.vec.values, ne.delta(0.37).values)
        assert P.role == DISTRIBUTION

    def test_empty_sample_rejected(self, ne):
        with pytest.raises(RejectedInputError):
            empirical_distribution(Sample(()), ne)

    def test_permutation_gives_identical_bits(self, ne):
        rng = np.random.default_rng(11)
        xs = tuple(rng.uniform(0.0, 1.0, 60))
        perm = tuple(np.array(xs)[rng.permutation(60)])
        a = empirical_distribution(Sample(xs), ne)
        b = empirical_distribution(Sample(perm), ne)
        assert np.array_equal(a.vec.values, b.vec.values)

    def test_mixture_density_interior_error(self, ne):
        rng = np.random.default_rng(1)
        P = empirical_distribution(Sample(draw_two_bump(rng, 400)), ne)
        xs = np.linspace(0.1, 0.9, 81)
        got = np.array([density_eval(P, ne, x) for x in xs])
        assert np.abs(got - two_bump_density(xs)).mean() <= 0.15

    def test_density_at_cluster_centers(self, ne):
        rng = np.random.default_rng(1)
        P = empirical_distribution(Sample(draw_two_bump(rng, 400)), ne)
        for c in (0.3, 0.7):
            true = float(two_bump_density(c))
            assert abs(density_eval(P, ne, c) - true) <= 0.2 * true

    def test_far_field_magnitude(self, ne):
        rng = np.random.default_rng(0)
        P = empirical_distribution(Sample(tuple(rng.uniform(0.3, 0.7, 400))), ne)
        raw = DensityPolicy(clip_negative=False)
        for x in (0.05, 0.1, 0.15, 0.85, 0.9, 0.95):
            assert abs(density_eval(P, ne, x, raw)) <= 5.0 / np.sqrt(ne.dims)

    def test_unit_mass(self, ne):
        rng = np.random.default_rng(3)
        P = empirical_distribution(Sample(draw_two_bump(rng, 400)), ne)
        raw = DensityPolicy(clip_negative=False)
        mass = sum(w * density_eval(P, ne, x, raw)
                   for x, w in zip(ne.grid.points, ne.grid.weights))
        assert abs(mass - 1.0) <= 5e-3

    def test_clipping(self, ne):
        neg = TransformVec(Hypervector(-ne.delta(0.5).values, "real"),
                           DISTRIBUTION, ne.fingerprint)
        assert density_eval(neg, ne, 0.5) == 0.0
        assert density_eval(neg, ne, 0.5, DensityPolicy(clip_negative=False)) < -5.0

    def test_role_and_encoder_checks(self, ne):
        P = empirical_distribution(Sample((0.4,)), ne)
        F = TransformVec(P.vec, "function", ne.fingerprint)
        with pytest.raises(RejectedInputError):
            density_eval(F, ne, 0.4)
        other = ne_for(seed=5)
        with pytest.raises(RejectedInputError):
            density_eval(P, other, 0.4)


# -- function estimation ----------------------------------------------------

class TestEmpiricalFunction:
    def test_sine_equispaced_interior_error(self, ne):
        x = (np.arange(50) + 0.5) / 50
        s = Sample(tuple(x), tuple(np.sin(2 * np.pi * x)))
        F = empirical_function(s, ne)
        xs = np.linspace(0.1, 0.9, 61)
        got = inverse_eval_many(F, ne, xs)
        assert np.abs(got - np.sin(2 * np.pi * xs)).max() <= 0.25

    def test_sine_random_draws_stay_bounded(self, ne):
        # random gaps inflate the density correction; calibrated guard level
        rng = np.random.default_rng(0)
        x = rng.uniform(0.0, 1.0, 50)
        s = Sample(tuple(x), tuple(np.sin(2 * np.pi * x)))
        F = empirical_function(s, ne)
        xs = np.linspace(0.1, 0.9, 61)
        got = inverse_eval_many(F, ne, xs)
        assert np.abs(got - np.sin(2 * np.pi * xs)).max() <= 0.45

    def test_constant_recovery(self, ne):
        x = (np.arange(100) + 0.5) / 100
        s = Sample(tuple(x), tuple(np.full(100, 2.0)))
        F = empirical_function(s, ne)
        got = inverse_eval_many(F, ne, np.linspace(0.1, 0.9, 41))
        assert np.abs(got / 2.0 - 1.0).max() <= 0.1

    def test_oversampling_left_half_changes_little(self, ne):
        base = np.linspace(0.0, 1.0, 101)
        extra = np.linspace(0.0, 0.5, 51)
        xs = np.linspace(0.1, 0.9, 61)
        outs = []
        for pts in (base, np.concatenate([base, extra])):
            s = Sample(tuple(pts), tuple(np.sin(2 * np.pi * pts)))
            outs.append(inverse_eval_many(empirical_function(s, ne), ne, xs))
        assert np.abs(outs[1] - outs[0]).max() <= 0.1

    def test_floor_dominated_closed_form(self, ne):
        rng = np.random.default_rng(5)
        x = rng.uniform(0.0, 1.0, 40)
        y = np.cos(2 * np.pi * x)
        s = Sample(tuple(x), tuple(y))
        F = empirical_function(s, ne, DensityPolicy(density_floor=100.0))
        manual = np.zeros(ne.dims)
        for xi, yi in zip(x, y):
            manual += yi * ne.delta_many([xi])[0]
        manual /= 40 * 100.0
        assert np.abs(F.vec.values - manual).max() <= 1e-15

    def test_permutation_gives_identical_bits(self, ne):
        rng = np.random.default_rng(9)
        x = rng.uniform(0.0, 1.0, 30)
        y = np.sin(2 * np.pi * x)
        perm = rng.permutation(30)
        a = empirical_function(Sample(tuple(x), tuple(y)), ne)
        b = empirical_function(Sample(tuple(x[perm]), tuple(y[perm])), ne)
        assert np.array_equal(a.vec.values, b.vec.values)

    def test_requires_labels_and_points(self, ne):
        with pytest.raises(RejectedInputError):
            empirical_function(Sample((0.1, 0.2)), ne)
        with pytest.raises(RejectedInputError):
            empirical_function(Sample((), ()), ne)


class TestConsistency:
    def test_smaller_scale_with_more_data_not_worse(self, ne):
        rng = np.random.default_rng(2)
        sA = Sample(draw_two_bump(rng, 400))
        sB = Sample(draw_two_bump(rng, 1600))
        ne05 = ne_for(l=0.05)
        xs = np.linspace(0.1, 0.9, 81)
        true = two_bump_density(xs)
        PA = empirical_distribution(sA, ne)
        PB = empirical_distribution(sB, ne05)
        eA = np.abs([density_eval(PA, ne, x) for x in xs] - true).mean()
        eB = np.abs([density_eval(PB, ne05, x) for x in xs] - true).mean()
        assert eB <= eA
