import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from obdpd.errors import InvalidArgument
from obdpd.numerics import dft_normalized, idft_normalized
from obdpd.scene import Scene, StationGeometry, propagation_delay, square_scene, steering_vector
from obdpd.signal import (
    ChannelDraw,
    QuantizedSnapshotSet,
    SignalSpec,
    SnapshotSet,
    draw_channel,
    frequency_grid,
    quantize,
    quantize_set,
    random_stream,
    synthesize,
)

S = 1 / np.sqrt(2)
P_TRUE = (1.0, 0.5)
ALPHABET = {complex(a, b) for a in (S, -S) for b in (S, -S)}

# products must not underflow, or the sign of a part is lost before quantization
finite = st.floats(-1e6, 1e6, allow_nan=False).filter(lambda v: v == 0 or abs(v) > 1e-200)


def quiet_draw(L, sigma2=1e-30):
    return ChannelDraw(np.ones(L), np.full(L, sigma2))


class TestQuantize:
    def test_both_positive(self):
        assert quantize(1 + 2j) == complex(S, S)

    def test_both_negative(self):
        assert quantize(-0.3 - 0.001j) == complex(-S, -S)

    def test_zero_imaginary_maps_up(self):
        assert quantize(complex(5.0, -0.0)) == complex(S, S)
        assert quantize(0j) == complex(S, S)

    def test_exact_alphabet_values(self):
        q = quantize(np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]))
        assert np.all(np.abs(q.real) == S) and np.all(np.abs(q.imag) == S)

    def test_nan_rejected(self):
        with pytest.raises(InvalidArgument):
            quantize(complex(np.nan, 1.0))
        with pytest.raises(InvalidArgument):
            quantize(np.array([1.0, np.nan]))

    @settings(max_examples=100, deadline=None)
    @given(finite, finite, st.floats(1e-6, 1e6))
    def test_scale_invariance(self, re, im, c):
        z = complex(re, im)
        assert quantize(c * z) == quantize(z)

    @settings(max_examples=100, deadline=None)
    @given(finite.filter(lambda v: v != 0), finite.filter(lambda v: v != 0))
    def test_same_quadrant(self, re, im):
        q = quantize(complex(re, im))
        assert q in ALPHABET
        assert np.sign(q.real) == np.sign(re) and np.sign(q.imag) == np.sign(im)


class TestSpecAndChannel:
    def test_noise_variance_0db(self):
        assert SignalSpec(16, 1.0, 0.0).noise_variance == 1.0

    def test_noise_variance_10db(self):
        assert SignalSpec(16, 1.0, 10.0).noise_variance == pytest.approx(0.1, rel=1e-15)

    @pytest.mark.parametrize("args", [(0,), (16, 0.0), (16, 1.0, np.inf)])
    def test_invalid_spec(self, args):
        with pytest.raises(InvalidArgument):
            SignalSpec(*args)

    def test_gain_statistics(self):
        spec = SignalSpec(16)
        draw = draw_channel(100_000, np.random.default_rng(11), spec)
        mags = np.abs(draw.gains)
        assert abs(mags.mean() - 1.0) <= 0.002
        assert abs(mags.std() - 0.1) <= 0.002
        phases = np.angle(draw.gains)
        assert phases.min() >= -np.pi and phases.max() <= np.pi
        assert abs(phases.mean()) < 0.02
        assert np.all(draw.noise_variances == 1.0)

    def test_unit_model(self):
        draw = draw_channel(4, np.random.default_rng(0), SignalSpec(16, snr_db=10.0), model="unit")
        np.testing.assert_array_equal(draw.gains, np.ones(4))
        np.testing.assert_allclose(draw.noise_variances, 0.1, rtol=1e-15)

    def test_unknown_model(self):
        with pytest.raises(InvalidArgument):
            draw_channel(4, np.random.default_rng(0), SignalSpec(16), model="rician")

    @pytest.mark.parametrize("gains,s2", [([0.0, 1.0], [1.0, 1.0]), ([1.0, 1.0], [1.0, 0.0]),
                                          ([1.0], [1.0, 1.0])])
    def test_invalid_draw(self, gains, s2):
        with pytest.raises(InvalidArgument):
            ChannelDraw(gains, s2)

    def test_streams_are_distinct_and_repeatable(self):
        a = random_stream(7, 3, "signal").standard_normal(4)
        assert np.array_equal(a, random_stream(7, 3, "signal").standard_normal(4))
        for other in (random_stream(7, 4, "signal"), random_stream(7, 3, "channel"),
                      random_stream(7, 3, "signal", axis_index=1), random_stream(8, 3, "signal")):
            assert not np.array_equal(a, other.standard_normal(4))


class TestSynthesize:
    def test_noiseless_rank_one(self):
        g = StationGeometry.facing((2.5, 2.5))
        scene = Scene([g])
        p = (0.0, 0.0)
        spec = SignalSpec(64)
        snaps = synthesize(scene, p, spec, quiet_draw(1), np.random.default_rng(1))
        X = snaps.freq_data[0]
        sv = np.linalg.svd(X, compute_uv=False)
        assert sv[1] < 1e-10
        # column structure a * s[k] * exp(-j w tau)
        a = steering_vector(g, p)
        tau = propagation_delay(g, p)
        s_bar = complex_normal_reference(spec, np.random.default_rng(1))
        expected = np.outer(a, s_bar * np.exp(-1j * frequency_grid(64, scene.sampling_period) * tau))
        np.testing.assert_allclose(X, expected, atol=1e-12)

    def test_time_is_inverse_dft(self):
        snaps = synthesize(square_scene(), P_TRUE, SignalSpec(128), quiet_draw(4, 1.0),
                           np.random.default_rng(2))
        for f, t in zip(snaps.freq_data, snaps.time_data):
            np.testing.assert_allclose(t, idft_normalized(f, axis=1), atol=1e-12)
            assert f.shape == (4, 128)

    def test_population_covariance(self):
        scene = square_scene()
        spec = SignalSpec(2 ** 16)
        rng = np.random.default_rng(3)
        draw = draw_channel(4, rng, spec)
        snaps = synthesize(scene, P_TRUE, spec, draw, rng)
        for ell, g in enumerate(scene.stations):
            X = snaps.freq_data[ell]
            R_hat = X @ np.conj(X).T / spec.num_samples
            a = steering_vector(g, P_TRUE)
            R = abs(draw.gains[ell]) ** 2 * np.outer(a, np.conj(a)) + draw.noise_variances[ell] * np.eye(4)
            assert np.linalg.norm(R_hat - R) <= 0.02 * np.trace(R).real

    def test_source_power_converges(self):
        spec = SignalSpec(2 ** 14, source_power=2.5)
        s_bar = complex_normal_reference(spec, np.random.default_rng(4))
        assert np.mean(np.abs(s_bar) ** 2) == pytest.approx(2.5, rel=0.03)

    def test_stationarity(self):
        snaps = synthesize(square_scene(), P_TRUE, SignalSpec(4096), draw_channel(
            4, np.random.default_rng(5), SignalSpec(4096)), np.random.default_rng(6))
        power = np.vstack([np.abs(t) ** 2 for t in snaps.time_data])
        blocks = power.reshape(power.shape[0], 16, 256).mean(axis=(0, 2))
        assert blocks.std() / blocks.mean() < 0.05

    def test_deterministic(self):
        args = (square_scene(), P_TRUE, SignalSpec(64))
        draw = draw_channel(4, np.random.default_rng(9), args[2])
        a = synthesize(*args, draw, np.random.default_rng(10))
        b = synthesize(*args, draw, np.random.default_rng(10))
        for x, y in zip(a.freq_data + a.time_data, b.freq_data + b.time_data):
            assert x.tobytes() == y.tobytes()

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidArgument):
            synthesize(square_scene(), P_TRUE, SignalSpec(16), quiet_draw(3), np.random.default_rng(0))

    def test_snapshots_are_read_only(self):
        snaps = synthesize(square_scene(), P_TRUE, SignalSpec(16), quiet_draw(4, 1.0),
                           np.random.default_rng(0))
        with pytest.raises(ValueError):
            snaps.freq_data[0][0, 0] = 0


def complex_normal_reference(spec, rng):
    # the source spectrum is the first draw taken from the stream
    return np.sqrt(spec.source_power / 2) * (rng.standard_normal(spec.num_samples)
                                              + 1j * rng.standard_normal(spec.num_samples))


class TestQuantizeSet:
    def snaps(self, seed=0):
        return synthesize(square_scene(), P_TRUE, SignalSpec(64), quiet_draw(4, 1.0),
                          np.random.default_rng(seed))

    def test_alphabet_and_spectrum(self):
        q = quantize_set(self.snaps())
        assert isinstance(q, QuantizedSnapshotSet)
        for t, f in zip(q.time_data, q.freq_data):
            assert np.all(np.abs(t.real) == S) and np.all(np.abs(t.imag) == S)
            np.testing.assert_allclose(f, dft_normalized(t, axis=1), atol=1e-14)

    def test_station_scaling_is_invisible(self):
        s = self.snaps(1)
        q = quantize_set(s)
        scaled = SnapshotSet.from_time([t * c for t, c in zip(s.time_data, (0.01, 3.0, 1.0, 1e5))])
        q2 = quantize_set(scaled)
        for a, b in zip(q.time_data + q.freq_data, q2.time_data + q2.freq_data):
            assert a.tobytes() == b.tobytes()

    def test_all_ones(self):
        q = quantize_set(SnapshotSet.from_time([np.ones((2, 8))]))
        assert np.all(q.time_data[0] == complex(S, S))

    def test_idempotent(self):
        q = quantize_set(self.snaps(2))
        again = quantize_set(SnapshotSet.from_time(q.time_data))
        for a, b in zip(q.time_data + q.freq_data, again.time_data + again.freq_data):
            assert a.tobytes() == b.tobytes()
