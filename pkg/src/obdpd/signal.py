"""Measurement synthesis and the complex one-bit quantizer.

The source is a flat-spectrum circular complex Gaussian process, generated
directly as i.i.d. DFT coefficients over all N bins. Propagation delays are
applied exactly as frequency-domain phase ramps ``exp(-1j*omega_k*tau)``
with ``omega_k = 2*pi*k/(N*T_s)``, k = 0..N-1, which is a circular
(fractional) shift in time. Quantization happens in the time domain.
"""

import zlib
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .numerics import dft_normalized, idft_normalized
from .scene import as_position, propagation_delays, steering_vectors

INV_SQRT2 = 1.0 / np.sqrt(2.0)


def _readonly(arrays):
    out = []
    for a in arrays:
        a = np.array(a, dtype=complex)
        a.setflags(write=False)
        out.append(a)
    return tuple(out)


# --- random streams -------------------------------------------------------

def purpose_code(tag):
    return zlib.crc32(tag.encode("utf-8"))


def random_stream(master_seed, trial_index, purpose, axis_index=0):
    """Independent generator keyed by (axis value, trial, purpose).

    The stream is ``SeedSequence(master_seed, spawn_key=(axis_index,
    trial_index, crc32(purpose)))``, so any trial can be regenerated on its
    own, in any order or process.
    """
    ss = np.random.SeedSequence(int(master_seed),
                                spawn_key=(int(axis_index), int(trial_index), purpose_code(purpose)))
    return np.random.default_rng(ss)


def complex_normal(rng, shape, variance=1.0):
    """Zero-mean circular complex Gaussian samples with ``E|z|^2 = variance``."""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


# --- model types ----------------------------------------------------------

@dataclass(frozen=True)
class SignalSpec:
    num_samples: int
    source_power: float = 1.0
    snr_db: float = 0.0

    def __post_init__(self):
        if int(self.num_samples) != self.num_samples or self.num_samples < 1:
            raise InvalidArgument("num_samples must be a positive integer")
        object.__setattr__(self, "num_samples", int(self.num_samples))
        if not self.source_power > 0:
            raise InvalidArgument("source_power must be positive")
        if not np.isfinite(self.snr_db):
            raise InvalidArgument("snr_db must be finite")

    @property
    def noise_variance(self):
        """Noise variance giving the nominal SNR ``|b|^2 R_s(0) / sigma^2`` with ``|b| = 1``."""
        return self.source_power / 10.0 ** (self.snr_db / 10.0)


@dataclass(frozen=True)
class ChannelDraw:
    gains: np.ndarray
    noise_variances: np.ndarray

    def __post_init__(self):
        b = np.array(self.gains, dtype=complex)
        s2 = np.array(self.noise_variances, dtype=float)
        if b.ndim != 1 or s2.shape != b.shape:
            raise InvalidArgument("gains and noise_variances must be 1-D with equal length")
        if np.any(np.abs(b) <= 0) or np.any(~(s2 > 0)):
            raise InvalidArgument("channel gains must be non-zero and noise variances positive")
        b.setflags(write=False)
        s2.setflags(write=False)
        object.__setattr__(self, "gains", b)
        object.__setattr__(self, "noise_variances", s2)


def draw_channel(num_stations, rng, spec, model="random"):
    """Draw per-station channel coefficients and noise variances.

    ``model="random"``: ``|b| ~ N(1, 0.1^2)`` (redrawn while non-positive),
    phase ``~ U[-pi, pi)``. ``model="unit"``: ``b = 1`` for every station.
    Both use the common noise variance implied by ``spec.snr_db``.
    """
    if num_stations < 1:
        raise InvalidArgument("need at least one station")
    sigma2 = np.full(num_stations, spec.noise_variance)
    if model == "unit":
        return ChannelDraw(np.ones(num_stations, dtype=complex), sigma2)
    if model != "random":
        raise InvalidArgument(f"unknown channel model {model!r}")
    mags = rng.normal(1.0, 0.1, num_stations)
    while np.any(mags <= 0):
        bad = mags <= 0
        mags[bad] = rng.normal(1.0, 0.1, int(bad.sum()))
    phases = rng.uniform(-np.pi, np.pi, num_stations)
    return ChannelDraw(mags * np.exp(1j * phases), sigma2)


@dataclass(frozen=True)
class SnapshotSet:
    """Unquantized measurements: one (M, N) array per station in both domains."""

    freq_data: tuple
    time_data: tuple

    def __post_init__(self):
        object.__setattr__(self, "freq_data", _readonly(self.freq_data))
        object.__setattr__(self, "time_data", _readonly(self.time_data))

    @classmethod
    def from_time(cls, time_data):
        time_data = [np.asarray(x, dtype=complex) for x in time_data]
        return cls([dft_normalized(x, axis=1) for x in time_data], time_data)

    @property
    def num_stations(self):
        return len(self.freq_data)

    @property
    def num_samples(self):
        return self.freq_data[0].shape[1]


@dataclass(frozen=True)
class QuantizedSnapshotSet:
    """One-bit measurements. Carries no reference to the unquantized data."""

    time_data: tuple
    freq_data: tuple

    def __post_init__(self):
        object.__setattr__(self, "time_data", _readonly(self.time_data))
        object.__setattr__(self, "freq_data", _readonly(self.freq_data))

    @property
    def num_stations(self):
        return len(self.freq_data)

    @property
    def num_samples(self):
        return self.freq_data[0].shape[1]


# --- operations -----------------------------------------------------------

def quantize(z):
    """Complex one-bit quantizer, ``(sgn(Re z) + 1j*sgn(Im z)) / sqrt(2)``.

    Works elementwise on arrays. ``sgn(0)`` is taken as +1 (including -0.0).
    """
    z = np.asarray(z)
    if np.any(np.isnan(z)):
        raise InvalidArgument("cannot quantize NaN")
    re = np.where(np.real(z) >= 0, INV_SQRT2, -INV_SQRT2)
    im = np.where(np.imag(z) >= 0, INV_SQRT2, -INV_SQRT2)
    out = re + 1j * im
    return complex(out) if out.ndim == 0 else out


def frequency_grid(num_samples, sampling_period):
    """``omega_k = 2*pi*k / (N*T_s)`` for k = 0..N-1 (no negative-frequency folding)."""
    return 2.0 * np.pi * np.arange(num_samples) / (num_samples * sampling_period)


def synthesize(scene, p_true, spec, draw, rng):
    """Draw one realisation of the frequency-domain model for every station."""
    p_true = as_position(p_true)
    L = scene.num_stations
    if len(draw.gains) != L:
        raise InvalidArgument(f"channel draw has {len(draw.gains)} stations, scene has {L}")
    N = spec.num_samples
    omega = frequency_grid(N, scene.sampling_period)
    s_bar = complex_normal(rng, N, spec.source_power)
    freq = []
    for ell, g in enumerate(scene.stations):
        a = steering_vectors(g, p_true[None, :])[0]
        tau = propagation_delays(g, p_true[None, :], scene.propagation_speed)[0]
        delayed = s_bar * np.exp(-1j * omega * tau)
        noise = complex_normal(rng, (g.num_elements, N), draw.noise_variances[ell])
        freq.append(draw.gains[ell] * np.outer(a, delayed) + noise)
    time = [idft_normalized(x, axis=1) for x in freq]
    return SnapshotSet(freq, time)


def quantize_set(snapshots):
    """One-bit quantize the time-domain samples and re-derive their spectrum."""
    time_q = [quantize(x) for x in snapshots.time_data]
    return QuantizedSnapshotSet(time_q, [dft_normalized(y, axis=1) for y in time_q])
