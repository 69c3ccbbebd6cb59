"""Covariance statistics, DPD / one-bit DPD objectives and grid search.

Both objectives share one shape: for a candidate position p, build the
L x L matrix

    D_ij(p) = N * a_i(p)^H  C_ij(Delta_ij(p))  a_j(p)

and score p by its largest eigenvalue. They differ only in the covariance
provider ``C``:

* :class:`SampleCovariance` returns the phase-compensated sample cross
  covariance of the unquantized spectra.
* :class:`OneBitCovariance` sees only the one-bit data and returns the
  elementwise ``sine`` of ``pi/2`` times the quantized cross covariance,
  undoing the arcsine law.

Per trial, each provider caches the per-bin outer products of every station
pair once. Evaluating a whole grid then only needs the lag-weighted sum of
those products, which is a trigonometric polynomial in the lag; for large
grids it is sampled at Chebyshev nodes spanning the grid's lag range and
interpolated barycentrically, which agrees with the direct sum to rounding
level.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometry, InvalidArgument, NumericalFailure
from .numerics import hermitian_lambda_max_batch
from .scene import SearchGrid, as_points, as_position, delay_differences, grid_points, steering_vectors
from .signal import QuantizedSnapshotSet, SnapshotSet, frequency_grid

log = logging.getLogger(__name__)

_CHEB_EXTRA_NODES = 24
_CHEB_OVERSAMPLE = 1.25


# --- lag-weighted sums ------------------------------------------------------

def pair_products(Xi, Xj):
    """Per-bin outer products ``x_i[k] x_j[k]^H`` flattened to shape (N, Mi*Mj)."""
    N = Xi.shape[1]
    return np.einsum("mk,nk->kmn", Xi, np.conj(Xj)).reshape(N, -1)


def lag_sum_direct(products, omega, lags):
    """``(1/N) sum_k products[k] exp(1j*omega_k*lag)`` for each lag, shape (G, P)."""
    lags = np.asarray(lags, dtype=float)
    return np.exp(1j * np.outer(lags, omega)) @ products / len(omega)


def chebyshev_node_count(omega_max, span):
    half_band = omega_max * span / 2.0
    return int(np.ceil(_CHEB_OVERSAMPLE * half_band)) + _CHEB_EXTRA_NODES


def lag_sum(products, omega, lags):
    """Same as :func:`lag_sum_direct`, via Chebyshev interpolation when cheaper.

    The sum is an entire function of the lag whose Chebyshev coefficients on
    an interval of half-width h decay like Bessel J_n(omega_max*h), so a
    modest oversampling of ``omega_max*h`` nodes reaches machine precision.
    """
    lags = np.asarray(lags, dtype=float)
    lo, hi = float(lags.min()), float(lags.max())
    if hi == lo:
        one = lag_sum_direct(products, omega, lags[:1])
        return np.broadcast_to(one, (len(lags), one.shape[1]))
    K = chebyshev_node_count(float(omega[-1]), hi - lo)
    if len(lags) <= 2 * K:
        return lag_sum_direct(products, omega, lags)
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    q = np.arange(K)
    t_nodes = np.cos(np.pi * q / (K - 1))
    w = (-1.0) ** q
    w[0] *= 0.5
    w[-1] *= 0.5
    at_nodes = lag_sum_direct(products, omega, mid + half * t_nodes)

    t = (lags - mid) / half
    diff = t[:, None] - t_nodes[None, :]
    exact = diff == 0
    with np.errstate(divide="ignore"):
        C = w / diff
    hit = exact.any(axis=1)
    if hit.any():
        C[hit] = exact[hit].astype(float)
    C /= C.sum(axis=1, keepdims=True)
    return C @ at_nodes


# --- covariance providers ---------------------------------------------------

@dataclass(frozen=True)
class CrossCovarianceEstimate:
    matrix: np.ndarray
    station_pair: tuple
    lag_seconds: float


def sine(z):
    """``sin(Re z) + 1j*sin(Im z)``, elementwise."""
    return np.sin(z.real) + 1j * np.sin(z.imag)


def clamp_parts(z, bound=1.0):
    return np.clip(z.real, -bound, bound) + 1j * np.clip(z.imag, -bound, bound)


class CovarianceProvider:
    """Lag-indexed cross covariance estimates for every station pair.

    Products for all pairs ``i <= j`` are computed once in the constructor and
    are read-only afterwards. Pairs with ``i > j`` are served by conjugate
    symmetry, ``C_ji(-lag) = C_ij(lag)^H``.
    """

    def __init__(self, freq_data, sampling_period):
        self.num_stations = len(freq_data)
        self.num_samples = freq_data[0].shape[1]
        self.sampling_period = sampling_period
        self.omega = frequency_grid(self.num_samples, sampling_period)
        self._shapes = [x.shape[0] for x in freq_data]
        self._products = {}
        for i in range(self.num_stations):
            for j in range(i, self.num_stations):
                self._products[i, j] = pair_products(freq_data[i], freq_data[j])

    def _check_pair(self, i, j):
        L = self.num_stations
        if not (0 <= i < L and 0 <= j < L):
            raise InvalidArgument(f"station pair ({i}, {j}) out of range for {L} stations")

    def raw(self, i, j, lags, direct=False):
        """Untransformed ``(1/N) sum_k x_i[k] x_j[k]^H exp(1j*omega_k*lag)``, shape (G, Mi, Mj)."""
        self._check_pair(i, j)
        lags = np.atleast_1d(np.asarray(lags, dtype=float))
        if i > j:
            return np.conj(np.swapaxes(self.raw(j, i, -lags, direct), -1, -2))
        f = lag_sum_direct if direct else lag_sum
        out = f(self._products[i, j], self.omega, lags)
        return out.reshape(len(lags), self._shapes[i], self._shapes[j])

    def transform(self, raw):
        return raw

    def __call__(self, i, j, lags, direct=False):
        return self.transform(self.raw(i, j, lags, direct))


class SampleCovariance(CovarianceProvider):
    """Phase-compensated sample cross covariance of unquantized spectra."""

    def __init__(self, snapshots, sampling_period):
        if not isinstance(snapshots, SnapshotSet):
            raise TypeError("SampleCovariance needs a SnapshotSet")
        super().__init__(snapshots.freq_data, sampling_period)


class OneBitCovariance(CovarianceProvider):
    """Arcsine-inverted cross covariance estimated from one-bit data only.

    ``clamp`` limits the real and imaginary parts of the quantized sum to
    [-1, 1] before the sine; with fractional lags they can overshoot by
    rounding-level amounts.
    """

    def __init__(self, quantized, sampling_period, clamp=True):
        if not isinstance(quantized, QuantizedSnapshotSet):
            raise TypeError("OneBitCovariance accepts only a QuantizedSnapshotSet")
        super().__init__(quantized.freq_data, sampling_period)
        self.clamp = clamp

    def transform(self, raw):
        # operate on the interleaved real/imag view to avoid complex temporaries
        parts = np.array(raw, dtype=complex, order="C").view(np.float64)
        if self.clamp:
            np.clip(parts, -1.0, 1.0, out=parts)
        parts *= 0.5 * np.pi
        np.sin(parts, out=parts)
        return parts.view(complex)


def unquantized_cross_cov(snapshots, i, j, lag, sampling_period):
    """Direct evaluation of the sample cross covariance at one lag (seconds)."""
    if not isinstance(snapshots, SnapshotSet):
        raise TypeError("expected a SnapshotSet")
    _check_station_pair(snapshots.num_stations, i, j)
    Xi, Xj = snapshots.freq_data[i], snapshots.freq_data[j]
    omega = frequency_grid(Xi.shape[1], sampling_period)
    w = np.exp(1j * omega * lag)
    return CrossCovarianceEstimate((Xi * w) @ np.conj(Xj).T / Xi.shape[1], (i, j), float(lag))


def onebit_cross_cov(quantized, i, j, lag, sampling_period, clamp=True):
    """Direct evaluation of the one-bit covariance reconstruction at one lag."""
    if not isinstance(quantized, QuantizedSnapshotSet):
        raise TypeError("expected a QuantizedSnapshotSet")
    _check_station_pair(quantized.num_stations, i, j)
    Yi, Yj = quantized.freq_data[i], quantized.freq_data[j]
    omega = frequency_grid(Yi.shape[1], sampling_period)
    w = np.exp(1j * omega * lag)
    z = (Yi * w) @ np.conj(Yj).T / Yi.shape[1]
    if clamp:
        z = clamp_parts(z)
    return CrossCovarianceEstimate(sine(0.5 * np.pi * z), (i, j), float(lag))


def _check_station_pair(L, i, j):
    if not (0 <= i < L and 0 <= j < L):
        raise InvalidArgument(f"station pair ({i}, {j}) out of range for {L} stations")


def arcsine_forward(C12, diag1, diag2):
    """Population correlation of one-bit quantized circular Gaussian vectors.

    Returns ``(2/pi) * asine(diag1**-0.5 * C12 * diag2**-0.5)`` where
    ``asine(z) = arcsin(Re z) + 1j*arcsin(Im z)`` acts elementwise.
    """
    C12 = np.asarray(C12, dtype=complex)
    d1 = np.atleast_1d(np.asarray(diag1, dtype=float))
    d2 = np.atleast_1d(np.asarray(diag2, dtype=float))
    if np.any(~(d1 > 0)) or np.any(~(d2 > 0)):
        raise InvalidArgument("auto-covariance diagonals must be strictly positive")
    C = np.atleast_2d(C12)
    if C.shape != (len(d1), len(d2)):
        raise InvalidArgument(f"shape mismatch: C12 {C.shape}, diagonals {len(d1)} and {len(d2)}")
    normalized = C / np.sqrt(d1)[:, None] / np.sqrt(d2)[None, :]
    excess = max(np.max(np.abs(normalized.real)), np.max(np.abs(normalized.imag)))
    if excess > 1 + 1e-9:
        log.warning("normalized correlation part %.6g exceeds 1; clamping", excess)
    normalized = clamp_parts(normalized)
    out = (2.0 / np.pi) * (np.arcsin(normalized.real) + 1j * np.arcsin(normalized.imag))
    return out.reshape(C12.shape)


# --- objectives -------------------------------------------------------------

class LocalizationObjective:
    """``p -> lambda_max(D(p))`` for one covariance provider, vectorised over positions."""

    def __init__(self, scene, provider):
        if provider.num_stations != scene.num_stations:
            raise InvalidArgument(
                f"data has {provider.num_stations} stations, scene has {scene.num_stations}")
        self.scene = scene
        self.provider = provider

    def feasible(self, points):
        """False where a candidate coincides with a station (no far-field direction)."""
        points = as_points(points)
        ok = np.ones(len(points), dtype=bool)
        for g in self.scene.stations:
            ok &= np.any(points != g.location, axis=1)
        return ok

    def matrices(self, points, direct=False):
        """Stack of Hermitian D(p) matrices, shape (G, L, L).

        Only the upper triangle is computed; the lower one is its exact
        conjugate mirror and the diagonal is real.
        """
        points = as_points(points)
        L = self.scene.num_stations
        N = self.provider.num_samples
        a = [steering_vectors(g, points) for g in self.scene.stations]
        D = np.empty((len(points), L, L), dtype=complex)
        for i in range(L):
            for j in range(i, L):
                lags = delay_differences(self.scene, i, j, points)
                C = self.provider(i, j, lags, direct)
                dij = N * np.sum(np.conj(a[i]) * np.einsum("gmn,gn->gm", C, a[j]), axis=1)
                if i == j:
                    D[:, i, i] = dij.real
                else:
                    D[:, i, j] = dij
                    D[:, j, i] = np.conj(dij)
        return D

    def __call__(self, points):
        return hermitian_lambda_max_batch(self.matrices(points))


def dpd_objective(snapshots, scene, p):
    """Classical DPD score ``lambda_max(D(p))`` at a single position."""
    obj = LocalizationObjective(scene, SampleCovariance(snapshots, scene.sampling_period))
    return float(obj(as_position(p)[None, :])[0])


def obdpd_objective(quantized, scene, p, clamp=True):
    """One-bit DPD score at a single position; sees only the quantized data."""
    obj = LocalizationObjective(scene, OneBitCovariance(quantized, scene.sampling_period, clamp))
    return float(obj(as_position(p)[None, :])[0])


def locate_dpd(snapshots, scene, grid, refine=0):
    obj = LocalizationObjective(scene, SampleCovariance(snapshots, scene.sampling_period))
    return grid_search(obj, grid, refine, feasible=obj.feasible)


def locate_obdpd(quantized, scene, grid, refine=0, clamp=True):
    obj = LocalizationObjective(scene, OneBitCovariance(quantized, scene.sampling_period, clamp))
    return grid_search(obj, grid, refine, feasible=obj.feasible)


def beamformed_dpd_matrix(snapshots, scene, p):
    """D(p) built as U^H U from ``d_l[k] = exp(-1j*omega_k*tau_l) x_l[k]^H a_l``.

    Independent of the covariance route; used to cross-check it.
    """
    from .scene import propagation_delay, steering_vector

    p = as_position(p)
    N = snapshots.num_samples
    omega = frequency_grid(N, scene.sampling_period)
    cols = []
    for g, X in zip(scene.stations, snapshots.freq_data):
        tau = propagation_delay(g, p, scene.propagation_speed)
        cols.append(np.exp(-1j * omega * tau) * (np.conj(X).T @ steering_vector(g, p)))
    U = np.column_stack(cols)
    return np.conj(U).T @ U


# --- grid search ------------------------------------------------------------

@dataclass(frozen=True)
class ObjectiveSurface:
    """Objective values on a grid (shape ny x nx) and the selected maximiser.

    Infeasible grid points hold NaN. With refinement, ``argmax`` and
    ``argmax_value`` come from the finest level and may exceed the coarse
    maximum.
    """

    grid: SearchGrid
    values: np.ndarray
    argmax: np.ndarray
    argmax_value: float
    refine_levels: int = 0


def pointwise(f):
    """Adapt a scalar objective ``f(position) -> float`` to the batched form."""
    def batched(points):
        return np.array([f(p) for p in as_points(points)], dtype=float)
    return batched


def _evaluate(objective, points, feasible):
    mask = np.ones(len(points), dtype=bool) if feasible is None else np.asarray(feasible(points))
    values = np.full(len(points), np.nan)
    if mask.any():
        values[mask] = objective(points[mask])
    bad = mask & ~np.isfinite(values)
    if bad.any():
        p = points[np.argmax(bad)]
        raise NumericalFailure(f"non-finite objective value at position ({p[0]:.6g}, {p[1]:.6g})")
    if not mask.any():
        raise DegenerateGeometry("no feasible grid point")
    return values


def grid_search(objective, grid, refine=0, feasible=None):
    """Maximise a batched objective over a grid, with optional local refinement.

    ``objective`` maps a (G, 2) array of positions to G values. Ties resolve
    to the first maximiser in row-major order. Each refinement level re-grids
    the 3 x 3-cell neighbourhood of the current maximiser at ten times the
    resolution.
    """
    points = grid_points(grid)
    values = _evaluate(objective, points, feasible)
    k = int(np.nanargmax(values))
    best, best_value = points[k], float(values[k])
    dx, dy = grid.spacing
    for _ in range(refine):
        nx = 21 if dx > 0 else 1
        ny = 21 if dy > 0 else 1
        xs = np.linspace(best[0] - dx, best[0] + dx, nx) if dx > 0 else np.array([best[0]])
        ys = np.linspace(best[1] - dy, best[1] + dy, ny) if dy > 0 else np.array([best[1]])
        X, Y = np.meshgrid(xs, ys)
        fine = np.column_stack([X.ravel(), Y.ravel()])
        fine_values = _evaluate(objective, fine, feasible)
        k = int(np.nanargmax(fine_values))
        best, best_value = fine[k], float(fine_values[k])
        dx, dy = dx / 10.0, dy / 10.0
    best = best.copy()
    best.setflags(write=False)
    return ObjectiveSurface(grid, values.reshape(grid.ny, grid.nx), best, best_value, refine)
