"""Self-test suites: arcsine law, Parseval, Hermitian/eigen invariants, Scenario H.

``run_selftest(fault=...)`` can inject a known defect to check that the
suites are sensitive to it: ``"dft_norm"`` swaps in an unnormalised DFT,
``"no_clamp"`` disables the sine-argument clamp of the one-bit estimator.
"""

from dataclasses import dataclass

import numpy as np

from ..estimators import (
    LocalizationObjective,
    OneBitCovariance,
    SampleCovariance,
    arcsine_forward,
    beamformed_dpd_matrix,
    locate_dpd,
    locate_obdpd,
    onebit_cross_cov,
    unquantized_cross_cov,
)
from ..numerics import dft_normalized, hermitian_lambda_max
from ..scene import SearchGrid, delay_difference, square_scene
from ..signal import (
    ChannelDraw,
    SignalSpec,
    SnapshotSet,
    draw_channel,
    quantize,
    quantize_set,
    random_stream,
    synthesize,
)
from .oracles import (
    charpoly_lambda_max,
    circular_xcorr,
    correlated_cn_pair,
    population_cross_cov,
    rho_squared,
)

FAULTS = ("dft_norm", "no_clamp")
P_TRUE = np.array([1.0, 0.5])


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str


def _check(suite, name, value, limit, results):
    passed = bool(value <= limit)
    results.append(CheckResult(suite, name, passed, f"{value:.3e} <= {limit:.1e}"))
    return passed


def arcsine_suite(seed=0, draws=100_000, clamp=True):
    """Empirical one-bit correlations against the arcsine law."""
    results = []
    rng = np.random.default_rng([seed, 1])
    for c in (0.0, 0.3, -0.3, 0.6, -0.6, 0.9, -0.9):
        for part, gamma in (("re", c), ("im", 1j * c)):
            x1, x2 = correlated_cn_pair(rng, gamma, draws)
            empirical = np.mean(quantize(x1) * np.conj(quantize(x2)))
            expected = arcsine_forward(gamma, 1.0, 1.0)
            err = max(abs(empirical.real - expected.real), abs(empirical.imag - expected.imag))
            _check("arcsine", f"c={c:+.1f} {part}", err, 0.01, results)

    # covariance reconstruction from one-bit data at zero lag
    scene = square_scene()
    spec = SignalSpec(2 ** 14, 1.0, 0.0)
    draw = ChannelDraw(np.ones(4), np.full(4, spec.noise_variance))
    snaps = synthesize(scene, P_TRUE, spec, draw, np.random.default_rng([seed, 2]))
    q = quantize_set(snaps)
    rho2 = rho_squared(draw, spec, 4)[0]
    for i, j in ((0, 0), (0, 1)):
        lag = delay_difference(scene, i, j, P_TRUE)
        est = onebit_cross_cov(q, i, j, lag, scene.sampling_period, clamp=clamp).matrix
        ref = population_cross_cov(scene, draw, spec, i, j, P_TRUE) / rho2
        rel = np.linalg.norm(est - ref) / np.linalg.norm(ref)
        _check("arcsine", f"reconstruction ({i},{j})", rel, 0.15, results)
    return results


def parseval_suite(seed=0, dft=dft_normalized):
    """Unitarity of the DFT and equivalence of the time/frequency/beamformer routes."""
    results = []
    rng = np.random.default_rng([seed, 3])
    worst_norm = worst_cross = 0.0
    for N in (1, 7, 64, 256):
        x = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        y = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        X, Y = dft(x), dft(y)
        worst_norm = max(worst_norm, abs(np.vdot(X, X).real - np.vdot(x, x).real) / np.vdot(x, x).real)
        worst_cross = max(worst_cross, abs(np.vdot(Y, X) - np.vdot(y, x)) / np.linalg.norm(x) / np.linalg.norm(y))
    _check("parseval", "dft unitarity", worst_norm, 1e-12, results)
    _check("parseval", "cross-form", worst_cross, 1e-12, results)

    scene = square_scene()
    Ts = scene.sampling_period
    worst_lag = worst_route = 0.0
    for _ in range(5):
        time_data = [rng.standard_normal((4, 256)) + 1j * rng.standard_normal((4, 256)) for _ in range(4)]
        snaps = SnapshotSet([dft(x, axis=1) for x in time_data], time_data)
        for m in (-3, 0, 5):
            est = unquantized_cross_cov(snaps, 0, 1, m * Ts, Ts).matrix
            worst_lag = max(worst_lag, np.max(np.abs(est - circular_xcorr(time_data[0], time_data[1], m))))
        p = rng.uniform(-2, 2, 2)
        D_cov = LocalizationObjective(scene, SampleCovariance(snaps, Ts)).matrices(p)[0]
        D_u = beamformed_dpd_matrix(snaps, scene, p)
        worst_route = max(worst_route, np.max(np.abs(D_cov - D_u)) / max(1.0, np.max(np.abs(D_u))))
    _check("parseval", "integer-lag circular correlation", worst_lag, 1e-10, results)
    _check("parseval", "U^H U route", worst_route, 1e-10, results)
    return results


def hermitian_suite(seed=0, clamp=True):
    """Eigenvalue accuracy and Hermitian structure of D(p) and its one-bit counterpart."""
    results = []
    rng = np.random.default_rng([seed, 4])
    worst = 0.0
    for L in (1, 2, 3, 4):
        for _ in range(10):
            X = rng.standard_normal((L, L)) + 1j * rng.standard_normal((L, L))
            A = X + np.conj(X).T
            ref = charpoly_lambda_max(A)
            worst = max(worst, abs(hermitian_lambda_max(A) - ref) / max(1.0, abs(ref)))
    _check("hermitian", "lambda_max vs characteristic polynomial", worst, 1e-8, results)

    scene = square_scene()
    spec = SignalSpec(64, 1.0, 0.0)
    asym = asym_bar = 0.0
    min_eig = np.inf
    for t in range(10):
        r = np.random.default_rng([seed, 5, t])
        snaps = synthesize(scene, P_TRUE, spec, draw_channel(4, r, spec), r)
        q = quantize_set(snaps)
        pts = r.uniform(-2.4, 2.4, (10, 2))
        D = LocalizationObjective(scene, SampleCovariance(snaps, scene.sampling_period)).matrices(pts)
        Db = LocalizationObjective(scene, OneBitCovariance(q, scene.sampling_period, clamp)).matrices(pts)
        scale = np.max(np.abs(D))
        asym = max(asym, np.max(np.abs(D - np.conj(np.swapaxes(D, 1, 2)))))
        asym_bar = max(asym_bar, np.max(np.abs(Db - np.conj(np.swapaxes(Db, 1, 2)))))
        min_eig = min(min_eig, np.min(np.linalg.eigvalsh(D)) / scale)
    _check("hermitian", "D Hermitian", asym, 1e-9, results)
    _check("hermitian", "D-bar Hermitian", asym_bar, 1e-9, results)
    _check("hermitian", "D positive semidefinite", -min_eig, 1e-12, results)
    return results


def scenario_h_suite(seed=0, sizes=(2 ** 8, 2 ** 10, 2 ** 12), trials=10, clamp=True):
    """Convergence of the one-bit estimate to the scaled unquantized covariance."""
    results = []
    scene = square_scene()
    medians = []
    for N in sizes:
        spec = SignalSpec(N, 1.0, 0.0)
        draw = ChannelDraw(np.ones(4), np.full(4, spec.noise_variance))
        rho2 = rho_squared(draw, spec, 4)[0]
        errs = [onebit_frobenius_error(scene, spec, draw, rho2,
                                       random_stream(seed, t, "scenario-h", N), clamp)
                for t in range(trials)]
        medians.append(float(np.median(errs)))
    decreasing = all(b < a for a, b in zip(medians, medians[1:]))
    results.append(CheckResult("scenario_h", "median Frobenius error decreasing", decreasing,
                               " > ".join(f"{m:.4f}" for m in medians)))

    spec = SignalSpec(sizes[-1], 1.0, 0.0)
    draw = ChannelDraw(np.ones(4), np.full(4, spec.noise_variance))
    grid = SearchGrid(-2.5, 2.5, -2.5, 2.5, 21, 21)
    agree = 0
    for t in range(trials):
        snaps = synthesize(scene, P_TRUE, spec, draw, random_stream(seed, t, "scenario-h-argmax"))
        a = locate_dpd(snaps, scene, grid).argmax
        b = locate_obdpd(quantize_set(snaps), scene, grid, clamp=clamp).argmax
        agree += bool(np.array_equal(a, b))
    results.append(CheckResult("scenario_h", "DPD/OB-DPD argmax agreement", agree >= 0.9 * trials,
                               f"{agree}/{trials}"))
    return results


def onebit_frobenius_error(scene, spec, draw, rho2, rng, clamp=True):
    """``sqrt(sum_ij ||rho^2 * Rbar_ij - R_ij||_F^2)`` over all station pairs at the true lags."""
    snaps = synthesize(scene, P_TRUE, spec, draw, rng)
    q = quantize_set(snaps)
    total = 0.0
    L = scene.num_stations
    for i in range(L):
        for j in range(L):
            lag = delay_difference(scene, i, j, P_TRUE)
            est = onebit_cross_cov(q, i, j, lag, scene.sampling_period, clamp=clamp).matrix
            ref = population_cross_cov(scene, draw, spec, i, j, P_TRUE)
            total += np.linalg.norm(rho2 * est - ref) ** 2
    return float(np.sqrt(total))


def _unnormalized_dft(x, axis=-1):
    return np.fft.fft(np.asarray(x, dtype=complex), axis=axis)


def run_selftest(seed=0, fault=None):
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}; choose from {FAULTS}")
    clamp = fault != "no_clamp"
    dft = _unnormalized_dft if fault == "dft_norm" else dft_normalized
    return (arcsine_suite(seed, clamp=clamp)
            + parseval_suite(seed, dft=dft)
            + hermitian_suite(seed, clamp=clamp)
            + scenario_h_suite(seed, clamp=clamp))


def suite_status(results):
    """Map suite name -> overall pass flag."""
    status = {}
    for r in results:
        status[r.suite] = status.get(r.suite, True) and r.passed
    return status
