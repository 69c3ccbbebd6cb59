"""Independent reference computations used by the self-test and the test suite.

Nothing here is used by the estimators themselves.
"""

import numpy as np

from ..scene import steering_vector


def charpoly_lambda_max(A):
    """Largest eigenvalue from the characteristic polynomial.

    Coefficients come from the Faddeev-LeVerrier recursion and the roots
    from the companion matrix, so no Hermitian eigen-solver is involved.
    """
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    coeffs = [1.0 + 0j]
    M = np.zeros_like(A)
    I = np.eye(n)
    for k in range(1, n + 1):
        M = A @ M + coeffs[-1] * I
        coeffs.append(-np.trace(A @ M) / k)
    roots = np.roots(coeffs)
    return float(np.max(roots.real))


def circular_xcorr(ri, rj, lag):
    """``(1/N) sum_n r_i[n + lag] r_j[n]^H`` with circular indexing; inputs (M, N)."""
    N = ri.shape[1]
    n = np.arange(N)
    return ri[:, (n + lag) % N] @ np.conj(rj).T / N


def correlated_cn_pair(rng, gamma, size):
    """Unit-variance circular Gaussian pair with ``E[x1 x2^*] = gamma`` (|gamma| <= 1)."""
    def cn(n):
        return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
    x2 = cn(size)
    x1 = gamma * x2 + np.sqrt(1.0 - abs(gamma) ** 2) * cn(size)
    return x1, x2


def rho_squared(draw, spec, num_elements):
    """Per-element received power ``|b|^2 R_s(0)/M + sigma^2`` for each station."""
    return np.abs(draw.gains) ** 2 * spec.source_power / num_elements + draw.noise_variances


def population_cross_cov(scene, draw, spec, i, j, p_true):
    """Covariance of stations i, j at their true relative delay.

    ``b_i b_j^* R_s(0) a_i a_j^H + delta_ij sigma_i^2 I``.
    """
    ai = steering_vector(scene.stations[i], p_true)
    aj = steering_vector(scene.stations[j], p_true)
    R = draw.gains[i] * np.conj(draw.gains[j]) * spec.source_power * np.outer(ai, np.conj(aj))
    if i == j:
        R = R + draw.noise_variances[i] * np.eye(len(ai))
    return R
