"""Complex transform and small Hermitian eigenvalue primitives.

The DFT pair uses 1/sqrt(N) scaling in both directions so that Parseval's
identity holds without extra factors. The largest eigenvalue of a Hermitian
matrix is obtained by cyclic complex Jacobi rotations, vectorised over a
leading batch axis so that a whole search grid of L x L matrices is
diagonalised in one call.
"""

import numpy as np

from .errors import ContractViolation, InvalidArgument

HERMITIAN_TOL = 1e-9

_JACOBI_MAX_SWEEPS = 60
_JACOBI_REL_TOL = 1e-15


def dft_normalized(x, axis=-1):
    """Unitary DFT: ``z[k] = N**-0.5 * sum_n x[n] exp(-2j*pi*k*n/N)``."""
    x = np.asarray(x, dtype=complex)
    if x.ndim == 0 or x.shape[axis] == 0:
        raise InvalidArgument("DFT of an empty sequence")
    return np.fft.fft(x, axis=axis, norm="ortho")


def idft_normalized(z, axis=-1):
    """Inverse of :func:`dft_normalized`."""
    z = np.asarray(z, dtype=complex)
    if z.ndim == 0 or z.shape[axis] == 0:
        raise InvalidArgument("IDFT of an empty sequence")
    return np.fft.ifft(z, axis=axis, norm="ortho")


def check_hermitian(A, tol=HERMITIAN_TOL):
    """Validate shape and Hermitian symmetry of a (batch of) square matrices."""
    A = np.asarray(A)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2] or A.shape[-1] == 0:
        raise InvalidArgument(f"expected non-empty square matrices, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidArgument("matrix has non-finite entries")
    asym = np.max(np.abs(A - np.conj(np.swapaxes(A, -1, -2))), initial=0.0)
    if asym > tol:
        raise ContractViolation(f"matrix is not Hermitian (max |A - A^H| = {asym:.3e})")
    return A


def jacobi_eigvalsh(A):
    """Eigenvalues of Hermitian matrices by cyclic complex Jacobi rotations.

    Parameters
    ----------
    A : array_like, shape (..., L, L)
        Hermitian matrices. Only Hermitian input is meaningful; symmetry is
        not re-checked here.

    Returns
    -------
    ndarray, shape (..., L)
        Real eigenvalues, unsorted (the diagonal after convergence).

    Each rotation acts in the (p, q) plane as ``J = diag(1, e^{-i phi}) R(theta)``:
    the phase factor makes the pivot real, then a real Givens rotation
    annihilates it. Diagonal entries are kept real by construction.
    """
    A = np.array(A, dtype=complex)
    batch_shape = A.shape[:-2]
    L = A.shape[-1]
    # batch axis last so that row and column slices are contiguous
    W = np.ascontiguousarray(A.reshape((-1, L, L)).transpose(1, 2, 0))
    diag_idx = np.arange(L)
    W[diag_idx, diag_idx] = W[diag_idx, diag_idx].real
    if L == 1:
        return W[0, 0].real.reshape(batch_shape + (1,))

    scale = np.sqrt(np.sum(np.abs(W) ** 2, axis=(0, 1)))
    off_mask = ~np.eye(L, dtype=bool)
    active = np.arange(W.shape[2])
    for _ in range(_JACOBI_MAX_SWEEPS):
        work = W[:, :, active]
        off = np.sqrt(np.sum(np.abs(work[off_mask]) ** 2, axis=0))
        keep = off > _JACOBI_REL_TOL * scale[active]
        active = active[keep]
        if active.size == 0:
            break
        work = np.ascontiguousarray(work[:, :, keep])
        for p in range(L - 1):
            for q in range(p + 1, L):
                _rotate(work, p, q)
        W[:, :, active] = work
    return W[diag_idx, diag_idx].real.T.reshape(batch_shape + (L,))


def _rotate(W, p, q):
    """One rotation on a batch-last stack ``W`` of shape (L, L, B), in place.

    Only columns p and q are transformed explicitly; rows p and q follow
    from Hermitian symmetry and the 2 x 2 pivot block is set in closed form.
    """
    apq = W[p, q]
    r = np.abs(apq)
    phase = np.exp(1j * np.angle(apq))
    app = W[p, p].real.copy()
    aqq = W[q, q].real.copy()
    theta = 0.5 * np.arctan2(2.0 * r, aqq - app)
    c = np.cos(theta)
    s = np.sin(theta)
    cph = np.conj(phase)

    col_p = W[:, p].copy()
    col_q = W[:, q].copy()
    new_p = c * col_p - (s * cph) * col_q
    new_q = s * col_p + (c * cph) * col_q
    W[:, p] = new_p
    W[:, q] = new_q
    W[p, :] = np.conj(new_p)
    W[q, :] = np.conj(new_q)

    W[p, p] = c * c * app + s * s * aqq - 2.0 * s * c * r
    W[q, q] = s * s * app + c * c * aqq + 2.0 * s * c * r
    W[p, q] = 0.0
    W[q, p] = 0.0


def hermitian_lambda_max(A, tol=HERMITIAN_TOL):
    """Largest eigenvalue of a single Hermitian matrix, as a Python float."""
    A = check_hermitian(A, tol)
    if A.ndim != 2:
        raise InvalidArgument(f"expected a single matrix, got shape {A.shape}")
    return float(np.max(jacobi_eigvalsh(A)))


def hermitian_lambda_max_batch(A, tol=HERMITIAN_TOL):
    """Largest eigenvalue of each matrix in a ``(..., L, L)`` Hermitian stack."""
    A = check_hermitian(A, tol)
    return np.max(jacobi_eigvalsh(A), axis=-1)
