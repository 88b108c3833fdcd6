"""Dense linear-algebra kernel: truncated SVD, Hermitian eigen/expm, Kronecker chains.

All routines are deterministic (LAPACK gesdd/syevd through numpy, plus a fixed
sign convention on singular/QR factors) so that repeated runs produce identical
results on the same platform.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NumericalFailureError

HERMITICITY_TOL = 1e-12
UNITARITY_TOL = 1e-10


@dataclass
class SvdResult:
    """Truncated SVD factors plus the squared weight of the dropped tail."""

    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray
    discarded_weight: float


def _check_finite(m):
    if not np.all(np.isfinite(m)):
        raise InvalidInputError("matrix contains non-finite entries")


def _check_hermitian(h):
    h = np.asarray(h)
    _check_finite(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {h.shape}")
    scale = max(1.0, float(np.abs(h).max()))
    if np.abs(h - h.conj().T).max() > HERMITICITY_TOL * scale:
        raise InvalidInputError("matrix is not Hermitian to 1e-12")
    return h


def fix_svd_signs(u, vt):
    """Flip singular-vector pairs so each left vector's largest entry is positive.

    Applied in place; ties resolve to the first maximal index, matching the
    compiled kernel's convention exactly.
    """
    for i in range(u.shape[1]):
        col = u[:, i]
        j = int(np.argmax(np.abs(col)))
        if col[j] < 0:
            u[:, i] = -col
            vt[i, :] = -vt[i, :]
    return u, vt


def truncation_rank(s, chi_max, lambda2_cutoff):
    """Number of singular values kept: cutoff first (relative to the total
    squared sum), then the chi cap, always at least one."""
    s2 = s * s
    total = float(s2.sum())
    if total <= 0.0:
        k = 1
    else:
        k = int(np.count_nonzero(s2 >= lambda2_cutoff * total))
        k = max(k, 1)
    if chi_max is not None:
        k = min(k, int(chi_max))
    return max(min(k, len(s)), 1) if len(s) else 0


def svd_truncated(m, chi_max, lambda2_cutoff):
    """Truncated SVD of ``m`` with the tail-cutoff-then-cap rule.

    ``lambda2_cutoff`` is compared against squared singular values relative to
    the total squared sum; at least one value is always retained.
    """
    m = np.asarray(m)
    _check_finite(m)
    if chi_max is not None and chi_max < 1:
        raise InvalidInputError("chi_max must be >= 1")
    if lambda2_cutoff < 0:
        raise InvalidInputError("lambda2_cutoff must be >= 0")
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - rare LAPACK failure
        raise NumericalFailureError(f"SVD did not converge: {exc}") from exc
    k = truncation_rank(s, chi_max, lambda2_cutoff)
    discarded = float(np.sum(s[k:] ** 2))
    u, s, vt = u[:, :k].copy(), s[:k].copy(), vt[:k, :].copy()
    fix_svd_signs(u, vt)
    return SvdResult(u, s, vt, discarded)


def eigh(h):
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    h = _check_hermitian(h)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalFailureError(f"eigh did not converge: {exc}") from exc
    return w, v


def expm_hermitian(h, scale):
    """exp(scale * h) for Hermitian h via eigendecomposition.

    For purely imaginary ``scale`` the result is checked to be unitary.
    """
    w, v = eigh(h)
    out = (v * np.exp(scale * w)) @ v.conj().T
    if np.real(scale) == 0.0:
        dev = np.abs(out.conj().T @ out - np.eye(out.shape[0])).max()
        if dev > UNITARITY_TOL:
            raise NumericalFailureError(f"expm lost unitarity: deviation {dev:.3e}")
    return out


def kron_chain(mats):
    """Kronecker product of a sequence of matrices, left to right."""
    out = np.array([[1.0]], dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def qr_pos(m):
    """Reduced QR with nonnegative diagonal of R (deterministic gauge)."""
    q, r = np.linalg.qr(m)
    d = np.sign(np.diagonal(r)).copy()
    d[d == 0] = 1.0
    return q * d, r * d[:, None]
