"""Pure-numpy twin of the compiled TEBD kernel.

Keep the truncation and sign conventions in exact lockstep with
``_kernels_cy.pyx``; the test suite asserts the two backends agree.
"""

import numpy as np

from .errors import NumericalFailureError, ResourceLimitError
from .linalg import fix_svd_signs, truncation_rank


def two_site_apply(a, b, gate, chi_max, lambda2_cutoff, center_right, hard_cap):
    """Contract neighboring tensors, apply a folded 16x16 gate, SVD-resplit.

    a: (chi_l, 4, m), b: (m, 4, chi_r), gate: (16, 16).
    Returns (a_new, b_new, discarded_weight). The Schmidt factor is absorbed
    into the right tensor when ``center_right`` else into the left one.
    """
    chi_l, _, m = a.shape
    chi_r = b.shape[2]
    if min(chi_l * 4, 4 * chi_r) > hard_cap:
        raise ResourceLimitError(
            f"two-site bond {chi_l * 4}x{4 * chi_r} exceeds hard cap {hard_cap}"
        )
    theta = np.tensordot(a, b, axes=([2], [0]))  # (chi_l, 4, 4, chi_r)
    theta = theta.reshape(chi_l, 16, chi_r)
    theta = np.einsum("pq,lqr->lpr", gate, theta)
    mat = theta.reshape(chi_l * 4, 4 * chi_r)
    try:
        u, s, vt = np.linalg.svd(mat, full_matrices=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalFailureError(f"two-site SVD failed: {exc}") from exc
    k = truncation_rank(s, chi_max, lambda2_cutoff)
    discarded = float(np.sum(s[k:] ** 2))
    u, s, vt = u[:, :k].copy(), s[:k], vt[:k, :].copy()
    fix_svd_signs(u, vt)
    if center_right:
        a_new = u.reshape(chi_l, 4, k)
        b_new = (s[:, None] * vt).reshape(k, 4, chi_r)
    else:
        a_new = (u * s[None, :]).reshape(chi_l, 4, k)
        b_new = vt.reshape(k, 4, chi_r)
    return (
        np.ascontiguousarray(a_new),
        np.ascontiguousarray(b_new),
        discarded,
    )
