"""Matrix product operators acting on vectorized-operator MPS.

Tensors have shape (left_bond, phys_out_4, phys_in_4, right_bond) with real
entries; boundary vectors are already absorbed so edge bonds are dimension 1.
"""

import numpy as np

from .errors import InvalidInputError, ResourceLimitError
from .linalg import qr_pos, svd_truncated
from .mps import OperatorMPS

HARD_CHI_CAP = 8192

# relative lambda^2 threshold that removes only structurally zero singular
# values during exact MPO compression
ZERO_RANK_CUTOFF = 1e-24


class Mpo:
    def __init__(self, tensors):
        self.tensors = [np.ascontiguousarray(t, dtype=np.float64) for t in tensors]
        for i, t in enumerate(self.tensors):
            if t.ndim != 4 or t.shape[1] != 4 or t.shape[2] != 4:
                raise InvalidInputError(f"site {i}: expected (wl, 4, 4, wr), got {t.shape}")
            if i and t.shape[0] != self.tensors[i - 1].shape[3]:
                raise InvalidInputError(f"MPO bond mismatch at site {i}")
        if self.tensors[0].shape[0] != 1 or self.tensors[-1].shape[3] != 1:
            raise InvalidInputError("MPO boundary bonds must be dimension 1")

    @property
    def L(self):
        return len(self.tensors)

    def bond_dims(self):
        return [t.shape[3] for t in self.tensors[:-1]]

    def copy(self):
        return Mpo([t.copy() for t in self.tensors])


def identity_mpo(L):
    site = np.zeros((1, 4, 4, 1))
    site[0, :, :, 0] = np.eye(4)
    return Mpo([site.copy() for _ in range(L)])


def mpo_from_site_matrices(mats):
    """Bond-dimension-1 MPO from a list of 4x4 single-site matrices."""
    return Mpo([np.asarray(m, dtype=np.float64).reshape(1, 4, 4, 1) for m in mats])


def apply_mpo(mpo, state, chi_max=None, lambda2_cutoff=0.0, time=None,
              hard_cap=HARD_CHI_CAP):
    """Contract MPO * state and re-truncate by sweeping.

    The returned state carries a copy of the input ledger extended with the
    discarded weight of each compression SVD. Raises ResourceLimitError when
    an intermediate bond would exceed ``hard_cap``.
    """
    if mpo.L != state.L:
        raise InvalidInputError(f"length mismatch: MPO {mpo.L} vs state {state.L}")
    tensors = []
    for w, a in zip(mpo.tensors, state.tensors):
        wl, _, _, wr = w.shape
        al, _, ar = a.shape
        if wl * al > hard_cap or wr * ar > hard_cap:
            raise ResourceLimitError(
                f"MPO application bond {wl * al}x{wr * ar} exceeds hard cap {hard_cap}"
            )
        # (wl, po, pi, wr) x (al, pi, ar) -> (wl, al, po, wr, ar)
        t = np.tensordot(w, a, axes=([2], [1]))  # (wl, po, wr, al, ar)
        t = t.transpose(0, 3, 1, 2, 4).reshape(wl * al, 4, wr * ar)
        tensors.append(np.ascontiguousarray(t))
    out = OperatorMPS(tensors, state.frame, state.ledger.copy(), None)
    out.compress(chi_max=chi_max, lambda2_cutoff=lambda2_cutoff, time=time)
    return out


def mpo_product(outer, inner_mpo):
    """MPO composition: (outer . inner)(v) = outer(inner(v))."""
    if outer.L != inner_mpo.L:
        raise InvalidInputError("MPO length mismatch")
    tensors = []
    for a, b in zip(outer.tensors, inner_mpo.tensors):
        # a: (al, po, m, ar), b: (bl, m, pi, br)
        t = np.tensordot(a, b, axes=([2], [1]))  # (al, po, ar, bl, pi, br)
        t = t.transpose(0, 3, 1, 4, 2, 5)
        al, bl, po, pi, ar, br = t.shape
        tensors.append(np.ascontiguousarray(t.reshape(al * bl, po, pi, ar * br)))
    return Mpo(tensors)


def compress_mpo(mpo, lambda2_cutoff=ZERO_RANK_CUTOFF):
    """Exact rank reduction: drops only numerically zero singular values."""
    tensors = [t.copy() for t in mpo.tensors]
    L = len(tensors)
    # right-to-left orthogonalization
    for i in range(L - 1, 0, -1):
        wl, po, pi, wr = tensors[i].shape
        m = tensors[i].reshape(wl, po * pi * wr)
        q, r = qr_pos(m.T)
        k = q.shape[1]
        tensors[i] = np.ascontiguousarray(q.T.reshape(k, po, pi, wr))
        tensors[i - 1] = np.ascontiguousarray(
            np.tensordot(tensors[i - 1], r, axes=([3], [1]))
        )
    # left-to-right truncating sweep
    for i in range(L - 1):
        wl, po, pi, wr = tensors[i].shape
        res = svd_truncated(tensors[i].reshape(wl * po * pi, wr), None, lambda2_cutoff)
        k = len(res.singular_values)
        tensors[i] = np.ascontiguousarray(res.left.reshape(wl, po, pi, k))
        carry = res.singular_values[:, None] * res.right
        tensors[i + 1] = np.ascontiguousarray(
            np.tensordot(carry, tensors[i + 1], axes=([1], [0]))
        )
    return Mpo(tensors)


def mpo_to_dense(mpo):
    """Dense (4^L, 4^L) matrix; for small-L oracle checks only."""
    L = mpo.L
    if 4**L > 4096:
        raise ResourceLimitError("dense MPO conversion limited to L <= 6")
    out = np.ones((1, 1, 1))  # (rows, cols, bond)
    for t in mpo.tensors:
        wl, po, pi, wr = t.shape
        out = np.einsum("rcw,wabv->racbv", out, t).reshape(
            out.shape[0] * 4, out.shape[1] * 4, wr
        )
    return out[:, :, 0]
