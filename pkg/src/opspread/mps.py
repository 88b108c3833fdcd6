"""MPS representation of vectorized Hermitian operators.

Site tensors are real float64 arrays of shape (left_bond, 4, right_bond) in a
declared Pauli-type frame; physical slot 0 is the identity. The Eq.-style
inner product <A|B> = 2^{-L} Tr(A^dag B) becomes a plain contraction because
the single-site basis is orthonormal.
"""

import json
import struct

import numpy as np

from . import pauli
from .errors import InvalidInputError, NumericalFailureError
from .linalg import qr_pos, svd_truncated

CHECKPOINT_MAGIC = b"OPMS"
CHECKPOINT_VERSION = 1
_FRAME_CODES = {pauli.FRAME_XYZ: 0, pauli.FRAME_PARALLEL: 1}
_FRAME_NAMES = {v: k for k, v in _FRAME_CODES.items()}

_IDENTITY_SITE = np.zeros((1, 4, 1))
_IDENTITY_SITE[0, 0, 0] = 1.0
_IDENTITY_SITE.flags.writeable = False


class TruncationLedger:
    """Cumulative discarded squared Schmidt weight plus the per-event log."""

    def __init__(self):
        self.epsilon = 0.0
        self.per_step = []

    def record(self, time, bond, weight):
        if weight != 0.0:
            self.per_step.append((time, int(bond), float(weight)))
            self.epsilon += float(weight)

    def copy(self):
        out = TruncationLedger()
        out.epsilon = self.epsilon
        out.per_step = list(self.per_step)
        return out

    def to_json_dict(self):
        # hex floats keep checkpoint round-trips bit-exact
        return {
            "epsilon_hex": float(self.epsilon).hex(),
            "epsilon": self.epsilon,
            "per_step": [
                [float(t).hex() if t is not None else None, b, float(w).hex()]
                for (t, b, w) in self.per_step
            ],
        }

    @classmethod
    def from_json_dict(cls, d):
        out = cls()
        out.epsilon = float.fromhex(d["epsilon_hex"])
        out.per_step = [
            (float.fromhex(t) if t is not None else None, int(b), float.fromhex(w))
            for (t, b, w) in d["per_step"]
        ]
        return out


class OperatorMPS:
    """Vectorized operator as a chain of rank-3 real tensors."""

    def __init__(self, tensors, frame=pauli.FRAME_XYZ, ledger=None, center=None):
        self.tensors = [np.ascontiguousarray(t, dtype=np.float64) for t in tensors]
        self.frame = frame
        self.ledger = ledger if ledger is not None else TruncationLedger()
        self.center = center
        self._validate()

    def _validate(self):
        if not self.tensors:
            raise InvalidInputError("empty tensor list")
        if self.tensors[0].shape[0] != 1 or self.tensors[-1].shape[2] != 1:
            raise InvalidInputError("boundary bonds must have dimension 1")
        for i, t in enumerate(self.tensors):
            if t.ndim != 3 or t.shape[1] != 4:
                raise InvalidInputError(f"site {i}: expected (chi_l, 4, chi_r), got {t.shape}")
            if i and t.shape[0] != self.tensors[i - 1].shape[2]:
                raise InvalidInputError(f"bond mismatch at site {i}")
            if not np.all(np.isfinite(t)):
                raise InvalidInputError(f"site {i}: non-finite amplitudes")

    @property
    def L(self):
        return len(self.tensors)

    def bond_dims(self):
        """Internal bond dimensions (length L-1)."""
        return [t.shape[2] for t in self.tensors[:-1]]

    def copy(self):
        return OperatorMPS(
            [t.copy() for t in self.tensors], self.frame, self.ledger.copy(), self.center
        )

    def site_is_trivial_identity(self, i):
        """True when site i is exactly the bond-1 identity tensor."""
        t = self.tensors[i]
        return t.shape == (1, 4, 1) and t[0, 0, 0] == 1.0 and not np.any(t[0, 1:, 0])

    def support_window(self):
        """(first, last) non-trivial sites, or None for a pure identity state."""
        lo = hi = None
        for i in range(self.L):
            if not self.site_is_trivial_identity(i):
                lo = i
                break
        if lo is None:
            return None
        for i in range(self.L - 1, -1, -1):
            if not self.site_is_trivial_identity(i):
                hi = i
                break
        return (lo, hi)

    def _push_right(self, i):
        """Left-orthogonalize site i, absorbing the remainder into site i+1."""
        t = self.tensors[i]
        chi_l, _, chi_r = t.shape
        q, r = qr_pos(t.reshape(chi_l * 4, chi_r))
        k = q.shape[1]
        self.tensors[i] = np.ascontiguousarray(q.reshape(chi_l, 4, k))
        self.tensors[i + 1] = np.ascontiguousarray(
            np.tensordot(r, self.tensors[i + 1], axes=([1], [0]))
        )

    def _push_left(self, i):
        """Right-orthogonalize site i, absorbing the remainder into site i-1."""
        t = self.tensors[i]
        chi_l, _, chi_r = t.shape
        q, r = qr_pos(t.reshape(chi_l, 4 * chi_r).T)
        k = q.shape[1]
        self.tensors[i] = np.ascontiguousarray(q.T.reshape(k, 4, chi_r))
        self.tensors[i - 1] = np.ascontiguousarray(
            np.tensordot(self.tensors[i - 1], r, axes=([2], [1]))
        )

    def move_center_right(self):
        self._push_right(self.center)
        self.center += 1

    def move_center_left(self):
        self._push_left(self.center)
        self.center -= 1

    def canonicalize(self, center):
        """Bring the state to mixed-canonical form with the center at ``center``."""
        if not 0 <= center < self.L:
            raise InvalidInputError(f"center {center} out of range")
        if self.center is None:
            for i in range(center):
                self._push_right(i)
            for i in range(self.L - 1, center, -1):
                self._push_left(i)
            self.center = center
            return
        while self.center < center:
            self.move_center_right()
        while self.center > center:
            self.move_center_left()

    def rotated(self, rotation, frame):
        """Apply a 4x4 orthogonal single-site frame rotation to every site."""
        tensors = [
            np.ascontiguousarray(np.einsum("pq,lqr->lpr", rotation, t))
            for t in self.tensors
        ]
        return OperatorMPS(tensors, frame, self.ledger.copy(), self.center)

    def schmidt_values(self, bond):
        """Schmidt values across bond (sites bond | bond+1); needs center there."""
        if not 0 <= bond < self.L - 1:
            raise InvalidInputError(f"bond {bond} out of range")
        if self.center != bond:
            raise InvalidInputError("state must be canonicalized at the cut")
        t = self.tensors[bond]
        chi_l, _, chi_r = t.shape
        return np.linalg.svd(t.reshape(chi_l * 4, chi_r), compute_uv=False)

    def compress(self, chi_max=None, lambda2_cutoff=0.0, time=None):
        """Two-pass sweep truncation; discarded weight goes into the ledger."""
        self.canonicalize(0)
        for b in range(self.L - 1):
            t = self.tensors[b]
            chi_l, _, chi_r = t.shape
            res = svd_truncated(t.reshape(chi_l * 4, chi_r), chi_max, lambda2_cutoff)
            self.ledger.record(time, b, res.discarded_weight)
            k = len(res.singular_values)
            self.tensors[b] = np.ascontiguousarray(res.left.reshape(chi_l, 4, k))
            carry = res.singular_values[:, None] * res.right
            self.tensors[b + 1] = np.ascontiguousarray(
                np.tensordot(carry, self.tensors[b + 1], axes=([1], [0]))
            )
            self.center = b + 1
        return self


def identity_mps(L, frame=pauli.FRAME_XYZ):
    """Vectorized identity string (unit norm under the 2^{-L} Tr inner product)."""
    return OperatorMPS([_IDENTITY_SITE.copy() for _ in range(L)], frame)


def local_operator_mps(label, site, L, frame=pauli.FRAME_XYZ, components=None):
    """Single-site Pauli operator at ``site`` (0-based) as a bond-1 MPS.

    ``label`` is 1..3 or one of "x","y","z"; alternatively pass a length-4
    ``components`` vector for an arbitrary single-site operator.
    """
    if not 0 <= site < L:
        raise InvalidInputError(f"site {site} out of range for L={L}")
    if components is None:
        if isinstance(label, str):
            if label not in pauli.XYZ_LABELS[1:]:
                raise InvalidInputError(f"unknown Pauli label {label!r}")
            label = pauli.XYZ_LABELS.index(label)
        if not 1 <= label <= 3:
            raise InvalidInputError("label must select a non-identity Pauli")
        components = np.zeros(4)
        components[label] = 1.0
    tensors = [_IDENTITY_SITE.copy() for _ in range(L)]
    tensors[site] = np.asarray(components, dtype=np.float64).reshape(1, 4, 1)
    return OperatorMPS(tensors, frame)


def product_state_mps(angles, L, frame=pauli.FRAME_XYZ):
    """Vectorized rho(theta, phi) = product of (|1> + |sigma_par>)/2 factors.

    In the parallel frame the site vector is exactly (1, 1, 0, 0)/2.
    """
    if L < 2:
        raise InvalidInputError("L must be >= 2")
    if frame == pauli.FRAME_PARALLEL:
        vec = np.array([0.5, 0.5, 0.0, 0.0])
    else:
        n = angles.bloch_vector()
        vec = 0.5 * np.array([1.0, n[0], n[1], n[2]])
    site = vec.reshape(1, 4, 1)
    return OperatorMPS([site.copy() for _ in range(L)], frame)


def inner(a, b):
    """Exact contraction <a|b>; real because all amplitudes are real."""
    if a.L != b.L:
        raise InvalidInputError(f"length mismatch: {a.L} vs {b.L}")
    if a.frame != b.frame:
        raise InvalidInputError(f"frame mismatch: {a.frame!r} vs {b.frame!r}")
    env = np.ones((1, 1))
    for ta, tb in zip(a.tensors, b.tensors):
        tmp = np.tensordot(env, ta, axes=([0], [0]))  # (lb, p, ra)
        env = np.tensordot(tmp, tb, axes=([0, 1], [0, 1]))  # (ra, rb)
    return float(env[0, 0])


def norm_sq(state):
    return inner(state, state)


def expectation(rho, state):
    """Physical expectation Tr(rho O) = 2^L <rho|O>.

    The vectorized product state carries Eq.-9 norm 2^{-L}; expectation
    values and weight-resolved contributions are reported on the Tr(rho O)
    scale (an exact power-of-two rescaling).
    """
    return float(2.0**rho.L) * inner(rho, state)


def osee(state, cut):
    """Operator-space entanglement entropy at bond ``cut`` (natural log).

    Schmidt weights are normalized by the retained norm 1 - epsilon from the
    truncation ledger. Works on a canonicalized copy when the center is
    elsewhere.
    """
    if not 0 <= cut < state.L - 1:
        raise InvalidInputError(f"cut {cut} out of range")
    if state.center != cut:
        state = state.copy()
        state.canonicalize(cut)
    lam = state.schmidt_values(cut)
    retained = 1.0 - state.ledger.epsilon
    if retained <= 0.0:
        raise NumericalFailureError(
            f"ledger reports epsilon = {state.ledger.epsilon}; no norm retained"
        )
    q = lam * lam / retained
    q = q[q > 0.0]
    return float(-np.sum(q * np.log(q)))


def save_checkpoint(state, path, metadata=None):
    """Binary container + JSON sidecar; bit-exact round trip."""
    path = str(path)
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<IIIi", CHECKPOINT_VERSION, state.L,
                            _FRAME_CODES[state.frame],
                            -1 if state.center is None else state.center))
        for t in state.tensors:
            f.write(struct.pack("<II", t.shape[0], t.shape[2]))
        for t in state.tensors:
            f.write(np.ascontiguousarray(t, dtype="<f8").tobytes())
    sidecar = {
        "ledger": state.ledger.to_json_dict(),
        "metadata": metadata or {},
    }
    with open(path + ".json", "w") as f:
        json.dump(sidecar, f, indent=1, sort_keys=True)


def load_checkpoint(path):
    """Inverse of :func:`save_checkpoint`; returns (state, metadata)."""
    path = str(path)
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise InvalidInputError(f"bad checkpoint magic {magic!r}")
        version, L, frame_code, center = struct.unpack("<IIIi", f.read(16))
        if version != CHECKPOINT_VERSION:
            raise InvalidInputError(f"unsupported checkpoint version {version}")
        shapes = [struct.unpack("<II", f.read(8)) for _ in range(L)]
        tensors = []
        for chi_l, chi_r in shapes:
            n = chi_l * 4 * chi_r
            buf = f.read(8 * n)
            tensors.append(
                np.frombuffer(buf, dtype="<f8").astype(np.float64).reshape(chi_l, 4, chi_r)
            )
    with open(path + ".json") as f:
        sidecar = json.load(f)
    ledger = TruncationLedger.from_json_dict(sidecar["ledger"])
    state = OperatorMPS(tensors, _FRAME_NAMES[frame_code], ledger,
                        None if center < 0 else center)
    return state, sidecar.get("metadata", {})
