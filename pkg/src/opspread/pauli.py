"""Pauli algebra, Bloch-sphere product states and the state-adapted local basis.

Vectorized operators live in an orthonormal single-site basis {1, a, b, c}
with inner product <A|B> = 2^{-L} Tr(A^dag B); the identity always occupies
slot 0. The "xyz" frame uses {1, x, y, z}; the "parallel" frame uses the
initial-state-adapted triple {sigma_par, sigma_perp1, sigma_perp2}.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

PAULIS = np.stack([PAULI_I, PAULI_X, PAULI_Y, PAULI_Z])

XYZ_LABELS = ("i", "x", "y", "z")
PARALLEL_LABELS = ("i", "par", "perp1", "perp2")

FRAME_XYZ = "xyz"
FRAME_PARALLEL = "parallel"

_DEGENERATE_SIN = 1e-12


@dataclass(frozen=True)
class BlochAngles:
    """Polar/azimuthal angles in radians, theta in [0, pi], phi in [0, 2*pi)."""

    theta: float
    phi: float

    def __post_init__(self):
        if not (0.0 <= self.theta <= math.pi):
            raise InvalidInputError(f"theta={self.theta} outside [0, pi]")
        if not (0.0 <= self.phi < 2.0 * math.pi):
            raise InvalidInputError(f"phi={self.phi} outside [0, 2*pi)")

    @classmethod
    def from_degrees(cls, theta_deg, phi_deg):
        return cls(math.radians(theta_deg), math.radians(phi_deg % 360.0))

    def bloch_vector(self):
        st, ct = math.sin(self.theta), math.cos(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), ct])


@dataclass
class ParallelBasis:
    """Orthonormal triple adapted to a product state: parallel = Bloch direction,
    (perp1, perp2) = the polar/azimuthal tangent directions (right-handed)."""

    angles: BlochAngles
    parallel: np.ndarray = field(repr=False)
    perp1: np.ndarray = field(repr=False)
    perp2: np.ndarray = field(repr=False)


def parallel_basis(angles):
    """Build the state-adapted basis for the given Bloch angles.

    At the poles (sin theta = 0) the tangent pair degenerates; the convention
    perp1 = (1,0,0), perp2 = (0, sign(cos theta), 0) keeps the frame
    right-handed and matches the phi -> 0 limit.
    """
    st, ct = math.sin(angles.theta), math.cos(angles.theta)
    sp, cp = math.sin(angles.phi), math.cos(angles.phi)
    par = np.array([st * cp, st * sp, ct])
    if abs(st) < _DEGENERATE_SIN:
        sign = 1.0 if ct >= 0 else -1.0
        perp1 = np.array([1.0, 0.0, 0.0])
        perp2 = np.array([0.0, sign, 0.0])
    else:
        perp1 = np.array([ct * cp, ct * sp, -st])
        perp2 = np.array([-sp, cp, 0.0])
    return ParallelBasis(angles, par, perp1, perp2)


def frame_rotation(basis):
    """4x4 orthogonal map from xyz-frame components to parallel-frame ones.

    Block diagonal: slot 0 (identity) is untouched, the 3x3 block has the
    basis vectors as rows.
    """
    rot = np.zeros((4, 4))
    rot[0, 0] = 1.0
    rot[1, 1:] = basis.parallel
    rot[2, 1:] = basis.perp1
    rot[3, 1:] = basis.perp2
    return rot


def parallel_site_matrix(basis):
    """sigma_parallel as a dense 2x2 matrix."""
    n = basis.parallel
    return n[0] * PAULI_X + n[1] * PAULI_Y + n[2] * PAULI_Z


@dataclass(frozen=True)
class PauliString:
    """Site labels 0..3 in a declared frame; 0 is always the identity."""

    labels: tuple
    frame: str = FRAME_XYZ

    def __post_init__(self):
        if any(not 0 <= l <= 3 for l in self.labels):
            raise InvalidInputError("labels must be in 0..3")
        if self.frame not in (FRAME_XYZ, FRAME_PARALLEL):
            raise InvalidInputError(f"unknown frame {self.frame!r}")


@dataclass(frozen=True)
class WeightSplit:
    total: int
    parallel_weight: int
    orthogonal_weight: int


_ALIGNMENT_TOL = 1e-12


def weight_split(string, basis):
    """Count non-identity insertions, split into parallel vs orthogonal ones.

    Strings in the xyz frame are accepted only when every non-identity label's
    axis is aligned with or orthogonal to the basis direction; a genuinely
    mixed label has no well-defined split and raises.
    """
    total = par = 0
    if string.frame == FRAME_PARALLEL:
        for l in string.labels:
            if l == 0:
                continue
            total += 1
            if l == 1:
                par += 1
    else:
        axes = np.eye(3)
        for l in string.labels:
            if l == 0:
                continue
            total += 1
            dot = abs(float(np.dot(axes[l - 1], basis.parallel)))
            if abs(dot - 1.0) < _ALIGNMENT_TOL:
                par += 1
            elif dot > _ALIGNMENT_TOL:
                raise InvalidInputError(
                    f"label {XYZ_LABELS[l]} is neither parallel nor orthogonal "
                    f"to the basis at {basis.angles}"
                )
    return WeightSplit(total, par, total - par)


def string_weights(L):
    """Total Pauli weight of every base-4 string index on L sites.

    Index convention: site 0 is the most significant base-4 digit.
    Returns an int8 array of length 4**L.
    """
    idx = np.arange(4**L, dtype=np.int64)
    w = np.zeros(4**L, dtype=np.int8)
    for _ in range(L):
        w += (idx % 4 != 0).astype(np.int8)
        idx //= 4
    return w


def string_digit_counts(L, digits):
    """Number of sites whose base-4 digit is in ``digits`` for every index."""
    idx = np.arange(4**L, dtype=np.int64)
    w = np.zeros(4**L, dtype=np.int8)
    digits = set(digits)
    for _ in range(L):
        d = idx % 4
        mask = np.zeros(4**L, dtype=bool)
        for dd in digits:
            mask |= d == dd
        w += mask.astype(np.int8)
        idx //= 4
    return w
