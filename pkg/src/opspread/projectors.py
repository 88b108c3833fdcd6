"""Projector MPOs onto string sectors: contributing, non-contributing and
Pauli-weight ladders, built in the parallel frame where every entry is 0 or 1.

Callers rotate states into the parallel frame first; the total-weight
projector is frame-independent (weight survives local basis rotations).
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .mpo import Mpo, compress_mpo, mpo_from_site_matrices, mpo_product

# single-site diagonal projectors in the parallel frame {1, par, perp1, perp2}
DIAG_IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])
DIAG_PARALLEL = np.array([0.0, 1.0, 0.0, 0.0])
DIAG_ORTHOGONAL = np.array([0.0, 0.0, 1.0, 1.0])
DIAG_NONIDENTITY = np.array([0.0, 1.0, 1.0, 1.0])
DIAG_CONTRIBUTING = DIAG_IDENTITY + DIAG_PARALLEL


@dataclass
class ProjectorMPO:
    mpo: Mpo
    kind: str
    omega: int | None = None
    basis: object = None
    note: str | None = None


def _ladder_mpo(stay, advance, omega, L):
    """Bidiagonal counting MPO: diag passes ``stay`` labels, superdiagonal
    counts ``advance`` labels; start state 0 (first row), end state omega
    (last column)."""
    m = omega + 1
    w = np.zeros((m, 4, 4, m))
    for k in range(m):
        w[k, :, :, k] = np.diag(stay)
        if k + 1 < m:
            w[k, :, :, k + 1] = np.diag(advance)
    tensors = [w.copy() for _ in range(L)]
    tensors[0] = w[0:1]
    tensors[-1] = np.ascontiguousarray(w[:, :, :, m - 1 : m])
    return Mpo(tensors)


def contributing_projector(basis, L):
    """Bond-1 projector onto strings built from identity and parallel only."""
    site = np.diag(DIAG_CONTRIBUTING)
    return ProjectorMPO(mpo_from_site_matrices([site] * L), "contributing", basis=basis)


def noncontributing_projector(basis, L):
    """Bond-2 complement of the contributing projector: at least one
    orthogonal insertion anywhere."""
    w = np.zeros((2, 4, 4, 2))
    w[0, :, :, 0] = np.diag(DIAG_CONTRIBUTING)
    w[0, :, :, 1] = np.diag(DIAG_ORTHOGONAL)
    w[1, :, :, 1] = np.eye(4)
    tensors = [w.copy() for _ in range(L)]
    tensors[0] = w[0:1]
    tensors[-1] = np.ascontiguousarray(w[:, :, :, 1:2])
    return ProjectorMPO(Mpo(tensors), "noncontributing", basis=basis)


def _zero_projector(kind, omega, L, basis=None):
    zero = np.zeros((1, 4, 4, 1))
    return ProjectorMPO(
        Mpo([zero.copy() for _ in range(L)]), kind, omega, basis,
        note="omega-exceeds-length",
    )


def weight_projector(omega, L):
    """Projector onto total Pauli weight exactly omega (bond dim omega+1)."""
    if omega < 0:
        raise InvalidInputError("omega must be >= 0")
    if omega > L:
        warnings.warn(f"weight_projector: omega={omega} > L={L}; returning zero MPO")
        return _zero_projector("weight", omega, L)
    return ProjectorMPO(
        _ladder_mpo(DIAG_IDENTITY, DIAG_NONIDENTITY, omega, L), "weight", omega
    )


def sector_projector(kind, omega, basis, L):
    """Count only parallel or only orthogonal insertions, any other content.

    parallel_weight(w): exactly w parallel insertions, orthogonal content free.
    orthogonal_weight(w): exactly w orthogonal insertions, parallel content
    free; orthogonal_weight(0) therefore equals the contributing projector.
    """
    if kind not in ("parallel_weight", "orthogonal_weight"):
        raise InvalidInputError(f"unknown sector kind {kind!r}")
    if omega < 0:
        raise InvalidInputError("omega must be >= 0")
    if omega > L:
        warnings.warn(f"sector_projector: omega={omega} > L={L}; returning zero MPO")
        return _zero_projector(kind, omega, L, basis)
    advance = DIAG_PARALLEL if kind == "parallel_weight" else DIAG_ORTHOGONAL
    stay = DIAG_NONIDENTITY + DIAG_IDENTITY - advance
    return ProjectorMPO(_ladder_mpo(stay, advance, omega, L), kind, omega, basis)


def backflow_projector(omega_perp, basis, L):
    """P_nc composed with the total-weight projector at omega = omega_perp,
    exactly compressed (bond dimension at most 2*(omega_perp+1))."""
    if omega_perp < 1:
        raise InvalidInputError("omega_perp must be >= 1")
    nc = noncontributing_projector(basis, L)
    pw = weight_projector(omega_perp, L)
    prod = compress_mpo(mpo_product(nc.mpo, pw.mpo))
    cap = 2 * (omega_perp + 1)
    dims = prod.bond_dims()
    if dims and max(dims) > cap:
        raise InvalidInputError(
            f"backflow projector compression failed: bond {max(dims)} > {cap}"
        )
    return ProjectorMPO(prod, "product", omega_perp, basis)
