"""Dense brute-force reference for small chains (L <= 7).

Operators are stored as real coefficient vectors of length 4^L over the
orthonormal Pauli-string basis (site 0 = most significant base-4 digit,
digit 0 = identity). Inner products are plain dot products, evolution is an
exact matrix conjugation, and sector projections are index masks — fully
independent of the tensor-network code paths it validates.
"""

from dataclasses import dataclass

import numpy as np

from . import pauli
from .errors import InvalidInputError, ResourceLimitError
from .evolution import dense_hamiltonian
from .linalg import expm_hermitian
from .pauli import FRAME_PARALLEL, FRAME_XYZ, PAULIS

DENSE_LIMIT = 7
OWE_LIMIT = 6

# sigma[p, i, j] and its dual (1/2) sigma^dag for coefficient extraction
_SIGMA = PAULIS
_SIGMA_DUAL = 0.5 * np.conj(np.transpose(PAULIS, (0, 2, 1)))


@dataclass
class DenseOperatorVector:
    L: int
    coeffs: np.ndarray
    frame: str = FRAME_XYZ

    def __post_init__(self):
        if self.coeffs.shape != (4**self.L,):
            raise InvalidInputError("coefficient vector has wrong length")

    def copy(self):
        return DenseOperatorVector(self.L, self.coeffs.copy(), self.frame)


def _check_limit(L, limit=DENSE_LIMIT):
    if L > limit:
        raise ResourceLimitError(f"dense oracle limited to L <= {limit}, got {L}")


def coeffs_to_matrix(vec):
    """Coefficient vector -> dense 2^L x 2^L operator (xyz frame)."""
    if vec.frame != FRAME_XYZ:
        raise InvalidInputError("convert to the xyz frame first")
    L = vec.L
    t = vec.coeffs.astype(complex).reshape([4] * L)
    for site in range(L):
        t = np.tensordot(t, _SIGMA, axes=([0], [0]))
    # tensordot appended (i_site, j_site) pairs in site order
    perm = [2 * k for k in range(L)] + [2 * k + 1 for k in range(L)]
    return t.transpose(perm).reshape(2**L, 2**L)


def matrix_to_coeffs(m, L):
    """Dense operator -> real coefficient vector via per-site partial traces."""
    t = m.reshape([2] * (2 * L))
    perm = []
    for k in range(L):
        perm.extend([k, L + k])
    t = t.transpose(perm)  # (i_1, j_1, i_2, j_2, ...)
    for _ in range(L):
        # contract the leading (i, j) pair into a Pauli slot appended at the end
        t = np.tensordot(t, _SIGMA_DUAL, axes=([0, 1], [2, 1]))
    coeffs = t.reshape(4**L)
    if np.abs(coeffs.imag).max() > 1e-12:
        raise InvalidInputError("operator is not Hermitian: complex Pauli coefficients")
    return coeffs.real.copy()


def dense_local_operator(label, site, L):
    _check_limit(L)
    if isinstance(label, str):
        label = pauli.XYZ_LABELS.index(label)
    coeffs = np.zeros(4**L)
    coeffs[label * 4 ** (L - 1 - site)] = 1.0
    return DenseOperatorVector(L, coeffs, FRAME_XYZ)


def dense_product_state(angles, L, frame=FRAME_XYZ):
    """Coefficient vector of the vectorized product state rho(theta, phi)."""
    _check_limit(L)
    if frame == FRAME_PARALLEL:
        site = np.array([0.5, 0.5, 0.0, 0.0])
    else:
        n = angles.bloch_vector()
        site = 0.5 * np.array([1.0, n[0], n[1], n[2]])
    out = np.array([1.0])
    for _ in range(L):
        out = np.kron(out, site)
    return DenseOperatorVector(L, out, frame)


def rotate_vector(vec, rotation, frame):
    """Apply a 4x4 single-site frame rotation to every site."""
    t = vec.coeffs.reshape([4] * vec.L)
    for _ in range(vec.L):
        t = np.tensordot(rotation, t, axes=([1], [0]))
        t = np.moveaxis(t, 0, -1)
    return DenseOperatorVector(vec.L, t.reshape(4**vec.L).copy(), frame)


def mps_to_dense(state):
    """Exact contraction of an OperatorMPS into a coefficient vector."""
    _check_limit(state.L)
    v = np.ones((1, 1))
    for t in state.tensors:
        v = np.tensordot(v, t, axes=([1], [0]))  # (prefix, 4, chi_r)
        v = v.reshape(v.shape[0] * 4, v.shape[2])
    return DenseOperatorVector(state.L, v[:, 0].copy(), state.frame)


def exact_heisenberg(op, p, t):
    """O(t) = e^{+iHt} O e^{-iHt}, exact (no Trotter), open chain."""
    _check_limit(op.L)
    if p.L != op.L:
        raise InvalidInputError("params/operator length mismatch")
    ham = dense_hamiltonian(p)
    u = expm_hermitian(ham, -1j * t)
    mat = u.conj().T @ coeffs_to_matrix(op) @ u
    return DenseOperatorVector(op.L, matrix_to_coeffs(mat, op.L), FRAME_XYZ)


def sector_mask(L, omega, kind="weight"):
    """Boolean mask over string indices for the requested sector.

    kinds (parallel-frame digit conventions: 1 = parallel, 2/3 = orthogonal):
      weight              total weight == omega
      parallel_weight     # parallel insertions == omega
      orthogonal_weight   # orthogonal insertions == omega
      contributing        no orthogonal insertions
      noncontributing     at least one orthogonal insertion
      backflow            total weight == omega and noncontributing
    """
    total = pauli.string_weights(L)
    orth = pauli.string_digit_counts(L, (2, 3))
    if kind == "weight":
        return total == omega
    if kind == "parallel_weight":
        return (total - orth) == omega
    if kind == "orthogonal_weight":
        return orth == omega
    if kind == "contributing":
        return orth == 0
    if kind == "noncontributing":
        return orth > 0
    if kind == "backflow":
        return (total == omega) & (orth > 0)
    raise InvalidInputError(f"unknown sector kind {kind!r}")


def exact_weight_sector(op, omega, kind="weight"):
    """Zero out every coefficient outside the requested sector.

    Parallel/orthogonal kinds expect a parallel-frame vector.
    """
    if kind != "weight" and op.frame != FRAME_PARALLEL:
        raise InvalidInputError("sector split needs the parallel frame")
    mask = sector_mask(op.L, omega, kind)
    return DenseOperatorVector(op.L, np.where(mask, op.coeffs, 0.0), op.frame)


def exact_densities(op_parallel, omega_max):
    """(contributing, noncontributing) density maps from a parallel-frame vector."""
    L = op_parallel.L
    total = pauli.string_weights(L)
    orth = pauli.string_digit_counts(L, (2, 3))
    c2 = op_parallel.coeffs**2
    rho_c, rho_nc = {}, {}
    for w in range(omega_max + 1):
        sel = total == w
        rho_c[w] = float(c2[sel & (orth == 0)].sum())
        rho_nc[w] = float(c2[sel & (orth > 0)].sum())
    return rho_c, rho_nc


def exact_contributions(op_parallel, angles, omega_max):
    """O_w = Tr(rho P^c P_w O) from parallel-frame coefficients
    (expectation scale, matching analysis.direct_contributions)."""
    L = op_parallel.L
    rho = dense_product_state(angles, L, FRAME_PARALLEL)
    prod = rho.coeffs * op_parallel.coeffs
    total = pauli.string_weights(L)
    orth = pauli.string_digit_counts(L, (2, 3))
    out = {}
    for w in range(omega_max + 1):
        out[w] = float(2.0**L) * float(prod[(total == w) & (orth == 0)].sum())
    return out


def exact_expectation(rho, op):
    """Tr(rho O) from coefficient vectors in a shared frame."""
    if rho.frame != op.frame:
        raise InvalidInputError("frame mismatch")
    return float(2.0**op.L) * float(np.dot(rho.coeffs, op.coeffs))


_DEGENERATE_FLOOR = 1e-13  # matches the analysis-side convention


def _owe_from_contributions(contribs, exact_value, omega_star):
    """Deviation distribution and entropy; bins omega = 1..omega_star."""
    acc = 0.0
    d = np.zeros(omega_star + 1)
    for w in range(omega_star + 1):
        acc += contribs.get(w, 0.0)
        d[w] = abs(exact_value - acc)
    dsum = d[1:].sum()
    if dsum <= _DEGENERATE_FLOOR * max(1.0, abs(exact_value)):
        return np.zeros(omega_star), 0.0
    p = d[1:] / dsum
    nz = p[p > 0.0]
    return p, float(-(nz * np.log2(nz)).sum())


def exact_owe_pipeline(angles, op_label, site, p, times, omega_star):
    """Reference OWE trajectory: exact evolution, exact contributions.

    Returns (times, owe array, probabilities array (T, omega_star)).
    """
    _check_limit(p.L, OWE_LIMIT)
    basis = pauli.parallel_basis(angles)
    rot = pauli.frame_rotation(basis)
    op0 = dense_local_operator(op_label, site, p.L)
    ham = dense_hamiltonian(p)
    mat0 = coeffs_to_matrix(op0)
    rho = dense_product_state(angles, p.L, FRAME_PARALLEL)
    owe_vals = np.zeros(len(times))
    probs = np.zeros((len(times), omega_star))
    for i, t in enumerate(times):
        u = expm_hermitian(ham, -1j * float(t))
        vec = DenseOperatorVector(p.L, matrix_to_coeffs(u.conj().T @ mat0 @ u, p.L))
        vec = rotate_vector(vec, rot, FRAME_PARALLEL)
        contribs = exact_contributions(vec, angles, min(omega_star, p.L))
        exact_value = exact_expectation(rho, vec)
        probs[i], owe_vals[i] = _owe_from_contributions(contribs, exact_value, omega_star)
    return np.asarray(times, dtype=float), owe_vals, probs
