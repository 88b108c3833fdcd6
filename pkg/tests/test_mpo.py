import numpy as np
import pytest

from opspread import oracle
from opspread.errors import InvalidInputError, ResourceLimitError
from opspread.mpo import (
    apply_mpo,
    compress_mpo,
    identity_mpo,
    mpo_from_site_matrices,
    mpo_product,
    mpo_to_dense,
)
from opspread.mps import OperatorMPS, inner, local_operator_mps
from tests.test_mps import random_mps


def random_mpo(rng, L, chi):
    dims = [1] + [chi] * (L - 1) + [1]
    return mpo_from_site_matrices([np.eye(4)] * L).__class__(
        [rng.standard_normal((dims[i], 4, 4, dims[i + 1])) * 0.5 for i in range(L)]
    )


def test_identity_mpo_preserves_state(rng):
    st = random_mps(rng, 4, 3)
    out = apply_mpo(identity_mpo(4), st)
    fidelity = inner(out, st) / np.sqrt(inner(st, st) * inner(out, out))
    assert abs(fidelity - 1.0) < 1e-12


def test_apply_mpo_matches_dense(rng):
    L = 4
    st = random_mps(rng, L, 3)
    mpo = random_mpo(rng, L, 2)
    out = apply_mpo(mpo, st)
    dense_out = mpo_to_dense(mpo) @ oracle.mps_to_dense(st).coeffs
    assert np.abs(oracle.mps_to_dense(out).coeffs - dense_out).max() < 1e-10


def test_apply_mpo_truncation_ledger(rng):
    L = 5
    st = random_mps(rng, L, 4)
    nrm = np.sqrt(inner(st, st))
    st.tensors[0] /= nrm
    mpo = random_mpo(rng, L, 2)
    out = apply_mpo(mpo, st, chi_max=3, time=2.0)
    assert all(d <= 3 for d in out.bond_dims())
    exact = apply_mpo(mpo, st)
    # discarded weight accounts for the norm loss of the compression
    assert abs((inner(exact, exact) - inner(out, out)) - out.ledger.epsilon) < 1e-8


def test_apply_mpo_never_increases_norm_under_truncation(rng):
    st = random_mps(rng, 4, 4)
    full = apply_mpo(identity_mpo(4), st)
    trunc = apply_mpo(identity_mpo(4), st, chi_max=2)
    assert inner(trunc, trunc) <= inner(full, full) + 1e-12


def test_apply_mpo_hard_cap(rng):
    st = random_mps(rng, 4, 4)
    mpo = random_mpo(rng, 4, 2)
    with pytest.raises(ResourceLimitError):
        apply_mpo(mpo, st, hard_cap=4)


def test_apply_mpo_length_mismatch(rng):
    with pytest.raises(InvalidInputError):
        apply_mpo(identity_mpo(3), random_mps(rng, 4, 2))


def test_mpo_product_matches_dense(rng):
    L = 3
    a, b = random_mpo(rng, L, 2), random_mpo(rng, L, 3)
    prod = mpo_product(a, b)
    ref = mpo_to_dense(a) @ mpo_to_dense(b)
    assert np.abs(mpo_to_dense(prod) - ref).max() < 1e-12


def test_compress_mpo_exact_rank_reduction(rng):
    L = 4
    ident = identity_mpo(L)
    doubled = mpo_product(ident, ident)  # bond dimension 1 disguised as 1
    prod = mpo_product(random_mpo(rng, L, 2), ident)  # rank <= 2 stored as 2
    comp = compress_mpo(prod)
    assert np.abs(mpo_to_dense(comp) - mpo_to_dense(prod)).max() < 1e-10
    assert max(comp.bond_dims()) <= max(prod.bond_dims())
    comp_ident = compress_mpo(doubled)
    assert max(comp_ident.bond_dims()) == 1
