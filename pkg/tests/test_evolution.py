import numpy as np
import pytest

from opspread import oracle
from opspread.errors import InvalidInputError, ResourceLimitError
from opspread.evolution import (
    QuenchParams,
    bond_hamiltonian,
    build_trotter_layer,
    dense_hamiltonian,
    hamiltonian_mps,
    step,
    sublayer_as_mpo,
)
from opspread.linalg import kron_chain
from opspread.mpo import apply_mpo
from opspread.mps import identity_mps, inner, local_operator_mps, osee
from opspread.pauli import PAULI_I, PAULI_X, PAULI_Z


def evolve(state, layer, n, chi=None, cutoff=0.0):
    for k in range(1, n + 1):
        step(state, layer, chi, cutoff, time=k * layer.dt)
    return state


def test_folded_gates_orthogonal_and_unital():
    layer = build_trotter_layer(QuenchParams(L=6), 0.05)
    for b, g in layer.even_gates + layer.odd_gates:
        assert np.abs(g.T @ g - np.eye(16)).max() < 1e-12
        assert g[0, 0] == 1.0
        assert np.abs(g[0, 1:]).max() == 0.0
        assert np.abs(g[1:, 0]).max() == 0.0


def test_classical_gate_fixes_zz_conserved_component():
    # g = h = 0: sigma^z commutes with the bond term
    layer = build_trotter_layer(QuenchParams(L=2, g=0.0, h=0.0), 0.3)
    g = layer.even_gates[0][1]
    z_component = np.zeros(16)
    z_component[3 * 4] = 1.0  # z on the left site
    assert np.abs(g @ z_component - z_component).max() < 1e-14


def test_single_spin_heisenberg_rotation():
    # J = h = 0, g = 1: z component rotates into -y at angle 2 g t
    dt = 0.17
    layer = build_trotter_layer(QuenchParams(L=2, J=0.0, g=1.0, h=0.0), dt)
    g = layer.even_gates[0][1]
    z_in = np.zeros(16)
    z_in[3 * 4] = 1.0
    out = g @ z_in
    expected = np.zeros(16)
    expected[3 * 4] = np.cos(2 * dt)
    expected[2 * 4] = -np.sin(2 * dt)
    assert np.abs(out - expected).max() < 1e-12


def test_step_conserves_sigma_z_for_classical_ising():
    p = QuenchParams(L=5, g=0.0, h=0.0)
    layer = build_trotter_layer(p, 0.05)
    st = local_operator_mps("z", 2, 5)
    ref = oracle.mps_to_dense(st).coeffs.copy()
    evolve(st, layer, 40)
    assert np.abs(oracle.mps_to_dense(st).coeffs - ref).max() < 1e-10


def test_step_matches_dense_oracle_at_model_point():
    L, dt, t = 6, 0.01, 1.0
    p = QuenchParams(L=L)
    st = local_operator_mps("x", L // 2, L)
    layer = build_trotter_layer(p, dt)
    evolve(st, layer, 100)
    vec = oracle.mps_to_dense(st).coeffs
    ex = oracle.exact_heisenberg(oracle.dense_local_operator("x", L // 2, L), p, t)
    from opspread.pauli import BlochAngles
    from opspread.mps import expectation, product_state_mps

    rho = product_state_mps(BlochAngles(0.0, 0.0), L)
    tebd_val = expectation(rho, st)
    rho_d = oracle.dense_product_state(BlochAngles(0.0, 0.0), L)
    exact_val = oracle.exact_expectation(rho_d, ex)
    assert abs(tebd_val - exact_val) < 1e-5  # Trotter-limited at dt = 0.01


def test_trotter_error_halves_dt_quarter_error():
    L, t = 4, 1.0
    p = QuenchParams(L=L)
    ex = oracle.exact_heisenberg(oracle.dense_local_operator("x", 2, L), p, t)
    errs = []
    for dt in (0.02, 0.01):
        st = local_operator_mps("x", 2, L)
        layer = build_trotter_layer(p, dt)
        evolve(st, layer, int(round(t / dt)))
        errs.append(np.abs(oracle.mps_to_dense(st).coeffs - ex.coeffs).max())
    ratio = errs[0] / errs[1]
    assert 3.5 < ratio < 4.5


def test_second_order_convergence_slope():
    L, t = 4, 0.4
    p = QuenchParams(L=L)
    ex = oracle.exact_heisenberg(oracle.dense_local_operator("x", 2, L), p, t)
    dts = np.array([0.04, 0.02, 0.01])
    errs = []
    for dt in dts:
        st = local_operator_mps("x", 2, L)
        layer = build_trotter_layer(p, dt)
        evolve(st, layer, int(round(t / dt)))
        errs.append(np.abs(oracle.mps_to_dense(st).coeffs - ex.coeffs).max())
    slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    assert abs(slope - 2.0) < 0.15


def test_unitarity_and_trace_preservation():
    L = 6
    p = QuenchParams(L=L)
    st = local_operator_mps("x", 3, L)
    layer = build_trotter_layer(p, 0.02)
    ident = identity_mps(L)
    evolve(st, layer, 50)
    assert abs(inner(st, st) - 1.0) < 1e-10
    assert abs(inner(ident, st)) < 1e-12  # traceless stays traceless


def test_energy_overlap_conservation_small_dt():
    L = 6
    p = QuenchParams(L=L)
    h_mps = hamiltonian_mps(p)
    st = local_operator_mps("x", 3, L)
    layer = build_trotter_layer(p, 0.001)
    e0 = inner(h_mps, st)
    dev = 0.0
    for k in range(1, 101):
        step(st, layer, None, 0.0, time=k * 0.001)
        dev = max(dev, abs(inner(h_mps, st) - e0))
    assert dev < 1e-8


def test_hamiltonian_mps_matches_dense():
    p = QuenchParams(L=5)
    vec = oracle.mps_to_dense(hamiltonian_mps(p)).coeffs
    ref = oracle.matrix_to_coeffs(dense_hamiltonian(p), 5)
    assert np.abs(vec - ref).max() < 1e-12


def test_lightcone_exact_identity_outside():
    L = 10
    p = QuenchParams(L=L)
    site = L // 2
    st = local_operator_mps("x", site, L)
    layer = build_trotter_layer(p, 0.05)
    sublayers = 0
    for n in range(1, 5):
        step(st, layer, None, 0.0)
        sublayers += 3  # odd, even, odd
        lo, hi = st.support_window()
        assert lo >= site - sublayers and hi <= site + sublayers
        for j in range(0, lo):
            assert st.site_is_trivial_identity(j)
        for j in range(hi + 1, L):
            assert st.site_is_trivial_identity(j)


def test_osee_reflection_symmetry_commuting_case():
    # g = h = 0: bond gates commute, layer ordering is exact, reflection exact
    L = 7
    p = QuenchParams(L=L, g=0.0, h=0.0)
    st = local_operator_mps("x", 3, L)
    layer = build_trotter_layer(p, 0.05)
    evolve(st, layer, 20)
    for b in range(L - 1):
        assert abs(osee(st, b) - osee(st, L - 2 - b)) < 1e-9


def test_osee_reflection_symmetry_model_point_is_trotter_limited():
    L = 7
    p = QuenchParams(L=L)
    st = local_operator_mps("x", 3, L)
    layer = build_trotter_layer(p, 0.01)
    evolve(st, layer, 50)
    for b in range(L - 1):
        assert abs(osee(st, b) - osee(st, L - 2 - b)) < 1e-3


def test_dense_hamiltonian_classical_pair_spectrum():
    p = QuenchParams(L=2, g=0.0, h=0.0)
    w = np.linalg.eigvalsh(dense_hamiltonian(p))
    assert np.allclose(w, [-1.0, -1.0, 1.0, 1.0])


def test_dense_hamiltonian_traceless_and_term_by_term():
    p = QuenchParams(L=4)
    ham = dense_hamiltonian(p)
    assert abs(np.trace(ham)) < 1e-12
    ref = np.zeros((16, 16), dtype=complex)
    for j in range(3):
        mats = [PAULI_I] * 4
        mats[j] = PAULI_Z
        mats[j + 1] = PAULI_Z
        ref -= p.J * kron_chain(mats)
    for j in range(4):
        mats = [PAULI_I] * 4
        mats[j] = PAULI_X
        ref -= p.g * kron_chain(mats)
        mats[j] = PAULI_Z
        ref -= p.h * kron_chain(mats)
    assert np.abs(ham - ref).max() < 1e-14
    w = np.linalg.eigvalsh(ham)
    assert np.all(np.diff(w) >= -1e-12)


def test_dense_hamiltonian_resource_limit():
    with pytest.raises(ResourceLimitError):
        dense_hamiltonian(QuenchParams(L=13))


def test_bond_hamiltonian_field_split_sums_to_hamiltonian():
    p = QuenchParams(L=5)
    total = np.zeros((2**5, 2**5), dtype=complex)
    for b in range(4):
        pre = kron_chain([PAULI_I] * b)
        post = kron_chain([PAULI_I] * (5 - b - 2))
        total += np.kron(np.kron(pre, bond_hamiltonian(p, b)), post)
    assert np.abs(total - dense_hamiltonian(p)).max() < 1e-13


def test_step_via_layer_mpo_matches_gate_path(rng):
    L = 5
    p = QuenchParams(L=L)
    layer = build_trotter_layer(p, 0.05)
    st1 = local_operator_mps("x", 2, L)
    st2 = st1.copy()
    step(st1, layer, None, 0.0)
    for which in ("odd", "even", "odd"):
        st2 = apply_mpo(sublayer_as_mpo(layer, which), st2)
    v1 = oracle.mps_to_dense(st1).coeffs
    v2 = oracle.mps_to_dense(st2).coeffs
    assert np.abs(v1 - v2).max() < 1e-11


def test_norm_accounting_through_layer_mpos():
    # unitary-frame evolution layers applied via apply_mpo: inner + eps = 1
    L = 6
    p = QuenchParams(L=L)
    layer = build_trotter_layer(p, 0.05)
    odd = sublayer_as_mpo(layer, "odd")
    even = sublayer_as_mpo(layer, "even")
    st = local_operator_mps("x", 3, L)
    for n in range(12):
        for mpo in (odd, even, odd):
            st = apply_mpo(mpo, st, chi_max=10, lambda2_cutoff=1e-12, time=float(n))
    assert st.ledger.epsilon > 0
    assert abs(inner(st, st) + st.ledger.epsilon - 1.0) < 1e-8


def test_step_rejects_length_mismatch():
    layer = build_trotter_layer(QuenchParams(L=4), 0.05)
    with pytest.raises(InvalidInputError):
        step(local_operator_mps("x", 1, 5), layer, None, 0.0)


def test_model_point_pair_spectrum_hand_built():
    # explicit 4x4 matrix in the {00, 01, 10, 11} basis for J=1, g=1, h=0.5
    p = QuenchParams(L=2)
    hand = np.array(
        [
            [-1.0 - 1.0, -1.0, -1.0, 0.0],
            [-1.0, +1.0 - 0.0, 0.0, -1.0],
            [-1.0, 0.0, +1.0 + 0.0, -1.0],
            [0.0, -1.0, -1.0, -1.0 + 1.0],
        ]
    )
    assert np.abs(dense_hamiltonian(p) - hand).max() < 1e-14
    w = np.linalg.eigvalsh(hand)
    from opspread.linalg import eigh

    w2, _ = eigh(dense_hamiltonian(p))
    assert np.abs(w - w2).max() < 1e-12


def test_dense_hamiltonian_traceless_L8():
    assert abs(np.trace(dense_hamiltonian(QuenchParams(L=8)))) < 1e-10


def test_osee_of_evolved_operator_matches_dense_schmidt():
    L, dt = 6, 0.01
    p = QuenchParams(L=L)
    st = local_operator_mps("x", L // 2, L)
    layer = build_trotter_layer(p, dt)
    evolve(st, layer, 100)  # tJ = 1, no truncation
    vec = oracle.mps_to_dense(st).coeffs
    for cut in (1, 2, 3, 4):
        m = vec.reshape(4 ** (cut + 1), -1)
        lam = np.linalg.svd(m, compute_uv=False)
        q = lam[lam > 1e-12] ** 2
        q /= q.sum()
        ref = -float(np.sum(q * np.log(q)))
        assert abs(osee(st, cut) - ref) < 1e-9


@pytest.mark.parametrize("site", [0, 4])
def test_edge_site_operator_matches_oracle(site):
    L, dt, t = 5, 0.01, 0.6
    p = QuenchParams(L=L)
    st = local_operator_mps("x", site, L)
    layer = build_trotter_layer(p, dt)
    evolve(st, layer, int(round(t / dt)))
    ex = oracle.exact_heisenberg(oracle.dense_local_operator("x", site, L), p, t)
    # edge sites absorb their full field into one bond: larger Trotter constant
    assert np.abs(oracle.mps_to_dense(st).coeffs - ex.coeffs).max() < 2e-5


def test_lightcone_from_edge_site():
    L = 8
    p = QuenchParams(L=L)
    st = local_operator_mps("z", 0, L)
    layer = build_trotter_layer(p, 0.05)
    step(st, layer, None, 0.0)
    lo, hi = st.support_window()
    assert lo == 0 and hi <= 3
    for j in range(hi + 1, L):
        assert st.site_is_trivial_identity(j)
