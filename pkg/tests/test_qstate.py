import numpy as np
import pytest

import oracles
from monotone_lab.qstate import (
    Gate,
    PauliString,
    QuantumState,
    antilinear_expectation,
    apply_gate,
    apply_kraus,
    cnot,
    cz,
    equal_up_to_global_phase,
    fidelity,
    gate_matrix,
    h,
    partial_trace,
    pauli_expectation,
    rz,
    to_density,
)

RNG = np.random.default_rng(2024)


def rand_state(n, rng, mixed=False):
    if mixed:
        return QuantumState(n, oracles.random_mixed(n, rng))
    return QuantumState(n, oracles.random_pure(n, rng))


# -- gate unitarity ----------------------------------------------------------

@pytest.mark.parametrize("kind", ["h", "x", "y", "z", "x90", "y90", "y-90", "i", "delay", "cnot", "cz"])
def test_gates_are_unitary(kind):
    targets = (0, 1) if kind in ("cnot", "cz") else (0,)
    U = gate_matrix(Gate(kind, targets))
    np.testing.assert_allclose(U.conj().T @ U, np.eye(U.shape[0]), atol=1e-12)


def test_rz_is_unitary_and_has_fixed_convention():
    U = gate_matrix(rz(0, 1.234))
    np.testing.assert_allclose(U.conj().T @ U, np.eye(2), atol=1e-12)
    np.testing.assert_allclose(U[0, 0], np.exp(-0.617j))
    np.testing.assert_allclose(U[1, 1], np.exp(+0.617j))


# -- apply_gate --------------------------------------------------------------

def test_hadamard_on_zero():
    st = apply_gate(QuantumState.zero(1), h(0))
    np.testing.assert_allclose(st.data, [1 / np.sqrt(2), 1 / np.sqrt(2)], atol=1e-12)


def test_cnot_builds_bell_pair():
    st = apply_gate(apply_gate(QuantumState.zero(2), h(0)), cnot(0, 1))
    np.testing.assert_allclose(st.data, [1 / np.sqrt(2), 0, 0, 1 / np.sqrt(2)], atol=1e-12)


def test_rz_cubed_flips_ghz_sign():
    # Three RZ(pi) rotations sum to a relative phase of 3*pi == pi (mod 2pi),
    # so <XXX> goes from +1 to -1 and the state matches the dense oracle.
    st = QuantumState(3, oracles.ghz_vec(3))
    for q in range(3):
        st = apply_gate(st, rz(q, np.pi))
    target = QuantumState(3, oracles.ghz_vec(3, phi=np.pi))
    assert equal_up_to_global_phase(st, target, atol=1e-10)
    assert pauli_expectation(st, "XXX") == pytest.approx(-1.0, abs=1e-12)


def test_apply_gate_matches_dense_oracle_on_random_states():
    rng = np.random.default_rng(11)
    for _ in range(25):
        n = int(rng.integers(1, 5))
        st = rand_state(n, rng)
        kind = rng.choice(["h", "x90", "cnot", "cz", "rz"])
        if kind in ("cnot", "cz") and n >= 2:
            ts = tuple(rng.choice(n, 2, replace=False).tolist())
            gate = Gate(kind, ts)
            U = oracles.embed(oracles.CNOT if kind == "cnot" else oracles.CZ, list(ts), n)
        else:
            q = int(rng.integers(n))
            if kind == "rz":
                theta = float(rng.uniform(-np.pi, np.pi))
                gate = rz(q, theta)
                U = oracles.embed(oracles.rz(theta), [q], n)
            else:
                gate = Gate("h" if kind in ("cnot", "cz") else kind, (q,))
                U = oracles.embed(oracles.H if gate.kind == "h" else gate_matrix(gate), [q], n)
        got = apply_gate(st, gate).data
        np.testing.assert_allclose(got, U @ st.data, atol=1e-12)


def test_apply_gate_rejects_bad_targets():
    st = QuantumState.zero(2)
    with pytest.raises(ValueError):
        apply_gate(st, h(2))
    with pytest.raises(ValueError):
        Gate("cnot", (1, 1))


def test_norm_and_trace_preserved_over_1000_random_gates():
    rng = np.random.default_rng(3)
    pure = rand_state(3, rng)
    mixed = rand_state(3, rng, mixed=True)
    kinds = ["h", "x", "y", "z", "x90", "y90", "y-90", "rz", "cnot", "cz"]
    for _ in range(1000):
        kind = rng.choice(kinds)
        if kind in ("cnot", "cz"):
            gate = Gate(kind, tuple(rng.choice(3, 2, replace=False).tolist()))
        elif kind == "rz":
            gate = rz(int(rng.integers(3)), float(rng.uniform(-np.pi, np.pi)))
        else:
            gate = Gate(kind, (int(rng.integers(3)),))
        pure = apply_gate(pure, gate)
        mixed = apply_gate(mixed, gate)
    assert abs(np.vdot(pure.data, pure.data) - 1) < 1e-10
    assert abs(np.trace(mixed.data) - 1) < 1e-10


# -- expectation values ------------------------------------------------------

def test_z_on_zero_is_plus_one():
    assert pauli_expectation(QuantumState.zero(1), "Z") == pytest.approx(1.0)


def test_xxx_on_ghz_is_plus_one():
    st = QuantumState(3, oracles.ghz_vec(3))
    assert pauli_expectation(st, "XXX") == pytest.approx(1.0, abs=1e-12)


def test_xyy_on_quarter_drifted_ghz_vanishes():
    st = QuantumState(3, oracles.ghz_vec(3, phi=np.pi / 2))
    assert pauli_expectation(st, "XYY") == pytest.approx(0.0, abs=1e-12)


def test_identity_expectation_is_one_for_all_states():
    rng = np.random.default_rng(6)
    for n in (1, 2, 3, 4):
        assert pauli_expectation(rand_state(n, rng), "I" * n) == pytest.approx(1.0, abs=1e-12)
        assert pauli_expectation(rand_state(n, rng, mixed=True), "I" * n) == pytest.approx(1.0, abs=1e-12)


def test_signed_pauli_string():
    st = QuantumState.zero(1)
    assert pauli_expectation(st, PauliString("Z", -1)) == pytest.approx(-1.0)


def test_expectation_matches_dense_oracle():
    rng = np.random.default_rng(8)
    for _ in range(50):
        n = int(rng.integers(1, 5))
        st = rand_state(n, rng, mixed=bool(rng.integers(2)))
        label = "".join(rng.choice(list("IXYZ"), n))
        want = oracles.expect(oracles.pauli_word(label), st.data)
        assert pauli_expectation(st, label) == pytest.approx(want, abs=1e-12)


def test_pauli_length_mismatch_raises():
    with pytest.raises(ValueError):
        pauli_expectation(QuantumState.zero(2), "XXX")


# -- antilinear expectations -------------------------------------------------

def test_yy_antilinear_on_bell_is_minus_one():
    bell = QuantumState.pure([1 / np.sqrt(2), 0, 0, 1 / np.sqrt(2)])
    val = antilinear_expectation(bell, "YY")
    assert val == pytest.approx(-1.0, abs=1e-12)
    assert abs(val) ** 2 == pytest.approx(1.0, abs=1e-12)


def test_antilinear_modulus_equals_wootters_concurrence():
    # |psi^T (Y x Y) psi| is the pure-state concurrence; check against the
    # independent spin-flip eigenvalue formula on random two-qubit states.
    rng = np.random.default_rng(13)
    for _ in range(30):
        psi = oracles.random_pure(2, rng)
        st = QuantumState(2, psi)
        got = abs(antilinear_expectation(st, "YY"))
        want = oracles.wootters_concurrence(np.outer(psi, psi.conj()))
        # the non-Hermitian eigensolve in the oracle is good to ~1e-8
        assert got == pytest.approx(want, abs=1e-7)


def test_antilinear_on_drifted_ghz_has_unit_modulus():
    for phi in np.linspace(0, 2 * np.pi, 9):
        st = QuantumState(3, oracles.ghz_vec(3, phi))
        val = antilinear_expectation(st, "XXX")
        assert abs(val) == pytest.approx(1.0, abs=1e-12)
        # The phase tracks the drift: psi^T X^(x)3 psi = e^{i phi}.
        assert val == pytest.approx(np.exp(1j * phi), abs=1e-12)


def test_antilinear_equals_plain_expectation_on_real_states():
    rng = np.random.default_rng(17)
    for _ in range(40):
        n = int(rng.integers(1, 5))
        st = QuantumState(n, oracles.random_real_unit(2**n, rng).astype(complex))
        label = "".join(rng.choice(list("IXYZ"), n))
        assert antilinear_expectation(st, label) == pytest.approx(
            pauli_expectation(st, label), abs=1e-12
        )


def test_antilinear_rejects_mixed_states():
    with pytest.raises(ValueError):
        antilinear_expectation(to_density(QuantumState.zero(2)), "ZZ")


# -- density and partial trace -----------------------------------------------

def test_to_density_of_zero():
    rho = to_density(QuantumState.zero(1)).data
    np.testing.assert_allclose(rho, np.diag([1.0, 0.0]), atol=1e-15)


def test_partial_trace_of_bell_is_maximally_mixed():
    bell = QuantumState.pure([1 / np.sqrt(2), 0, 0, 1 / np.sqrt(2)])
    for q in (0, 1):
        red = partial_trace(bell, [q])
        np.testing.assert_allclose(red.data, np.eye(2) / 2, atol=1e-12)


def test_partial_trace_factorizes_products():
    rng = np.random.default_rng(23)
    rho1 = oracles.random_mixed(1, rng)
    rho2 = oracles.random_mixed(1, rng)
    joint = QuantumState(2, np.kron(rho1, rho2))
    np.testing.assert_allclose(partial_trace(joint, [0]).data, rho1, atol=1e-12)
    np.testing.assert_allclose(partial_trace(joint, [1]).data, rho2, atol=1e-12)


def test_partial_trace_empty_keep_raises():
    with pytest.raises(ValueError):
        partial_trace(QuantumState.zero(2), [])


# -- structural identities ----------------------------------------------------

def test_cz_equals_hadamard_conjugated_cnot():
    rng = np.random.default_rng(29)
    for _ in range(20):
        st = rand_state(2, rng)
        via_cz = apply_gate(st, cz(0, 1))
        via_cnot = apply_gate(apply_gate(apply_gate(st, h(1)), cnot(0, 1)), h(1))
        np.testing.assert_allclose(via_cz.data, via_cnot.data, atol=1e-12)


def test_kraus_application_preserves_trace():
    rng = np.random.default_rng(31)
    st = rand_state(2, rng, mixed=True)
    # Bit-flip channel as an arbitrary honest Kraus pair.
    kraus = [np.sqrt(0.7) * np.eye(2), np.sqrt(0.3) * oracles.X]
    out = apply_kraus(st, kraus, (1,))
    assert abs(np.trace(out.data) - 1) < 1e-12


def test_invalid_states_rejected():
    with pytest.raises(ValueError):
        QuantumState.pure([1.0, 1.0])  # unnormalized
    with pytest.raises(ValueError):
        QuantumState(1, np.array([[0.6, 0.5], [0.2, 0.4]]))  # not Hermitian
    bad = np.diag([1.5, -0.5]).astype(complex)
    with pytest.raises(ValueError):
        QuantumState.mixed(bad)  # negative eigenvalue


def test_fidelity_of_orthogonal_and_identical_states():
    z = QuantumState.zero(2)
    assert fidelity(z, z) == pytest.approx(1.0)
    one = QuantumState.pure([0, 0, 0, 1])
    assert fidelity(z, one) == pytest.approx(0.0, abs=1e-15)
