import math

import numpy as np
import pytest

import oracles
from monotone_lab.circuits import StateFamily, build_prep, ideal_state, insert_delay, run
from monotone_lab.measure import simulate_record
from monotone_lab.monotones import (
    E3_TERMS,
    E4B_TERMS_SYMMETRIZED,
    E4B_TERMS_VERBATIM,
    EXACT_MODE,
    REAL_MODE,
    concurrence2,
    dfe_fidelity,
    e3,
    e4a,
    e4b,
    exact_fidelity,
    full_group_fidelity,
    monotone_from_counts,
    multiply_paulis,
    random_group_closure_check,
    stabilizer_group,
    term_set,
    verify_stabilizer_group,
)
from monotone_lab.noise import NoiseModel
from monotone_lab.qstate import QuantumState


def state(vec):
    return QuantumState(int(round(np.log2(len(vec)))), np.asarray(vec, dtype=complex))


# -- term tables -----------------------------------------------------------------

def test_e3_has_nine_terms_with_row_signs():
    signs = [s for s, _ in E3_TERMS.terms]
    assert signs == [+1, +1, -1] * 3
    assert E3_TERMS.normalization == pytest.approx(1 / 3)


def test_e4b_verbatim_lists_zyzy_twice():
    labels = [l for _, l in E4B_TERMS_VERBATIM.terms]
    assert labels.count("ZYZY") == 2
    assert "XYZY" not in labels
    sym = [l for _, l in E4B_TERMS_SYMMETRIZED.terms]
    assert sym.count("ZYZY") == 1 and "XYZY" in sym
    assert len(E4B_TERMS_VERBATIM.terms) == len(E4B_TERMS_SYMMETRIZED.terms) == 9


# -- ideal values -----------------------------------------------------------------

def test_e3_ideal_values():
    assert e3(ideal_state(StateFamily.GHZ, 3)).value == pytest.approx(1.0, abs=1e-12)
    assert e3(ideal_state(StateFamily.CLUSTER, 3)).value == pytest.approx(1.0, abs=1e-12)
    assert e3(ideal_state(StateFamily.UNIFORM, 3)).value == pytest.approx(0.0, abs=1e-12)


def test_e4a_ideal_values():
    assert e4a(ideal_state(StateFamily.GHZ, 4)).value == pytest.approx(1.0, abs=1e-12)
    assert e4a(ideal_state(StateFamily.CLUSTER, 4)).value == pytest.approx(0.0, abs=1e-12)
    zero4 = QuantumState.zero(4)
    assert e4a(zero4).value == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("variant", ["verbatim", "symmetrized"])
def test_e4b_ideal_values(variant):
    assert e4b(ideal_state(StateFamily.GHZ, 4), variant=variant).value == pytest.approx(1.0, abs=1e-12)
    assert e4b(ideal_state(StateFamily.CLUSTER, 4), variant=variant).value == pytest.approx(1.0, abs=1e-12)


def test_wrong_register_size_rejected():
    with pytest.raises(ValueError):
        e3(ideal_state(StateFamily.GHZ, 4))
    with pytest.raises(ValueError):
        e4a(ideal_state(StateFamily.GHZ, 3))


# -- vanishing on products ---------------------------------------------------------

@pytest.mark.parametrize("variant", ["verbatim", "symmetrized"])
def test_e4b_vanishes_on_full_products(variant):
    rng = np.random.default_rng(101)
    for _ in range(100):
        psi = oracles.kron_chain(*(oracles.random_real_unit(2, rng).reshape(2, 1) for _ in range(4))).ravel()
        val = e4b(state(psi), variant=variant).value
        assert val < 1e-8


def test_e4b_vanishes_on_mixed_product_states():
    # The null holds for mixed products too: tr(rho Y) = 0 for any real
    # single-qubit state, so every term factor with a Y slot dies.
    rng = np.random.default_rng(103)
    for _ in range(50):
        factors = []
        for _ in range(4):
            a = oracles.random_real_unit(2, rng)
            b = oracles.random_real_unit(2, rng)
            w = rng.uniform(0, 1)
            factors.append(w * np.outer(a, a) + (1 - w) * np.outer(b, b))
        rho = oracles.kron_chain(*factors).astype(complex)
        assert e4b(QuantumState(4, rho)).value < 1e-8


@pytest.mark.parametrize("variant", ["verbatim", "symmetrized"])
def test_e4b_vanishes_on_entangled_pair_products(variant):
    rng = np.random.default_rng(102)
    produced = 0
    while produced < 100:
        a = oracles.random_real_unit(4, rng)
        b = oracles.random_real_unit(4, rng)
        # keep only visibly entangled pairs
        if (oracles.wootters_concurrence(np.outer(a, a)) < 0.1
                or oracles.wootters_concurrence(np.outer(b, b)) < 0.1):
            continue
        produced += 1
        val = e4b(state(np.kron(a, b)), variant=variant).value
        assert val < 1e-8


# -- drift behavior -----------------------------------------------------------------

def test_e3_real_approximation_oscillates_as_cos_squared():
    for phi in np.arange(0.0, np.pi + 1e-9, np.pi / 6):
        st = state(oracles.ghz_vec(3, phi))
        assert e3(st).value == pytest.approx(np.cos(phi) ** 2, abs=1e-10)
        # periodicity under phi -> phi + pi
        st2 = state(oracles.ghz_vec(3, phi + np.pi))
        assert e3(st2).value == pytest.approx(e3(st).value, abs=1e-10)


def test_e3_quarter_period_artifact_vs_exact_mode():
    st = state(oracles.ghz_vec(3, np.pi / 2))
    assert e3(st, mode=REAL_MODE).value == pytest.approx(0.0, abs=1e-12)
    assert e3(st, mode=EXACT_MODE).value == pytest.approx(1.0, abs=1e-12)


def test_exact_mode_requires_pure_state():
    from monotone_lab.qstate import to_density

    with pytest.raises(ValueError):
        e3(to_density(ideal_state(StateFamily.GHZ, 3)), mode=EXACT_MODE)


# -- concurrence ----------------------------------------------------------------------

def test_bell_concurrence_is_one():
    bell = ideal_state(StateFamily.BELL, 2)
    assert concurrence2(bell).value == pytest.approx(1.0, abs=1e-12)


def test_product_concurrence_is_zero():
    assert concurrence2(QuantumState.zero(2)).value == pytest.approx(0.0, abs=1e-12)


def test_drifted_bell_concurrence_modes():
    for phi in (0.3, 1.1, np.pi / 2):
        vec = np.zeros(4, dtype=complex)
        vec[0] = 1 / np.sqrt(2)
        vec[3] = np.exp(1j * phi) / np.sqrt(2)
        st = state(vec)
        assert concurrence2(st, mode=REAL_MODE).value == pytest.approx(np.cos(phi) ** 2, abs=1e-10)
        assert concurrence2(st, mode=EXACT_MODE).value == pytest.approx(1.0, abs=1e-10)


# -- local-unitary invariance ------------------------------------------------------------

def _rotate_locally(st, rng):
    U = oracles.haar_unitary(2, rng)
    for _ in range(st.n_qubits - 1):
        U = np.kron(U, oracles.haar_unitary(2, rng))
    return QuantumState(st.n_qubits, U @ st.data)


def test_exact_monotones_invariant_under_local_unitaries():
    rng = np.random.default_rng(55)
    g3 = ideal_state(StateFamily.GHZ, 3)
    c3 = ideal_state(StateFamily.CLUSTER, 3)
    g4 = ideal_state(StateFamily.GHZ, 4)
    c4 = ideal_state(StateFamily.CLUSTER, 4)
    for st, fn in ((g3, e3), (c3, e3)):
        vals = [fn(_rotate_locally(st, rng), mode=EXACT_MODE).value for _ in range(100)]
        assert np.ptp(vals) < 1e-8
    vals = [e4a(_rotate_locally(g4, rng), mode=EXACT_MODE).value for _ in range(100)]
    assert np.ptp(vals) < 1e-8
    for st in (g4, c4):
        vals = [
            e4b(_rotate_locally(st, rng), mode=EXACT_MODE, variant="symmetrized").value
            for _ in range(100)
        ]
        assert np.ptp(vals) < 1e-8


def test_verbatim_e4b_is_not_locally_invariant():
    # The published term table (ZYZY twice) breaks local-unitary invariance;
    # this is documented behavior, not a regression.
    rng = np.random.default_rng(56)
    g4 = ideal_state(StateFamily.GHZ, 4)
    vals = [e4b(_rotate_locally(g4, rng), mode=EXACT_MODE, variant="verbatim").value for _ in range(50)]
    assert np.ptp(vals) > 0.05


def test_modes_agree_on_real_states():
    rng = np.random.default_rng(57)
    for _ in range(20):
        st = state(oracles.random_real_unit(8, rng))
        assert e3(st, REAL_MODE).value == pytest.approx(e3(st, EXACT_MODE).value, abs=1e-10)


# -- value inputs --------------------------------------------------------------------

def test_monotone_from_expectation_mapping():
    values = {label: 0.0 for _, label in E3_TERMS.terms}
    values["XYY"] = values["YXY"] = values["YYX"] = -1.0
    assert e3(values).value == pytest.approx(1.0)


def test_monotone_from_sequence_in_term_order():
    seq = [-1, 0, 0, -1, 0, 0, -1, 0, 0]
    assert e3(seq).value == pytest.approx(1.0)
    with pytest.raises(ValueError):
        e3([1.0, 2.0])


# -- monotonicity under local decoherence ----------------------------------------------

def test_e3_nonincreasing_under_t1t2():
    nm = NoiseModel(t1_s=50e-6, t2_s=40e-6)
    values = []
    for t_us in np.linspace(0, 8, 50):
        c = insert_delay(build_prep(StateFamily.GHZ, 3), t_us * 1e-6)
        values.append(e3(run(c, nm)).value)
    diffs = np.diff(values)
    assert values[0] == pytest.approx(1.0, abs=1e-10)
    assert np.all(diffs <= 1e-9)


# -- stabilizer machinery ----------------------------------------------------------------

def test_pauli_multiplication_table():
    assert multiply_paulis("X", "Y") == (1, "Z")
    assert multiply_paulis("Y", "X") == (3, "Z")
    assert multiply_paulis("XX", "YY") == (2, "ZZ")  # (iZ)(iZ) = -ZZ
    assert multiply_paulis("IZ", "ZI") == (0, "ZZ")


def test_ghz3_group_contents():
    group = stabilizer_group(StateFamily.GHZ, 3)
    table = {label: sign for sign, label in group.elements}
    assert len(group) == 8
    assert table["XXX"] == 1 and table["ZZI"] == 1 and table["IZZ"] == 1
    assert table["XYY"] == -1  # product structure fixes the signs
    assert verify_stabilizer_group(group, StateFamily.GHZ)


def test_cluster3_group_generators_and_verification():
    group = stabilizer_group(StateFamily.CLUSTER, 3)
    table = {label: sign for sign, label in group.elements}
    for gen in ("XZI", "ZXZ", "IZX"):
        assert table[gen] == 1
    assert verify_stabilizer_group(group, StateFamily.CLUSTER)


@pytest.mark.parametrize("family,n", [(StateFamily.GHZ, 2), (StateFamily.GHZ, 4),
                                      (StateFamily.CLUSTER, 4), (StateFamily.CLUSTER, 5)])
def test_groups_verify_and_close(family, n):
    group = stabilizer_group(family, n)
    assert len(group) == 2**n
    assert ("I" * n) in {label for _, label in group.elements}
    assert verify_stabilizer_group(group, family)
    assert random_group_closure_check(group, np.random.default_rng(1))
    for _, label in group.elements:
        assert multiply_paulis(label, label) == (0, "I" * n)  # squares to +I


# -- fidelity estimation -------------------------------------------------------------------

def test_exact_fidelity_of_ideal_state_is_one():
    g = ideal_state(StateFamily.GHZ, 3)
    assert exact_fidelity(g, g) == pytest.approx(1.0)
    fid, err = dfe_fidelity(g, StateFamily.GHZ, 3, k=8, rng=np.random.default_rng(0))
    assert fid == pytest.approx(1.0, abs=1e-10)
    assert err == pytest.approx(0.0, abs=1e-10)


def test_full_group_average_equals_exact_fidelity():
    rng = np.random.default_rng(31)
    for family in (StateFamily.GHZ, StateFamily.CLUSTER):
        for n in (2, 3):
            target = ideal_state(family, n)
            for _ in range(25):
                rho = QuantumState(n, oracles.random_mixed(n, rng))
                want = exact_fidelity(rho, target)
                got = full_group_fidelity(rho, family, n)
                assert got == pytest.approx(want, abs=1e-10)


def test_dfe_sampling_is_unbiased():
    # 10^4 seeded k-sample estimates: the grand mean stays within four
    # combined standard errors of the exact fidelity.
    rng = np.random.default_rng(8)
    rho = QuantumState(3, oracles.random_mixed(3, rng))
    target_fid = exact_fidelity(rho, ideal_state(StateFamily.GHZ, 3))
    reps = 10_000
    estimates = np.empty(reps)
    for i in range(reps):
        estimates[i], _ = dfe_fidelity(rho, StateFamily.GHZ, 3, k=4,
                                       rng=np.random.default_rng((8, i)))
    stderr = estimates.std(ddof=1) / math.sqrt(reps)
    assert abs(estimates.mean() - target_fid) < 4 * stderr


def test_dfe_with_shots_tracks_exact_fidelity():
    nm = NoiseModel(t1_s=math.inf, t2_s=math.inf, cnot_depolarizing=0.05)
    rho = run(build_prep(StateFamily.GHZ, 4), nm)
    exact = exact_fidelity(rho, ideal_state(StateFamily.GHZ, 4))
    reps = 32
    vals = np.empty(reps)
    for i in range(reps):
        vals[i], _ = dfe_fidelity(rho, StateFamily.GHZ, 4, k=16, shots=8000,
                                  rng=np.random.default_rng((3, i)))
    stderr = vals.std(ddof=1) / math.sqrt(reps)
    assert abs(vals.mean() - exact) < 3 * stderr


# -- counts-driven monotones -----------------------------------------------------------------

def test_monotone_from_counts_on_ideal_ghz():
    rng = np.random.default_rng(444)
    g3 = ideal_state(StateFamily.GHZ, 3)
    records = {
        basis: simulate_record(g3, basis, 8000, rng)
        for basis in E3_TERMS.bases
    }
    report = monotone_from_counts(E3_TERMS, records)
    assert report.stderr > 0
    assert abs(report.value - 1.0) < 4 * report.stderr


def test_monotone_from_counts_missing_basis_raises():
    rng = np.random.default_rng(445)
    g3 = ideal_state(StateFamily.GHZ, 3)
    records = {b: simulate_record(g3, b, 100, rng) for b in E3_TERMS.bases if b != "YYZ"}
    with pytest.raises(ValueError, match="YYZ"):
        monotone_from_counts(E3_TERMS, records)


def test_monotone_from_counts_is_content_deterministic():
    rng = np.random.default_rng(446)
    g3 = ideal_state(StateFamily.GHZ, 3)
    records = {b: simulate_record(g3, b, 500, rng) for b in E3_TERMS.bases}
    a = monotone_from_counts(E3_TERMS, records)
    b = monotone_from_counts(E3_TERMS, records)
    assert (a.value, a.stderr) == (b.value, b.stderr)


def test_term_set_lookup():
    assert term_set("e3").name == "E3"
    assert term_set("e4b", "symmetrized") is E4B_TERMS_SYMMETRIZED
    with pytest.raises(ValueError):
        term_set("e9")
    with pytest.raises(ValueError):
        term_set("e4b", "bogus")
