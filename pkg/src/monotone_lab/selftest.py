"""Quick built-in consistency checks behind the `selftest` subcommand.

These are the cheap definitional identities (gate unitarity, stabilizer
eigenvalues, confusion-map round trips); the full property and acceptance
suites live in the pytest tree.
"""

from __future__ import annotations

import math

import numpy as np

from . import monotones, noise, qstate
from .circuits import StateFamily, build_prep, ideal_state, insert_delay, run_statevector
from .measure import expectation_from_counts, measurement_distribution, parity_weights
from .measure import CountsRecord
from .qstate import Gate, QuantumState, gate_matrix


def _checks():
    yield "gate unitarity", _check_unitarity
    yield "preparation circuits hit their targets", _check_preps
    yield "stabilizer eigenvalues", _check_stabilizers
    yield "monotone ideal values", _check_ideal_values
    yield "delay quantization", _check_delay
    yield "parity estimator on exact counts", _check_counts
    yield "confusion round trip", _check_confusion
    yield "channel trace preservation", _check_channels


def _check_unitarity():
    kinds = ["h", "x", "y", "z", "x90", "y90", "y-90", "i", "delay", "cnot", "cz"]
    for kind in kinds:
        targets = (0, 1) if kind in ("cnot", "cz") else (0,)
        U = gate_matrix(Gate(kind, targets))
        assert np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))) < 1e-12, kind
    U = gate_matrix(Gate("rz", (0,), param=0.7))
    assert np.max(np.abs(U.conj().T @ U - np.eye(2))) < 1e-12


def _check_preps():
    for family in (StateFamily.GHZ, StateFamily.CLUSTER, StateFamily.UNIFORM):
        for n in (2, 3, 4):
            psi = run_statevector(build_prep(family, n))
            assert qstate.fidelity(psi, ideal_state(family, n)) > 1 - 1e-10


def _check_stabilizers():
    for family in (StateFamily.GHZ, StateFamily.CLUSTER):
        for n in (2, 3, 4):
            group = monotones.stabilizer_group(family, n)
            assert len(group) == 2**n
            assert monotones.verify_stabilizer_group(group, family)


def _check_ideal_values():
    assert abs(monotones.e3(ideal_state(StateFamily.GHZ, 3)).value - 1) < 1e-9
    assert abs(monotones.e3(ideal_state(StateFamily.CLUSTER, 3)).value - 1) < 1e-9
    assert monotones.e3(ideal_state(StateFamily.UNIFORM, 3)).value < 1e-9
    assert abs(monotones.e4a(ideal_state(StateFamily.GHZ, 4)).value - 1) < 1e-9
    assert monotones.e4a(ideal_state(StateFamily.CLUSTER, 4)).value < 1e-9
    for variant in ("verbatim", "symmetrized"):
        assert abs(monotones.e4b(ideal_state(StateFamily.GHZ, 4), variant=variant).value - 1) < 1e-9
        assert abs(monotones.e4b(ideal_state(StateFamily.CLUSTER, 4), variant=variant).value - 1) < 1e-9
    bell = ideal_state(StateFamily.BELL, 2)
    assert abs(monotones.concurrence2(bell).value - 1) < 1e-9


def _check_delay():
    c = build_prep(StateFamily.GHZ, 3)
    assert insert_delay(c, 0.0).count("delay") == c.count("delay")
    c800 = insert_delay(c, 800e-9)
    assert c800.count("delay") - c.count("delay") == 10 * 3
    c100 = insert_delay(c, 100e-9)
    assert abs(c100.realized_delay_s - 80e-9) < 1e-15


def _check_counts():
    rec = CountsRecord("ZZ", 2, 8000, {"00": 4000, "11": 4000})
    est = expectation_from_counts(rec)
    assert est.value == 1.0 and est.stderr == 0.0
    rec = CountsRecord("IZ", 2, 8000, {"00": 6000, "10": 2000})
    assert expectation_from_counts(rec).value == 1.0
    dist = measurement_distribution(QuantumState.zero(1), "X")
    assert np.allclose(dist, [0.5, 0.5])
    assert np.array_equal(parity_weights("II"), np.ones(4))


def _check_confusion():
    mats = [noise.confusion_matrix(0.1, 0.05), noise.confusion_matrix(0.02, 0.08)]
    rng = np.random.default_rng(5)
    d = rng.random(4)
    d /= d.sum()
    back = noise.invert_confusion(noise.apply_confusion(d, mats), mats)
    assert np.max(np.abs(back - d)) < 1e-10
    single = noise.confusion_matrix(0.02, 0.08)
    assert abs(single[1, 1] - 0.92) < 1e-15


def _check_channels():
    for dt in (0.0, 80e-9, 1e-6):
        ch = noise.idle_channel(dt, 50e-6, 40e-6, 30e3)
        assert ch.completeness_defect() < 1e-12
    for p in (0.0, 0.3, 1.0):
        assert noise.cnot_error_channel(p).completeness_defect() < 1e-12
    pure_drift = noise.idle_channel(1e-6, math.inf, math.inf, 55e3)
    assert pure_drift.is_unitary


def run_selftest(verbose: bool = True) -> int:
    failures = 0
    for name, fn in _checks():
        try:
            fn()
        except AssertionError as exc:
            failures += 1
            if verbose:
                print(f"FAIL {name}: {exc}")
        else:
            if verbose:
                print(f"ok   {name}")
    if verbose and failures == 0:
        print("selftest passed")
    return 0 if failures == 0 else 1
