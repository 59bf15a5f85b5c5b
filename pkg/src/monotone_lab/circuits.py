"""Preparation, delay, compensation and Ramsey circuits, plus execution.

Preparation layout for an n-qubit chain: H on qubit 0, then for each link
i -> i+1 a CNOT followed by a single-qubit gate on qubit i+1 (identity for
the GHZ family, Hadamard for the linear cluster).  This ordering reproduces
the product-of-CZ cluster definition exactly; putting the Hadamards before
the CNOTs instead would build a different state.

Delays are quantized to 80 ns identity slices (round-half-up), one slice per
qubit per step.  Phase compensation replaces each slice with the slice
followed by a zero-duration virtual RZ on the same qubit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from . import qstate
from .noise import NoiseModel, cnot_error_channel, idle_channel, sample_quasistatic_detunings
from .qstate import SLICE_DURATION_S, Gate, QuantumState, apply_gate, apply_kraus, to_density


class StateFamily(str, Enum):
    GHZ = "ghz"
    CLUSTER = "cluster"
    UNIFORM = "uniform"
    BELL = "bell"


@dataclass(frozen=True)
class Circuit:
    """An ordered list of timed gate events on a fixed register."""

    n_qubits: int
    events: tuple[Gate, ...] = ()

    def __post_init__(self):
        for ev in self.events:
            for t in ev.targets:
                if not 0 <= t < self.n_qubits:
                    raise ValueError(f"event {ev} references qubit {t} outside register")

    def extended(self, new_events: Sequence[Gate]) -> "Circuit":
        return Circuit(self.n_qubits, self.events + tuple(new_events))

    @property
    def total_duration_s(self) -> float:
        """Max over qubits of the summed event durations on that qubit."""
        per_qubit = [0.0] * self.n_qubits
        for ev in self.events:
            for t in ev.targets:
                per_qubit[t] += ev.duration
        return max(per_qubit) if per_qubit else 0.0

    @property
    def realized_delay_s(self) -> float:
        """Total quantized delay actually present (max over qubits)."""
        per_qubit = [0.0] * self.n_qubits
        for ev in self.events:
            if ev.kind == "delay" and ev.duration > 0:
                per_qubit[ev.targets[0]] += ev.duration
        return max(per_qubit) if per_qubit else 0.0

    def count(self, kind: str) -> int:
        return sum(1 for ev in self.events if ev.kind == kind)


def build_prep(family: StateFamily, n: int) -> Circuit:
    """Preparation circuit for one of the supported state families."""
    family = StateFamily(family)
    if not 2 <= n <= qstate.MAX_QUBITS:
        raise ValueError(f"n must be in 2..{qstate.MAX_QUBITS}")
    if family is StateFamily.BELL and n != 2:
        raise ValueError("Bell preparation requires n = 2")
    if family is StateFamily.UNIFORM:
        return Circuit(n, tuple(qstate.h(q) for q in range(n)))
    events: list[Gate] = [qstate.h(0)]
    for i in range(n - 1):
        events.append(qstate.cnot(i, i + 1))
        if family is StateFamily.CLUSTER:
            events.append(qstate.h(i + 1))
        elif family is not StateFamily.BELL:
            events.append(qstate.identity(i + 1))
    return Circuit(n, tuple(events))


def ideal_state(family: StateFamily, n: int) -> QuantumState:
    """Closed-form target state, built from amplitudes (no gates involved)."""
    family = StateFamily(family)
    if family is StateFamily.BELL and n != 2:
        raise ValueError("Bell state requires n = 2")
    dim = 2**n
    if family in (StateFamily.GHZ, StateFamily.BELL):
        vec = np.zeros(dim, dtype=complex)
        vec[0] = vec[-1] = 1.0 / math.sqrt(2.0)
        return QuantumState(n, vec)
    if family is StateFamily.UNIFORM:
        return QuantumState(n, np.full(dim, 1.0 / math.sqrt(dim), dtype=complex))
    # Linear cluster: amplitude of |b> is (-1)^(sum_i b_i b_{i+1}) / sqrt(dim).
    vec = np.empty(dim, dtype=complex)
    for idx in range(dim):
        bits = [(idx >> (n - 1 - j)) & 1 for j in range(n)]
        sign = sum(bits[i] * bits[i + 1] for i in range(n - 1)) % 2
        vec[idx] = (-1.0) ** sign / math.sqrt(dim)
    return QuantumState(n, vec)


def quantize_delay(t_seconds: float) -> int:
    """Number of 80 ns slices closest to the requested delay (half rounds up)."""
    if t_seconds < 0:
        raise ValueError("negative delay")
    return int(math.floor(t_seconds / SLICE_DURATION_S + 0.5))


def insert_delay(circuit: Circuit, t_seconds: float) -> Circuit:
    """Append round(t / 80 ns) identity slices on every qubit, slice-major."""
    slices = quantize_delay(t_seconds)
    events: list[Gate] = []
    for _ in range(slices):
        for q in range(circuit.n_qubits):
            events.append(qstate.delay_slice(q))
    return circuit.extended(events)


def apply_compensation(circuit: Circuit, f_comp_hz: Sequence[float]) -> Circuit:
    """Follow every delay slice on qubit j with a virtual RZ(-2 pi f_comp[j] dt).

    With f_comp[j] = f_total/n the per-qubit phase accumulated over a delay t
    is -(2 pi f_total t)/n; with f_comp[j] equal to the qubit's drift
    frequency the drift is cancelled slice by slice.
    """
    if len(f_comp_hz) != circuit.n_qubits:
        raise ValueError(f"need {circuit.n_qubits} compensation frequencies, got {len(f_comp_hz)}")
    events: list[Gate] = []
    for ev in circuit.events:
        events.append(ev)
        if ev.kind == "delay" and ev.duration > 0:
            q = ev.targets[0]
            theta = -2.0 * math.pi * f_comp_hz[q] * ev.duration
            if theta != 0.0:
                events.append(qstate.rz(q, theta))
    return Circuit(circuit.n_qubits, tuple(events))


def build_ramsey(n_total: int, qubit: int, delay_s: float = 0.0) -> Circuit:
    """exp(+i pi Y/4) . delay . exp(-i pi Y/4) on one qubit; read out with Z."""
    if not 0 <= qubit < n_total:
        raise ValueError(f"qubit {qubit} out of range for n = {n_total}")
    c = Circuit(n_total, (qstate.y90(qubit),))
    c = insert_delay(c, delay_s)
    return c.extended([qstate.ym90(qubit)])


def _run_pure(circuit: Circuit) -> QuantumState:
    state = QuantumState.zero(circuit.n_qubits)
    for ev in circuit.events:
        state = apply_gate(state, ev)
    return state


def _run_density(circuit: Circuit, noise: NoiseModel, detunings: np.ndarray) -> QuantumState:
    n = circuit.n_qubits
    state = to_density(QuantumState.zero(n))
    cnot_channel = cnot_error_channel(noise.cnot_depolarizing) if noise.cnot_depolarizing > 0 else None
    idle_cache: dict[tuple[float, int], object] = {}
    for ev in circuit.events:
        state = apply_gate(state, ev)
        if ev.kind == "cnot" and cnot_channel is not None:
            state = apply_kraus(state, cnot_channel.kraus, ev.targets)
        elif ev.kind == "delay" and ev.duration > 0:
            q = ev.targets[0]
            key = (ev.duration, q)
            ch = idle_cache.get(key)
            if ch is None:
                ch = idle_channel(ev.duration, noise.t1(q), noise.t2(q), noise.drift(q) + detunings[q])
                idle_cache[key] = ch
            state = apply_kraus(state, ch.kraus, (q,))
    return state


def run(circuit: Circuit, noise: NoiseModel | None = None, seed: int | None = None) -> QuantumState:
    """Execute a circuit; noiseless runs stay pure, noisy runs return a
    density operator (trajectory-averaged when low-frequency noise is on).

    Identical (circuit, noise, seed) triples give bit-identical results.
    """
    if noise is None:
        return _run_pure(circuit)
    n = circuit.n_qubits
    noise.validate_for(n)
    if not noise.oneoverf.enabled:
        return _run_density(circuit, noise, np.zeros(n))
    m = noise.oneoverf.trajectories
    acc = np.zeros((2**n, 2**n), dtype=complex)
    for traj in range(m):
        rng = np.random.default_rng(np.random.SeedSequence([0 if seed is None else int(seed), traj]))
        det = sample_quasistatic_detunings(noise, n, rng)
        acc += _run_density(circuit, noise, det).data
    return QuantumState(n, acc / m)


def run_statevector(circuit: Circuit, noise: NoiseModel | None = None) -> QuantumState:
    """Pure-state execution; drift (if any) is applied as explicit RZ gates.

    Only valid for noise models whose evolution is purity preserving;
    anything with damping, dephasing, depolarizing or trajectory averaging
    raises ``ValueError``.
    """
    if noise is None:
        return _run_pure(circuit)
    n = circuit.n_qubits
    noise.validate_for(n)
    if not noise.is_unitary_only():
        raise ValueError("statevector execution requires a unitary-only noise model")
    state = QuantumState.zero(n)
    for ev in circuit.events:
        state = apply_gate(state, ev)
        if ev.kind == "delay" and ev.duration > 0:
            q = ev.targets[0]
            f = noise.drift(q)
            if f != 0.0:
                state = apply_gate(state, qstate.rz(q, 2.0 * math.pi * f * ev.duration))
    return state
