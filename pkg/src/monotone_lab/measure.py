"""From states to measurement distributions, finite-shot counts, and
(readout-corrected) expectation estimates with standard errors.

A measurement setting is an unsigned Pauli label: X positions are rotated by
H, Y positions by H S-dagger, and Z/I positions are read directly.  The
parity estimator uses only the non-I positions; 'I' bits are recorded but
ignored, so e.g. basis "IZ" estimates <IZ> from two-bit counts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .noise import apply_confusion, invert_confusion
from .qstate import QuantumState, apply_gate, Gate, bitstring


@dataclass(frozen=True)
class ExpectationEstimate:
    """A shot-based estimate: value, standard error, shots used."""

    value: float
    stderr: float
    shots: int


@dataclass(frozen=True)
class CountsRecord:
    """One measurement setting's histogram of observed bitstrings."""

    basis: str
    n_qubits: int
    shots: int
    counts: Mapping[str, int]
    delay_us: float | None = None
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.basis) != self.n_qubits or any(c not in "IXYZ" for c in self.basis):
            raise ValueError(f"bad basis {self.basis!r} for n = {self.n_qubits}")
        if self.shots <= 0:
            raise ValueError("shots must be positive")
        total = 0
        for bits, c in self.counts.items():
            if len(bits) != self.n_qubits or any(b not in "01" for b in bits):
                raise ValueError(f"bad bitstring key {bits!r}")
            if c < 0:
                raise ValueError("negative count")
            total += c
        if total != self.shots:
            raise ValueError(f"counts sum to {total}, shots = {self.shots}")
        object.__setattr__(self, "counts", dict(self.counts))
        object.__setattr__(self, "metadata", dict(self.metadata))

    def to_json_line(self) -> str:
        doc = {
            "basis": self.basis,
            "n": self.n_qubits,
            "shots": self.shots,
            "counts": {k: self.counts[k] for k in sorted(self.counts)},
        }
        if self.delay_us is not None:
            doc["delay_us"] = self.delay_us
        if self.metadata:
            doc["metadata"] = dict(self.metadata)
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json_line(cls, line: str) -> "CountsRecord":
        doc = json.loads(line)
        if not isinstance(doc, dict):
            raise ValueError("record is not a JSON object")
        for key in ("basis", "n", "shots", "counts"):
            if key not in doc:
                raise ValueError(f"missing field {key!r}")
        counts = doc["counts"]
        if not isinstance(counts, dict):
            raise ValueError("counts must be an object")
        delay = doc.get("delay_us")
        return cls(
            basis=str(doc["basis"]),
            n_qubits=int(doc["n"]),
            shots=int(doc["shots"]),
            counts={str(k): int(v) for k, v in counts.items()},
            delay_us=None if delay is None else float(delay),
            metadata={str(k): str(v) for k, v in doc.get("metadata", {}).items()},
        )

    def distribution(self) -> np.ndarray:
        """Empirical frequency vector over all 2^n bitstrings."""
        dist = np.zeros(2**self.n_qubits)
        for bits, c in self.counts.items():
            dist[int(bits, 2)] = c / self.shots
        return dist


def parity_weights(basis: str) -> np.ndarray:
    """(-1)^(number of 1 bits at non-I positions), for every basis index."""
    n = len(basis)
    idx = np.arange(2**n)
    acc = np.zeros(2**n, dtype=np.int64)
    for j, ch in enumerate(basis):
        if ch != "I":
            acc ^= (idx >> (n - 1 - j)) & 1
    return (1 - 2 * acc).astype(float)


def measurement_distribution(state: QuantumState, basis: str) -> np.ndarray:
    """Bitstring probabilities after rotating into the given Pauli basis."""
    n = state.n_qubits
    if len(basis) != n or any(c not in "IXYZ" for c in basis):
        raise ValueError(f"bad basis {basis!r} for n = {n}")
    rotated = state
    for j, ch in enumerate(basis):
        if ch == "X":
            rotated = apply_gate(rotated, Gate("h", (j,)))
        elif ch == "Y":
            # S-dagger then H maps Y eigenstates onto the computational basis.
            rotated = apply_gate(rotated, Gate("rz", (j,), param=-np.pi / 2.0))
            rotated = apply_gate(rotated, Gate("h", (j,)))
    if rotated.is_pure:
        probs = np.abs(rotated.data) ** 2
    else:
        probs = np.real(np.diag(rotated.data)).copy()
    probs = np.maximum(probs, 0.0)
    return probs / probs.sum()


def sample_counts(
    dist: np.ndarray,
    shots: int,
    rng: np.random.Generator,
    *,
    basis: str,
    delay_us: float | None = None,
    metadata: Mapping[str, str] | None = None,
) -> CountsRecord:
    """Multinomial draw from a distribution; reproducible for a fixed rng."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    n = len(basis)
    draws = rng.multinomial(shots, dist)
    counts = {bitstring(i, n): int(c) for i, c in enumerate(draws) if c > 0}
    return CountsRecord(basis, n, shots, counts, delay_us=delay_us, metadata=dict(metadata or {}))


def _mean_stderr(weights: np.ndarray, dist: np.ndarray, shots: int) -> tuple[float, float]:
    m1 = float(weights @ dist)
    m2 = float((weights**2) @ dist)
    if shots < 2:
        return m1, 0.0
    var = max(m2 - m1 * m1, 0.0)
    return m1, float(np.sqrt(var / (shots - 1)))


def expectation_from_counts(record: CountsRecord) -> ExpectationEstimate:
    """Parity-estimator mean and standard error from one counts record."""
    if not record.counts:
        raise ValueError("empty counts")
    if set(record.basis) == {"I"}:
        return ExpectationEstimate(1.0, 0.0, record.shots)
    weights = parity_weights(record.basis)
    value, err = _mean_stderr(weights, record.distribution(), record.shots)
    return ExpectationEstimate(value, err, record.shots)


def readout_correct(
    record: CountsRecord, confusion: Sequence[np.ndarray]
) -> tuple[np.ndarray, ExpectationEstimate]:
    """Invert the tensor-product confusion map on the empirical distribution.

    Returns the corrected quasi-probability vector (negative entries kept)
    and the parity estimate computed from it.  The standard error propagates
    the same linear map: the corrected estimator is a linear functional
    v = (A^-1)^T w of the raw distribution, so its shot noise is the sample
    deviation of v evaluated on the raw counts.
    """
    if len(confusion) != record.n_qubits:
        raise ValueError("need one confusion matrix per qubit")
    raw = record.distribution()
    corrected = invert_confusion(raw, confusion)
    if set(record.basis) == {"I"}:
        return corrected, ExpectationEstimate(1.0, 0.0, record.shots)
    w = parity_weights(record.basis)
    # v = (tensor-product inverse, transposed) applied to the parity vector.
    v = invert_confusion(w, [M.T for M in confusion])
    value, err = _mean_stderr(v, raw, record.shots)
    return corrected, ExpectationEstimate(value, err, record.shots)


def simulate_record(
    state: QuantumState,
    basis: str,
    shots: int,
    rng: np.random.Generator,
    confusion: Sequence[np.ndarray] | None = None,
    delay_us: float | None = None,
    metadata: Mapping[str, str] | None = None,
) -> CountsRecord:
    """Sample a counts record, optionally through the readout confusion map."""
    dist = measurement_distribution(state, basis)
    if confusion is not None:
        dist = apply_confusion(dist, confusion)
    return sample_counts(dist, shots, rng, basis=basis, delay_us=delay_us, metadata=metadata)


def estimate_pauli_sampled(
    state: QuantumState,
    basis: str,
    shots: int,
    rng: np.random.Generator,
    confusion: Sequence[np.ndarray] | None = None,
) -> ExpectationEstimate:
    """One sampled (and, if confusion is given, corrected) Pauli estimate."""
    rec = simulate_record(state, basis, shots, rng, confusion)
    if confusion is None:
        return expectation_from_counts(rec)
    _, est = readout_correct(rec, confusion)
    return est
