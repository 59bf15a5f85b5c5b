"""Channel library: Markovian T1/T2 idling, coherent phase drift, two-qubit
depolarizing, quasi-static / telegraph-sum low-frequency dephasing, and
per-qubit readout confusion.

All channels are returned as explicit Kraus operator lists so that trace
preservation (sum K^dagger K = I) is checkable directly.  The drift-free
T1/T2 idle channel is built from purely real Kraus operators: real-amplitude
states stay real under it, which is the precondition for evaluating the
monotones with plain (non-antilinear) expectation values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .qstate import PAULI_1Q, rz_matrix

_PAULI_2Q_LABELS = [a + b for a in "IXYZ" for b in "IXYZ"]

#: Switching rates used by the telegraph-sum spectrum: 10 per decade,
#: 1 kHz .. 10 MHz.  Within one trajectory each fluctuator is frozen
#: (quasi-static approximation); the rates document the modeled band.
TELEGRAPH_RATES_HZ = np.logspace(3.0, 7.0, 40)


@dataclass(frozen=True)
class Channel:
    """A CPTP map given by its Kraus operators on 1 or 2 qubits."""

    kraus: tuple[np.ndarray, ...]
    n_targets: int

    def completeness_defect(self) -> float:
        """max |sum K^dagger K - I|; zero for a trace-preserving channel."""
        dim = 2**self.n_targets
        acc = np.zeros((dim, dim), dtype=complex)
        for K in self.kraus:
            acc += K.conj().T @ K
        return float(np.max(np.abs(acc - np.eye(dim))))

    @property
    def is_unitary(self) -> bool:
        return len(self.kraus) == 1


@dataclass(frozen=True)
class OneOverFSettings:
    """Low-frequency dephasing: per-trajectory static frequency offsets.

    ``quasi-static`` draws one Gaussian(0, sigma_hz) offset per qubit per
    trajectory.  ``telegraph-sum`` draws the frozen state of 40 equal-weight
    random-telegraph fluctuators (rates in ``TELEGRAPH_RATES_HZ``) per qubit,
    scaled so the total offset standard deviation is again sigma_hz.
    """

    enabled: bool = False
    sigma_hz: float = 20e3
    trajectories: int = 500
    spectrum: str = "quasi-static"  # or "telegraph-sum"

    def __post_init__(self):
        if self.trajectories < 1:
            raise ValueError("trajectory count must be >= 1")
        if self.spectrum not in ("quasi-static", "telegraph-sum"):
            raise ValueError(f"unknown spectrum {self.spectrum!r}")
        if self.sigma_hz < 0:
            raise ValueError("sigma_hz must be >= 0")


def _as_tuple(value) -> float | tuple[float, ...]:
    if isinstance(value, (list, tuple, np.ndarray)):
        return tuple(float(v) for v in value)
    return float(value)


@dataclass(frozen=True)
class NoiseModel:
    """Per-qubit T1/T2 and drift, CNOT depolarizing, readout confusion, 1/f.

    Scalar fields broadcast over qubits; sequences give per-qubit values.
    T1/T2 default to typical transmon-scale values so decay is visible on a
    microsecond scan window; every field is config-overridable.
    """

    t1_s: float | tuple[float, ...] = 50e-6
    t2_s: float | tuple[float, ...] = 40e-6
    drift_hz: float | tuple[float, ...] = 0.0
    cnot_depolarizing: float = 0.0
    readout_eps0: float | tuple[float, ...] = 0.0
    readout_eps1: float | tuple[float, ...] = 0.0
    oneoverf: OneOverFSettings = field(default_factory=OneOverFSettings)

    def __post_init__(self):
        object.__setattr__(self, "t1_s", _as_tuple(self.t1_s))
        object.__setattr__(self, "t2_s", _as_tuple(self.t2_s))
        object.__setattr__(self, "drift_hz", _as_tuple(self.drift_hz))
        object.__setattr__(self, "readout_eps0", _as_tuple(self.readout_eps0))
        object.__setattr__(self, "readout_eps1", _as_tuple(self.readout_eps1))
        if not 0.0 <= self.cnot_depolarizing <= 1.0:
            raise ValueError("cnot_depolarizing must be in [0, 1]")

    @classmethod
    def drift_only(cls, drift_hz) -> "NoiseModel":
        return cls(t1_s=math.inf, t2_s=math.inf, drift_hz=_as_tuple(drift_hz))

    @staticmethod
    def _pick(value, j: int) -> float:
        if isinstance(value, tuple):
            return value[j]
        return value

    def t1(self, j: int) -> float:
        return self._pick(self.t1_s, j)

    def t2(self, j: int) -> float:
        return self._pick(self.t2_s, j)

    def drift(self, j: int) -> float:
        return self._pick(self.drift_hz, j)

    def readout_eps(self, j: int) -> tuple[float, float]:
        return (self._pick(self.readout_eps0, j), self._pick(self.readout_eps1, j))

    @property
    def has_readout_error(self) -> bool:
        def any_nonzero(v):
            return any(x != 0.0 for x in v) if isinstance(v, tuple) else v != 0.0

        return any_nonzero(self.readout_eps0) or any_nonzero(self.readout_eps1)

    def is_unitary_only(self) -> bool:
        """True when evolution under this model preserves purity.

        Readout confusion is ignored here: it acts on measurement records,
        not on the evolving state.
        """
        def all_inf(v):
            vals = v if isinstance(v, tuple) else (v,)
            return all(math.isinf(x) for x in vals)

        return (
            all_inf(self.t1_s)
            and all_inf(self.t2_s)
            and self.cnot_depolarizing == 0.0
            and not self.oneoverf.enabled
        )

    def validate_for(self, n_qubits: int) -> None:
        for name, v in (
            ("t1_s", self.t1_s),
            ("t2_s", self.t2_s),
            ("drift_hz", self.drift_hz),
            ("readout_eps0", self.readout_eps0),
            ("readout_eps1", self.readout_eps1),
        ):
            if isinstance(v, tuple) and len(v) != n_qubits:
                raise ValueError(f"{name} has {len(v)} entries for n = {n_qubits}")
        for j in range(n_qubits):
            t1, t2 = self.t1(j), self.t2(j)
            if t1 <= 0 or t2 <= 0:
                raise ValueError("T1 and T2 must be positive")
            if t2 > 2.0 * t1 + 1e-18:
                raise ValueError(f"qubit {j}: T2 = {t2} exceeds 2*T1 = {2*t1}")
            e0, e1 = self.readout_eps(j)
            if not (0.0 <= e0 <= 1.0 and 0.0 <= e1 <= 1.0):
                raise ValueError("readout confusion probabilities must be in [0, 1]")


def idle_channel(dt: float, t1: float, t2: float, f_drift: float = 0.0) -> Channel:
    """Single-qubit idle: amplitude damping, pure dephasing, drift rotation.

    gamma = 1 - exp(-dt/T1); the pure-dephasing rate is
    1/T_phi = 1/T2 - 1/(2 T1) and is realized as a phase flip with
    probability (1 - exp(-dt/T_phi))/2, keeping the Kraus operators real.
    The drift is the unitary RZ(2 pi f_drift dt).  The three pieces commute,
    so stacking m slices equals one slice of duration m*dt.
    """
    if dt < 0:
        raise ValueError("negative duration")
    if t2 > 2.0 * t1 + 1e-18:
        raise ValueError(f"T2 = {t2} exceeds 2*T1 = {2*t1}")
    gamma = -math.expm1(-dt / t1) if not math.isinf(t1) else 0.0
    inv_tphi = (1.0 / t2 - 0.5 / t1) if not (math.isinf(t1) and math.isinf(t2)) else 0.0
    # inv_tphi can be a tiny negative from rounding when t2 == 2*t1.
    inv_tphi = max(inv_tphi, 0.0)
    p_flip = 0.5 * (-math.expm1(-dt * inv_tphi))

    ad = [np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - gamma)]], dtype=complex)]
    if gamma > 0.0:
        ad.append(np.array([[0.0, math.sqrt(gamma)], [0.0, 0.0]], dtype=complex))
    pd = [math.sqrt(1.0 - p_flip) * PAULI_1Q["I"]]
    if p_flip > 0.0:
        pd.append(math.sqrt(p_flip) * PAULI_1Q["Z"])
    U = rz_matrix(2.0 * math.pi * f_drift * dt) if f_drift != 0.0 else PAULI_1Q["I"]

    kraus = tuple(U @ Kp @ Ka for Kp in pd for Ka in ad)
    return Channel(kraus, 1)


def cnot_error_channel(p: float) -> Channel:
    """Two-qubit depolarizing: with probability p replace the pair by I/4.

    Pauli-Kraus form: identity with weight 1 - 15p/16 and the 15 non-identity
    two-qubit Paulis with weight p/16 each, so p = 1 maps every input to the
    maximally mixed pair state.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("depolarizing probability must be in [0, 1]")
    if p == 0.0:
        return Channel((np.eye(4, dtype=complex),), 2)
    kraus = []
    for label in _PAULI_2Q_LABELS:
        weight = 1.0 - 15.0 * p / 16.0 if label == "II" else p / 16.0
        mat = np.kron(PAULI_1Q[label[0]], PAULI_1Q[label[1]])
        kraus.append(math.sqrt(weight) * mat)
    return Channel(tuple(kraus), 2)


def confusion_matrix(eps0: float, eps1: float) -> np.ndarray:
    """Column-stochastic readout map [[1-e0, e1], [e0, 1-e1]].

    Column t is the distribution of the recorded bit given true bit t.
    """
    if not (0.0 <= eps0 <= 1.0 and 0.0 <= eps1 <= 1.0):
        raise ValueError("confusion probabilities must be in [0, 1]")
    return np.array([[1.0 - eps0, eps1], [eps0, 1.0 - eps1]])


def confusion_matrices(model: NoiseModel, n_qubits: int) -> list[np.ndarray]:
    return [confusion_matrix(*model.readout_eps(j)) for j in range(n_qubits)]


def _apply_axis(tensor: np.ndarray, mat: np.ndarray, axis: int) -> np.ndarray:
    out = np.tensordot(mat, tensor, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


def apply_confusion(dist: np.ndarray, mats: Sequence[np.ndarray]) -> np.ndarray:
    """Push a bitstring distribution through the tensor-product readout map."""
    n = len(mats)
    if dist.size != 2**n:
        raise ValueError("distribution size does not match confusion matrices")
    tens = np.asarray(dist, dtype=float).reshape((2,) * n)
    for j, M in enumerate(mats):
        tens = _apply_axis(tens, M, j)
    return tens.reshape(-1)


def invert_confusion(dist: np.ndarray, mats: Sequence[np.ndarray]) -> np.ndarray:
    """Exact tensor-product inverse of :func:`apply_confusion`.

    The result is a quasi-probability vector: entries may be slightly
    negative and are intentionally not clipped.
    """
    inverses = []
    for M in mats:
        # eps0 + eps1 = 1 makes the per-qubit map non-invertible.
        if abs(np.linalg.det(M)) < 1e-12:
            raise ValueError("singular confusion matrix (eps0 + eps1 = 1)")
        inverses.append(np.linalg.inv(M))
    n = len(mats)
    tens = np.asarray(dist, dtype=float).reshape((2,) * n)
    for j, M in enumerate(inverses):
        tens = _apply_axis(tens, M, j)
    return tens.reshape(-1)


def sample_quasistatic_detunings(model: NoiseModel, n_qubits: int, rng: np.random.Generator) -> np.ndarray:
    """One trajectory of per-qubit static frequency offsets (Hz).

    Draws are independent across qubits (spatially uncorrelated).
    """
    s = model.oneoverf
    if not s.enabled:
        raise ValueError("low-frequency noise is not enabled in this model")
    if s.spectrum == "quasi-static":
        return rng.normal(0.0, s.sigma_hz, size=n_qubits)
    # telegraph-sum: frozen fluctuator states, equal amplitudes summing in
    # quadrature to sigma_hz.
    k = TELEGRAPH_RATES_HZ.size
    amp = s.sigma_hz / math.sqrt(k)
    signs = rng.integers(0, 2, size=(n_qubits, k)) * 2 - 1
    return amp * signs.sum(axis=1).astype(float)
