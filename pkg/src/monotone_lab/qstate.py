"""Dense state-vector / density-operator kernel for small qubit registers.

Conventions fixed here and relied on everywhere else in the package:

* Qubit 0 is the leftmost character of Pauli labels and bitstrings, and the
  most significant bit of a basis-state index.  Tensor products compose
  left-to-right, so ``kron(A, B)`` acts with ``A`` on qubit 0.
* ``RZ(theta) = diag(exp(-i theta/2), exp(+i theta/2))``.  With this sign the
  relative phase picked up between |1...1> and |0...0> under per-qubit RZ
  rotations is the *sum* of the per-qubit angles.
* Global phases are never silently stripped.  Antilinear expectation values
  are phase sensitive (a global phase exp(i a) shows up as exp(2i a)), so
  comparisons "up to global phase" are always explicit.

States, gates and Pauli strings are immutable values; every operation is a
pure function, safe to evaluate concurrently.  Registers are capped at
``MAX_QUBITS`` qubits; everything is exact dense linear algebra.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 8

#: Duration of one identity ("delay") slice, in seconds.
SLICE_DURATION_S = 80e-9

PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}

_H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)
# e^{-i pi X/4}, e^{-i pi Y/4}, e^{+i pi Y/4}
_X90 = np.array([[1.0, -1.0j], [-1.0j, 1.0]], dtype=complex) / np.sqrt(2.0)
_Y90 = np.array([[1.0, -1.0], [1.0, 1.0]], dtype=complex) / np.sqrt(2.0)
_YM90 = np.array([[1.0, 1.0], [-1.0, 1.0]], dtype=complex) / np.sqrt(2.0)
_CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
_CZ = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)

_FIXED_GATES = {
    "h": _H,
    "x": PAULI_1Q["X"],
    "y": PAULI_1Q["Y"],
    "z": PAULI_1Q["Z"],
    "x90": _X90,
    "y90": _Y90,
    "y-90": _YM90,
    "i": PAULI_1Q["I"],
    "delay": PAULI_1Q["I"],
    "cnot": _CNOT,
    "cz": _CZ,
}


def rz_matrix(theta: float) -> np.ndarray:
    """RZ(theta) = diag(e^{-i theta/2}, e^{+i theta/2})."""
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


@dataclass(frozen=True)
class Gate:
    """A named gate event: kind, target qubits, optional angle, duration.

    Durations default to zero; only "delay" slices carry time (80 ns each).
    Virtual Z rotations are ordinary "rz" gates with zero duration.
    """

    kind: str
    targets: tuple[int, ...]
    param: float | None = None
    duration: float = 0.0

    def __post_init__(self):
        if self.kind not in _FIXED_GATES and self.kind != "rz":
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind == "rz" and self.param is None:
            raise ValueError("rz gate needs an angle")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"duplicate targets {self.targets}")
        if self.duration < 0:
            raise ValueError("negative gate duration")

    @property
    def n_targets(self) -> int:
        return len(self.targets)


def gate_matrix(gate: Gate) -> np.ndarray:
    if gate.kind == "rz":
        return rz_matrix(gate.param)
    return _FIXED_GATES[gate.kind]


# Convenience constructors.
def h(q: int) -> Gate:
    return Gate("h", (q,))


def x(q: int) -> Gate:
    return Gate("x", (q,))


def y(q: int) -> Gate:
    return Gate("y", (q,))


def z(q: int) -> Gate:
    return Gate("z", (q,))


def rz(q: int, theta: float) -> Gate:
    return Gate("rz", (q,), param=theta)


def x90(q: int) -> Gate:
    return Gate("x90", (q,))


def y90(q: int) -> Gate:
    return Gate("y90", (q,))


def ym90(q: int) -> Gate:
    return Gate("y-90", (q,))


def identity(q: int) -> Gate:
    return Gate("i", (q,))


def delay_slice(q: int, duration: float = SLICE_DURATION_S) -> Gate:
    return Gate("delay", (q,), duration=duration)


def cnot(control: int, target: int) -> Gate:
    return Gate("cnot", (control, target))


def cz(a: int, b: int) -> Gate:
    return Gate("cz", (a, b))


@dataclass(frozen=True)
class PauliString:
    """A signed Pauli word, e.g. -XYY.  Qubit 0 is the leftmost character."""

    label: str
    sign: int = 1

    def __post_init__(self):
        if not self.label or any(c not in "IXYZ" for c in self.label):
            raise ValueError(f"bad Pauli label {self.label!r}")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    def __len__(self) -> int:
        return len(self.label)

    def __str__(self) -> str:
        return ("+" if self.sign > 0 else "-") + self.label


@functools.lru_cache(maxsize=4096)
def pauli_matrix(label: str) -> np.ndarray:
    """Dense matrix of an unsigned Pauli word (kron over the label)."""
    mat = PAULI_1Q[label[0]]
    for c in label[1:]:
        mat = np.kron(mat, PAULI_1Q[c])
    mat.setflags(write=False)
    return mat


@dataclass(frozen=True)
class QuantumState:
    """A pure state (2^n amplitudes) or density operator (2^n x 2^n).

    Construction validates normalization (pure) or hermiticity and unit
    trace (mixed).  Positivity is checked by :meth:`validate`, which is more
    expensive and therefore not run on every intermediate state.
    """

    n_qubits: int
    data: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"n_qubits must be in 1..{MAX_QUBITS}")
        dim = 2**self.n_qubits
        arr = np.array(self.data, dtype=complex)
        if arr.shape == (dim,):
            norm = float(np.real(np.vdot(arr, arr)))
            if abs(norm - 1.0) > 1e-10:
                raise ValueError(f"pure state not normalized: |psi|^2 = {norm}")
        elif arr.shape == (dim, dim):
            if np.max(np.abs(arr - arr.conj().T)) > 1e-12:
                raise ValueError("density operator not Hermitian")
            tr = float(np.real(np.trace(arr)))
            if abs(tr - 1.0) > 1e-10:
                raise ValueError(f"density operator trace = {tr}, expected 1")
        else:
            raise ValueError(f"bad state shape {arr.shape} for n = {self.n_qubits}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def validate(self) -> None:
        """Full invariant check, including positivity for mixed states."""
        if not self.is_pure:
            evals = np.linalg.eigvalsh(self.data)
            if evals.min() < -1e-10:
                raise ValueError(f"density operator not PSD: min eig {evals.min()}")

    def purity(self) -> float:
        if self.is_pure:
            return 1.0
        return float(np.real(np.trace(self.data @ self.data)))

    @classmethod
    def pure(cls, amplitudes: Sequence[complex]) -> "QuantumState":
        amps = np.asarray(amplitudes, dtype=complex)
        n = int(round(np.log2(amps.size)))
        return cls(n, amps)

    @classmethod
    def mixed(cls, rho: np.ndarray) -> "QuantumState":
        rho = np.asarray(rho, dtype=complex)
        n = int(round(np.log2(rho.shape[0])))
        state = cls(n, rho)
        state.validate()
        return state

    @classmethod
    def zero(cls, n_qubits: int) -> "QuantumState":
        vec = np.zeros(2**n_qubits, dtype=complex)
        vec[0] = 1.0
        return cls(n_qubits, vec)


def _apply_op_vector(vec: np.ndarray, op: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Apply a 2^k x 2^k operator to the given qubit axes of a state vector."""
    k = len(targets)
    tens = vec.reshape((2,) * n)
    op_t = op.reshape((2,) * (2 * k))
    out = np.tensordot(op_t, tens, axes=(list(range(k, 2 * k)), list(targets)))
    # tensordot leaves the operator's output axes first; restore positions.
    rest = [ax for ax in range(n) if ax not in targets]
    perm = np.argsort(np.array(list(targets) + rest))
    return np.transpose(out, perm).reshape(-1)


def _apply_op_density(rho: np.ndarray, op: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """rho -> op rho op^dagger on the given qubits (op need not be unitary)."""
    k = len(targets)
    dim = 2**n
    tens = rho.reshape((2,) * (2 * n))
    op_t = op.reshape((2,) * (2 * k))
    # Row side.
    out = np.tensordot(op_t, tens, axes=(list(range(k, 2 * k)), list(targets)))
    rest = [ax for ax in range(2 * n) if ax not in targets]
    perm = np.argsort(np.array(list(targets) + rest))
    out = np.transpose(out, perm)
    # Column side uses the complex conjugate.
    col_targets = [n + t for t in targets]
    out2 = np.tensordot(op_t.conj(), out, axes=(list(range(k, 2 * k)), col_targets))
    rest2 = [ax for ax in range(2 * n) if ax not in col_targets]
    perm2 = np.argsort(np.array(col_targets + rest2))
    return np.transpose(out2, perm2).reshape(dim, dim)


def _check_targets(targets: Sequence[int], n: int) -> None:
    for t in targets:
        if not 0 <= t < n:
            raise ValueError(f"target qubit {t} out of range for n = {n}")
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate targets {tuple(targets)}")


def apply_gate(state: QuantumState, gate: Gate) -> QuantumState:
    """Unitary action of a gate: |psi> -> U|psi>, rho -> U rho U^dagger."""
    _check_targets(gate.targets, state.n_qubits)
    U = gate_matrix(gate)
    if state.is_pure:
        return QuantumState(state.n_qubits, _apply_op_vector(state.data, U, gate.targets, state.n_qubits))
    return QuantumState(state.n_qubits, _apply_op_density(state.data, U, gate.targets, state.n_qubits))


def apply_kraus(state: QuantumState, kraus: Iterable[np.ndarray], targets: Sequence[int]) -> QuantumState:
    """Apply a Kraus channel on the given qubits.  Output is always mixed."""
    _check_targets(targets, state.n_qubits)
    n = state.n_qubits
    rho = state.data if not state.is_pure else np.outer(state.data, state.data.conj())
    out = np.zeros_like(rho)
    for K in kraus:
        out += _apply_op_density(rho, K, targets, n)
    return QuantumState(n, out)


def to_density(state: QuantumState) -> QuantumState:
    """|psi> -> |psi><psi|; density operators pass through unchanged."""
    if not state.is_pure:
        return state
    return QuantumState(state.n_qubits, np.outer(state.data, state.data.conj()))


def partial_trace(state: QuantumState, keep: Iterable[int]) -> QuantumState:
    """Reduced density operator on ``keep`` (ascending original qubit order)."""
    keep = sorted(set(keep))
    if not keep:
        raise ValueError("keep-set must not be empty")
    _check_targets(keep, state.n_qubits)
    n = state.n_qubits
    rho = to_density(state).data
    tens = rho.reshape((2,) * (2 * n))
    traced = [q for q in range(n) if q not in keep]
    n_cur = n
    for q in sorted(traced, reverse=True):
        tens = np.trace(tens, axis1=q, axis2=n_cur + q)
        n_cur -= 1
    dim = 2 ** len(keep)
    return QuantumState(len(keep), tens.reshape(dim, dim))


def _require_length(pauli: PauliString, n: int) -> None:
    if len(pauli.label) != n:
        raise ValueError(f"Pauli label {pauli.label!r} does not match n = {n}")


def pauli_expectation(state: QuantumState, pauli: PauliString | str) -> float:
    """sign * tr(rho P).  Pure states are handled without forming rho."""
    if isinstance(pauli, str):
        pauli = PauliString(pauli)
    _require_length(pauli, state.n_qubits)
    P = pauli_matrix(pauli.label)
    if state.is_pure:
        val = np.vdot(state.data, P @ state.data)
    else:
        val = np.einsum("ij,ji->", state.data, P)
    return pauli.sign * float(np.real(val))


def antilinear_expectation(state: QuantumState, pauli: PauliString | str) -> complex:
    """sign * psi^T P psi (transpose, no conjugate) for a pure state.

    This is the expectation of P composed with complex conjugation, exact
    for pure states and equal to :func:`pauli_expectation` whenever the
    amplitudes are all real.  There is no trace form for mixed states here;
    passing one raises ``ValueError``.
    """
    if isinstance(pauli, str):
        pauli = PauliString(pauli)
    if not state.is_pure:
        raise ValueError("antilinear expectation is defined for pure states only")
    _require_length(pauli, state.n_qubits)
    P = pauli_matrix(pauli.label)
    return pauli.sign * complex(np.dot(state.data, P @ state.data))


def fidelity(state: QuantumState, target: QuantumState) -> float:
    """<target|rho|target> for a pure target (states or operators as input)."""
    if not target.is_pure:
        raise ValueError("fidelity target must be pure")
    if state.n_qubits != target.n_qubits:
        raise ValueError("qubit count mismatch")
    if state.is_pure:
        return float(np.abs(np.vdot(target.data, state.data)) ** 2)
    return float(np.real(np.vdot(target.data, state.data @ target.data)))


def equal_up_to_global_phase(a: QuantumState, b: QuantumState, atol: float = 1e-10) -> bool:
    """True when two pure states differ only by a global phase."""
    if not (a.is_pure and b.is_pure) or a.n_qubits != b.n_qubits:
        return False
    return abs(1.0 - abs(np.vdot(a.data, b.data))) < atol


def bitstring(index: int, n: int) -> str:
    """Basis-state index -> bitstring with qubit 0 as the leftmost bit."""
    return format(index, f"0{n}b")
