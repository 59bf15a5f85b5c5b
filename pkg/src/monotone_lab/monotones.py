"""Entanglement monotone estimators, two-qubit concurrence, stabilizer
groups, and direct fidelity estimation.

Each monotone is a signed combination of squared Pauli expectation values:

    value = normalization * | sum_i sign_i * <P_i>^2 |

evaluated either with plain expectations tr(rho P) ("real-approximation",
exact only when the state has all-real amplitudes) or with antilinear
expectations psi^T P psi ("exact-antilinear", pure states only, phase-drift
insensitive).

The three-qubit monotone sums three rows of (+, +, -) signed terms.  The
genuine-four-qubit monotone ships in two variants: ``verbatim`` (the
default) lists ZYZY twice and omits XYZY, and is not invariant under local
unitaries; ``symmetrized`` completes the X/Z/I row pattern of the
three-qubit form with XYZY, restoring local-unitary invariance.  The two
agree on the GHZ and cluster targets and both vanish on product inputs;
see the README for the comparison.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .circuits import StateFamily, ideal_state
from .measure import CountsRecord, ExpectationEstimate, expectation_from_counts, readout_correct
from .measure import estimate_pauli_sampled
from .qstate import QuantumState, antilinear_expectation, pauli_expectation, to_density

REAL_MODE = "real-approximation"
EXACT_MODE = "exact-antilinear"

E4B_VERBATIM = "verbatim"
E4B_SYMMETRIZED = "symmetrized"


@dataclass(frozen=True)
class PauliTermSet:
    """Signed Pauli terms plus the combination rule of one monotone."""

    name: str
    terms: tuple[tuple[int, str], ...]
    normalization: float

    @property
    def n_qubits(self) -> int:
        return len(self.terms[0][1])

    @property
    def bases(self) -> tuple[str, ...]:
        """Unique measurement settings needed, in first-appearance order."""
        seen: list[str] = []
        for _, label in self.terms:
            if label not in seen:
                seen.append(label)
        return tuple(seen)


E3_TERMS = PauliTermSet(
    "E3",
    (
        (+1, "XYY"), (+1, "ZYY"), (-1, "IYY"),
        (+1, "YXY"), (+1, "YZY"), (-1, "YIY"),
        (+1, "YYX"), (+1, "YYZ"), (-1, "YYI"),
    ),
    1.0 / 3.0,
)

E4A_TERMS = PauliTermSet("E4a", ((+1, "YYYY"),), 1.0)

# Verbatim table: note ZYZY appears in both of the first two rows.
E4B_TERMS_VERBATIM = PauliTermSet(
    "E4b",
    (
        (+1, "XYXY"), (+1, "ZYZY"), (-1, "XYIY"),
        (+1, "ZYXY"), (+1, "ZYZY"), (-1, "ZYIY"),
        (-1, "IYXY"), (-1, "IYZY"), (+1, "IYIY"),
    ),
    1.0,
)

E4B_TERMS_SYMMETRIZED = PauliTermSet(
    "E4b",
    (
        (+1, "XYXY"), (+1, "XYZY"), (-1, "XYIY"),
        (+1, "ZYXY"), (+1, "ZYZY"), (-1, "ZYIY"),
        (-1, "IYXY"), (-1, "IYZY"), (+1, "IYIY"),
    ),
    1.0,
)

C2_TERMS = PauliTermSet("C2", ((+1, "YY"),), 1.0)


def term_set(name: str, e4b_variant: str = E4B_VERBATIM) -> PauliTermSet:
    name = name.lower()
    if name == "e3":
        return E3_TERMS
    if name == "e4a":
        return E4A_TERMS
    if name == "e4b":
        if e4b_variant == E4B_VERBATIM:
            return E4B_TERMS_VERBATIM
        if e4b_variant == E4B_SYMMETRIZED:
            return E4B_TERMS_SYMMETRIZED
        raise ValueError(f"unknown E4b variant {e4b_variant!r}")
    if name == "c2":
        return C2_TERMS
    raise ValueError(f"unknown monotone {name!r}")


@dataclass(frozen=True)
class MonotoneReport:
    """One monotone evaluation: value, uncertainty, mode, provenance."""

    name: str
    value: float
    stderr: float
    mode: str
    provenance: str

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("monotone value must be >= 0")


def combine_terms(terms: Sequence[tuple[int, str]], values: Mapping[str, complex], normalization: float) -> float:
    total = 0.0 + 0.0j
    for sign, label in terms:
        v = complex(values[label])
        total += sign * v * v
    return float(normalization * abs(total))


def _expectations_from_state(ts: PauliTermSet, state: QuantumState, mode: str) -> dict[str, complex]:
    if state.n_qubits != ts.n_qubits:
        raise ValueError(f"{ts.name} needs n = {ts.n_qubits}, state has n = {state.n_qubits}")
    values: dict[str, complex] = {}
    for label in ts.bases:
        if mode == REAL_MODE:
            values[label] = pauli_expectation(state, label)
        elif mode == EXACT_MODE:
            values[label] = antilinear_expectation(state, label)
        else:
            raise ValueError(f"unknown mode {mode!r}")
    return values


def _coerce_inputs(ts: PauliTermSet, source) -> tuple[dict[str, complex], float, str]:
    """Accepts a mapping label -> value/estimate or a sequence in term order.

    Returns (values, combined stderr via linear propagation, provenance).
    """
    if isinstance(source, Mapping):
        items = dict(source)
    else:
        seq = list(source)
        if len(seq) != len(ts.terms):
            raise ValueError(f"{ts.name} needs {len(ts.terms)} values, got {len(seq)}")
        items = {}
        for (sign, label), v in zip(ts.terms, seq):
            items.setdefault(label, v)
    values: dict[str, complex] = {}
    errs: dict[str, float] = {}
    for label in ts.bases:
        if label not in items:
            raise ValueError(f"missing expectation for basis {label}")
        v = items[label]
        if isinstance(v, ExpectationEstimate):
            values[label] = v.value
            errs[label] = v.stderr
        else:
            values[label] = complex(v)
            errs[label] = 0.0
    # First-order propagation: d(value)/d<P> = 2 c <P>, where c sums the
    # signs of every term carrying that label (a label may repeat).
    coeff: dict[str, int] = {}
    for sign, label in ts.terms:
        coeff[label] = coeff.get(label, 0) + sign
    var = 0.0
    for label, c in coeff.items():
        var += (2.0 * c * abs(values[label]) * errs[label]) ** 2
    stderr = ts.normalization * float(np.sqrt(var))
    return values, stderr, "expectations"


def evaluate_monotone(ts: PauliTermSet, source, mode: str = REAL_MODE) -> MonotoneReport:
    """Evaluate a term set on a state or on supplied expectation values."""
    if isinstance(source, QuantumState):
        values = _expectations_from_state(ts, source, mode)
        value = combine_terms(ts.terms, values, ts.normalization)
        return MonotoneReport(ts.name, value, 0.0, mode, "exact state")
    if mode != REAL_MODE:
        raise ValueError("supplied expectation values imply the real approximation")
    values, stderr, _ = _coerce_inputs(ts, source)
    value = combine_terms(ts.terms, values, ts.normalization)
    return MonotoneReport(ts.name, value, stderr, mode, "expectation values")


def e3(source, mode: str = REAL_MODE) -> MonotoneReport:
    """Three-qubit monotone; 1 on ideal GHZ/cluster chains, 0 on |+++>."""
    return evaluate_monotone(E3_TERMS, source, mode)


def e4a(source, mode: str = REAL_MODE) -> MonotoneReport:
    """Squared four-qubit concurrence; 1 on GHZ, 0 on the linear cluster."""
    return evaluate_monotone(E4A_TERMS, source, mode)


def e4b(source, mode: str = REAL_MODE, variant: str = E4B_VERBATIM) -> MonotoneReport:
    """Genuine four-qubit entanglement monotone (1 on GHZ and cluster)."""
    return evaluate_monotone(term_set("e4b", variant), source, mode)


def concurrence2(source, pair: tuple[int, int] = (0, 1), mode: str = REAL_MODE) -> MonotoneReport:
    """Squared two-qubit concurrence <YY...>^2, restricted to a qubit pair.

    States on more than two qubits are reduced to the pair first, which is
    only possible in real-approximation mode (the antilinear form has no
    mixed-state counterpart here).
    """
    if isinstance(source, QuantumState) and source.n_qubits != 2:
        if mode == EXACT_MODE:
            raise ValueError("exact mode needs a pure two-qubit state")
        from .qstate import partial_trace

        source = partial_trace(source, pair)
    return evaluate_monotone(C2_TERMS, source, mode)


# --------------------------------------------------------------------------
# Monotones from measured counts, with bootstrap error bars.

def _content_seed(records: Mapping[str, CountsRecord]) -> int:
    """Seed derived from record contents, so identical records give
    identical bootstrap resamples regardless of which pipeline ran them."""
    h = hashlib.sha256()
    for label in sorted(records):
        h.update(records[label].to_json_line().encode())
    return int.from_bytes(h.digest()[:8], "big")


def monotone_from_counts(
    ts: PauliTermSet,
    records: Mapping[str, CountsRecord],
    confusion: Sequence[np.ndarray] | None = None,
    bootstrap_resamples: int = 200,
) -> MonotoneReport:
    """Combine per-basis counts records into a monotone with bootstrap stderr."""
    missing = [b for b in ts.bases if b not in records]
    if missing:
        raise ValueError(f"missing bases: {', '.join(missing)}")

    def estimates(recs: Mapping[str, CountsRecord]) -> dict[str, complex]:
        out: dict[str, complex] = {}
        for label in ts.bases:
            if confusion is None:
                out[label] = expectation_from_counts(recs[label]).value
            else:
                out[label] = readout_correct(recs[label], confusion)[1].value
        return out

    value = combine_terms(ts.terms, estimates(records), ts.normalization)
    stderr = 0.0
    if bootstrap_resamples > 1:
        rng = np.random.default_rng(np.random.SeedSequence([_content_seed(records)]))
        resampled = np.empty(bootstrap_resamples)
        dists = {label: records[label].distribution() for label in ts.bases}
        for b in range(bootstrap_resamples):
            fake: dict[str, CountsRecord] = {}
            for label in ts.bases:
                rec = records[label]
                draws = rng.multinomial(rec.shots, dists[label])
                counts = {format(i, f"0{rec.n_qubits}b"): int(c) for i, c in enumerate(draws) if c > 0}
                fake[label] = CountsRecord(rec.basis, rec.n_qubits, rec.shots, counts, rec.delay_us)
            resampled[b] = combine_terms(ts.terms, estimates(fake), ts.normalization)
        stderr = float(np.std(resampled, ddof=1))
    return MonotoneReport(ts.name, value, stderr, REAL_MODE, "sampled counts")


# --------------------------------------------------------------------------
# Stabilizer groups and direct fidelity estimation.

_PAULI_MUL = {}
for _a, _b, _k, _c in [
    ("I", "I", 0, "I"), ("I", "X", 0, "X"), ("I", "Y", 0, "Y"), ("I", "Z", 0, "Z"),
    ("X", "I", 0, "X"), ("X", "X", 0, "I"), ("X", "Y", 1, "Z"), ("X", "Z", 3, "Y"),
    ("Y", "I", 0, "Y"), ("Y", "X", 3, "Z"), ("Y", "Y", 0, "I"), ("Y", "Z", 1, "X"),
    ("Z", "I", 0, "Z"), ("Z", "X", 1, "Y"), ("Z", "Y", 3, "X"), ("Z", "Z", 0, "I"),
]:
    _PAULI_MUL[(_a, _b)] = (_k, _c)


def multiply_paulis(a: str, b: str) -> tuple[int, str]:
    """(phase exponent k with overall factor i^k, product label)."""
    k = 0
    out = []
    for ca, cb in zip(a, b):
        dk, cc = _PAULI_MUL[(ca, cb)]
        k = (k + dk) % 4
        out.append(cc)
    return k, "".join(out)


@dataclass(frozen=True)
class StabilizerGroup:
    """All 2^n signed Pauli operators fixing a stabilizer state."""

    n_qubits: int
    elements: tuple[tuple[int, str], ...]

    def __len__(self) -> int:
        return len(self.elements)


def _generators(family: StateFamily, n: int) -> list[str]:
    family = StateFamily(family)
    if family in (StateFamily.GHZ, StateFamily.BELL):
        gens = ["X" * n]
        for i in range(n - 1):
            gens.append("I" * i + "ZZ" + "I" * (n - 2 - i))
        return gens
    if family is StateFamily.CLUSTER:
        gens = []
        for i in range(n):
            left = "Z" if i > 0 else ""
            right = "Z" if i < n - 1 else ""
            label = "I" * (i - len(left)) + left + "X" + right
            gens.append(label + "I" * (n - len(label)))
        return gens
    raise ValueError(f"no stabilizer generators for family {family}")


def stabilizer_group(family: StateFamily, n: int) -> StabilizerGroup:
    """Group generated by the family's stabilizer generators, with signs."""
    if n > 8:
        raise ValueError("n must be <= 8")
    gens = _generators(family, n)
    elements: dict[str, int] = {"I" * n: 1}
    for g in gens:
        new = dict(elements)
        for label, sign in elements.items():
            k, prod = multiply_paulis(label, g)
            if k % 2 != 0:
                raise AssertionError("non-commuting stabilizer generators")
            s = sign * (1 if k == 0 else -1)
            if prod in new and new[prod] != s:
                raise AssertionError("sign clash while generating group")
            new[prod] = s
        elements = new
    assert len(elements) == 2 ** len(gens)
    ordered = tuple(sorted(((s, lbl) for lbl, s in elements.items()), key=lambda e: e[1]))
    return StabilizerGroup(n, ordered)


def exact_fidelity(state: QuantumState, target: QuantumState) -> float:
    """<target|rho|target> against a pure target."""
    from .qstate import fidelity

    return fidelity(state, target)


def dfe_fidelity(
    state: QuantumState,
    family: StateFamily,
    n: int,
    k: int = 16,
    shots: int | None = None,
    rng: np.random.Generator | None = None,
    confusion: Sequence[np.ndarray] | None = None,
) -> tuple[float, float]:
    """Direct fidelity estimate from k uniform stabilizer-group samples.

    The fidelity with a stabilizer target equals the group average of the
    signed expectations s * tr(rho P); sampling uniformly with replacement
    keeps the k-sample mean unbiased.  Returns (estimate, standard error).
    With ``shots`` set, each sampled expectation is itself estimated from a
    finite-shot counts record (readout-corrected when ``confusion`` given).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    group = stabilizer_group(family, n)
    if rng is None:
        rng = np.random.default_rng()
    picks = rng.integers(0, len(group), size=k)
    samples = np.empty(k)
    per_sample_err = np.empty(k)
    for i, idx in enumerate(picks):
        sign, label = group.elements[int(idx)]
        if shots is None:
            samples[i] = sign * pauli_expectation(state, label)
            per_sample_err[i] = 0.0
        else:
            est = estimate_pauli_sampled(state, label, shots, rng, confusion)
            samples[i] = sign * est.value
            per_sample_err[i] = est.stderr
    estimate = float(samples.mean())
    if k == 1:
        stderr = float(per_sample_err[0])
    else:
        stderr = float(samples.std(ddof=1) / np.sqrt(k))
    return estimate, stderr


def full_group_fidelity(state: QuantumState, family: StateFamily, n: int) -> float:
    """Average of s * tr(rho P) over the entire stabilizer group."""
    group = stabilizer_group(family, n)
    rho = to_density(state)
    total = sum(sign * pauli_expectation(rho, label) for sign, label in group.elements)
    return total / len(group)


def verify_stabilizer_group(group: StabilizerGroup, family: StateFamily) -> bool:
    """Check s * P |target> = |target> for every group element."""
    target = ideal_state(family, group.n_qubits)
    for sign, label in group.elements:
        val = sign * pauli_expectation(target, label)
        if abs(val - 1.0) > 1e-10:
            return False
    return True


def random_group_closure_check(group: StabilizerGroup, rng: np.random.Generator, trials: int = 50) -> bool:
    """Products of random pairs stay in the group with the right sign."""
    table = {label: sign for sign, label in group.elements}
    labels = list(table)
    for _ in range(trials):
        a, b = rng.choice(labels, 2)
        k, prod = multiply_paulis(a, b)
        if k % 2 != 0:
            return False
        s = table[a] * table[b] * (1 if k == 0 else -1)
        if table.get(prod) != s:
            return False
    return True
