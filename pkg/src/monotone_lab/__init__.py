"""monotone-lab: simulate and analyze multi-qubit entanglement-monotone
experiments — state preparation, noisy delay evolution, shot-sampled Pauli
estimation with readout correction, direct fidelity estimation, and
phase-drift compensation — for registers of up to 8 qubits.
"""

__version__ = "0.1.0"

from .circuits import (  # noqa: F401
    Circuit,
    StateFamily,
    apply_compensation,
    build_prep,
    build_ramsey,
    ideal_state,
    insert_delay,
    run,
    run_statevector,
)
from .experiments import (  # noqa: F401
    DEFAULT_DRIFT_HZ,
    CosineFit,
    ExperimentConfig,
    PrepErrorResult,
    ScanRow,
    ScanSeries,
    bell_concurrence_scan,
    fit_cosine,
    monotone_time_scan,
    pauli_time_scan,
    prep_error_experiment,
    ramsey_scan,
    scan,
)
from .measure import (  # noqa: F401
    CountsRecord,
    ExpectationEstimate,
    expectation_from_counts,
    measurement_distribution,
    readout_correct,
    sample_counts,
)
from .monotones import (  # noqa: F401
    EXACT_MODE,
    REAL_MODE,
    MonotoneReport,
    PauliTermSet,
    StabilizerGroup,
    concurrence2,
    dfe_fidelity,
    e3,
    e4a,
    e4b,
    exact_fidelity,
    stabilizer_group,
)
from .noise import (  # noqa: F401
    Channel,
    NoiseModel,
    OneOverFSettings,
    apply_confusion,
    cnot_error_channel,
    confusion_matrix,
    idle_channel,
    invert_confusion,
    sample_quasistatic_detunings,
)
from .qstate import (  # noqa: F401
    Gate,
    PauliString,
    QuantumState,
    antilinear_expectation,
    apply_gate,
    apply_kraus,
    fidelity,
    partial_trace,
    pauli_expectation,
    to_density,
)
