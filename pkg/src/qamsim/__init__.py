"""Exact simulation and analysis of a quantum Arthur-Merlin verifier for
SUBSET-SUM with a 3-state quantum register.

The package keeps every amplitude and probability an exact rational: the
register evolves unnormalized so squared norms stay in the rationals, and
all protocol guarantees (exact acceptance for members, rejection at least
9/10 for nonmembers against any prover) are checked with zero tolerance.
"""

from .analysis import (
    SelectionRow,
    SoundnessReport,
    amplify,
    expected_runtime,
    overall_verdict,
    pass_probs,
    render_soundness_report,
    rounds_needed,
    subset_sum_oracle,
    worst_case_soundness,
)
from .errors import (
    ConfigurationError,
    ConsistencyError,
    GuardError,
    ProtocolError,
    QamError,
)
from .exact import (
    Branch,
    OperationElement,
    OutcomeLabel,
    Superoperator,
    apply,
    check_completeness,
    initialize,
    squared_norm,
)
from .machine import (
    INITIALIZE,
    INITIALIZED,
    OutcomeAction,
    PassAnalysis,
    ProverStrategy,
    Verdict,
    VerifierSpec,
    run_pass_exact,
    run_protocol_exact,
    sample_pass,
    sample_step,
    strategy_for_pass,
)
from .protocol import (
    Instance,
    WitnessSubset,
    build_spec,
    closed_form_state,
    decode_tape,
    encode_instance,
    honest_prover,
    trace_state,
    trace_survivor,
    validate_form,
)
from .reduction import (
    CNF,
    ReductionOutput,
    brute_sat,
    map_witness,
    parse_dimacs,
    reduce_3sat,
)

__version__ = "0.1.0"
