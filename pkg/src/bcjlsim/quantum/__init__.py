"""Quantum-state primitives: states, measurements, fidelity, purifications, steering."""

from .measurement import (
    GeneralMeasurement,
    Outcome,
    Povm,
    apply_measurement,
    bb84_measurement,
    joint_outcome_distribution,
)
from .purification import (
    DISCARD,
    Purification,
    canonical_purification,
    optimal_purifications,
    steer,
    steered_vectors,
    steering_povm,
)
from .states import (
    CONSTRUCT_ATOL,
    EQUAL_ATOL,
    DensityMatrix,
    Ensemble,
    PureState,
    apply_local,
    apply_local_columns,
    basis_rotation,
    bb84_vector,
    bb84_vectors,
    encode_bb84,
    fidelity,
    format_bases,
    format_bits,
    matrix_sqrt,
    parse_bases,
    parse_bits,
    partial_trace,
    psd_power,
    root_fidelity,
    tensor_product,
    trace_norm,
)
