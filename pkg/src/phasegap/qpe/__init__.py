"""Phase estimation simulation and Solovay-Kitaev synthesis."""
from .sim import (
    PhaseEncoding, StateVector, delta_bound, encode_unary, inverse_qft_gates, min_lattice_for_delta,
    predicted_overlap, qpe_approx_sim, qpe_deviation, qpe_exact_sim, qpe_unitary, qpe_weights,
)
from .sk import GateSequence, adjoint_word, base_net, phase_gate, polylog_exponent, sk_synthesize, word_matrix

__all__ = [
    "PhaseEncoding", "StateVector", "delta_bound", "encode_unary", "inverse_qft_gates", "min_lattice_for_delta",
    "predicted_overlap", "qpe_approx_sim", "qpe_deviation", "qpe_exact_sim", "qpe_unitary", "qpe_weights",
    "GateSequence", "adjoint_word", "base_net", "phase_gate", "polylog_exponent", "sk_synthesize", "word_matrix",
]
