"""qkinlab — a finite-dimensional laboratory for quantum kinetic hierarchies.

Dense tensor-operator algebra, unitary-group cumulant expansions, dual
hierarchies of marginal observables, kinetic series with initial correlations,
Vlasov-type mean-field dynamics and scaling-limit sweeps, all at small
one-particle dimension where every identity can be checked numerically.
"""

from .operators import (
    ManyBodyOperator,
    NormWeight,
    OperatorSequence,
    identity_operator,
    operator_norm,
    partial_trace,
    scalar_operator,
    sequence_norm,
    symmetrize,
    tensor_embed,
    tensor_product,
    trace_norm,
)
from .propagators import (
    InteractionModel,
    build_hamiltonian,
    generator,
    heisenberg_group,
    schrodinger_group,
)

__all__ = [
    "ManyBodyOperator",
    "NormWeight",
    "OperatorSequence",
    "InteractionModel",
    "build_hamiltonian",
    "generator",
    "heisenberg_group",
    "schrodinger_group",
    "identity_operator",
    "operator_norm",
    "partial_trace",
    "scalar_operator",
    "sequence_norm",
    "symmetrize",
    "tensor_embed",
    "tensor_product",
    "trace_norm",
]

__version__ = "0.1.0"
