"""epiwalk: epidemics as random walks on proximity graphs.

Simulation of round-based spreading, isolation planning under partial
visibility and bounded budgets, entropy-based potential metrics, and a
desk-scale demonstration of privacy-preserving multi-agency graph analysis.
"""

from .errors import (
    ConvergenceError,
    EdgeListError,
    EmptyGraphError,
    EpiwalkError,
    HeadroomError,
    ProtocolError,
    ValidationError,
)
from .graph import (
    DegreeDistribution,
    Graph,
    VisibilityView,
    degree_distribution,
    from_edges,
    generate_synthetic,
    largest_connected_component,
    load_edge_list,
    sample_visibility,
)
from .metrics import (
    EigenvalueGap,
    PotentialSeries,
    TransitionMatrix,
    chain_containment_probability,
    eigenvalue_gap,
    full_visibility_bound,
    infection_probabilities,
    network_max_potential,
    potential_series,
    power_iterate,
    relative_pointwise_distance,
    stationary_distribution,
    transition_matrix,
    transmission_potential,
)
from .simulate import (
    STRATEGIES,
    EpidemicState,
    Status,
    TransmissionEvent,
    TrialResult,
    measure_r0,
    run_trial,
    seed_infection,
    spread_round,
)
from .interventions import (
    InterventionPlan,
    PartitionAssignment,
    partition_visible,
    plan_contact_tracing,
    plan_null,
    plan_super_link,
    plan_super_spreader,
)

__version__ = "0.1.0"
