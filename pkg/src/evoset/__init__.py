"""Random walks, entropy growth and evolving set processes on bounded-degree graphs."""

__version__ = "0.1.0"

from .graphs import (CapExceeded, Cycle, FiniteExplicit, Graph, GraphError, HalfLine,
                     IntegerLine, Lattice2D, Lattice3D, PendantTowerGraph, RegularTree,
                     VertexId, ball, parse_graph)
from .rng import RNG_ALGORITHM, seed_stream, uniform_open
from .reports import BoundReport
from .walks import (SparseMeasure, distribution_at, entropy, entropy_series,
                    escape_probability, green_partial_sum, green_tail_estimate,
                    mc_return_frequency, walk_law)
from .evolving import (SphereUnion, decay_profile, duality_check, expected_functional,
                       gap_length, q_measure, simulate_trajectory, superstep_levels,
                       superstep_sample)
from .bounds import (EntropyConstant, alpha_constant, certify_entropy_constant,
                     check_ceil_log_inequality, check_conddecay, check_entropy_decomposition,
                     check_escape_bound, check_maincor, check_q_escape_bound,
                     check_rootdecay, check_transience_sum)
from .counterexample import (build_counterexample, check_hitting_time_bound, drift_check,
                             per_start_entropy_rates, recurrence_diagnostics, tower_schedule)
