"""DC microgrid droop and distributed current-sharing control analysis."""
from .errors import DCGridError, InvalidInputError, NumericFailureError
from .network import NetworkSpec, ReducedNetwork, build_full, is_connected, kron_reduce
from .droop import (PrimaryDroopConfig, build_primary, decay_bound, sharing_bound, sharing_deviation,
                    steady_primary)
from .coop import (Branch, Classification, ClosedLoopSystem, CooperativeConfig, ConditionResult,
                   StabilityVerdict, SteadyStatePrediction, build_coop, check_c1, check_c2,
                   corollary_checks, hurwitz_quadratic, laplacian, null_eigenvectors, predict_steady,
                   quad_coeffs, second_order_coeffs, semistability_check, theta_measure)

__version__ = "0.1.0"
