"""Maximum-power MPC for a variable-speed wind turbine in the partial-load
region: nonlinear plant simulator, analytic linearization with exact ZOH
discretization, condensed-QP receding-horizon controllers (switched-offline
and re-linearized-online), and a deterministic experiment harness.
"""

from .control import (DisturbanceEstimator, OfflineMpc, OnlineMpc,
                      ReferenceSignal, build_model_set, reference,
                      shift_constraints)
from .errors import (ConfigError, DomainError, InfeasibleQpError,
                     IntegrationError, QpIterationError, SimulationError)
from .experiment import (Metrics, SimLog, compute_metrics, run_closed_loop,
                         run_experiment, torque_total_variation)
from .linearize import (ContinuousLinearModel, DiscreteLinearModel,
                        OperatingPoint, continuous_model, discretize,
                        equilibrium, fd_jacobian, matrix_exponential,
                        torque_gradients, verify_linearization)
from .mpc import (AugmentedModel, CondensedQp, ConstraintSet, MpcWeights,
                  PredictionMatrices, augment_disturbance, augment_velocity,
                  condense, condense_constraints, condense_cost, mpc_step,
                  prediction_matrices, verify_condensation)
from .qp import ActiveSetSolver, enumerate_qp, run_benchmark, solve_qp
from .turbine import (ControlInput, PlantState, TurbineParams,
                      aerodynamic_power, aerodynamic_torque, derivatives,
                      generator_power, power_coefficient, step,
                      tip_speed_ratio, unified_matrices)
from .wind import WindProfile, generate_wind

__version__ = "0.1.0"
