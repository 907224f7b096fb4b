"""Receding-horizon controllers for maximum-power tracking.

Two variants share the same QP machinery: a switched bank of two fixed
linearizations selected by measured wind speed, and a controller that
re-linearizes at the measured wind speed every sample. Both run on full
state feedback, shift measurements into deviation coordinates of the
active operating point, and track the optimal-tip-speed-ratio generator
speed reference.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .linearize import OperatingPoint, DiscreteLinearModel, continuous_model, \
    discretize, equilibrium
from .mpc import AugmentedModel, CondensedQp, ConstraintSet, MpcWeights, \
    augment_disturbance, augment_velocity, condense, mpc_step
from .qp import ActiveSetSolver
from .turbine import V_PARTIAL_MIN, V_RATED, ControlInput, TurbineParams, \
    generator_power


@dataclass(frozen=True)
class ReferenceSignal:
    omega_g_ref: float  # rad/s
    p_g_ref: float      # W


def reference(v, params: TurbineParams) -> ReferenceSignal:
    """Maximum-power tracking targets for measured wind v.

    The generator-speed reference keeps the rotor on the optimal
    tip-speed-ratio locus; the power reference is informational when the
    power error weight is zero.
    """
    if v <= 0.0:
        raise DomainError("wind speed must be positive")
    omega_g_ref = params.n_g * params.lambda_opt * v / params.radius
    p_g_ref = (0.5 * params.rho * math.pi * params.radius**2 * v**3
               * params.cp_opt * params.eta)
    return ReferenceSignal(omega_g_ref, p_g_ref)


def shift_constraints(op: OperatingPoint, params: TurbineParams) -> ConstraintSet:
    """Absolute actuator and output bounds expressed about an operating point.

    Move bounds map the pitch rate limits onto one sampling interval; the
    torque move is unbounded (no rate limit on the converter reference).
    Output upper bounds cap generator speed and power; they have no lower
    bounds in the partial-load region.
    """
    t_g_bar = op.u_bar.t_g_ref
    beta_bar = op.u_bar.beta_ref
    p_g_bar = generator_power(op.x_bar.t_g, op.x_bar.omega_g, params)
    return ConstraintSet(
        du_min=np.array([-np.inf, params.beta_rate_min * params.t_s]),
        du_max=np.array([np.inf, params.beta_rate_max * params.t_s]),
        u_min=np.array([0.0 - t_g_bar, params.beta_min - beta_bar]),
        u_max=np.array([params.t_g_max - t_g_bar, params.beta_max - beta_bar]),
        y_min=np.array([-np.inf, -np.inf]),
        y_max=np.array([params.omega_g_max - op.x_bar.omega_g,
                        params.p_g_max - p_g_bar]),
    )


@dataclass(frozen=True)
class ModelSet:
    """One linearization point bundled with its cached controller matrices."""

    op: OperatingPoint
    dm: DiscreteLinearModel
    am: AugmentedModel
    qp: CondensedQp


def build_model_set(v_bar, params: TurbineParams, weights: MpcWeights) -> ModelSet:
    """Full pipeline for one operating point: linearize, discretize, condense."""
    op = equilibrium(v_bar, params)
    dm = discretize(continuous_model(op, params), params.t_s)
    am = augment_velocity(*augment_disturbance(dm))
    qp = condense(am, weights, shift_constraints(op, params))
    return ModelSet(op, dm, am, qp)


class DisturbanceEstimator:
    """Constant-disturbance estimate along the wind input channel.

    Each update projects the one-step state innovation onto the
    disturbance column and accumulates the result with gain kappa, so an
    unmeasured wind offset is recovered with time constant t_s/kappa. The
    estimate is clamped to +-limit (wind-speed-equivalent units).
    """

    def __init__(self, kappa=0.1, limit=5.0):
        self.kappa = kappa
        self.limit = limit
        self.d_hat = 0.0

    def update(self, innovation, b_d) -> float:
        bd = np.asarray(b_d, dtype=float).ravel()
        denom = float(bd @ bd)
        if denom > 0.0:
            self.d_hat += self.kappa * float(bd @ np.asarray(innovation)) / denom
            self.d_hat = min(max(self.d_hat, -self.limit), self.limit)
        return self.d_hat


@dataclass
class StepInfo:
    """Per-sample controller diagnostics."""

    mode: str
    qp_status: str
    qp_iterations: int
    n_active: int
    cost: float
    solve_time: float   # full controller step, wall-clock seconds
    d_hat: float


class _MpcControllerBase:
    """Shared mechanics: coordinate shifts, estimation, saturation."""

    def __init__(self, params: TurbineParams, weights: MpcWeights | None = None,
                 kappa=0.1):
        self.params = params
        self.weights = weights if weights is not None else MpcWeights()
        self.estimator = DisturbanceEstimator(kappa=kappa)
        self.solver = ActiveSetSolver()
        self.u_prev: ControlInput | None = None
        self._prediction: tuple[np.ndarray, np.ndarray] | None = None

    def _check_range(self, v):
        if not V_PARTIAL_MIN <= v < V_RATED:
            raise DomainError(
                f"wind speed {v} m/s outside the partial-load range [4, 11)")

    def _apply(self, ms: ModelSet, x_meas, v):
        p = self.params
        x = np.asarray(x_meas, dtype=float)
        if self._prediction is not None:
            x_pred, b_d_prev = self._prediction
            self.estimator.update(x - x_pred, b_d_prev)
        if self.u_prev is None:
            # before the first sample the actuators are assumed settled
            self.u_prev = ControlInput(float(x[3]), float(x[4]))

        x_bar = np.asarray(ms.op.x_bar, dtype=float)
        u_bar = np.asarray(ms.op.u_bar, dtype=float)
        dx = x - x_bar
        du_prev = np.asarray(self.u_prev, dtype=float) - u_bar
        x_a = np.concatenate([dx, [self.estimator.d_hat], du_prev])

        ref = reference(v, p)
        p_g_bar = generator_power(ms.op.x_bar.t_g, ms.op.x_bar.omega_g, p)
        r_step = np.array([ref.omega_g_ref - ms.op.x_bar.omega_g,
                           ref.p_g_ref - p_g_bar])
        r_s = np.tile(r_step, self.weights.n_p)

        du, qp_info = mpc_step(ms.qp, x_a, r_s, self.solver)

        u = np.asarray(self.u_prev, dtype=float) + du
        u[0] = min(max(u[0], 0.0), p.t_g_max)
        u[1] = min(max(u[1], p.beta_min), p.beta_max)
        u_out = ControlInput(float(u[0]), float(u[1]))

        # one-step-ahead prediction with the applied (saturated) input,
        # consumed by the estimator at the next sample
        du_applied = u - np.asarray(self.u_prev, dtype=float)
        x_pred = (x_bar + ms.dm.a_d @ dx + ms.dm.b_du @ (du_prev + du_applied)
                  + ms.dm.b_d.ravel() * self.estimator.d_hat)
        self._prediction = (x_pred, ms.dm.b_d.ravel().copy())
        self.u_prev = u_out
        return u_out, qp_info


class OfflineMpc(_MpcControllerBase):
    """Switched-model controller over a fixed bank of two linearizations.

    The low entry (default 6.4 m/s) serves winds in [4, v_switch), the high
    entry (default 10 m/s) serves [v_switch, 11); the threshold sits at
    8.7 m/s. Selection is a pure function of the measured wind speed unless
    a hysteresis band is configured.
    """

    def __init__(self, params: TurbineParams, weights: MpcWeights | None = None,
                 op_low=6.4, op_high=10.0, v_switch=8.7, hysteresis=0.0,
                 kappa=0.1):
        super().__init__(params, weights, kappa)
        self.bank = (build_model_set(op_low, params, self.weights),
                     build_model_set(op_high, params, self.weights))
        self.v_switch = v_switch
        self.hysteresis = hysteresis
        self.active_index = 0

    @property
    def active_op(self) -> OperatingPoint:
        return self.bank[self.active_index].op

    def _select(self, v) -> int:
        if self.hysteresis > 0.0:
            if self.active_index == 0 and v >= self.v_switch + self.hysteresis:
                return 1
            if self.active_index == 1 and v < self.v_switch - self.hysteresis:
                return 0
            return self.active_index
        return 0 if v < self.v_switch else 1

    def step(self, x_meas, v):
        self._check_range(v)
        t0 = time.perf_counter()
        self.active_index = self._select(v)
        u, qp_info = self._apply(self.bank[self.active_index], x_meas, v)
        elapsed = time.perf_counter() - t0
        return u, StepInfo(mode="offline", qp_status=qp_info.status,
                           qp_iterations=qp_info.iterations,
                           n_active=qp_info.n_active, cost=qp_info.cost,
                           solve_time=elapsed, d_hat=self.estimator.d_hat)


class OnlineMpc(_MpcControllerBase):
    """Controller that re-linearizes at the measured wind speed every sample.

    The whole pipeline (operating point, gradients, ZOH discretization,
    augmentation, condensation, QP) runs inside one sampling period. Any
    numerical failure in the pipeline holds the previous input and flags
    the sample instead of aborting the loop.
    """

    def step(self, x_meas, v):
        self._check_range(v)
        t0 = time.perf_counter()
        try:
            ms = build_model_set(v, self.params, self.weights)
            u, qp_info = self._apply(ms, x_meas, v)
            status, iters, n_active, cost = (qp_info.status, qp_info.iterations,
                                             qp_info.n_active, qp_info.cost)
        except (DomainError, ArithmeticError, np.linalg.LinAlgError):
            if self.u_prev is None:
                raise
            u = self.u_prev
            self._prediction = None
            status, iters, n_active, cost = "hold", 0, 0, float("nan")
        elapsed = time.perf_counter() - t0
        return u, StepInfo(mode="online", qp_status=status,
                           qp_iterations=iters, n_active=n_active, cost=cost,
                           solve_time=elapsed, d_hat=self.estimator.d_hat)
