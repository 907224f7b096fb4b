"""Nonlinear wind turbine model and fixed-step simulator.

Rotor aerodynamics with the standard empirical Cp surface, a two-mass
geared drive train carrying torsional torque, and first-order pitch and
generator-converter actuators. Pitch angles are degrees throughout; shaft
speeds are rad/s.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, IntegrationError

BETZ_LIMIT = 16.0 / 27.0

# Partial-load wind envelope: below V_PARTIAL_MIN the machine is parked,
# above V_RATED power limiting takes over and this controller does not apply.
V_PARTIAL_MIN = 4.0
V_RATED = 11.0


class PlantState(NamedTuple):
    """Turbine state [omega_t, omega_g, t_tw, t_g, beta]."""

    omega_t: float  # rotor speed, rad/s
    omega_g: float  # generator speed, rad/s
    t_tw: float     # drive-train torsional torque, N*m
    t_g: float      # generator torque, N*m
    beta: float     # pitch angle, deg


class ControlInput(NamedTuple):
    """Actuator references [t_g_ref, beta_ref]."""

    t_g_ref: float   # generator torque reference, N*m
    beta_ref: float  # pitch reference, deg


@dataclass(frozen=True)
class TurbineParams:
    """Physical constants of the machine plus the controller sampling time.

    Defaults describe the 1.5 MW-class test turbine used throughout the
    suite. ``omega_g_max``, ``p_g_max`` and ``t_g_max`` default to the
    rated-condition values at the top of the partial-load range (11 m/s)
    and can be overridden individually.
    """

    rho: float = 1.225            # air density, kg/m^3
    radius: float = 35.0          # blade length, m
    j_t: float = 1.86e6           # turbine-side inertia, kg*m^2
    j_g: float = 56.29            # generator-side inertia, kg*m^2
    n_g: float = 62.6             # gear ratio
    k_s: float = 31.8e4           # shaft stiffness, N*m/rad
    b_s: float = 212.2            # shaft damping, N*m/(rad/s)
    tau: float = 0.1              # pitch actuator time constant, s
    tau_g: float = 0.02           # generator time constant, s
    eta: float = 1.0              # generator efficiency, (0, 1]
    lambda_opt: float = 8.1       # optimal tip-speed ratio
    beta_opt: float = 0.0         # optimal pitch, deg
    cp_opt: float = 0.48          # peak power coefficient
    t_s: float = 0.05             # controller sampling time, s
    beta_min: float = 0.0         # deg
    beta_max: float = 45.0        # deg
    beta_rate_min: float = -10.0  # deg/s
    beta_rate_max: float = 10.0   # deg/s
    omega_g_max: float | None = None  # rad/s
    p_g_max: float | None = None      # W
    t_g_max: float | None = None      # N*m

    def __post_init__(self):
        for name in ("rho", "radius", "j_t", "j_g", "n_g", "k_s", "b_s",
                     "tau", "tau_g", "t_s"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError("eta must lie in (0, 1]")
        if not self.beta_min < self.beta_max:
            raise ValueError("beta_min must lie below beta_max")
        if not self.beta_rate_min < 0.0 < self.beta_rate_max:
            raise ValueError("pitch rate limits must straddle zero")
        if not 0.0 < self.cp_opt < BETZ_LIMIT:
            raise ValueError("cp_opt must lie in (0, 16/27)")
        if self.omega_g_max is None:
            object.__setattr__(
                self, "omega_g_max",
                self.n_g * self.lambda_opt * V_RATED / self.radius)
        if self.p_g_max is None:
            object.__setattr__(
                self, "p_g_max",
                0.5 * self.rho * math.pi * self.radius**2 * V_RATED**3 * self.cp_opt)
        if self.t_g_max is None:
            object.__setattr__(self, "t_g_max", self.p_g_max / self.omega_g_max)


def power_coefficient(lam, beta):
    """Power coefficient Cp(lambda, beta) with beta in degrees.

    The empirical surface goes negative at extreme arguments; negative
    values are clamped to zero (the rotor never extracts negative power).
    Accepts scalars or numpy arrays.
    """
    lam = np.asarray(lam, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if not np.all(np.isfinite(lam)) or np.any(lam <= 0.0):
        raise DomainError("tip-speed ratio must be finite and positive")
    inv_li = 1.0 / (lam + 0.08 * beta) - 0.035 / (beta**3 + 1.0)
    raw = (0.5176 * (116.0 * inv_li - 0.4 * beta - 5.0) * np.exp(-21.0 * inv_li)
           + 0.0068 * lam)
    cp = np.maximum(raw, 0.0)
    return float(cp) if cp.ndim == 0 else cp


def tip_speed_ratio(omega_t, v, params: TurbineParams):
    """Blade-tip speed over wind speed, omega_t * R / v."""
    if v <= 0.0:
        raise DomainError("wind speed must be positive")
    return omega_t * params.radius / v


def aerodynamic_power(v, lam, beta, params: TurbineParams):
    """Captured rotor power 0.5*rho*pi*R^2*v^3*Cp; nonnegative by the Cp clamp."""
    if v <= 0.0:
        raise DomainError("wind speed must be positive")
    area = math.pi * params.radius**2
    return 0.5 * params.rho * area * v**3 * power_coefficient(lam, beta)


def aerodynamic_torque(omega_t, v, beta, params: TurbineParams):
    """Rotor torque P_t / omega_t; requires omega_t > 0."""
    if omega_t <= 0.0:
        raise DomainError("rotor speed must be positive to evaluate torque")
    lam = tip_speed_ratio(omega_t, v, params)
    return aerodynamic_power(v, lam, beta, params) / omega_t


def generator_power(t_g, omega_g, params: TurbineParams):
    """Electrical power T_g * omega_g * eta."""
    return t_g * omega_g * params.eta


def derivatives(state, u, v, params: TurbineParams) -> np.ndarray:
    """Time derivatives of the five plant states.

    The torsional torque rate chains the shaft twist rate with the two
    acceleration terms, so it must be evaluated after them.
    """
    omega_t, omega_g, t_tw, t_g, beta = state
    t_t = aerodynamic_torque(omega_t, v, beta, params)
    d_omega_t = (t_t - params.n_g * t_tw) / params.j_t
    d_omega_g = (t_tw - t_g) / params.j_g
    d_t_tw = (params.k_s * (params.n_g * omega_t - omega_g)
              + params.b_s * (params.n_g * d_omega_t - d_omega_g))
    d_t_g = (u[0] - t_g) / params.tau_g
    d_beta = (u[1] - beta) / params.tau
    return np.array([d_omega_t, d_omega_g, d_t_tw, d_t_g, d_beta])


def unified_matrices(params: TurbineParams):
    """Constant matrices (A, B, B2) of the affine form dx = A x + B u + B2 T_t.

    Equivalent to :func:`derivatives` once the aerodynamic torque is fed
    through the B2 column; the pitch row carries -1/tau (stable first-order
    actuator).
    """
    p = params
    a = np.array([
        [0.0, 0.0, -p.n_g / p.j_t, 0.0, 0.0],
        [0.0, 0.0, 1.0 / p.j_g, -1.0 / p.j_g, 0.0],
        [p.k_s * p.n_g, -p.k_s, -(p.n_g**2 * p.b_s / p.j_t + p.b_s / p.j_g),
         p.b_s / p.j_g, 0.0],
        [0.0, 0.0, 0.0, -1.0 / p.tau_g, 0.0],
        [0.0, 0.0, 0.0, 0.0, -1.0 / p.tau],
    ])
    b = np.zeros((5, 2))
    b[3, 0] = 1.0 / p.tau_g
    b[4, 1] = 1.0 / p.tau
    b2 = np.array([1.0 / p.j_t, 0.0, p.n_g * p.b_s / p.j_t, 0.0, 0.0])
    return a, b, b2


def step(state, u, wind, dt, params: TurbineParams, substeps: int = 10) -> PlantState:
    """Advance the plant by dt with classical RK4 at step dt/substeps.

    ``wind`` is either a constant wind speed or a callable v(t) over
    [0, dt]. After integration the pitch angle is clamped to its actuator
    range and the generator torque to [0, t_g_max] (physical saturation).
    """
    if dt <= 0.0:
        raise DomainError("dt must be positive")
    v_fn = wind if callable(wind) else (lambda _t, _v=float(wind): _v)
    x = np.asarray(state, dtype=float)
    h = dt / substeps
    for i in range(substeps):
        t0 = i * h
        k1 = derivatives(x, u, v_fn(t0), params)
        k2 = derivatives(x + 0.5 * h * k1, u, v_fn(t0 + 0.5 * h), params)
        k3 = derivatives(x + 0.5 * h * k2, u, v_fn(t0 + 0.5 * h), params)
        k4 = derivatives(x + h * k3, u, v_fn(t0 + h), params)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(x)):
        raise IntegrationError("non-finite state after integration step")
    x[3] = min(max(x[3], 0.0), params.t_g_max)
    x[4] = min(max(x[4], params.beta_min), params.beta_max)
    return PlantState(*x)
