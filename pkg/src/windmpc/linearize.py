"""Operating points, analytic linearization, and exact ZOH discretization.

The maximum-power locus fixes the equilibrium for a given mean wind speed;
the only nonlinearity is the aerodynamic torque, whose three gradients
(L_omega, L_v, L_beta) populate the analytic continuous-time model. The
discrete model is the exact zero-order-hold equivalent obtained from one
augmented matrix exponential.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .turbine import (V_PARTIAL_MIN, V_RATED, ControlInput, PlantState,
                      TurbineParams, aerodynamic_torque, derivatives)

GRAD_REL_STEP = 1e-6


@dataclass(frozen=True)
class OperatingPoint:
    """Maximum-power equilibrium at mean wind v_bar plus torque gradients."""

    v_bar: float
    x_bar: PlantState
    u_bar: ControlInput
    t_t_bar: float   # aerodynamic torque at the point, N*m
    l_omega: float   # dT_t/d omega_t, N*m/(rad/s)
    l_v: float       # dT_t/dv, N*m/(m/s)
    l_beta: float    # dT_t/d beta, N*m/deg


@dataclass(frozen=True)
class ContinuousLinearModel:
    a_c: np.ndarray   # 5x5
    b_cu: np.ndarray  # 5x2
    b_cv: np.ndarray  # 5x1 wind-disturbance column
    c_c: np.ndarray   # 2x5, outputs [d omega_g, d P_g]


@dataclass(frozen=True)
class DiscreteLinearModel:
    a_d: np.ndarray
    b_du: np.ndarray
    b_d: np.ndarray   # discretized wind-disturbance column
    c_d: np.ndarray
    t_s: float


def torque_gradients(omega_t_bar, v_bar, beta_bar, params: TurbineParams):
    """Aerodynamic-torque partials (L_omega, L_v, L_beta) at an operating point.

    Central finite differences with relative step 1e-6 of each variable's
    scale; every gradient is cross-checked against a half-step
    recomputation (consistency 1e-4) so a pathological point cannot feed a
    silently wrong model downstream.
    """
    if omega_t_bar <= 0.0 or v_bar <= 0.0:
        raise DomainError("operating point requires positive rotor and wind speeds")
    point = np.array([omega_t_bar, v_bar, beta_bar])

    def central(index, h):
        hi, lo = point.copy(), point.copy()
        hi[index] += h
        lo[index] -= h
        return (aerodynamic_torque(hi[0], hi[1], hi[2], params)
                - aerodynamic_torque(lo[0], lo[1], lo[2], params)) / (2.0 * h)

    out = []
    for index in range(3):
        h = GRAD_REL_STEP * max(1.0, abs(point[index]))
        full = central(index, h)
        half = central(index, 0.5 * h)
        if abs(full - half) > 1e-4 * max(1.0, abs(half)):
            raise DomainError("torque gradient failed the step-halving consistency check")
        out.append(full)
    return tuple(out)


def equilibrium(v_bar, params: TurbineParams) -> OperatingPoint:
    """Maximum-power steady state for mean wind v_bar in [4, 11] m/s.

    Rotor speed sits on the optimal tip-speed-ratio locus, pitch at its
    optimum, and the torques follow from the steady torque balance. The
    residual of the plant ODEs at the returned point is verified to be
    below 1e-6 of each state's scale.
    """
    if not V_PARTIAL_MIN <= v_bar <= V_RATED:
        raise DomainError(
            f"v_bar={v_bar} m/s outside the partial-load range [4, 11]")
    omega_t = params.lambda_opt * v_bar / params.radius
    omega_g = params.n_g * omega_t
    beta = params.beta_opt
    t_t = aerodynamic_torque(omega_t, v_bar, beta, params)
    t_tw = t_t / params.n_g
    x_bar = PlantState(omega_t, omega_g, t_tw, t_tw, beta)
    u_bar = ControlInput(t_tw, beta)
    residual = derivatives(x_bar, u_bar, v_bar, params)
    scale = np.maximum(1.0, np.abs(np.asarray(x_bar)))
    if np.any(np.abs(residual) > 1e-6 * scale):
        raise DomainError("equilibrium residual check failed")
    l_omega, l_v, l_beta = torque_gradients(omega_t, v_bar, beta, params)
    return OperatingPoint(v_bar, x_bar, u_bar, t_t, l_omega, l_v, l_beta)


def continuous_model(op: OperatingPoint, params: TurbineParams) -> ContinuousLinearModel:
    """Analytic continuous-time model about an operating point."""
    p = params
    phi = p.k_s * p.n_g + (p.n_g * p.b_s / p.j_t) * op.l_omega
    psi = -(p.n_g**2 * p.b_s / p.j_t + p.b_s / p.j_g)
    a_c = np.array([
        [op.l_omega / p.j_t, 0.0, -p.n_g / p.j_t, 0.0, op.l_beta / p.j_t],
        [0.0, 0.0, 1.0 / p.j_g, -1.0 / p.j_g, 0.0],
        [phi, -p.k_s, psi, p.b_s / p.j_g, (p.n_g * p.b_s / p.j_t) * op.l_beta],
        [0.0, 0.0, 0.0, -1.0 / p.tau_g, 0.0],
        [0.0, 0.0, 0.0, 0.0, -1.0 / p.tau],
    ])
    b_cu = np.zeros((5, 2))
    b_cu[3, 0] = 1.0 / p.tau_g
    b_cu[4, 1] = 1.0 / p.tau
    b_cv = np.zeros((5, 1))
    b_cv[0, 0] = op.l_v / p.j_t
    b_cv[2, 0] = (p.n_g * p.b_s / p.j_t) * op.l_v
    c_c = np.array([
        [0.0, 1.0, 0.0, 0.0, 0.0],
        [0.0, p.eta * op.x_bar.t_g, 0.0, p.eta * op.x_bar.omega_g, 0.0],
    ])
    return ContinuousLinearModel(a_c, b_cu, b_cv, c_c)


def matrix_exponential(m) -> np.ndarray:
    """e^M by scaling-and-squaring with a truncated Taylor series.

    Scales by 2^k so the scaled infinity-norm is at most 0.5, sums Taylor
    terms until the next term drops below 1e-16 in norm, then squares k
    times.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError("matrix_exponential requires a square matrix")
    if not np.all(np.isfinite(m)):
        raise DomainError("matrix entries must be finite")
    n = m.shape[0]
    norm = np.linalg.norm(m, np.inf)
    k = int(math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0
    a = m / 2.0**k
    result = np.eye(n)
    term = np.eye(n)
    j = 1
    while True:
        term = term @ a / j
        result = result + term
        if np.linalg.norm(term, np.inf) < 1e-16 or j > 64:
            break
        j += 1
    for _ in range(k):
        result = result @ result
    if not np.all(np.isfinite(result)):
        raise OverflowError("matrix exponential overflowed")
    return result


def discretize(cm: ContinuousLinearModel, t_s) -> DiscreteLinearModel:
    """Exact zero-order-hold discretization of the continuous model.

    Exponentiating the block matrix [[A_c, B], [0, 0]] * T_s yields
    A_D = e^(A_c T_s) in the top-left block and the ZOH input integral in
    the top-right, covering both the control and disturbance columns.
    """
    if t_s <= 0.0:
        raise DomainError("sampling time must be positive")
    b = np.hstack([cm.b_cu, cm.b_cv])
    n, m = b.shape
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = cm.a_c * t_s
    aug[:n, n:] = b * t_s
    e = matrix_exponential(aug)
    a_d = e[:n, :n]
    b_full = e[:n, n:]
    if not (np.all(np.isfinite(a_d)) and np.all(np.isfinite(b_full))):
        raise DomainError("discretization produced non-finite entries")
    n_u = cm.b_cu.shape[1]
    return DiscreteLinearModel(a_d, b_full[:, :n_u].copy(),
                               b_full[:, n_u:].copy(), cm.c_c.copy(), float(t_s))


def verify_linearization(v_bar, params: TurbineParams, rel_step=1e-6) -> float:
    """Worst entrywise relative mismatch between the analytic linear model
    and the finite-difference Jacobian at the v_bar operating point.

    The denominator is floored at 1e-12 of each matrix's largest entry so
    structurally zero entries compare cleanly.
    """
    op = equilibrium(v_bar, params)
    cm = continuous_model(op, params)
    a_fd, b_u_fd, b_v_fd = fd_jacobian(op.x_bar, op.u_bar, v_bar, params, rel_step)
    worst = 0.0
    for analytic, fd in ((cm.a_c, a_fd), (cm.b_cu, b_u_fd), (cm.b_cv, b_v_fd)):
        floor = 1e-12 * max(1.0, float(np.abs(analytic).max()))
        denom = np.maximum(np.maximum(np.abs(analytic), np.abs(fd)), floor)
        worst = max(worst, float((np.abs(analytic - fd) / denom).max()))
    return worst


def fd_jacobian(x_bar, u_bar, v_bar, params: TurbineParams, rel_step=1e-6):
    """Finite-difference Jacobian of the plant ODEs at (x, u, v).

    Independent verification route for the analytic model: central
    differences applied directly to :func:`windmpc.turbine.derivatives`.
    Returns (A, B_u, B_v) with shapes (5, 5), (5, 2), (5, 1).
    """
    x0 = np.asarray(x_bar, dtype=float)
    u0 = np.asarray(u_bar, dtype=float)
    a = np.zeros((5, 5))
    b_u = np.zeros((5, 2))
    b_v = np.zeros((5, 1))
    for i in range(5):
        h = rel_step * max(1.0, abs(x0[i]))
        xp, xm = x0.copy(), x0.copy()
        xp[i] += h
        xm[i] -= h
        a[:, i] = (derivatives(xp, u0, v_bar, params)
                   - derivatives(xm, u0, v_bar, params)) / (2.0 * h)
    for i in range(2):
        h = rel_step * max(1.0, abs(u0[i]))
        up, um = u0.copy(), u0.copy()
        up[i] += h
        um[i] -= h
        b_u[:, i] = (derivatives(x0, up, v_bar, params)
                     - derivatives(x0, um, v_bar, params)) / (2.0 * h)
    h = rel_step * max(1.0, abs(v_bar))
    b_v[:, 0] = (derivatives(x0, u0, v_bar + h, params)
                 - derivatives(x0, u0, v_bar - h, params)) / (2.0 * h)
    return a, b_u, b_v
