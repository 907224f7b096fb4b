"""Prediction-model augmentation and condensation into a dense QP.

The discrete turbine model is augmented twice: first with a constant
disturbance state riding the wind input column, then to velocity form so
the decision variables are input moves and the controller gains integral
action. Eliminating the predicted states condenses the finite-horizon
tracking cost and the stacked bounds into

    min  0.5 dU' H dU + [x' rs'] F dU
    s.t. G dU <= W + S [x; rs]

where everything except the per-sample linear term and bound vector
depends only on the model, horizons, weights and bounds, and is therefore
built once and cached per linearization.
"""

import time
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleQpError, QpIterationError
from .linearize import DiscreteLinearModel
from .qp import ActiveSetSolver


@dataclass(frozen=True)
class MpcWeights:
    """Stage weights and horizons of the tracking cost.

    q1/q2 weigh the generator-speed and generator-power tracking errors,
    r1/r2 the torque and pitch moves, r3 the absolute pitch deviation from
    its operating-point value (the torque channel carries no absolute
    penalty).
    """

    q1: float = 100.0
    q2: float = 0.0
    r1: float = 1e-6
    r2: float = 1e3
    r3: float = 1e3
    n_p: int = 20
    n_c: int = 5

    def __post_init__(self):
        if self.q1 < 0.0 or self.q2 < 0.0 or self.r3 < 0.0:
            raise ValueError("error and absolute-input weights must be nonnegative")
        if self.r1 <= 0.0 or self.r2 <= 0.0:
            raise ValueError("move weights must be strictly positive")
        if not 1 <= self.n_c <= self.n_p:
            raise ValueError("horizons must satisfy 1 <= n_c <= n_p")

    @property
    def q(self) -> np.ndarray:
        return np.diag([self.q1, self.q2])

    @property
    def r(self) -> np.ndarray:
        return np.diag([self.r1, self.r2])

    @property
    def r_u(self) -> np.ndarray:
        return np.diag([0.0, self.r3])


@dataclass(frozen=True)
class ConstraintSet:
    """Per-step bounds in deviation coordinates.

    Infinite entries are legal and drop the matching stacked rows. du
    bounds apply to single moves, u bounds to accumulated inputs over the
    control horizon, y bounds to predicted outputs over the prediction
    horizon.
    """

    du_min: np.ndarray
    du_max: np.ndarray
    u_min: np.ndarray
    u_max: np.ndarray
    y_min: np.ndarray
    y_max: np.ndarray

    def __post_init__(self):
        for lo_name, hi_name in (("du_min", "du_max"), ("u_min", "u_max"),
                                 ("y_min", "y_max")):
            lo = np.asarray(getattr(self, lo_name), dtype=float)
            hi = np.asarray(getattr(self, hi_name), dtype=float)
            object.__setattr__(self, lo_name, lo)
            object.__setattr__(self, hi_name, hi)
            if np.any(lo >= hi):
                raise ValueError(f"{lo_name} must lie strictly below {hi_name}")

    @classmethod
    def unbounded(cls, n_in=2, n_out=2):
        inf_in = np.full(n_in, np.inf)
        inf_out = np.full(n_out, np.inf)
        return cls(-inf_in, inf_in, -inf_in, inf_in, -inf_out, inf_out)


@dataclass(frozen=True)
class AugmentedModel:
    """Velocity-form prediction model x_a(k+1) = A_a x_a + B_a du."""

    a_a: np.ndarray
    b_a: np.ndarray
    c_a: np.ndarray

    @property
    def n_state(self) -> int:
        return self.a_a.shape[0]

    @property
    def n_in(self) -> int:
        return self.b_a.shape[1]

    @property
    def n_out(self) -> int:
        return self.c_a.shape[0]


@dataclass(frozen=True)
class PredictionMatrices:
    """Batch operators X = T1 x + S1 dU, Y = C1 X, U = L1 x + L2 dU."""

    t1: np.ndarray
    s1: np.ndarray
    c1: np.ndarray
    l1: np.ndarray
    l2: np.ndarray
    n_p: int
    n_c: int


@dataclass(frozen=True)
class CondensedQp:
    """Cached dense-QP matrices for one model/horizon/weights/bounds tuple.

    The per-sample pieces are assembled from the stacked vector
    z = [x_a; r_s]: linear term f = F' z, bound vector b = W + S z.
    """

    h: np.ndarray
    f: np.ndarray
    g: np.ndarray
    w: np.ndarray
    s: np.ndarray
    bounds: ConstraintSet
    n_p: int
    n_c: int
    n_in: int


def augment_disturbance(dm: DiscreteLinearModel):
    """Append a constant disturbance state driving the wind input column.

    Returns (A_p, B_p, C_p) with the disturbance rows an identity block, so
    predictions carry d(k) forward unchanged.
    """
    n, n_u = dm.b_du.shape
    n_d = dm.b_d.shape[1]
    a_p = np.zeros((n + n_d, n + n_d))
    a_p[:n, :n] = dm.a_d
    a_p[:n, n:] = dm.b_d
    a_p[n:, n:] = np.eye(n_d)
    b_p = np.vstack([dm.b_du, np.zeros((n_d, n_u))])
    c_p = np.hstack([dm.c_d, np.zeros((dm.c_d.shape[0], n_d))])
    return a_p, b_p, c_p


def augment_velocity(a_p, b_p, c_p) -> AugmentedModel:
    """Rewrite the model in terms of input moves du(k) = u(k) - u(k-1).

    The appended states hold the previous input, giving the controller
    built-in integral action.
    """
    n, n_u = b_p.shape
    a_a = np.zeros((n + n_u, n + n_u))
    a_a[:n, :n] = a_p
    a_a[:n, n:] = b_p
    a_a[n:, n:] = np.eye(n_u)
    b_a = np.vstack([b_p, np.eye(n_u)])
    c_a = np.hstack([c_p, np.zeros((c_p.shape[0], n_u))])
    return AugmentedModel(a_a, b_a, c_a)


def prediction_matrices(am: AugmentedModel, n_p: int, n_c: int) -> PredictionMatrices:
    """Batch prediction operators over the horizons.

    T1 stacks A^1..A^n_p; S1 is lower block-banded with block (i, j) equal
    to A^(i-j) B for j <= min(i, n_c-1); C1 is the block-diagonal output
    map; L1/L2 accumulate the previous input and the moves into the stacked
    input sequence u(k..k+n_c-1).
    """
    if not 1 <= n_c <= n_p:
        raise ValueError("horizons must satisfy 1 <= n_c <= n_p")
    a, b, c = am.a_a, am.b_a, am.c_a
    n, m = b.shape
    q = c.shape[0]

    t1 = np.zeros((n * n_p, n))
    s1 = np.zeros((n * n_p, m * n_c))
    akb = [b]
    for _ in range(n_p - 1):
        akb.append(a @ akb[-1])
    power = np.eye(n)
    for i in range(n_p):
        power = a @ power
        t1[i * n:(i + 1) * n] = power
        for j in range(min(i, n_c - 1) + 1):
            s1[i * n:(i + 1) * n, j * m:(j + 1) * m] = akb[i - j]
    c1 = np.zeros((q * n_p, n * n_p))
    for i in range(n_p):
        c1[i * q:(i + 1) * q, i * n:(i + 1) * n] = c
    l1 = np.zeros((m * n_c, n))
    l1[:, n - m:] = np.tile(np.eye(m), (n_c, 1))
    l2 = np.kron(np.tril(np.ones((n_c, n_c))), np.eye(m))
    return PredictionMatrices(t1, s1, c1, l1, l2, n_p, n_c)


def condense_cost(pm: PredictionMatrices, weights: MpcWeights):
    """Hessian H and linear map F of the condensed tracking cost.

    H = 2 (S1'C1'Q1C1S1 + R1 + L2'Ru1L2); F stacks the state-side and
    reference-side contributions so the per-sample linear coefficient is
    F' [x; rs]. H is symmetrized to kill assembly roundoff.
    """
    q1 = np.kron(np.eye(pm.n_p), weights.q)
    r1 = np.kron(np.eye(pm.n_c), weights.r)
    ru1 = np.kron(np.eye(pm.n_c), weights.r_u)
    cs = pm.c1 @ pm.s1
    ct = pm.c1 @ pm.t1
    h = 2.0 * (cs.T @ q1 @ cs + r1 + pm.l2.T @ ru1 @ pm.l2)
    h = 0.5 * (h + h.T)
    f_top = 2.0 * (ct.T @ q1 @ cs + pm.l1.T @ ru1 @ pm.l2)
    f_bottom = -2.0 * (q1 @ cs)
    return h, np.vstack([f_top, f_bottom])


def condense_constraints(pm: PredictionMatrices, bounds: ConstraintSet):
    """Stacked inequality description G dU <= W + S [x; rs].

    Output bounds repeat over the prediction horizon, input and move bounds
    over the control horizon; rows whose bound is infinite are omitted. The
    reference block of S is identically zero (references never constrain).
    """
    n = pm.t1.shape[1]
    m = pm.l2.shape[0] // pm.n_c
    q = pm.c1.shape[0] // pm.n_p
    n_z = n + q * pm.n_p
    cs = pm.c1 @ pm.s1
    ct = pm.c1 @ pm.t1
    eye = np.eye(m * pm.n_c)

    g_rows, w_rows, s_rows = [], [], []

    def add(g_block, w_stack, s_left):
        mask = np.isfinite(w_stack)
        if not mask.any():
            return
        g_rows.append(g_block[mask])
        w_rows.append(w_stack[mask])
        s_block = np.zeros((int(mask.sum()), n_z))
        if s_left is not None:
            s_block[:, :n] = s_left[mask]
        s_rows.append(s_block)

    add(cs, np.tile(bounds.y_max, pm.n_p), -ct)
    add(-cs, np.tile(-bounds.y_min, pm.n_p), ct)
    add(pm.l2, np.tile(bounds.u_max, pm.n_c), -pm.l1)
    add(-pm.l2, np.tile(-bounds.u_min, pm.n_c), pm.l1)
    add(eye, np.tile(bounds.du_max, pm.n_c), None)
    add(-eye, np.tile(-bounds.du_min, pm.n_c), None)

    if not g_rows:
        return (np.zeros((0, m * pm.n_c)), np.zeros(0), np.zeros((0, n_z)))
    return np.vstack(g_rows), np.concatenate(w_rows), np.vstack(s_rows)


def condense(am: AugmentedModel, weights: MpcWeights,
             bounds: ConstraintSet) -> CondensedQp:
    """Build the full cached QP description for one linearization."""
    pm = prediction_matrices(am, weights.n_p, weights.n_c)
    h, f = condense_cost(pm, weights)
    g, w, s = condense_constraints(pm, bounds)
    return CondensedQp(h=h, f=f, g=g, w=w, s=s, bounds=bounds,
                       n_p=weights.n_p, n_c=weights.n_c, n_in=am.n_in)


def verify_condensation(am: AugmentedModel, weights: MpcWeights,
                        draws: int = 100, seed: int = 0) -> float:
    """Worst relative mismatch between the condensed quadratic form and the
    explicitly simulated horizon cost over random draws.

    The two evaluations must agree up to a move-independent constant; the
    constant is obtained by simulating the zero-move sequence.
    """
    pm = prediction_matrices(am, weights.n_p, weights.n_c)
    h, f = condense_cost(pm, weights)
    rng = np.random.default_rng(seed)
    n, m = am.n_state, am.n_in
    q_out = am.n_out
    worst = 0.0
    for _ in range(draws):
        x_a = rng.normal(size=n)
        r_s = np.tile(rng.normal(size=q_out), weights.n_p)
        du_seq = rng.normal(size=m * weights.n_c)
        z = np.concatenate([x_a, r_s])
        condensed = 0.5 * du_seq @ h @ du_seq + z @ f @ du_seq

        def simulate(moves):
            x = x_a.copy()
            u_dev = x[-m:].copy()
            cost = 0.0
            for j in range(weights.n_p):
                du = moves[m * j:m * (j + 1)] if j < weights.n_c \
                    else np.zeros(m)
                if j < weights.n_c:
                    u_dev = u_dev + du
                    cost += du @ weights.r @ du + u_dev @ weights.r_u @ u_dev
                x = am.a_a @ x + am.b_a @ du
                err = r_s[q_out * j:q_out * (j + 1)] - am.c_a @ x
                cost += err @ weights.q @ err
            return cost

        constant = simulate(np.zeros(m * weights.n_c))
        explicit = simulate(du_seq)
        worst = max(worst, abs(explicit - (condensed + constant))
                    / max(1.0, abs(explicit)))
    return worst


@dataclass
class MpcStepInfo:
    cost: float
    n_active: int
    iterations: int
    status: str       # "optimal" or "fallback"
    solve_time: float


def mpc_step(qp: CondensedQp, x_a, r_s, solver: ActiveSetSolver):
    """Solve the receding-horizon program and return the first move.

    Only the first block of the optimal move sequence is returned (the
    receding-horizon rule). If the QP is infeasible or the solver stalls,
    the unconstrained minimizer clipped to the move bounds is applied
    instead and flagged with status "fallback".
    """
    z = np.concatenate([np.asarray(x_a, dtype=float),
                        np.asarray(r_s, dtype=float)])
    f = qp.f.T @ z
    b = qp.w + qp.s @ z
    m = qp.n_in
    t0 = time.perf_counter()
    try:
        sol = solver.solve(qp.h, f, qp.g, b)
        du_seq = sol.x
        info = MpcStepInfo(cost=sol.objective, n_active=len(sol.working_set),
                           iterations=sol.iterations, status="optimal",
                           solve_time=time.perf_counter() - t0)
    except (InfeasibleQpError, QpIterationError):
        du_seq = np.linalg.solve(qp.h, -f)
        lo = np.tile(qp.bounds.du_min, qp.n_c)
        hi = np.tile(qp.bounds.du_max, qp.n_c)
        du_seq = np.clip(du_seq, lo, hi)
        cost = float(0.5 * du_seq @ qp.h @ du_seq + f @ du_seq)
        info = MpcStepInfo(cost=cost, n_active=0, iterations=0,
                           status="fallback",
                           solve_time=time.perf_counter() - t0)
    return du_seq[:m].copy(), info
