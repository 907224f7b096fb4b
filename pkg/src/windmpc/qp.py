"""Dense active-set solver for strictly convex quadratic programs.

Solves

    min  0.5 x' H x + f' x    s.t.  G x <= b

with H symmetric positive definite. The solver keeps a working set of
active rows, takes equality-constrained steps in their null space, adds
the blocking (first-violated) constraint whenever a step is cut short, and
drops the constraint with the most negative multiplier once stationary.
Blocking rows are independent of the working set by construction, which
keeps the subproblems well posed even when many stacked prediction rows
are nearly parallel.

Suited to the small dense programs of receding-horizon control, where the
active set barely changes between consecutive samples; a solver instance
keeps its last working set and reuses it as a warm start.
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import InfeasibleQpError, QpIterationError


@dataclass
class QpSolution:
    x: np.ndarray
    multipliers: np.ndarray          # one per row of G, zero off the working set
    working_set: list[int] = field(default_factory=list)
    iterations: int = 0
    objective: float = 0.0


class ActiveSetSolver:
    """Primal active-set QP solver with KKT verification on every solve.

    Parameters
    ----------
    feas_tol : float
        Primal feasibility tolerance on G x <= b.
    stat_tol : float
        Stationarity and complementary-slackness tolerance; stationarity is
        scaled by (1 + ||f||).
    max_iter_factor : int
        Iteration cap as a multiple of the number of variables.
    """

    def __init__(self, feas_tol=1e-9, stat_tol=1e-8, max_iter_factor=50):
        self.feas_tol = feas_tol
        self.stat_tol = stat_tol
        self.max_iter_factor = max_iter_factor
        self.working_set: list[int] = []

    def solve(self, h, f, g=None, b=None, warm_start=True) -> QpSolution:
        """Minimize 0.5 x'Hx + f'x subject to G x <= b.

        Raises InfeasibleQpError (carrying the most-violated row) when no
        feasible point exists and QpIterationError when the iteration cap
        is hit or the KKT residuals fail to verify.
        """
        h = np.asarray(h, dtype=float)
        f = np.asarray(f, dtype=float).ravel()
        n = h.shape[0]
        if g is None or np.size(g) == 0:
            x = np.linalg.solve(h, -f)
            return QpSolution(x, np.zeros(0), [], 1, self._objective(h, f, x))
        g = np.atleast_2d(np.asarray(g, dtype=float))
        b = np.asarray(b, dtype=float).ravel()
        m = g.shape[0]
        scale_b = 1.0 + float(np.abs(b).max())

        ws = [i for i in self.working_set if i < m] if warm_start else []
        x, ws = self._start_point(h, f, g, b, ws, scale_b)
        x, ws, lam, iterations = self._primal_iterate(h, f, g, b, x, ws)
        mult = np.zeros(m)
        if ws:
            mult[ws] = np.maximum(lam, 0.0)
        self._verify_kkt(h, f, g, b, x, mult)
        self.working_set = sorted(ws)
        return QpSolution(x, mult, sorted(ws), iterations,
                          self._objective(h, f, x))

    @staticmethod
    def _objective(h, f, x):
        return float(0.5 * x @ h @ x + f @ x)

    def _primal_iterate(self, h, f, g, b, x, ws):
        """Active-set iteration from a feasible point x with working set ws.

        Alternates null-space steps, blocking-constraint additions (ratio
        test) and most-negative-multiplier drops until the KKT conditions
        hold. Returns (x, ws, multipliers, iterations).
        """
        m, n = g.shape
        max_iter = max(10, self.max_iter_factor * n)
        for it in range(1, max_iter + 1):
            p = self._null_space_step(h, f, g, x, ws)
            if np.abs(p).max() <= 1e-10 * (1.0 + np.abs(x).max()):
                lam = self._multipliers(h, f, g, x, ws)
                if lam.size == 0 or lam.min() >= -1e-7 * (1.0 + np.abs(lam).max()):
                    return x, ws, lam, it
                ws.pop(int(np.argmin(lam)))
                continue
            # ratio test: step to the first blocking inequality
            d = g @ p
            slack = b - g @ x
            alpha, blocking = 1.0, -1
            outside = np.ones(m, dtype=bool)
            outside[ws] = False
            outside &= d > 1e-13 * (1.0 + np.abs(d).max())
            idx = np.where(outside)[0]
            if idx.size:
                ratios = np.maximum(slack[idx] / d[idx], 0.0)
                j = int(np.argmin(ratios))
                if ratios[j] < alpha:
                    alpha, blocking = float(ratios[j]), int(idx[j])
            x = x + alpha * p
            if blocking >= 0:
                ws.append(blocking)
        raise QpIterationError(f"active set did not settle in {max_iter} iterations")

    def _start_point(self, h, f, g, b, ws, scale_b):
        """Feasible starting point, preferring the warm working set.

        Tries the equality-constrained optimum on the warm set, then the
        unconstrained minimum, then the origin, then an exact slack-variable
        phase-1 solved with the same primal iteration.
        """
        n = h.shape[0]
        x_free = np.linalg.solve(h, -f)
        if ws:
            x_ws = self._eqp_point(h, f, g, b, ws)
            if x_ws is not None and (g @ x_ws - b).max() <= self.feas_tol * scale_b:
                return x_ws, ws
        if (g @ x_free - b).max() <= self.feas_tol * scale_b:
            return x_free, []
        zero = np.zeros(n)
        if (g @ zero - b).max() <= self.feas_tol * scale_b:
            return zero, []
        return self._phase1(g, b, x_free, scale_b), []

    def _phase1(self, g, b, x_ref, scale_b):
        """Feasible point via min 0.5 eps||x - x_ref||^2 + 0.5 s^2 + M s
        subject to Gx - s <= b and s >= 0.

        The augmented problem is strictly convex and trivially feasible at
        (x_ref, max violation + 1), so the primal iteration applies
        directly. With M above the active multiplier mass the slack lands
        exactly on zero whenever the original rows admit a point; otherwise
        M is escalated a few times before declaring infeasibility.
        """
        m, n = g.shape
        eps = 1e-4
        g_aug = np.hstack([g, -np.ones((m, 1))])
        g_aug = np.vstack([g_aug, np.concatenate([np.zeros(n), [-1.0]])])
        b_aug = np.concatenate([b, [0.0]])
        h_aug = np.eye(n + 1)
        h_aug[:n, :n] *= eps
        viol0 = float((g @ x_ref - b).max())
        x0 = np.concatenate([x_ref, [viol0 + 1.0]])
        big_m = 10.0 * (1.0 + abs(viol0))
        x_cand = x_ref
        for _ in range(4):
            f_aug = np.concatenate([-eps * x_ref, [big_m]])
            x_aug, _, _, _ = self._primal_iterate(h_aug, f_aug, g_aug, b_aug,
                                                  x0.copy(), [])
            x_cand = x_aug[:n]
            if (g @ x_cand - b).max() <= self.feas_tol * scale_b:
                return x_cand
            big_m *= 100.0
        viol = g @ x_cand - b
        raise InfeasibleQpError("phase-1 found no feasible point",
                                worst_row=int(np.argmax(viol)))

    @staticmethod
    def _eqp_point(h, f, g, b, ws):
        """Optimum subject to the working-set rows as equalities, or None."""
        ga = g[ws]
        ba = b[ws]
        kkt = np.block([[h, ga.T], [ga, np.zeros((len(ws), len(ws)))]])
        rhs = np.concatenate([-f, ba])
        try:
            sol = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            return None
        x = sol[:h.shape[0]]
        if np.abs(ga @ x - ba).max() > 1e-6 * (1.0 + np.abs(ba).max()):
            return None
        return x

    @staticmethod
    def _null_space_step(h, f, g, x, ws):
        """EQP step from x restricted to the null space of the working set."""
        grad = h @ x + f
        if not ws:
            return np.linalg.solve(h, -grad)
        ga = g[ws]
        _, sv, vt = np.linalg.svd(ga)
        rank = int(np.sum(sv > sv[0] * 1e-12)) if sv.size else 0
        z = vt[rank:].T
        if z.shape[1] == 0:
            return np.zeros_like(x)
        reduced = z.T @ h @ z
        return z @ np.linalg.solve(reduced, -(z.T @ grad))

    @staticmethod
    def _multipliers(h, f, g, x, ws):
        if not ws:
            return np.zeros(0)
        grad = h @ x + f
        lam, *_ = np.linalg.lstsq(g[ws].T, -grad, rcond=None)
        return lam

    def _verify_kkt(self, h, f, g, b, x, mult):
        stationarity = np.abs(h @ x + f + g.T @ mult).max()
        if stationarity > self.stat_tol * (1.0 + np.abs(f).max()):
            raise QpIterationError(
                f"stationarity residual {stationarity:.3e} above tolerance")
        slack = b - g @ x
        if slack.min() < -self.feas_tol * (1.0 + np.abs(b).max()):
            raise QpIterationError("accepted point is primal infeasible")
        comp = np.abs(mult * slack).max() if mult.size else 0.0
        if comp > self.stat_tol * (1.0 + np.abs(b).max()) * (1.0 + np.abs(mult).max()):
            raise QpIterationError(
                f"complementary slackness residual {comp:.3e} above tolerance")


def solve_qp(h, f, g=None, b=None) -> np.ndarray:
    """One-shot convenience wrapper around a fresh ActiveSetSolver."""
    return ActiveSetSolver().solve(h, f, g, b, warm_start=False).x


def enumerate_qp(h, f, g=None, b=None) -> np.ndarray:
    """Reference QP solve by exhaustive enumeration of candidate active sets.

    Solves the equality-constrained subproblem for every subset of up to n
    constraint rows, keeps the KKT-consistent candidates (primal feasible,
    nonnegative multipliers) and returns the one with the lowest objective.
    Exponential in the row count; intended only as a verification oracle on
    small instances.
    """
    h = np.asarray(h, dtype=float)
    f = np.asarray(f, dtype=float).ravel()
    n = h.shape[0]
    if g is None or np.size(g) == 0:
        return np.linalg.solve(h, -f)
    g = np.atleast_2d(np.asarray(g, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    m = g.shape[0]

    best_x, best_obj = None, np.inf
    for k in range(min(n, m) + 1):
        for rows in combinations(range(m), k):
            ga = g[list(rows)]
            kkt = np.zeros((n + k, n + k))
            kkt[:n, :n] = h
            kkt[:n, n:] = ga.T
            kkt[n:, :n] = ga
            rhs = np.concatenate([-f, b[list(rows)]])
            try:
                sol = np.linalg.solve(kkt, rhs)
            except np.linalg.LinAlgError:
                continue
            x, lam = sol[:n], sol[n:]
            if np.any(g @ x - b > 1e-8 * (1.0 + np.abs(b).max())):
                continue
            if lam.size and lam.min() < -1e-8:
                continue
            obj = float(0.5 * x @ h @ x + f @ x)
            if obj < best_obj:
                best_x, best_obj = x, obj
    if best_x is None:
        viol = g @ (np.linalg.solve(h, -f)) - b
        raise InfeasibleQpError("no KKT-consistent active set found",
                                worst_row=int(np.argmax(viol)))
    return best_x


def random_qp_instance(rng, n_max=4, m_max=6):
    """Seeded random strictly convex QP, feasible by construction.

    The bound vector is built from a random interior point with
    nonnegative slacks, a third of which are shrunk to near-active so
    interesting active sets occur.
    """
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    root = rng.normal(size=(n, n))
    h = root.T @ root + (0.1 + rng.random()) * np.eye(n)
    f = rng.normal(size=n) * 10.0 ** rng.uniform(-1.0, 1.0)
    g = rng.normal(size=(m, n))
    x0 = rng.normal(size=n)
    slack = rng.random(m) * 2.0
    slack[rng.random(m) < 0.3] *= 1e-3
    b = g @ x0 + slack
    return h, f, g, b


def run_benchmark(instances=500, seed=0):
    """Solve seeded random QPs and compare against the enumeration oracle.

    Returns (failures, worst_deviation); a failure is a solver exception or
    a solution further than 1e-6 from the oracle's in the max norm.
    """
    rng = np.random.default_rng(seed)
    failures = 0
    worst = 0.0
    for _ in range(instances):
        h, f, g, b = random_qp_instance(rng)
        x_ref = enumerate_qp(h, f, g, b)
        try:
            x = ActiveSetSolver().solve(h, f, g, b, warm_start=False).x
        except (InfeasibleQpError, QpIterationError):
            failures += 1
            continue
        deviation = float(np.abs(x - x_ref).max())
        worst = max(worst, deviation)
        if deviation > 1e-6:
            failures += 1
    return failures, worst
