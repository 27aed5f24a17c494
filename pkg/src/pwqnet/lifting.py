"""Compensating convex PWA lifts for 1D convex PWQ functions.

Given a convex PWQ ``f`` with segments ``phi_i`` on ``[lo_i, hi_i]``, a lift
``h`` with pieces ``alpha_i*x + beta_i`` is feasible when it is continuous,
convex, and every lifted segment ``phi_j + h_j`` stays below the lifted
segment ``phi_i + h_i`` at both ends of segment ``i``, measured against
the tangent of ``phi_i + h_i`` at the end nearer to ``j``. Feasible lifts
guarantee ``f + h == max_i (phi_i + h_i)`` on the domain.

Two ways of computing one are provided: the direct iteration
:func:`algorithm1` and the quadratic program :func:`solve_lift_qp`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .pwq import (DEFAULT_TOL, Pwa1D, Pwq1D, StructureError, ToleranceConfig,
                  same_breakpoints, validate_pwq)
from .qp import OPTIMAL, QpProblem, QpSolution, solve_qp

FAMILIES = ("12a", "12b", "13a-left", "13b-left", "13a-right", "13b-right")


class InvalidPwqError(ValueError):
    def __init__(self, result):
        self.result = result
        lines = ", ".join(f"{v.kind}@{v.index} ({v.magnitude:.3g})" for v in result.violations)
        super().__init__(f"input is not a continuous convex PWQ function: {lines}")


class LiftSolverError(RuntimeError):
    """QP did not reach an optimal KKT point; carries the last iterate."""

    def __init__(self, message, solution):
        super().__init__(message)
        self.solution = solution


class LiftViolation(NamedTuple):
    family: str
    i: int
    j: int
    slack: float

    def to_dict(self):
        return self._asdict()


@dataclass(frozen=True)
class LiftConditionsReport:
    violations: tuple
    max_slack: float

    @property
    def feasible(self):
        return not self.violations

    def to_dict(self):
        return {"feasible": self.feasible, "max_slack": self.max_slack,
                "violations": [v.to_dict() for v in self.violations]}


def _lifted_at(f, h, x):
    """Matrix ``L[j, k] = phi_j(x_k) + alpha_j*x_k + beta_j``."""
    x = np.asarray(x, dtype=float)
    q, l, c = f.q[:, None], f.l[:, None], f.c[:, None]
    a, b = h.alpha[:, None], h.beta[:, None]
    return q * x * x + (l + a) * x + (c + b)


def check_lift_conditions(f: Pwq1D, h: Pwa1D,
                          tol: ToleranceConfig = DEFAULT_TOL) -> LiftConditionsReport:
    """Evaluate every lift condition directly from its definition.

    Slack is ``lhs - rhs``; a row is reported when the slack exceeds
    ``eps_v`` scaled by the magnitude of its two sides.
    """
    same_breakpoints(f, h)
    s = f.s
    lo, hi = f.lower, f.upper
    q, l = f.q, f.l
    a, b = h.alpha, h.beta
    width = hi - lo
    L_lo = _lifted_at(f, h, lo)          # [j, i] lifted segment j at lo_i
    L_hi = _lifted_at(f, h, hi)
    own_lo = np.diag(L_lo)               # gamma_1 of the iteration
    own_hi = np.diag(L_hi)               # gamma_3
    tan_lo = own_lo + width * (2 * q * lo + l + a)   # gamma_2
    tan_hi = own_hi - width * (2 * q * hi + l + a)   # gamma_4

    rows = []  # (family, i, j, lhs, rhs) with 1-based i, j
    for k in range(s - 1):
        x = hi[k]
        rows.append(("12a", k + 1, k + 2, a[k] * x + b[k], a[k + 1] * x + b[k + 1]))
        rows.append(("12b", k + 1, k + 2, a[k], a[k + 1]))
    for i in range(s):
        for j in range(i):
            rows.append(("13a-left", i + 1, j + 1, L_lo[j, i], own_lo[i]))
            rows.append(("13b-left", i + 1, j + 1, L_hi[j, i], tan_lo[i]))
        for j in range(i + 1, s):
            rows.append(("13a-right", i + 1, j + 1, L_hi[j, i], own_hi[i]))
            rows.append(("13b-right", i + 1, j + 1, L_lo[j, i], tan_hi[i]))

    out = []
    max_slack = -np.inf
    for fam, i, j, lhs, rhs in rows:
        slack = float(lhs - rhs)
        if fam == "12a":
            slack = abs(slack)
        max_slack = max(max_slack, slack)
        if slack > tol.scaled(tol.eps_v, lhs, rhs):
            out.append(LiftViolation(fam, i, j, slack))
    return LiftConditionsReport(tuple(out), float(max_slack) if rows else 0.0)


def _require_valid(f, tol):
    result = validate_pwq(f, tol)
    if not result.ok:
        raise InvalidPwqError(result)


def algorithm1(f: Pwq1D, tol: ToleranceConfig = DEFAULT_TOL) -> Pwa1D:
    """Feasible lift by the direct correction sweep.

    Starts from ``h = 0`` and visits every ordered pair ``(i, j)``. When a
    lifted segment ``j`` rises above segment ``i``'s value or tangent bound,
    the slopes of all pieces on ``j``'s side of ``i`` are tilted about the
    breakpoint bounding ``j`` towards ``i``. The tilt keeps ``h`` continuous
    and convex and never undoes an earlier pair.

    Violations are tested with strict comparison and zero slack.
    """
    _require_valid(f, tol)
    s = f.s
    lo = f.breakpoints[:-1]
    hi = f.breakpoints[1:]
    alpha = [0.0] * s
    beta = [0.0] * s

    def lifted(k, x):
        return f.segment_value(k, x) + alpha[k] * x + beta[k]

    for i in range(s):
        q_i, l_i, _ = f.segments[i]
        g1 = lifted(i, lo[i])
        g2 = g1 + (hi[i] - lo[i]) * (2 * q_i * lo[i] + l_i + alpha[i])
        g3 = lifted(i, hi[i])
        g4 = g3 - (hi[i] - lo[i]) * (2 * q_i * hi[i] + l_i + alpha[i])
        for j in range(i):
            delta = 0.0
            # j = i-1 shares the breakpoint lo_i with i; the value condition
            # there is implied by continuity and has a zero denominator.
            if j < i - 1:
                v = lifted(j, lo[i])
                if v > g1:
                    delta = (g1 - v) / (lo[i] - hi[j])
            v = lifted(j, hi[i])
            if v > g2:
                assert hi[i] > hi[j]
                # min against a delta that may still be 0 is intentional
                delta = min(delta, (g2 - v) / (hi[i] - hi[j]))
            if delta < 0.0:
                for k in range(j + 1):
                    alpha[k] += delta
                    beta[k] -= delta * hi[j]
        for j in range(i + 1, s):
            delta = 0.0
            if j > i + 1:
                v = lifted(j, hi[i])
                if v > g3:
                    delta = (v - g3) / (lo[j] - hi[i])
            v = lifted(j, lo[i])
            if v > g4:
                assert lo[j] > lo[i]
                delta = max(delta, (v - g4) / (lo[j] - lo[i]))
            if delta > 0.0:
                for k in range(j, s):
                    alpha[k] += delta
                    beta[k] -= delta * lo[j]
    return Pwa1D.from_arrays(f.breakpoints, alpha, beta)


# ---------------------------------------------------------------------------
# QP route
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CostSpec:
    """Convex quadratic cost ``J(v) = 0.5 v'Hv + g'v`` over the lift
    parameters ordered ``v = (alpha_1, beta_1, ..., alpha_s, beta_s)``.

    ``kind="sum_squares"`` is ``sum(alpha_i**2 + beta_i**2)``, i.e. ``H = 2I``
    and ``g = 0``, sized to the function at hand.
    """

    kind: str = "sum_squares"
    H: tuple | None = None
    g: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("sum_squares", "quadratic"):
            raise ValueError(f"unknown cost kind {self.kind!r}")
        if self.kind == "quadratic":
            if self.H is None or self.g is None:
                raise ValueError("quadratic cost needs H and g")
            H = np.asarray(self.H, dtype=float)
            g = np.asarray(self.g, dtype=float).reshape(-1)
            if H.shape != (g.size, g.size):
                raise ValueError(f"H has shape {H.shape} for {g.size} variables")
            object.__setattr__(self, "H", tuple(map(tuple, H.tolist())))
            object.__setattr__(self, "g", tuple(g.tolist()))

    @classmethod
    def sum_squares(cls):
        return cls("sum_squares")

    @classmethod
    def quadratic(cls, H, g):
        return cls("quadratic", H, g)

    def matrices(self, s):
        n = 2 * s
        if self.kind == "sum_squares":
            return 2.0 * np.eye(n), np.zeros(n)
        H, g = np.array(self.H), np.array(self.g)
        if g.size != n:
            raise StructureError(f"cost has {g.size} variables, lift has {n}")
        return H, g

    def value(self, h: Pwa1D):
        v = lift_vector(h)
        H, g = self.matrices(h.s)
        return float(0.5 * v @ H @ v + g @ v)

    def to_dict(self):
        if self.kind == "sum_squares":
            return {"kind": "sum_squares"}
        return {"kind": "quadratic", "H": [list(r) for r in self.H], "g": list(self.g)}

    @classmethod
    def from_dict(cls, data):
        kind = data.get("kind")
        if kind == "sum_squares":
            return cls.sum_squares()
        if kind == "quadratic":
            return cls.quadratic(data["H"], data["g"])
        raise ValueError(f"unknown cost kind {kind!r}")


def lift_vector(h: Pwa1D):
    v = np.empty(2 * h.s)
    v[0::2] = h.alpha
    v[1::2] = h.beta
    return v


def elimination_matrix(breakpoints):
    """``E`` with ``(alpha_1, beta_1, ..., alpha_s, beta_s) = E z`` for the
    reduced variables ``z = (alpha_1, ..., alpha_s, beta_1)``.

    Continuity fixes ``beta_{k+1} = beta_k + (alpha_k - alpha_{k+1}) * hi_k``.
    """
    s = len(breakpoints) - 1
    E = np.zeros((2 * s, s + 1))
    beta_row = np.zeros(s + 1)
    beta_row[s] = 1.0
    for k in range(s):
        E[2 * k, k] = 1.0
        E[2 * k + 1] = beta_row
        if k < s - 1:
            x = breakpoints[k + 1]
            beta_row = beta_row.copy()
            beta_row[k] += x
            beta_row[k + 1] -= x
    return E


def lift_constraints(f: Pwq1D):
    """Inequalities ``A v <= b`` in the full lift parameters for slope
    monotonicity and all dominance conditions (continuity excluded)."""
    s = f.s
    lo, hi = f.lower, f.upper
    rows, rhs = [], []

    def add(coef, bound):
        r = np.zeros(2 * s)
        for idx, val in coef:
            r[idx] += val
        rows.append(r)
        rhs.append(bound)

    for k in range(s - 1):
        add([(2 * k, 1.0), (2 * (k + 1), -1.0)], 0.0)
    for i in range(s):
        q_i, l_i = f.segments[i].q, f.segments[i].l
        ai, bi = 2 * i, 2 * i + 1
        for j in range(s):
            if j == i:
                continue
            aj, bj = 2 * j, 2 * j + 1
            if j < i:
                x = lo[i]
                add([(aj, x), (bj, 1.0), (ai, -x), (bi, -1.0)],
                    f.segment_value(i, x) - f.segment_value(j, x))
                bound = (f.segment_value(i, lo[i])
                         + (hi[i] - lo[i]) * (2 * q_i * lo[i] + l_i)
                         - f.segment_value(j, hi[i]))
                add([(aj, hi[i]), (bj, 1.0), (ai, -hi[i]), (bi, -1.0)], bound)
            else:
                x = hi[i]
                add([(aj, x), (bj, 1.0), (ai, -x), (bi, -1.0)],
                    f.segment_value(i, x) - f.segment_value(j, x))
                bound = (f.segment_value(i, hi[i])
                         - (hi[i] - lo[i]) * (2 * q_i * hi[i] + l_i)
                         - f.segment_value(j, lo[i]))
                add([(aj, lo[i]), (bj, 1.0), (ai, -lo[i]), (bi, -1.0)], bound)
    A = np.array(rows).reshape(-1, 2 * s)
    return A, np.array(rhs)


def lift_qp(f: Pwq1D, cost: CostSpec | None = None):
    """The lift QP in reduced variables; returns ``(problem, E)``."""
    cost = CostSpec.sum_squares() if cost is None else cost
    E = elimination_matrix(f.breakpoints)
    A, b = lift_constraints(f)
    H, g = cost.matrices(f.s)
    Hr = E.T @ H @ E
    Hr = 0.5 * (Hr + Hr.T)
    return QpProblem(Hr, E.T @ g, A @ E, b), E


@dataclass(frozen=True)
class LiftQpResult:
    lift: Pwa1D
    solution: QpSolution
    cost: float
    warm_start_cost: float | None


def solve_lift_qp_full(f: Pwq1D, cost: CostSpec | None = None,
                       tol: ToleranceConfig = DEFAULT_TOL, warm_start=True,
                       max_iter=None) -> LiftQpResult:
    _require_valid(f, tol)
    cost = CostSpec.sum_squares() if cost is None else cost
    problem, E = lift_qp(f, cost)
    z0 = None
    ws_cost = None
    if warm_start:
        h0 = algorithm1(f, tol)
        z0 = np.concatenate([h0.alpha, h0.beta[:1]])
        ws_cost = cost.value(h0)
    sol = solve_qp(problem, max_iter=max_iter, eps_q=tol.eps_q, z0=z0)
    v = E @ sol.z
    lift = Pwa1D.from_arrays(f.breakpoints, v[0::2], v[1::2])
    if sol.status != OPTIMAL:
        raise LiftSolverError(
            f"lift QP ended with status {sol.status} (primal {sol.primal_residual:.3g}, "
            f"dual {sol.dual_residual:.3g}, compl. {sol.complementarity:.3g})", sol)
    return LiftQpResult(lift, sol, cost.value(lift), ws_cost)


def solve_lift_qp(f: Pwq1D, cost: CostSpec | None = None,
                  tol: ToleranceConfig = DEFAULT_TOL) -> Pwa1D:
    """Minimum-cost feasible lift; raises :class:`LiftSolverError` when the
    solver does not certify optimality."""
    return solve_lift_qp_full(f, cost, tol).lift
