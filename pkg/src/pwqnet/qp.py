"""Dense convex QP by a primal active-set method.

Solves::

    minimize    0.5 * z' H z + g' z
    subject to  A z <= b

with ``H`` positive semidefinite. Problems here are small (tens of
variables, hundreds of rows), so the null-space basis and the reduced
Hessian factorization are recomputed at every iteration instead of being
updated.

A feasible starting point is either supplied (warm start) or found by a
phase-1 problem in ``(z, t)``: minimize ``t`` subject to ``A z - t <= b``
and ``t >= 0``, solved with the same iteration.

Stationarity convention: ``H z + g + A' lam = 0`` with ``lam >= 0``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
MAX_ITER = "max_iter"
NUMERICAL_FAILURE = "numerical_failure"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class QpError(ValueError):
    pass


class IndefiniteHessianError(QpError):
    pass


@dataclass(frozen=True)
class QpProblem:
    H: np.ndarray
    g: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        g = np.asarray(self.g, dtype=float).reshape(-1)
        n = g.size
        A = np.asarray(self.A, dtype=float)
        if A.size == 0:
            A = A.reshape(0, n)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if H.shape != (n, n):
            raise QpError(f"H has shape {H.shape}, expected ({n}, {n})")
        if A.ndim != 2 or A.shape[1] != n:
            raise QpError(f"A has shape {A.shape}, expected (m, {n})")
        if b.size != A.shape[0]:
            raise QpError(f"b has {b.size} entries for {A.shape[0]} rows of A")
        for name, arr in (("H", H), ("g", g), ("A", A), ("b", b)):
            if not np.all(np.isfinite(arr)):
                raise QpError(f"{name} has non-finite entries")
        scale = max(1.0, np.abs(H).max(initial=0.0))
        if np.abs(H - H.T).max(initial=0.0) > 1e-9 * scale:
            raise QpError("H is not symmetric")
        for name, arr in (("H", H), ("g", g), ("A", A), ("b", b)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self):
        return self.g.size

    @property
    def m(self):
        return self.b.size

    def objective(self, z):
        z = np.asarray(z, dtype=float)
        return float(0.5 * z @ self.H @ z + self.g @ z)

    def to_dict(self):
        return {"H": self.H.tolist(), "g": self.g.tolist(),
                "A": self.A.tolist(), "b": self.b.tolist()}

    @classmethod
    def from_dict(cls, data):
        n = len(data["g"])
        A = np.asarray(data.get("A", []), dtype=float).reshape(-1, n)
        return cls(data["H"], data["g"], A, data.get("b", []))


@dataclass(frozen=True)
class QpSolution:
    z: np.ndarray
    lam: np.ndarray
    status: str
    objective: float
    primal_residual: float
    dual_residual: float
    complementarity: float
    iterations: int
    active_set: tuple = ()

    @property
    def optimal(self):
        return self.status == OPTIMAL

    def to_dict(self):
        return {
            "status": self.status,
            "objective": self.objective,
            "z": self.z.tolist(),
            "lambda": self.lam.tolist(),
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "complementarity": self.complementarity,
            "iterations": self.iterations,
        }


def check_psd(H, tol=1e-10):
    """Raise unless ``H + delta*I`` admits a Cholesky factorization."""
    n = H.shape[0]
    if n == 0:
        return
    delta = tol * max(1.0, np.abs(H).max())
    try:
        np.linalg.cholesky(H + delta * np.eye(n))
    except np.linalg.LinAlgError:
        raise IndefiniteHessianError("H is not positive semidefinite") from None


def kkt_residuals(problem, z, lam):
    r = problem.A @ z - problem.b
    primal = float(max(0.0, r.max(initial=0.0)))
    dual = float(np.abs(problem.H @ z + problem.g + problem.A.T @ lam).max(initial=0.0))
    comp = float(np.abs(lam * r).max(initial=0.0))
    return primal, dual, comp


def _null_space(AW, n):
    """Orthonormal basis of the null space of the (full row rank) AW."""
    k = AW.shape[0]
    if k == 0:
        return np.eye(n)
    Q, _ = np.linalg.qr(AW.T, mode="complete")
    return Q[:, k:]


def _active_set_loop(H, g, A, b, z, working, max_iter, eps_q, stop=None):
    """Core primal active-set iteration from a feasible ``z``.

    Returns ``(z, working, lam_working, status, iterations)``. ``stop`` is an
    optional predicate on ``z`` checked after each step (used by phase 1).
    """
    n = z.size
    m = b.size
    working = list(working)
    row_norm = np.linalg.norm(A, axis=1) if m else np.zeros(0)
    h_scale = max(1.0, np.abs(H).max(initial=0.0))
    it = 0
    while it < max_iter:
        it += 1
        grad = H @ z + g
        AW = A[working]
        Z = _null_space(AW, n)
        p = np.zeros(n)
        unbounded_dir = False
        if Z.shape[1]:
            gr = Z.T @ grad
            Hr = Z.T @ H @ Z
            evals, evecs = np.linalg.eigh(Hr)
            flat = evals <= 1e-10 * h_scale
            gr0 = evecs[:, flat].T @ gr
            if flat.any() and np.abs(gr0).max() > 1e-12 * (1.0 + np.abs(grad).max()):
                # zero-curvature descent direction: objective decreases linearly
                p = -Z @ (evecs[:, flat] @ gr0)
                unbounded_dir = True
            else:
                curv = ~flat
                coef = (evecs[:, curv].T @ gr) / evals[curv]
                p = -Z @ (evecs[:, curv] @ coef)
        if np.abs(p).max(initial=0.0) <= 1e-13 * (1.0 + np.abs(z).max(initial=0.0)):
            if not working:
                return z, working, np.zeros(0), OPTIMAL, it
            lam_w, *_ = np.linalg.lstsq(AW.T, -grad, rcond=None)
            k = int(np.argmin(lam_w))
            if lam_w[k] >= -eps_q:
                return z, working, lam_w, OPTIMAL, it
            working.pop(k)
            continue
        # ratio test over rows outside the working set
        step = np.inf if unbounded_dir else 1.0
        block = -1
        if m:
            Ap = A @ p
            mask = Ap > 1e-12 * row_norm * np.linalg.norm(p)
            mask[working] = False
            if mask.any():
                idx = np.flatnonzero(mask)
                slack = np.maximum(b[idx] - A[idx] @ z, 0.0)
                ratios = slack / Ap[idx]
                k = int(np.argmin(ratios))  # first minimum = lowest row index
                if ratios[k] < step:
                    step = float(ratios[k])
                    block = int(idx[k])
        if not np.isfinite(step):
            # descent ray with zero curvature and nothing blocking it
            return z, working, np.zeros(len(working)), UNBOUNDED, it
        z = z + step * p
        if block >= 0:
            working.append(block)
        if stop is not None and stop(z):
            return z, working, np.zeros(len(working)), OPTIMAL, it
    return z, working, np.zeros(len(working)), MAX_ITER, it


def _phase_one(A, b, z0, max_iter, eps_q):
    m, n = A.shape
    viol = float((A @ z0 - b).max(initial=0.0))
    if viol <= 0.0:
        return z0, 0
    Aa = np.zeros((m + 1, n + 1))
    Aa[:m, :n] = A
    Aa[:m, n] = -1.0
    Aa[m, n] = -1.0
    ba = np.concatenate([b, [0.0]])
    ga = np.zeros(n + 1)
    ga[n] = 1.0
    za = np.concatenate([z0, [viol]])
    za, _, _, _, it = _active_set_loop(
        np.zeros((n + 1, n + 1)), ga, Aa, ba, za, [], max_iter, eps_q,
        stop=lambda v: v[-1] <= 0.0)
    return za[:n], it


def solve_qp(problem: QpProblem, max_iter: int | None = None, eps_q: float = 1e-6,
             z0=None) -> QpSolution:
    """Solve ``problem``; ``z0`` optionally warm-starts from a (nearly)
    feasible point. Never raises for numerical trouble: inspect ``status``
    and the residuals."""
    H, g, A, b = problem.H, problem.g, problem.A, problem.b
    check_psd(H)
    n, m = problem.n, problem.m
    if max_iter is None:
        max_iter = 50 * (n + m)
    z = np.zeros(n) if z0 is None else np.array(z0, dtype=float).reshape(n)
    # rows violated by more than rounding trigger phase 1
    feas_tol = 1e-12 * (1.0 + np.abs(b).max(initial=0.0))
    it1 = 0
    if m and float((A @ z - b).max()) > feas_tol:
        z, it1 = _phase_one(A, b, z, max_iter, eps_q)
        if float((A @ z - b).max()) > eps_q:
            lam = np.zeros(m)
            pr, du, co = kkt_residuals(problem, z, lam)
            return QpSolution(z, lam, INFEASIBLE, problem.objective(z), pr, du, co, it1)
    z, working, lam_w, status, it2 = _active_set_loop(H, g, A, b, z, [], max_iter, eps_q)
    lam = np.zeros(m)
    if len(working):
        lam[working] = lam_w
    pr, du, co = kkt_residuals(problem, z, lam)
    if status == OPTIMAL and (pr > eps_q or du > eps_q or co > eps_q
                              or lam.min(initial=0.0) < -eps_q):
        status = NUMERICAL_FAILURE
    return QpSolution(z, lam, status, problem.objective(z), pr, du, co,
                      it1 + it2, tuple(sorted(working)))
