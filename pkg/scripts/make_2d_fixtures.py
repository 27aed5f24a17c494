"""Generate the two-dimensional fixtures shipped in ``src/pwqnet/fixtures``.

Problem data: double integrator ``x+ = A x + B u`` with ``|u| <= 1``, a
state box and five coupled constraints ``G (A x + B u) <= e`` on the
successor state, stage cost ``x'x + u^2`` and the Riccati terminal cost.
The lifting ``h`` is the six-piece table published with the example.

Two fixtures are written:

``ocp2d_reconstructed_phi.json``
    Regions are where each piece of ``h`` is the largest, intersected with
    the feasible set. Pieces are ``x'Px + kappa*(h_i(x) - m)^2``: continuous
    across every facet, convex, and representable as the max of
    ``phi_i + gamma*h_i`` exactly for ``gamma >= 0.5``. The partition is a
    reconstruction; it is not the one behind the published figure.
``ocp2d_dare_phi.json``
    The actual one-step value function pieces on their own critical regions.
    This fixture is exploratory: with the published ``h`` it yields a
    counterexample, see the README.

Run from the repository root::

    python scripts/make_2d_fixtures.py
"""
import itertools
from pathlib import Path

import numpy as np
import scipy.linalg
from scipy.optimize import linprog

from pwqnet.jsonio import write_json
from pwqnet.pwqnd import Polytope

OUT = Path(__file__).resolve().parents[1] / "src" / "pwqnet" / "fixtures"

A = np.array([[1.0, 1.0], [0.0, 1.0]])
B = np.array([0.5, 1.0])
G = np.array([[0.0, -1.0], [-0.43, -1.03], [0.43, 1.03], [0.43, 0.03], [-0.11, 0.18]])
E = np.array([2.0, 1.0, 1.0, 2.0, 1.0])
X_BOX = ([-10.0, 5.0], [-2.0, 4.0])
H_TABLE = np.array([
    [99.2, -24.34, -292.77],
    [99.2, 245.83, -22.61],
    [-18.18, -32.03, 247.56],
    [-24.21, -21.76, 191.07],
    [-48.75, -104.4, 177.19],
    [-107.26, -63.29, -300.45],
])


def feasible_set():
    """Fourier-Motzkin projection of the (x, u) constraints onto x."""
    rows = []
    M = np.vstack([np.column_stack([G @ A, G @ B]),
                   [[0, 0, 1], [0, 0, -1], [1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]]])
    r = np.r_[E, 1, 1, X_BOX[0][1], -X_BOX[0][0], X_BOX[1][1], -X_BOX[1][0]]
    pos = [k for k in range(len(r)) if M[k, 2] > 1e-12]
    neg = [k for k in range(len(r)) if M[k, 2] < -1e-12]
    zero = [k for k in range(len(r)) if abs(M[k, 2]) <= 1e-12]
    for k in zero:
        rows.append((M[k, :2], r[k]))
    for p, n in itertools.product(pos, neg):
        wp, wn = -M[n, 2], M[p, 2]
        rows.append((wp * M[p, :2] + wn * M[n, :2], wp * r[p] + wn * r[n]))
    Ax = np.array([a for a, _ in rows])
    bx = np.array([b for _, b in rows])
    scale = np.linalg.norm(Ax, axis=1)
    keep = scale > 1e-12          # pairs like u <= 1, -u <= 1 cancel to 0 <= 2
    assert np.all(bx[~keep] >= 0)
    return Ax[keep] / scale[keep, None], bx[keep] / scale[keep]


def h_regions(Ax, bx):
    regions = []
    for i in range(len(H_TABLE)):
        R = [H_TABLE[j, :2] - H_TABLE[i, :2] for j in range(len(H_TABLE)) if j != i]
        r = [H_TABLE[i, 2] - H_TABLE[j, 2] for j in range(len(H_TABLE)) if j != i]
        poly = Polytope(np.vstack([Ax, R]), np.r_[bx, r])
        x0, _ = poly.chebyshev_center()
        regions.append(Polytope(poly.A, poly.b, x0))
    return regions


def h_min(Ax, bx):
    """min over the feasible set of max_i h_i, as an LP in (x, t)."""
    k = len(H_TABLE)
    A_ub = np.vstack([np.column_stack([Ax, np.zeros(len(bx))]),
                      np.column_stack([H_TABLE[:, :2], -np.ones(k)])])
    b_ub = np.r_[bx, -H_TABLE[:, 2]]
    res = linprog([0, 0, 1], A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * 3, method="highs")
    return float(res.fun)


def reconstructed(P, Ax, bx, gamma_crit=0.5):
    regions = h_regions(Ax, bx)
    m = h_min(Ax, bx) - 1.0
    worst = 0.0
    for i, reg in enumerate(regions):
        V = reg.vertices()
        hv = V @ H_TABLE[:, :2].T + H_TABLE[:, 2]
        for j in range(len(H_TABLE)):
            if j != i:
                worst = max(worst, float((2 * m - hv[:, i] - hv[:, j]).max()))
    kappa = gamma_crit / worst
    pieces = []
    for a1, a2, d in H_TABLE:
        a = np.array([a1, a2])
        pieces.append({"Q": (P + kappa * np.outer(a, a)).tolist(),
                       "l": (2 * kappa * (d - m) * a).tolist(),
                       "c": kappa * (d - m) ** 2})
    return {
        "note": "partition reconstructed, not paper-exact",
        "construction": {"offset_m": m, "kappa": kappa, "critical_gamma": gamma_crit},
        "pieces": pieces,
        "regions": [r.to_dict() for r in regions],
    }


def value_function(P, Ax, bx):
    """One-step MPC value function pieces for the six active sets that the
    published regions correspond to, on their own critical regions."""
    a = float(B @ P @ B + 1.0)
    F = A.T @ P @ B
    Qx = A.T @ P @ A + np.eye(2)
    K = (B @ P @ A) / a
    GA, GB = G @ A, G @ B
    # each input bound reads u >= w.x + v (lower) or u <= w.x + v (upper)
    lower = [("u>=-1", np.zeros(2), -1.0)]
    upper = [("u<=1", np.zeros(2), 1.0)]
    for k in range(len(E)):
        (upper if GB[k] > 0 else lower).append((f"G{k + 1}", -GA[k] / GB[k], E[k] / GB[k]))
    bounds = {name: (w, v) for name, w, v in lower + upper}
    is_lower = {name for name, _, _ in lower}

    def piece(w, v):
        Q = Qx + a * np.outer(w, w) + np.outer(F, w) + np.outer(w, F)
        return {"Q": Q.tolist(), "l": (2 * a * v * w + 2 * v * F).tolist(), "c": a * v * v}

    def region(name):
        R, r = [], []
        if name == "free":
            for _, w, v in lower:
                R.append(w + K), r.append(-v)
            for _, w, v in upper:
                R.append(-K - w), r.append(v)
        else:
            w, v = bounds[name]
            same = lower if name in is_lower else upper
            sign = 1.0 if name in is_lower else -1.0
            # optimum clipped at this bound: unconstrained input beyond it,
            # and this bound the tightest one of its side
            R.append(sign * (-K - w)), r.append(sign * v)
            for other, wo, vo in same:
                if other != name:
                    R.append(sign * (wo - w)), r.append(sign * (v - vo))
        poly = Polytope(np.vstack([Ax, R]), np.r_[bx, r])
        x0, _ = poly.chebyshev_center()
        return Polytope(poly.A, poly.b, x0)

    order = ["G1", "u>=-1", "free", "G3", "u<=1", "G5"]
    pieces, regions = [], []
    for name in order:
        w, v = (-K, 0.0) if name == "free" else bounds[name]
        pieces.append(piece(w, v))
        regions.append(region(name).to_dict())
    return {
        "note": "exploratory: one-step value function on its critical regions",
        "active_sets": order,
        "pieces": pieces,
        "regions": regions,
    }


def main():
    P = scipy.linalg.solve_discrete_are(A, B.reshape(2, 1), np.eye(2), np.eye(1))
    Ax, bx = feasible_set()
    OUT.mkdir(parents=True, exist_ok=True)
    write_json(OUT / "ocp2d_h.json", {
        "note": "lifting coefficients as published",
        "pieces": [{"a": row[:2].tolist(), "d": float(row[2])} for row in H_TABLE],
    })
    write_json(OUT / "ocp2d_reconstructed_phi.json", reconstructed(P, Ax, bx))
    write_json(OUT / "ocp2d_dare_phi.json", value_function(P, Ax, bx))
    print("wrote", *sorted(p.name for p in OUT.glob("ocp2d_*.json")))


if __name__ == "__main__":
    main()
