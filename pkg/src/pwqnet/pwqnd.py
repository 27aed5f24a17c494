"""Piecewise quadratic / affine functions over polytopic partitions.

Regions are H-polytopes ``{x : A x <= b}``. Pieces evaluate
``x'Qx + l'x + c`` (quadratic) or ``a'x + d`` (affine). Point location
allows the membership slack ``eps_c`` so a point on a shared facet belongs
to every adjacent region.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .pwq import StructureError


@dataclass(frozen=True)
class Polytope:
    A: np.ndarray
    b: np.ndarray
    interior_point: np.ndarray | None = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if A.shape[0] != b.size:
            raise StructureError(f"region has {A.shape[0]} rows in A but {b.size} in b")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise StructureError("region data must be finite")
        x0 = self.interior_point
        if x0 is not None:
            x0 = np.asarray(x0, dtype=float).reshape(-1)
            if x0.size != A.shape[1]:
                raise StructureError("interior point has the wrong dimension")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "interior_point", x0)

    @property
    def dim(self):
        return self.A.shape[1]

    def contains(self, x, eps=0.0):
        x = np.asarray(x, dtype=float)
        return np.all(x @ self.A.T <= self.b + eps * (1.0 + np.abs(self.b)), axis=-1)

    def chebyshev_center(self):
        """Centre and radius of the largest inscribed ball (LP via scipy)."""
        from scipy.optimize import linprog

        n = self.dim
        norms = np.linalg.norm(self.A, axis=1)
        res = linprog(np.r_[np.zeros(n), -1.0],
                      A_ub=np.hstack([self.A, norms[:, None]]), b_ub=self.b,
                      bounds=[(None, None)] * n + [(0, None)], method="highs")
        if not res.success:
            raise StructureError(f"region is empty or unbounded ({res.message})")
        return res.x[:n], float(res.x[n])

    def find_interior_point(self):
        if self.interior_point is not None and np.all(self.A @ self.interior_point < self.b):
            return self.interior_point
        x, r = self.chebyshev_center()
        if r <= 0.0:
            raise StructureError("region has empty interior")
        return x

    def vertices(self, eps=1e-9):
        """Intersections of ``n`` facet hyperplanes that lie in the region.

        Exhaustive over row subsets; meant for the small ``n <= 3``
        partitions handled here."""
        n = self.dim
        pts = []
        for rows in itertools.combinations(range(self.A.shape[0]), n):
            M = self.A[list(rows)]
            if abs(np.linalg.det(M)) < 1e-12 * (1 + np.abs(M).max() ** n):
                continue
            v = np.linalg.solve(M, self.b[list(rows)])
            if self.contains(v, eps):
                pts.append(v)
        if not pts:
            return np.zeros((0, n))
        return np.unique(np.round(np.array(pts), 12), axis=0)

    def to_dict(self):
        out = {"A": self.A.tolist(), "b": self.b.tolist()}
        if self.interior_point is not None:
            out["interior_point"] = self.interior_point.tolist()
        return out

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(data["A"], data["b"], data.get("interior_point"))
        except (KeyError, TypeError) as exc:
            raise StructureError(f"invalid region JSON: {exc}") from None


def hit_and_run(poly: Polytope, x0, n_samples, rng, thin=20, chains=50):
    """Uniform-ish samples from a bounded polytope by hit-and-run.

    ``chains`` independent chains start at ``x0`` and advance together;
    each records its state every ``thin`` steps until ``n_samples`` points
    have been collected.
    """
    A, b = poly.A, poly.b
    x0 = np.asarray(x0, dtype=float)
    if not np.all(A @ x0 <= b):
        raise StructureError("hit-and-run start point is outside the region")
    if n_samples <= 0:
        return np.zeros((0, poly.dim))
    k = max(1, min(chains, n_samples))
    rounds = -(-n_samples // k)
    X = np.repeat(x0[None, :], k, axis=0)
    out = []
    for step in range(rounds * thin):
        D = rng.normal(size=X.shape)
        D /= np.linalg.norm(D, axis=1, keepdims=True)
        AD = D @ A.T
        slack = np.maximum(b - X @ A.T, 0.0)
        pos, neg = AD > 1e-14, AD < -1e-14
        if not (pos.any(axis=1).all() and neg.any(axis=1).all()):
            raise StructureError("region is unbounded along a sampled direction")
        with np.errstate(divide="ignore", invalid="ignore"):
            T = slack / AD
        t_hi = np.where(pos, T, np.inf).min(axis=1)
        t_lo = np.where(neg, T, -np.inf).max(axis=1)
        X = X + rng.uniform(t_lo, t_hi)[:, None] * D
        if step % thin == thin - 1:
            out.append(X.copy())
    return np.concatenate(out)[:n_samples]


@dataclass(frozen=True)
class QuadPiece:
    Q: np.ndarray
    l: np.ndarray
    c: float

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        l = np.asarray(self.l, dtype=float).reshape(-1)
        if Q.shape != (l.size, l.size):
            raise StructureError(f"Q has shape {Q.shape} for an {l.size}-vector l")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "c", float(self.c))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.einsum("...i,ij,...j->...", x, self.Q, x) + x @ self.l + self.c


@dataclass(frozen=True)
class AffinePiece:
    a: np.ndarray
    d: float

    def __post_init__(self):
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float).reshape(-1))
        object.__setattr__(self, "d", float(self.d))

    def __call__(self, x):
        return np.asarray(x, dtype=float) @ self.a + self.d


def _check_partition(pieces, regions, dim, what):
    if len(pieces) != len(regions):
        raise StructureError(f"{len(pieces)} {what} pieces for {len(regions)} regions")
    if not pieces:
        raise StructureError("need at least one piece")
    for k, r in enumerate(regions):
        if r.dim != dim:
            raise StructureError(f"region {k + 1} has dimension {r.dim}, expected {dim}")


@dataclass(frozen=True)
class PwqND:
    pieces: tuple
    regions: tuple
    tol: float = field(default=1e-9, compare=False)

    def __post_init__(self):
        pieces = tuple(self.pieces)
        regions = tuple(self.regions)
        dim = pieces[0].l.size if pieces else 0
        _check_partition(pieces, regions, dim, "quadratic")
        for k, p in enumerate(pieces):
            if p.l.size != dim:
                raise StructureError(f"piece {k + 1} has dimension {p.l.size}")
            scale = 1.0 + np.abs(p.Q).max()
            if np.abs(p.Q - p.Q.T).max() > self.tol * scale:
                raise StructureError(f"Q of piece {k + 1} is not symmetric")
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "regions", regions)

    @property
    def dim(self):
        return self.pieces[0].l.size

    def piece_values(self, x):
        """``(..., s)`` array of every piece evaluated at ``x``."""
        return np.stack([p(x) for p in self.pieces], axis=-1)

    def to_dict(self):
        return {
            "pieces": [{"Q": p.Q.tolist(), "l": p.l.tolist(), "c": p.c} for p in self.pieces],
            "regions": [r.to_dict() for r in self.regions],
        }

    @classmethod
    def from_dict(cls, data):
        try:
            pieces = [QuadPiece(p["Q"], p["l"], p["c"]) for p in data["pieces"]]
            regions = [Polytope.from_dict(r) for r in data["regions"]]
        except (KeyError, TypeError) as exc:
            raise StructureError(f"invalid PwqND JSON: {exc}") from None
        return cls(tuple(pieces), tuple(regions))


@dataclass(frozen=True)
class PwaND:
    pieces: tuple
    regions: tuple | None = None

    def __post_init__(self):
        pieces = tuple(self.pieces)
        if not pieces:
            raise StructureError("need at least one piece")
        if self.regions is not None:
            regions = tuple(self.regions)
            _check_partition(pieces, regions, pieces[0].a.size, "affine")
            object.__setattr__(self, "regions", regions)
        object.__setattr__(self, "pieces", pieces)

    def piece_values(self, x):
        return np.stack([p(x) for p in self.pieces], axis=-1)

    def scaled(self, gamma):
        return PwaND(tuple(AffinePiece(gamma * p.a, gamma * p.d) for p in self.pieces),
                     self.regions)

    def to_dict(self):
        out = {"pieces": [{"a": p.a.tolist(), "d": p.d} for p in self.pieces]}
        if self.regions is not None:
            out["regions"] = [r.to_dict() for r in self.regions]
        return out

    @classmethod
    def from_dict(cls, data):
        try:
            pieces = [AffinePiece(p["a"], p["d"]) for p in data["pieces"]]
            regions = data.get("regions")
            if regions is not None:
                regions = [Polytope.from_dict(r) for r in regions]
        except (KeyError, TypeError) as exc:
            raise StructureError(f"invalid PwaND JSON: {exc}") from None
        return cls(tuple(pieces), None if regions is None else tuple(regions))


def pwq_to_nd(f) -> PwqND:
    """Transcribe a :class:`~pwqnet.pwq.Pwq1D` as an interval partition."""
    pieces, regions = [], []
    for i, seg in enumerate(f.segments):
        lo, hi = f.breakpoints[i], f.breakpoints[i + 1]
        pieces.append(QuadPiece([[seg.q]], [seg.l], seg.c))
        regions.append(Polytope([[-1.0], [1.0]], [-lo, hi], [0.5 * (lo + hi)]))
    return PwqND(tuple(pieces), tuple(regions))


def pwa_to_nd(h) -> PwaND:
    pieces, regions = [], []
    for i, p in enumerate(h.pieces):
        lo, hi = h.breakpoints[i], h.breakpoints[i + 1]
        pieces.append(AffinePiece([p.alpha], p.beta))
        regions.append(Polytope([[-1.0], [1.0]], [-lo, hi], [0.5 * (lo + hi)]))
    return PwaND(tuple(pieces), tuple(regions))
