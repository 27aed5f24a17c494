"""One-dimensional piecewise quadratic and piecewise affine functions.

A :class:`Pwq1D` with ``s`` segments stores ``s + 1`` strictly increasing
breakpoints and one ``(q, l, c)`` triple per segment, so that segment ``i``
evaluates ``q*x**2 + l*x + c`` on ``[breakpoints[i], breakpoints[i+1]]``.
:class:`Pwa1D` is the affine analogue with ``(alpha, beta)`` pieces.

Report records (violations, witnesses) number segments and interior
breakpoints from 1, matching the usual mathematical indexing; arrays are
indexed from 0 as usual.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

TOL_ENV_VAR = "PWQ_TOL_OVERRIDE"


class StructureError(ValueError):
    """Malformed input: wrong lengths, unordered breakpoints, bad numbers."""


class DomainError(ValueError):
    """Evaluation point outside the bounded domain of a function."""


@dataclass(frozen=True)
class ToleranceConfig:
    """Numerical tolerances.

    eps_c
        validation tolerance (continuity, slope monotonicity, membership)
    eps_v
        verification margin for dominance and representation checks
    eps_q
        KKT tolerance of the QP solver

    Comparisons scale the absolute tolerance by ``1 + |value|``, see
    :meth:`scaled`.
    """

    eps_c: float = 1e-9
    eps_v: float = 1e-8
    eps_q: float = 1e-6

    def __post_init__(self):
        for name in ("eps_c", "eps_v", "eps_q"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be a positive finite number, got {val!r}")

    @staticmethod
    def scaled(eps, *values):
        return eps * (1.0 + max((abs(float(v)) for v in values), default=0.0))

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - {"eps_c", "eps_v", "eps_q"}
        if unknown:
            raise ValueError(f"unknown tolerance keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})

    @classmethod
    def from_env(cls, environ=None):
        """Defaults, overridden by the JSON object in ``PWQ_TOL_OVERRIDE``."""
        environ = os.environ if environ is None else environ
        raw = environ.get(TOL_ENV_VAR)
        if not raw:
            return cls()
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{TOL_ENV_VAR} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ValueError(f"{TOL_ENV_VAR} must hold a JSON object")
        return cls.from_dict(data)

    def to_dict(self):
        return {"eps_c": self.eps_c, "eps_v": self.eps_v, "eps_q": self.eps_q}


DEFAULT_TOL = ToleranceConfig()


class Segment(NamedTuple):
    q: float
    l: float
    c: float


class Piece(NamedTuple):
    alpha: float
    beta: float


def _check_breakpoints(breakpoints):
    bp = tuple(float(x) for x in breakpoints)
    if len(bp) < 2:
        raise StructureError("need at least two breakpoints (one segment)")
    if not all(math.isfinite(x) for x in bp):
        raise StructureError("breakpoints must be finite (bounded domain)")
    for k in range(len(bp) - 1):
        if not bp[k] < bp[k + 1]:
            raise StructureError(
                f"breakpoints must be strictly increasing: "
                f"breakpoints[{k}]={bp[k]!r} >= breakpoints[{k + 1}]={bp[k + 1]!r}")
    return bp


def _segment_index(bp, x):
    """Half-open dispatch ``[lo, hi)``, last segment closed."""
    x = np.asarray(x, dtype=float)
    if np.any(x < bp[0]) or np.any(x > bp[-1]) or np.any(np.isnan(x)):
        bad = x[(x < bp[0]) | (x > bp[-1]) | np.isnan(x)]
        raise DomainError(
            f"x={float(bad.flat[0])!r} outside the domain [{bp[0]!r}, {bp[-1]!r}]")
    idx = np.searchsorted(np.asarray(bp), x, side="right") - 1
    return np.clip(idx, 0, len(bp) - 2)


@dataclass(frozen=True)
class Pwq1D:
    breakpoints: tuple
    segments: tuple

    def __post_init__(self):
        bp = _check_breakpoints(self.breakpoints)
        try:
            segs = tuple(Segment(*(float(v) for v in seg)) for seg in self.segments)
        except (TypeError, ValueError) as exc:
            raise StructureError(f"segments must be (q, l, c) triples: {exc}") from None
        if len(segs) != len(bp) - 1:
            raise StructureError(
                f"{len(segs)} segments do not match {len(bp)} breakpoints "
                f"(expected {len(bp) - 1} segments)")
        if not all(math.isfinite(v) for seg in segs for v in seg):
            raise StructureError("segment coefficients must be finite")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "segments", segs)

    @classmethod
    def from_arrays(cls, breakpoints, q, l, c):
        return cls(tuple(breakpoints), tuple(zip(q, l, c)))

    @property
    def s(self):
        return len(self.segments)

    @property
    def q(self):
        return np.array([seg.q for seg in self.segments])

    @property
    def l(self):
        return np.array([seg.l for seg in self.segments])

    @property
    def c(self):
        return np.array([seg.c for seg in self.segments])

    @property
    def lower(self):
        """Left endpoints of the segments."""
        return np.array(self.breakpoints[:-1])

    @property
    def upper(self):
        """Right endpoints of the segments."""
        return np.array(self.breakpoints[1:])

    @property
    def domain(self):
        return self.breakpoints[0], self.breakpoints[-1]

    def segment_value(self, i, x):
        """Value of segment ``i`` (0-based) extended to any real ``x``."""
        q, l, c = self.segments[i]
        return q * x * x + l * x + c

    def segment_slope(self, i, x):
        q, l, _ = self.segments[i]
        return 2.0 * q * x + l

    def __call__(self, x):
        return eval_pwq(self, x)

    def to_dict(self):
        return {
            "breakpoints": list(self.breakpoints),
            "segments": [{"q": seg.q, "l": seg.l, "c": seg.c} for seg in self.segments],
        }

    @classmethod
    def from_dict(cls, data):
        try:
            bp = data["breakpoints"]
            segs = [(seg["q"], seg["l"], seg["c"]) for seg in data["segments"]]
        except (KeyError, TypeError) as exc:
            raise StructureError(f"invalid Pwq1D JSON: missing or malformed {exc}") from None
        return cls(tuple(bp), tuple(segs))


@dataclass(frozen=True)
class Pwa1D:
    breakpoints: tuple
    pieces: tuple

    def __post_init__(self):
        bp = _check_breakpoints(self.breakpoints)
        try:
            pieces = tuple(Piece(*(float(v) for v in p)) for p in self.pieces)
        except (TypeError, ValueError) as exc:
            raise StructureError(f"pieces must be (alpha, beta) pairs: {exc}") from None
        if len(pieces) != len(bp) - 1:
            raise StructureError(
                f"{len(pieces)} pieces do not match {len(bp)} breakpoints")
        if not all(math.isfinite(v) for p in pieces for v in p):
            raise StructureError("piece coefficients must be finite")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "pieces", pieces)

    @classmethod
    def from_arrays(cls, breakpoints, alpha, beta):
        return cls(tuple(breakpoints), tuple(zip(alpha, beta)))

    @classmethod
    def zero(cls, breakpoints):
        bp = tuple(breakpoints)
        return cls(bp, tuple((0.0, 0.0) for _ in range(len(bp) - 1)))

    @property
    def s(self):
        return len(self.pieces)

    @property
    def alpha(self):
        return np.array([p.alpha for p in self.pieces])

    @property
    def beta(self):
        return np.array([p.beta for p in self.pieces])

    def piece_value(self, i, x):
        a, b = self.pieces[i]
        return a * x + b

    def scaled(self, gamma):
        return Pwa1D(self.breakpoints, tuple((gamma * a, gamma * b) for a, b in self.pieces))

    def __call__(self, x):
        return eval_pwa(self, x)

    def to_dict(self):
        return {
            "breakpoints": list(self.breakpoints),
            "pieces": [{"alpha": p.alpha, "beta": p.beta} for p in self.pieces],
        }

    @classmethod
    def from_dict(cls, data):
        try:
            bp = data["breakpoints"]
            pieces = [(p["alpha"], p["beta"]) for p in data["pieces"]]
        except (KeyError, TypeError) as exc:
            raise StructureError(f"invalid Pwa1D JSON: missing or malformed {exc}") from None
        return cls(tuple(bp), tuple(pieces))


def same_breakpoints(f, h):
    if f.breakpoints != h.breakpoints:
        raise StructureError(
            f"breakpoint mismatch: {list(f.breakpoints)} vs {list(h.breakpoints)}")


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

class Violation(NamedTuple):
    """One failed condition.

    ``kind`` is ``"continuity"`` (value jump at an interior breakpoint),
    ``"slope"`` (slope decreases across an interior breakpoint) or
    ``"curvature"`` (negative ``q``). ``index`` is the 1-based interior
    breakpoint or segment number, ``magnitude`` the amount by which the
    condition fails.
    """

    kind: str
    index: int
    location: float
    magnitude: float

    def to_dict(self):
        return self._asdict()


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple = ()

    @property
    def ok(self):
        return not self.violations

    def __bool__(self):
        return self.ok

    def to_dict(self):
        return {"ok": self.ok, "violations": [v.to_dict() for v in self.violations]}


def validate_pwq(f: Pwq1D, tol: ToleranceConfig = DEFAULT_TOL) -> ValidationResult:
    """Check convexity of every segment plus continuity and non-decreasing
    slope at every interior breakpoint. All violations are reported."""
    out = []
    for i, seg in enumerate(f.segments):
        if seg.q < 0.0:
            out.append(Violation("curvature", i + 1, f.breakpoints[i], -seg.q))
    for i in range(f.s - 1):
        x = f.breakpoints[i + 1]
        left, right = f.segment_value(i, x), f.segment_value(i + 1, x)
        jump = abs(left - right)
        if jump > tol.scaled(tol.eps_c, left, right):
            out.append(Violation("continuity", i + 1, x, jump))
        sl, sr = f.segment_slope(i, x), f.segment_slope(i + 1, x)
        if sl - sr > tol.scaled(tol.eps_c, sl, sr):
            out.append(Violation("slope", i + 1, x, sl - sr))
    return ValidationResult(tuple(out))


def validate_pwa(h: Pwa1D, tol: ToleranceConfig = DEFAULT_TOL) -> ValidationResult:
    """Continuity and convexity (non-decreasing slopes) of a PWA function."""
    out = []
    for i in range(h.s - 1):
        x = h.breakpoints[i + 1]
        left, right = h.piece_value(i, x), h.piece_value(i + 1, x)
        jump = abs(left - right)
        if jump > tol.scaled(tol.eps_c, left, right):
            out.append(Violation("continuity", i + 1, x, jump))
        a0, a1 = h.pieces[i].alpha, h.pieces[i + 1].alpha
        if a0 - a1 > tol.scaled(tol.eps_c, a0, a1):
            out.append(Violation("slope", i + 1, x, a0 - a1))
    return ValidationResult(tuple(out))


# ---------------------------------------------------------------------------
# evaluation and arithmetic
# ---------------------------------------------------------------------------

def eval_pwq(f: Pwq1D, x):
    idx = _segment_index(f.breakpoints, x)
    x = np.asarray(x, dtype=float)
    val = f.q[idx] * x * x + f.l[idx] * x + f.c[idx]
    return float(val) if val.ndim == 0 else val


def eval_pwa(h: Pwa1D, x):
    idx = _segment_index(h.breakpoints, x)
    x = np.asarray(x, dtype=float)
    val = h.alpha[idx] * x + h.beta[idx]
    return float(val) if val.ndim == 0 else val


def eval_pwa_as_max(h: Pwa1D, x):
    """Maximum over all affine pieces; defined on the whole real line."""
    x = np.asarray(x, dtype=float)
    val = np.max(np.multiply.outer(x, h.alpha) + h.beta, axis=-1)
    return float(val) if val.ndim == 0 else val


def add_pwa(f: Pwq1D, h: Pwa1D) -> Pwq1D:
    same_breakpoints(f, h)
    segs = tuple((seg.q, seg.l + p.alpha, seg.c + p.beta)
                 for seg, p in zip(f.segments, h.pieces))
    return Pwq1D(f.breakpoints, segs)


# ---------------------------------------------------------------------------
# random instances
# ---------------------------------------------------------------------------

def generate_random_convex_pwq(seed: int, s: int, domain: Sequence[float] = (-1.0, 1.0),
                               coefficient_scale: float = 1.0) -> Pwq1D:
    """Random continuous convex PWQ function, convex by construction.

    Breakpoints are strictly increasing with gaps of comparable size. Each
    new segment takes a random curvature ``q >= 0`` and a random slope
    increment ``delta >= 0`` at the shared breakpoint, then ``l`` and ``c``
    are solved from the slope and continuity equations. Roughly one in five
    curvatures and one in five increments is set to exactly zero so that
    affine segments and C1 junctions show up.
    """
    if s < 1:
        raise ValueError("s must be >= 1")
    lo, hi = (float(v) for v in domain)
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValueError(f"domain must be a bounded interval, got {domain!r}")
    if not coefficient_scale > 0:
        raise ValueError("coefficient_scale must be positive")
    rng = np.random.default_rng(seed)
    gaps = rng.uniform(0.2, 1.0, size=s)
    bp = lo + (hi - lo) * np.concatenate([[0.0], np.cumsum(gaps) / gaps.sum()])
    bp[-1] = hi

    def draw_q():
        return 0.0 if rng.random() < 0.2 else coefficient_scale * rng.uniform(0.0, 2.0)

    q = [draw_q()]
    l = [coefficient_scale * rng.normal()]
    c = [coefficient_scale * rng.normal()]
    for i in range(s - 1):
        x = bp[i + 1]
        q_next = draw_q()
        delta = 0.0 if rng.random() < 0.2 else coefficient_scale * rng.exponential()
        l_next = 2.0 * q[i] * x + l[i] + delta - 2.0 * q_next * x
        c_next = q[i] * x * x + l[i] * x + c[i] - q_next * x * x - l_next * x
        q.append(q_next)
        l.append(l_next)
        c.append(c_next)
    return Pwq1D.from_arrays(bp, q, l, c)
