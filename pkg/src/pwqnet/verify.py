"""Checks that a lifted PWQ function equals the maximum of its lifted pieces.

Three grades of evidence are produced, and the verdict label says which:

``certified``
    1D only. Every pairwise difference of lifted segments is a quadratic
    in ``x``, so its minimum over a segment interval is found exactly from
    the endpoints and the vertex.
``sampled_pass``
    No violation found at the sampled points. Not a proof.
``counterexample``
    A point where some other lifted piece exceeds the owning piece by more
    than the verification margin.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lifting import InvalidPwqError, algorithm1, check_lift_conditions
from .nn import FeedForwardNet, build_maxout_net, eval_scalar_net
from .pwq import (DEFAULT_TOL, Pwa1D, Pwq1D, StructureError, ToleranceConfig,
                  eval_pwq, same_breakpoints, validate_pwq)
from .pwqnd import PwaND, PwqND, hit_and_run

CERTIFIED = "certified"
SAMPLED_PASS = "sampled_pass"
COUNTEREXAMPLE = "counterexample"


class PipelineError(RuntimeError):
    """A pipeline stage could not run; ``stage`` names it."""

    def __init__(self, stage, message):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass(frozen=True)
class Witness:
    """Point ``x`` where piece ``j`` beats the owning piece ``i`` by
    ``-margin`` (1-based indices). ``j`` is None for network checks."""

    x: tuple
    margin: float
    i: int
    j: int | None = None

    def to_dict(self):
        return {"x": list(self.x), "margin": self.margin, "i": self.i, "j": self.j}


@dataclass(frozen=True)
class VerificationReport:
    verdict: str
    witness: Witness | None
    samples_used: int
    min_margin: float
    stage: str | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in (CERTIFIED, SAMPLED_PASS, COUNTEREXAMPLE):
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if self.verdict == COUNTEREXAMPLE and self.witness is None:
            raise ValueError("a counterexample needs a witness")

    @property
    def passed(self):
        return self.verdict != COUNTEREXAMPLE

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "witness": None if self.witness is None else self.witness.to_dict(),
            "min_margin": self.min_margin,
            "samples_used": self.samples_used,
            "stage": self.stage,
            "details": self.details,
        }


# ---------------------------------------------------------------------------
# 1D analytic certificate
# ---------------------------------------------------------------------------

def _pair_difference(f, h, i, j):
    """Coefficients ``(a, b, c)`` of ``(phi_i + h_i) - (phi_j + h_j)``."""
    return (f.q[i] - f.q[j],
            f.l[i] + h.alpha[i] - f.l[j] - h.alpha[j],
            f.c[i] + h.beta[i] - f.c[j] - h.beta[j])


def _violating_midpoint(a, b, c, lo, hi, x_min, thresh):
    """Midpoint of the piece of ``{x in [lo, hi] : d(x) < -thresh}`` that
    contains ``x_min``. Falls back to ``x_min`` if roundoff gets in the way."""
    roots = np.roots([a, b, c + thresh]) if (a or b) else np.array([])
    cuts = sorted(float(r.real) for r in np.atleast_1d(roots)
                  if abs(r.imag) < 1e-12 and lo < r.real < hi)
    edges = [lo, *cuts, hi]
    for left, right in zip(edges[:-1], edges[1:]):
        if left <= x_min <= right:
            mid = 0.5 * (left + right)
            if a * mid * mid + b * mid + c < -thresh:
                return mid
            break
    return x_min


def verify_max_representation_1d(f: Pwq1D, h: Pwa1D,
                                 tol: ToleranceConfig = DEFAULT_TOL) -> VerificationReport:
    """Exact check that each lifted segment dominates all others on its own
    interval.

    For every ordered pair ``(i, j)`` the difference ``d_ij`` is minimised
    over segment ``i``'s interval from the two endpoints and, when ``d_ij``
    is strictly convex, its vertex. ``min_margin`` is the smallest ``d_ij``
    found. A counterexample names the segment overtaken by the most other
    lifted segments and its worst competitor; the witness is the middle of
    the violating stretch around the worst point rather than the minimiser
    itself, which usually sits on a breakpoint shared with a neighbour.
    """
    same_breakpoints(f, h)
    s = f.s
    lo, hi = f.lower, f.upper
    pair_worst = {}   # (i, j) -> (ratio, x, a, b, c, thresh) for violated pairs
    min_margin = 0.0 if s == 1 else np.inf
    checks = 0
    for i in range(s):
        for j in range(s):
            if i == j:
                continue
            a, b, c = _pair_difference(f, h, i, j)
            cand = [lo[i], hi[i]]
            if a > 0:
                xv = -b / (2 * a)
                if lo[i] < xv < hi[i]:
                    cand.append(xv)
            for x in cand:
                checks += 1
                d = a * x * x + b * x + c
                own = f.segment_value(i, x) + h.piece_value(i, x)
                thresh = tol.scaled(tol.eps_v, own)
                min_margin = min(min_margin, d)
                ratio = d / thresh
                if d < -thresh and ((i, j) not in pair_worst or ratio < pair_worst[i, j][0]):
                    pair_worst[i, j] = (ratio, x, a, b, c, thresh)
    details = {"pairs": s * (s - 1), "checks": checks}
    if not pair_worst:
        return VerificationReport(CERTIFIED, None, 0, float(min_margin), None, details)
    # report on the segment overtaken by the most competitors, then its
    # worst pair; ties go to the lowest indices
    beaten = {}
    for i, _ in pair_worst:
        beaten[i] = beaten.get(i, 0) + 1
    i, j = min(pair_worst, key=lambda ij: (-beaten[ij[0]], pair_worst[ij][0], ij))
    _, x_min, a, b, c, thresh = pair_worst[i, j]
    x = _violating_midpoint(a, b, c, lo[i], hi[i], x_min, thresh)
    d = a * x * x + b * x + c
    details["worst_point"] = float(x_min)
    details["violated_pairs"] = len(pair_worst)
    return VerificationReport(COUNTEREXAMPLE, Witness((float(x),), float(d), i + 1, j + 1),
                              0, float(min_margin), "certificate", details)


# ---------------------------------------------------------------------------
# sampling checks of a 1D network
# ---------------------------------------------------------------------------

def sample_points_1d(f: Pwq1D, grid=10_000, random_points=1_000, seed=0):
    """Uniform grid, every breakpoint and uniform random points, sorted."""
    lo, hi = f.domain
    rng = np.random.default_rng(seed)
    pts = np.concatenate([np.linspace(lo, hi, grid), f.breakpoints,
                          rng.uniform(lo, hi, random_points)])
    return np.unique(pts)


def verify_net_1d(f: Pwq1D, net: FeedForwardNet, points,
                  tol: ToleranceConfig = DEFAULT_TOL, stage="network") -> VerificationReport:
    """Compare ``net(xi(x))`` with ``f(x)`` at the given points."""
    x = np.asarray(points, dtype=float)
    ref = eval_pwq(f, x)
    err = np.abs(eval_scalar_net(net, x) - ref)
    thresh = tol.eps_v * (1.0 + np.abs(ref))
    k = int(np.argmax(err / thresh))
    details = {"max_abs_error": float(err.max())}
    if err[k] <= thresh[k]:
        return VerificationReport(SAMPLED_PASS, None, int(x.size), -float(err.max()),
                                  None, details)
    seg = int(np.clip(np.searchsorted(f.breakpoints, x[k], side="right") - 1, 0, f.s - 1))
    return VerificationReport(COUNTEREXAMPLE, Witness((float(x[k]),), -float(err[k]), seg + 1),
                              int(x.size), -float(err.max()), stage, details)


def verify_conjecture_pipeline(f: Pwq1D, tol: ToleranceConfig = DEFAULT_TOL,
                               grid=10_000, random_points=1_000, seed=0) -> VerificationReport:
    """Validate, lift with :func:`algorithm1`, certify the max form, build the
    two-neuron max-out net and sample it against ``f``.

    Mathematical failures come back as a counterexample report labelled
    with the failing stage; anything that stops a stage from running
    raises :class:`PipelineError`.
    """
    result = validate_pwq(f, tol)
    if not result.ok:
        kinds = ", ".join(f"{v.kind}@{v.index}" for v in result.violations)
        raise PipelineError("validate", f"invalid PWQ function: {kinds}")
    try:
        h = algorithm1(f, tol)
    except (InvalidPwqError, AssertionError) as exc:
        raise PipelineError("lift", str(exc)) from exc
    conditions = check_lift_conditions(f, h, tol)
    if not conditions.feasible:
        v = conditions.violations[0]
        raise PipelineError("conditions",
                            f"{len(conditions.violations)} lift conditions violated, "
                            f"first {v.family} (i={v.i}, j={v.j}, slack {v.slack:.3g})")
    cert = verify_max_representation_1d(f, h, tol)
    if not cert.passed:
        return cert
    net = build_maxout_net(f, h, tol)
    sampled = verify_net_1d(f, net, sample_points_1d(f, grid, random_points, seed), tol)
    details = {"certificate_min_margin": cert.min_margin, **sampled.details}
    if not sampled.passed:
        return VerificationReport(COUNTEREXAMPLE, sampled.witness, sampled.samples_used,
                                  sampled.min_margin, "network", details)
    return VerificationReport(CERTIFIED, None, sampled.samples_used, cert.min_margin,
                              None, details)


# ---------------------------------------------------------------------------
# n-dimensional sampling verifier
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SampleSet:
    """Evaluation points with their region memberships (``owners[k, i]``)."""

    points: np.ndarray
    owners: np.ndarray


def _check_nd_pair(f: PwqND, h: PwaND):
    if len(h.pieces) != len(f.pieces):
        raise StructureError(f"{len(h.pieces)} affine pieces for {len(f.pieces)} quadratic pieces")
    if h.pieces[0].a.size != f.dim:
        raise StructureError(f"lift has dimension {h.pieces[0].a.size}, function has {f.dim}")


def sample_partition(f: PwqND, per_region=2_000, seed=0, thin=20,
                     tol: ToleranceConfig = DEFAULT_TOL) -> SampleSet:
    """Hit-and-run samples, the start point and all vertices of every region.

    Each region gets its own generator derived from ``seed`` so results do
    not depend on the order regions are processed in.
    """
    blocks = []
    for k, region in enumerate(f.regions):
        x0 = region.find_interior_point()
        rng = np.random.default_rng([seed, k])
        blocks += [x0[None, :], region.vertices(tol.eps_c),
                   hit_and_run(region, x0, per_region, rng, thin=thin)]
    X = np.concatenate(blocks)
    owners = np.stack([r.contains(X, tol.eps_c) for r in f.regions], axis=1)
    return SampleSet(X, owners)


def _nd_report(X, owners, values, tol):
    best = values.max(axis=1)
    margins = np.where(owners, values - best[:, None], np.inf)
    thresh = tol.eps_v * (1.0 + np.abs(best))
    ratio = margins / thresh[:, None]
    k, i = np.unravel_index(np.argmin(ratio), ratio.shape)
    min_margin = float(margins.min())
    details = {"regions": int(owners.shape[1]),
               "unowned_points": int((~owners.any(axis=1)).sum())}
    if margins[k, i] >= -thresh[k]:
        return VerificationReport(SAMPLED_PASS, None, int(X.shape[0]), min_margin, None, details)
    j = int(np.argmax(values[k]))
    w = Witness(tuple(float(v) for v in X[k]), float(margins[k, i]), int(i) + 1, j + 1)
    return VerificationReport(COUNTEREXAMPLE, w, int(X.shape[0]), min_margin, "sampling", details)


def verify_max_representation_nd(f: PwqND, h: PwaND, per_region=2_000, seed=0, thin=20,
                                 tol: ToleranceConfig = DEFAULT_TOL,
                                 samples: SampleSet | None = None) -> VerificationReport:
    """Sampling check of ``phi_i + h_i >= phi_j + h_j`` at points of region ``i``.

    A point on a shared facet (membership within ``eps_c``) is checked for
    every region that owns it. The verdict is at best ``sampled_pass``.
    """
    _check_nd_pair(f, h)
    if samples is None:
        samples = sample_partition(f, per_region, seed, thin, tol)
    X = samples.points
    values = f.piece_values(X) + h.piece_values(X)
    return _nd_report(X, samples.owners, values, tol)


@dataclass(frozen=True)
class GammaSearchResult:
    gamma: float | None
    report: VerificationReport
    profile: tuple   # (gamma, verdict, min_margin) per grid point, ascending

    def to_dict(self):
        return {
            "gamma": self.gamma,
            "report": self.report.to_dict(),
            "profile": [{"gamma": g, "verdict": v, "min_margin": m} for g, v, m in self.profile],
        }


def gamma_grid(gamma_min=1e-3, gamma_max=10.0, steps=13):
    """Log-spaced grid, rounded to 12 significant digits so that round
    values such as 1.0 and 0.01 land exactly."""
    if not 0 < gamma_min <= gamma_max or steps < 1:
        raise ValueError("need 0 < gamma_min <= gamma_max and steps >= 1")
    raw = np.logspace(np.log10(gamma_min), np.log10(gamma_max), steps)
    return [float(f"{g:.12g}") for g in raw]


def gamma_lift_search(f: PwqND, H: PwaND, gamma_min=1e-3, gamma_max=10.0, steps=13,
                      per_region=2_000, seed=0, thin=20,
                      tol: ToleranceConfig = DEFAULT_TOL, grid=None) -> GammaSearchResult:
    """Smallest grid value ``gamma`` for which ``f + gamma*H`` passes the
    sampling verifier.

    Every grid point is evaluated on the same sample set so the profile is
    comparable across ``gamma``. When nothing passes, ``gamma`` is None and
    ``report`` is the one with the largest min margin.
    """
    _check_nd_pair(f, H)
    grid = gamma_grid(gamma_min, gamma_max, steps) if grid is None else sorted(map(float, grid))
    samples = sample_partition(f, per_region, seed, thin, tol)
    Vf = f.piece_values(samples.points)
    Vh = H.piece_values(samples.points)
    profile, reports = [], []
    for g in grid:
        rep = _nd_report(samples.points, samples.owners, Vf + g * Vh, tol)
        rep = VerificationReport(rep.verdict, rep.witness, rep.samples_used, rep.min_margin,
                                 rep.stage, {**rep.details, "gamma": g})
        profile.append((g, rep.verdict, rep.min_margin))
        reports.append(rep)
    for g, rep in zip(grid, reports):
        if rep.passed:
            return GammaSearchResult(g, rep, tuple(profile))
    best = max(reports, key=lambda r: r.min_margin)
    return GammaSearchResult(None, best, tuple(profile))
