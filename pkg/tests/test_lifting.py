import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import exact_algorithm1_example, qp_enumeration
from pwqnet.lifting import (FAMILIES, CostSpec, InvalidPwqError, LiftSolverError, algorithm1,
                            check_lift_conditions, elimination_matrix, lift_constraints, lift_qp,
                            lift_vector, solve_lift_qp, solve_lift_qp_full)
from pwqnet.pwq import (DEFAULT_TOL, Pwa1D, Pwq1D, StructureError, generate_random_convex_pwq,
                        validate_pwa)
from pwqnet.verify import verify_max_representation_1d

ALPHA17 = np.array([-56, 10, 76]) / 3
BETA17 = np.array([-56, 10, -56]) / 3


def mirror_pwq(f):
    bp = [-x for x in reversed(f.breakpoints)]
    return Pwq1D(bp, [(s.q, -s.l, s.c) for s in reversed(f.segments)])


# -- condition checker --------------------------------------------------------

def test_conditions_reference_lifts(ex3, h_alg1, h_qp):
    assert check_lift_conditions(ex3, h_alg1).feasible
    assert check_lift_conditions(ex3, h_qp).feasible


def test_conditions_zero_lift(ex3):
    rep = check_lift_conditions(ex3, Pwa1D.zero(ex3.breakpoints))
    assert not rep.feasible
    assert all(v.family in FAMILIES for v in rep.violations)
    assert any(v.family.startswith("13") and 2 in (v.i, v.j) for v in rep.violations)
    assert all(v.slack > 0 for v in rep.violations)


def test_conditions_flag_discontinuous_and_concave_lift(ex3):
    bp = ex3.breakpoints
    rep = check_lift_conditions(ex3, Pwa1D(bp, [(0, 0), (0, 1), (0, 1)]))
    assert ("12a", 1, 2) in {(v.family, v.i, v.j) for v in rep.violations}
    rep = check_lift_conditions(ex3, Pwa1D(bp, [(1, 1), (0, 0), (0, 0)]))
    assert ("12b", 1, 2) in {(v.family, v.i, v.j) for v in rep.violations}


def test_conditions_breakpoint_mismatch(ex3):
    with pytest.raises(StructureError):
        check_lift_conditions(ex3, Pwa1D.zero([-2, -1, 1, 2]))


def test_constraint_rows_match_checker(ex3, h_alg1):
    # the QP's inequality rows and the checker encode the same conditions
    A, b = lift_constraints(ex3)
    s = ex3.s
    assert A.shape == (s - 1 + 2 * s * (s - 1), 2 * s)
    for h in (h_alg1, Pwa1D.zero(ex3.breakpoints)):
        slack_rows = A @ lift_vector(h) - b
        rep = check_lift_conditions(ex3, h)
        assert (slack_rows.max() > 1e-8) == (not rep.feasible)
        assert slack_rows.max() == pytest.approx(max(rep.max_slack, slack_rows.max()))


# -- constructive lift ---------------------------------------------------------

def test_algorithm1_reference_values(ex3):
    h = algorithm1(ex3)
    assert np.abs(h.alpha - ALPHA17).max() <= 1e-9
    assert np.abs(h.beta - BETA17).max() <= 1e-9


def test_algorithm1_matches_exact_arithmetic(ex3):
    alpha, beta = exact_algorithm1_example()
    h = algorithm1(ex3)
    assert np.allclose(h.alpha, [float(a) for a in alpha], atol=1e-12)
    assert np.allclose(h.beta, [float(b) for b in beta], atol=1e-12)


def test_algorithm1_single_segment():
    h = algorithm1(Pwq1D([-1, 1], [(1, 0, 0)]))
    assert h.alpha.tolist() == [0.0] and h.beta.tolist() == [0.0]


def test_algorithm1_rejects_invalid():
    with pytest.raises(InvalidPwqError):
        algorithm1(Pwq1D([-1, 0, 1], [(0, 1, 0), (1, 0, 0)]))


@given(st.integers(0, 2**32 - 1), st.integers(1, 20), st.floats(0.1, 20))
def test_algorithm1_always_feasible(seed, s, scale):
    f = generate_random_convex_pwq(seed, s, (-3.0, 2.0), scale)
    h = algorithm1(f)
    assert check_lift_conditions(f, h).feasible
    assert validate_pwa(h).ok
    assert np.all(np.diff(h.alpha) >= -DEFAULT_TOL.eps_v)
    # sufficiency: the independent analytic certificate agrees
    assert verify_max_representation_1d(f, h).verdict == "certified"


@pytest.mark.parametrize("s", [2, 5, 12])
def test_algorithm1_on_smooth_function(s):
    # one global parabola cut into pieces: already a max of its segments
    bp = np.linspace(-1, 1, s + 1)
    f = Pwq1D.from_arrays(bp, [1.0] * s, [0.0] * s, [0.0] * s)
    h = algorithm1(f)
    assert check_lift_conditions(f, h).feasible


# -- QP route -----------------------------------------------------------------

def test_qp_sum_squares_lift(ex3):
    res = solve_lift_qp_full(ex3, CostSpec.sum_squares())
    h = res.lift
    assert np.abs(h.alpha - [-22, 0, 22]).max() <= 1e-6
    assert np.abs(h.beta - np.array([-22, 44, -22]) / 3).max() <= 1e-6
    sol = res.solution
    assert max(sol.primal_residual, sol.dual_residual, sol.complementarity) <= 1e-6
    assert res.cost == pytest.approx(2 * 22**2 + 2 * (22 / 3) ** 2 + (44 / 3) ** 2)


def test_qp_value_against_enumeration(ex3):
    problem, _ = lift_qp(ex3)
    val, _ = qp_enumeration(problem.H, problem.g, problem.A, problem.b)
    res = solve_lift_qp_full(ex3)
    assert res.solution.objective == pytest.approx(val, abs=1e-6)


def test_qp_single_segment():
    h = solve_lift_qp(Pwq1D([-1, 1], [(1, 0, 0)]))
    assert np.abs(h.alpha).max() <= 1e-12 and np.abs(h.beta).max() <= 1e-12


def test_elimination_enforces_continuity(rng):
    bp = np.sort(rng.uniform(-2, 2, 6))
    E = elimination_matrix(bp)
    v = E @ rng.normal(size=6)
    h = Pwa1D.from_arrays(bp, v[0::2], v[1::2])
    assert all(abs(h.piece_value(k, bp[k + 1]) - h.piece_value(k + 1, bp[k + 1])) < 1e-12
               for k in range(4))


@given(st.integers(0, 2**32 - 1), st.integers(1, 12))
def test_qp_not_worse_than_algorithm1(seed, s):
    f = generate_random_convex_pwq(seed, s)
    res = solve_lift_qp_full(f)
    assert res.cost <= res.warm_start_cost + 1e-6
    assert check_lift_conditions(f, res.lift).feasible
    assert np.all(np.diff(res.lift.alpha) >= -DEFAULT_TOL.eps_v)


def test_qp_cold_start_same_optimum(ex3):
    warm = solve_lift_qp_full(ex3, warm_start=True)
    cold = solve_lift_qp_full(ex3, warm_start=False)
    assert cold.cost == pytest.approx(warm.cost, abs=1e-6)


def test_mirror_symmetry(ex3):
    h = solve_lift_qp(ex3)
    hm = solve_lift_qp(mirror_pwq(ex3))
    assert np.allclose(hm.alpha, -h.alpha[::-1], atol=1e-6)
    assert np.allclose(hm.beta, h.beta[::-1], atol=1e-6)
    # the example is its own mirror image: alpha odd, beta even
    assert np.allclose(h.alpha, -h.alpha[::-1], atol=1e-6)
    assert np.allclose(h.beta, h.beta[::-1], atol=1e-6)


def test_quadratic_cost(ex3):
    # light weight on the intercepts, with a linear pull on beta_2
    H = np.diag([2.0, 0.2, 2.0, 0.2, 2.0, 0.2])
    g = np.array([0, 0, 0, 1.0, 0, 0])
    cost = CostSpec.quadratic(H, g)
    res = solve_lift_qp_full(ex3, cost)
    assert check_lift_conditions(ex3, res.lift).feasible
    assert res.cost <= res.warm_start_cost + 1e-6
    assert res.cost == pytest.approx(cost.value(res.lift))


def test_unbounded_cost_is_solver_failure(ex3):
    # shifting every beta keeps all conditions, so a free linear pull on
    # beta_2 has no minimum
    cost = CostSpec.quadratic(np.diag([2.0, 0, 2.0, 0, 2.0, 0]), [0, 0, 0, 1.0, 0, 0])
    with pytest.raises(LiftSolverError) as exc:
        solve_lift_qp_full(ex3, cost)
    assert exc.value.solution.status == "unbounded"


def test_cost_spec_json():
    for c in (CostSpec.sum_squares(), CostSpec.quadratic(np.eye(2), [1.0, 2.0])):
        assert CostSpec.from_dict(c.to_dict()) == c
    with pytest.raises(ValueError):
        CostSpec.from_dict({"kind": "linear"})
    with pytest.raises(StructureError):
        CostSpec.quadratic(np.eye(2), [0, 0]).matrices(3)
