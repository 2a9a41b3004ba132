import numpy as np
import pytest

from coco_lab.geometry import membership
from coco_lab.oracles import GridSpec, constrained_minimizer_path, min_feasible_path
from coco_lab.scenarios import SCENARIOS, ScenarioSpec, build_scenario, make_scenario


ALL_NAMES = sorted(SCENARIOS)


@pytest.mark.parametrize("name", ALL_NAMES)
def test_same_seed_regenerates_identical_oracles(name):
    a = make_scenario(name, 50, seed=9)
    b = make_scenario(name, 50, seed=9)
    rng = np.random.default_rng(16)
    for t in (1, 2, 25, 50):
        cost_a, con_a = a.generate(t)
        cost_b, con_b = b.generate(t)
        xs = rng.uniform(-1, 1, size=(5, a.dimension))
        assert np.array_equal(np.asarray(cost_a.value(xs)), np.asarray(cost_b.value(xs)))
        assert np.array_equal(np.asarray(con_a.value(xs)), np.asarray(con_b.value(xs)))
        assert np.array_equal(np.asarray(cost_a.subgradient(xs[0])),
                              np.asarray(cost_b.subgradient(xs[0])))


@pytest.mark.parametrize("name", ALL_NAMES)
def test_round_bounds_enforced(name):
    sc = make_scenario(name, 10)
    with pytest.raises(ValueError):
        sc.generate(0)
    with pytest.raises(ValueError):
        sc.generate(11)


@pytest.mark.parametrize("name", ALL_NAMES)
def test_declared_lipschitz_dominates_sampled_gradients(name):
    sc = make_scenario(name, 30, seed=3)
    rng = np.random.default_rng(17)
    for t in range(1, 31):
        cost, constraint = sc.generate(t)
        for _ in range(5):
            x = sc.decision_set.project(rng.normal(scale=2.0, size=sc.dimension))
            assert np.linalg.norm(cost.subgradient(x)) <= sc.g_lip + 1e-9
            assert np.linalg.norm(constraint.subgradient(x)) <= sc.g_lip + 1e-9


@pytest.mark.parametrize("name", ALL_NAMES)
def test_constraint_value_agrees_with_region_membership(name):
    sc = make_scenario(name, 20, seed=4)
    rng = np.random.default_rng(18)
    for t in range(1, 21):
        _, constraint = sc.generate(t)
        for _ in range(5):
            x = sc.decision_set.project(rng.normal(scale=2.0, size=sc.dimension))
            inside = bool(membership(x, constraint.feasible_region, tol=1e-9))
            val = float(constraint.value(x))
            if val <= -1e-9:
                assert inside
            if val >= 1e-9 or not inside:
                # outside the sublevel set, or flagged outside: signs agree
                assert (val >= -1e-9) or inside


@pytest.mark.parametrize("name", ALL_NAMES)
def test_comparators_are_members_and_feasible_where_claimed(name):
    sc = make_scenario(name, 25, seed=5)
    for comp in sc.comparators().values():
        assert comp.points.shape == (25, sc.dimension)
        assert np.all(membership(comp.points, sc.decision_set.geometry, tol=1e-8))
        if comp.feasible:
            for t in range(1, 26):
                _, constraint = sc.generate(t)
                assert float(constraint.value(comp.points[t - 1])) <= 1e-9


def test_closed_form_paths_match_grid_oracles_at_truncation():
    checks = [
        ("alternating", GridSpec([-3.0], [3.0], 0.01)),
        ("disjoint-alternating", GridSpec([0.0], [3.0], 0.01)),
        ("static", GridSpec([-3.0], [3.0], 0.01)),
    ]
    T = 21
    for name, grid in checks:
        sc = make_scenario(name, T)
        pairs = [sc.generate(t) for t in range(1, T + 1)]
        _, p_star = constrained_minimizer_path([c for c, _ in pairs],
                                               [k for _, k in pairs], grid)
        assert p_star == pytest.approx(sc.minimizer_path_length(), abs=1e-9)
        _, p_min = min_feasible_path([k for _, k in pairs], grid)
        assert p_min <= sc.feasible_path_length() + 1e-9


def test_tracking_ball_closed_forms_match_oracles_at_truncation():
    T = 21
    sc = make_scenario("tracking-ball", T, seed=6)
    grid = GridSpec([-3.0, -3.0], [3.0, 3.0], 0.02)
    pairs = [sc.generate(t) for t in range(1, T + 1)]
    _, p_star = constrained_minimizer_path([c for c, _ in pairs],
                                           [k for _, k in pairs], grid)
    # grid argmins sit within one diagonal cell of the true minimizers
    slack = 3.0 * np.sqrt(2.0) * 0.02 * T
    assert abs(p_star - sc.minimizer_path_length()) <= slack
    _, p_min = min_feasible_path([k for _, k in pairs], grid)
    assert p_min <= sc.feasible_path_length() + 1e-9


def test_disjoint_alternating_declared_paths_exact():
    sc = make_scenario("disjoint-alternating", 40)
    assert sc.minimizer_path_length() == pytest.approx(78.0)
    assert sc.feasible_path_length() == pytest.approx(39.0)
    comps = sc.comparators()
    assert comps["min-feasible-path"].path_length == pytest.approx(39.0)
    assert comps["minimizer-path"].path_length == pytest.approx(78.0)


def test_tracking_ball_center_path_bounded_by_step_budget():
    T = 60
    sc = make_scenario("tracking-ball", T, seed=7)
    comp = sc.comparators()["center-path"]
    step = 2.0 * 1.5 * np.sin(np.pi / T)  # per-round center movement
    assert comp.path_length <= step * T + 1e-9
    assert sc.feasible_path_length() == pytest.approx(comp.path_length)


def test_minimizer_comparator_matches_declared_path():
    for name in ("tracking-ball", "static", "alternating", "disjoint-alternating"):
        sc = make_scenario(name, 30, seed=8)
        comp = sc.comparators()["minimizer-path"]
        assert comp.path_length == pytest.approx(sc.minimizer_path_length())


def test_unknown_scenario_rejected():
    with pytest.raises(ValueError, match="unknown scenario"):
        build_scenario(ScenarioSpec(name="nope", horizon=5))


def test_oco_mix_comparator_paths_span_orders():
    T = 2000
    sc = make_scenario("oco-mix", T, seed=0)
    comps = sc.comparators()
    assert comps["static-center"].path_length == 0.0
    assert 0.5 * np.sqrt(T) <= comps["slow-circle"].path_length <= 2.0 * np.sqrt(T)
    assert comps["fast-circle"].path_length >= 0.25 * T
