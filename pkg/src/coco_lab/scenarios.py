"""Seeded adversarial instance generators with declared ground truth.

Each scenario fixes a decision set, a Lipschitz bound, and deterministic
per-round cost/constraint oracle pairs. Randomness only enters through the
seed-derived parameters (phases, directions, anchor points); a round's
oracles are a pure function of ``(seed, t)``. Where the geometry permits,
scenarios also declare exact minimizer-path and feasible-path lengths so
budget inequalities can be checked without grid search at large horizons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import ComparatorSequence, ConstraintOracle, CostOracle, DecisionSet, path_length
from .geometry import Ball, Box, GeometricSet, Halfspace, Intersection


# ---------------------------------------------------------------------------
# oracle families (cost: affine and norm-of-offset; constraints limited to
# families whose sublevel sets project in closed form)

def affine_cost(a, b: float = 0.0, lipschitz_bound: float | None = None) -> CostOracle:
    a = np.atleast_1d(np.asarray(a, dtype=float))

    def value(x):
        return np.asarray(x, dtype=float) @ a + b

    def subgradient(x):
        return np.broadcast_to(a, np.shape(x)).copy()

    lip = float(np.linalg.norm(a)) if lipschitz_bound is None else lipschitz_bound
    return CostOracle(value=value, subgradient=subgradient, lipschitz_bound=lip)


def norm_cost(center, lipschitz_bound: float | None = None) -> CostOracle:
    c = np.atleast_1d(np.asarray(center, dtype=float))

    def value(x):
        return np.linalg.norm(np.asarray(x, dtype=float) - c, axis=-1)

    def subgradient(x):
        delta = np.asarray(x, dtype=float) - c
        n = np.linalg.norm(delta, axis=-1, keepdims=True)
        return np.divide(delta, n, out=np.zeros_like(delta), where=n > 1e-12)

    lip = 1.0 if lipschitz_bound is None else lipschitz_bound
    return CostOracle(value=value, subgradient=subgradient, lipschitz_bound=lip)


def halfspace_constraint(a, b: float, decision_geometry: GeometricSet,
                         lipschitz_bound: float | None = None) -> ConstraintOracle:
    a = np.atleast_1d(np.asarray(a, dtype=float))

    def value(x):
        return np.asarray(x, dtype=float) @ a - b

    def subgradient(x):
        return np.broadcast_to(a, np.shape(x)).copy()

    lip = float(np.linalg.norm(a)) if lipschitz_bound is None else lipschitz_bound
    region = Intersection((decision_geometry, Halfspace(a, b)))
    return ConstraintOracle(value=value, subgradient=subgradient,
                            lipschitz_bound=lip, feasible_region=region)


def ball_constraint(center, radius: float, decision_geometry: GeometricSet,
                    lipschitz_bound: float | None = None) -> ConstraintOracle:
    c = np.atleast_1d(np.asarray(center, dtype=float))

    def value(x):
        return np.linalg.norm(np.asarray(x, dtype=float) - c, axis=-1) - radius

    def subgradient(x):
        delta = np.asarray(x, dtype=float) - c
        n = np.linalg.norm(delta, axis=-1, keepdims=True)
        return np.divide(delta, n, out=np.zeros_like(delta), where=n > 1e-12)

    lip = 1.0 if lipschitz_bound is None else lipschitz_bound
    region = Intersection((decision_geometry, Ball(c, radius)))
    return ConstraintOracle(value=value, subgradient=subgradient,
                            lipschitz_bound=lip, feasible_region=region)


def box_constraint(lower, upper, decision_geometry: GeometricSet,
                   lipschitz_bound: float | None = None) -> ConstraintOracle:
    lo = np.atleast_1d(np.asarray(lower, dtype=float))
    hi = np.atleast_1d(np.asarray(upper, dtype=float))

    def value(x):
        a = np.asarray(x, dtype=float)
        return np.max(np.maximum(lo - a, a - hi), axis=-1)

    def subgradient(x):
        a = np.asarray(x, dtype=float)
        margins = np.maximum(lo - a, a - hi)
        i = int(np.argmax(margins))
        g = np.zeros_like(a)
        g[i] = -1.0 if (lo[i] - a[i]) >= (a[i] - hi[i]) else 1.0
        return g

    lip = 1.0 if lipschitz_bound is None else lipschitz_bound
    region = Intersection((decision_geometry, Box(lo, hi)))
    return ConstraintOracle(value=value, subgradient=subgradient,
                            lipschitz_bound=lip, feasible_region=region)


def constant_constraint(level: float, decision_geometry: GeometricSet,
                        lipschitz_bound: float = 0.0) -> ConstraintOracle:
    """Constraint identically equal to ``level``; for ``level <= 0`` the
    feasible region is the whole decision set."""
    if level > 0:
        raise ValueError("a constant positive constraint has an empty feasible region")

    def value(x):
        a = np.asarray(x, dtype=float)
        return level if a.ndim == 1 else np.full(a.shape[0], level)

    def subgradient(x):
        return np.zeros(np.shape(x))

    return ConstraintOracle(value=value, subgradient=subgradient,
                            lipschitz_bound=lipschitz_bound,
                            feasible_region=decision_geometry)


# ---------------------------------------------------------------------------
# scenarios

@dataclass(frozen=True)
class ScenarioSpec:
    """Serializable handle: scenario name, horizon, seed, and parameter overrides."""

    name: str
    horizon: int
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")


class Scenario:
    """Deterministic instance: oracle pairs per round plus declared ground truth."""

    def __init__(self, spec: ScenarioSpec, decision_set: DecisionSet, g_lip: float,
                 common_feasible: bool):
        self.spec = spec
        self.decision_set = decision_set
        self.g_lip = float(g_lip)
        self.common_feasible = common_feasible

    @property
    def name(self) -> str:
        return self.spec.name

    @property
    def horizon(self) -> int:
        return self.spec.horizon

    @property
    def dimension(self) -> int:
        return self.decision_set.dim

    def _check_round(self, t: int):
        if not 1 <= t <= self.horizon:
            raise ValueError(f"round {t} outside horizon 1..{self.horizon}")

    def generate(self, t: int):
        raise NotImplementedError

    def comparators(self) -> dict:
        raise NotImplementedError

    def default_comparators(self) -> list:
        return list(self.comparators().keys())

    def minimizer_path_length(self):
        """Exact path length of the per-round constrained cost minimizers, if known."""
        return None

    def feasible_path_length(self):
        """Exact path length of a declared round-feasible comparator (an upper
        bound on the minimum feasible path), if known."""
        return None


class AlternatingScenario(Scenario):
    """1-d instance whose constraint flips between two overlapping halfspaces.

    The origin is feasible on every round, so both declared path lengths
    are zero.
    """

    def __init__(self, spec: ScenarioSpec):
        p = {"radius": 3.0, "g_lip": 1.0, **spec.params}
        geom = Box([-p["radius"]], [p["radius"]])
        super().__init__(spec, DecisionSet(geom, 2.0 * p["radius"]), p["g_lip"], True)
        self._cost = norm_cost([0.0], lipschitz_bound=self.g_lip)
        self._odd = halfspace_constraint([1.0], 1.0, geom, lipschitz_bound=self.g_lip)
        self._even = halfspace_constraint([-1.0], 1.0, geom, lipschitz_bound=self.g_lip)

    def generate(self, t):
        self._check_round(t)
        return self._cost, (self._odd if t % 2 == 1 else self._even)

    def comparators(self):
        T = self.horizon
        zeros = np.zeros((T, 1))
        ones = np.ones((T, 1))
        return {
            "minimizer-path": ComparatorSequence.from_points(zeros, True, "minimizer-path"),
            "static-boundary": ComparatorSequence.from_points(ones, True, "static-boundary"),
        }

    def minimizer_path_length(self):
        return 0.0

    def feasible_path_length(self):
        return 0.0


class DisjointAlternatingScenario(Scenario):
    """1-d instance alternating between the disjoint intervals [0,1] and [2,3].

    No common feasible point exists: every feasible comparator must hop, so
    the minimum feasible path is exactly ``T - 1`` while the cost
    minimizers (of ``|x|``) hop twice as far.
    """

    def __init__(self, spec: ScenarioSpec):
        p = {"g_lip": 1.0, **spec.params}
        geom = Box([0.0], [3.0])
        super().__init__(spec, DecisionSet(geom, 3.0), p["g_lip"], False)
        self._cost = norm_cost([0.0], lipschitz_bound=self.g_lip)
        self._odd = ball_constraint([0.5], 0.5, geom, lipschitz_bound=self.g_lip)
        self._even = ball_constraint([2.5], 0.5, geom, lipschitz_bound=self.g_lip)

    def generate(self, t):
        self._check_round(t)
        return self._cost, (self._odd if t % 2 == 1 else self._even)

    def _hop_points(self, low, high):
        T = self.horizon
        pts = np.where(np.arange(1, T + 1)[:, None] % 2 == 1, low, high)
        return pts.astype(float)

    def comparators(self):
        return {
            "min-feasible-path": ComparatorSequence.from_points(
                self._hop_points(1.0, 2.0), True, "min-feasible-path"),
            "minimizer-path": ComparatorSequence.from_points(
                self._hop_points(0.0, 2.0), True, "minimizer-path"),
        }

    def minimizer_path_length(self):
        return 2.0 * (self.horizon - 1)

    def feasible_path_length(self):
        return float(self.horizon - 1)


class StaticScenario(Scenario):
    """Time-invariant cost pulling toward the feasible boundary.

    The constrained minimizer sits at the boundary point 1 on every round,
    so both declared path lengths are zero while the cost keeps pressing
    the learner against the constraint.
    """

    def __init__(self, spec: ScenarioSpec):
        p = {"radius": 3.0, "g_lip": 1.0, **spec.params}
        geom = Box([-p["radius"]], [p["radius"]])
        super().__init__(spec, DecisionSet(geom, 2.0 * p["radius"]), p["g_lip"], True)
        self._cost = affine_cost([-1.0], 0.0, lipschitz_bound=self.g_lip)
        self._constraint = halfspace_constraint([1.0], 1.0, geom, lipschitz_bound=self.g_lip)

    def generate(self, t):
        self._check_round(t)
        return self._cost, self._constraint

    def comparators(self):
        T = self.horizon
        return {
            "minimizer-path": ComparatorSequence.from_points(
                np.ones((T, 1)), True, "minimizer-path"),
            "interior-static": ComparatorSequence.from_points(
                np.zeros((T, 1)), True, "interior-static"),
        }

    def minimizer_path_length(self):
        return 0.0

    def feasible_path_length(self):
        return 0.0


class TrackingBallScenario(Scenario):
    """2-d instance: a unit-ball feasible region riding a slow circular track,
    with rotating linear costs.

    The ball's center sequence is feasible by construction, so its exact
    path length is a declared upper bound on the minimum feasible path;
    the constrained minimizers ``c_t - a_t`` are available in closed form.
    """

    def __init__(self, spec: ScenarioSpec):
        p = {
            "set_radius": 3.0, "ring_radius": 1.5, "ball_radius": 1.0,
            "ring_loops": 1.0, "cost_loops": 3.0, "g_lip": 1.0, **spec.params,
        }
        if p["ring_radius"] + p["ball_radius"] > p["set_radius"]:
            raise ValueError("feasible balls must stay inside the decision set")
        geom = Ball(np.zeros(2), p["set_radius"])
        super().__init__(spec, DecisionSet(geom, 2.0 * p["set_radius"]), p["g_lip"],
                         common_feasible=p["ring_radius"] <= p["ball_radius"])
        self._ball_radius = p["ball_radius"]
        T = spec.horizon
        rng = np.random.default_rng(spec.seed)
        phase_c, phase_a = rng.uniform(0.0, 2.0 * math.pi, size=2)
        steps = np.arange(T) / T
        theta = phase_c + 2.0 * math.pi * p["ring_loops"] * steps
        phi = phase_a + 2.0 * math.pi * p["cost_loops"] * steps
        self._centers = p["ring_radius"] * np.stack([np.cos(theta), np.sin(theta)], axis=1)
        self._directions = np.stack([np.cos(phi), np.sin(phi)], axis=1)

    def generate(self, t):
        self._check_round(t)
        cost = affine_cost(self._directions[t - 1], 0.0, lipschitz_bound=self.g_lip)
        constraint = ball_constraint(self._centers[t - 1], self._ball_radius,
                                     self.decision_set.geometry,
                                     lipschitz_bound=self.g_lip)
        return cost, constraint

    def comparators(self):
        minimizers = self._centers - self._ball_radius * self._directions
        return {
            "center-path": ComparatorSequence.from_points(
                self._centers, True, "center-path"),
            "minimizer-path": ComparatorSequence.from_points(
                minimizers, True, "minimizer-path"),
        }

    def minimizer_path_length(self):
        return path_length(self._centers - self._ball_radius * self._directions)

    def feasible_path_length(self):
        return path_length(self._centers)


class OcoMixScenario(Scenario):
    """2-d unconstrained-style stream: rotating linear and norm costs with an
    inert (always satisfied) constraint, plus comparators whose path lengths
    span zero, order sqrt(T), and order T."""

    def __init__(self, spec: ScenarioSpec):
        p = {"set_radius": 2.0, "g_lip": 1.0, **spec.params}
        geom = Ball(np.zeros(2), p["set_radius"])
        super().__init__(spec, DecisionSet(geom, 2.0 * p["set_radius"]), p["g_lip"], True)
        T = spec.horizon
        rng = np.random.default_rng(spec.seed)
        angles = rng.uniform(0.0, 2.0 * math.pi, size=T)
        self._directions = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        radii = rng.uniform(0.0, 0.75 * p["set_radius"], size=T)
        anchor_angles = rng.uniform(0.0, 2.0 * math.pi, size=T)
        self._anchors = radii[:, None] * np.stack(
            [np.cos(anchor_angles), np.sin(anchor_angles)], axis=1)
        self._comparator_phase = rng.uniform(0.0, 2.0 * math.pi)

    def generate(self, t):
        self._check_round(t)
        if t % 2 == 1:
            cost = affine_cost(self._directions[t - 1], 0.0, lipschitz_bound=self.g_lip)
        else:
            cost = norm_cost(self._anchors[t - 1], lipschitz_bound=self.g_lip)
        return cost, constant_constraint(-1.0, self.decision_set.geometry,
                                         lipschitz_bound=self.g_lip)

    def _circle(self, step):
        T = self.horizon
        angles = self._comparator_phase + step * np.arange(T)
        return np.stack([np.cos(angles), np.sin(angles)], axis=1)

    def comparators(self):
        T = self.horizon
        return {
            "static-center": ComparatorSequence.from_points(
                np.zeros((T, 2)), True, "static-center"),
            "slow-circle": ComparatorSequence.from_points(
                self._circle(1.0 / math.sqrt(T)), True, "slow-circle"),
            "fast-circle": ComparatorSequence.from_points(
                self._circle(1.0), True, "fast-circle"),
        }

    def feasible_path_length(self):
        return 0.0


class TrivialScenario(Scenario):
    """Inert instance (zero cost, strictly satisfied constraint): every metric
    should vanish and every budget flag should hold."""

    def __init__(self, spec: ScenarioSpec):
        p = {"g_lip": 1.0, **spec.params}
        geom = Box([-1.0], [1.0])
        super().__init__(spec, DecisionSet(geom, 2.0), p["g_lip"], True)
        self._cost = affine_cost([0.0], 0.0, lipschitz_bound=self.g_lip)
        self._constraint = constant_constraint(-1.0, geom, lipschitz_bound=self.g_lip)

    def generate(self, t):
        self._check_round(t)
        return self._cost, self._constraint

    def comparators(self):
        return {"static-center": ComparatorSequence.from_points(
            np.zeros((self.horizon, 1)), True, "static-center")}

    def minimizer_path_length(self):
        return 0.0

    def feasible_path_length(self):
        return 0.0


SCENARIOS = {
    "alternating": AlternatingScenario,
    "disjoint-alternating": DisjointAlternatingScenario,
    "static": StaticScenario,
    "tracking-ball": TrackingBallScenario,
    "oco-mix": OcoMixScenario,
    "trivial": TrivialScenario,
}


def build_scenario(spec: ScenarioSpec) -> Scenario:
    try:
        cls = SCENARIOS[spec.name]
    except KeyError:
        raise ValueError(f"unknown scenario {spec.name!r}; "
                         f"available: {sorted(SCENARIOS)}") from None
    return cls(spec)


def make_scenario(name: str, horizon: int, seed: int = 0, **params) -> Scenario:
    return build_scenario(ScenarioSpec(name=name, horizon=horizon, seed=seed, params=params))


def with_horizon(spec: ScenarioSpec, horizon: int) -> ScenarioSpec:
    return replace(spec, horizon=horizon)
