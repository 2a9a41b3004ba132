"""Convex set primitives with exact Euclidean projections.

Supported sets are axis-aligned boxes, Euclidean balls, halfspaces, and
finite intersections of those. Projections onto the primitives are closed
form; intersections use Dykstra's alternating projection scheme, which
converges to the exact Euclidean projection for closed convex sets.

Every operation accepts a single point of shape ``(d,)`` or a batch of
shape ``(n, d)`` and returns a result of matching shape.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MEMBERSHIP_TOL = 1e-9
ZERO_DIST_TOL = 1e-8
DYKSTRA_MOVE_TOL = 1e-10
DYKSTRA_MAX_SWEEPS = 10_000
_DYKSTRA_RESIDUAL_TOL = 1e-8
_EMPTY_PROBE_TOL = 1e-6


class ProjectionError(RuntimeError):
    """Iterative projection failed to converge; carries the final residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


def _as_batch(x):
    a = np.asarray(x, dtype=float)
    if a.ndim == 1:
        return a[None, :], True
    if a.ndim == 2:
        return a, False
    raise ValueError(f"expected point of shape (d,) or batch (n, d), got {a.shape}")


class GeometricSet:
    """Closed convex set exposing projection, membership and distance oracles."""

    dim: int

    def project(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def contains(self, x, tol: float = MEMBERSHIP_TOL):
        raise NotImplementedError

    def anchor(self) -> np.ndarray:
        """A point guaranteed to lie in the set (projection of the origin)."""
        return self.project(np.zeros(self.dim))


@dataclass(frozen=True)
class Box(GeometricSet):
    """Axis-aligned box { x : lower <= x <= upper } (coordinatewise)."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("box bounds must be vectors of equal length")
        if np.any(lo > hi):
            raise ValueError("box lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def project(self, x):
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    def contains(self, x, tol=MEMBERSHIP_TOL):
        a = np.asarray(x, dtype=float)
        ok = (a >= self.lower - tol) & (a <= self.upper + tol)
        return np.all(ok, axis=-1)


@dataclass(frozen=True)
class Ball(GeometricSet):
    """Euclidean ball { x : ||x - center|| <= radius }."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        if c.ndim != 1:
            raise ValueError("ball center must be a vector")
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def project(self, x):
        a = np.asarray(x, dtype=float)
        delta = a - self.center
        n = np.linalg.norm(delta, axis=-1, keepdims=True)
        scale = np.where(n > self.radius, self.radius / np.maximum(n, 1e-300), 1.0)
        return self.center + delta * scale

    def contains(self, x, tol=MEMBERSHIP_TOL):
        a = np.asarray(x, dtype=float)
        return np.linalg.norm(a - self.center, axis=-1) <= self.radius + tol


@dataclass(frozen=True)
class Halfspace(GeometricSet):
    """Halfspace { x : <normal, x> <= offset }."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.normal, dtype=float))
        if a.ndim != 1:
            raise ValueError("halfspace normal must be a vector")
        if not np.linalg.norm(a) > 0:
            raise ValueError("halfspace normal must be nonzero")
        object.__setattr__(self, "normal", a)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self) -> int:
        return self.normal.shape[0]

    def project(self, x):
        a = np.asarray(x, dtype=float)
        nsq = float(self.normal @ self.normal)
        viol = (a @ self.normal - self.offset) / nsq
        return a - np.maximum(viol, 0.0)[..., None] * self.normal

    def contains(self, x, tol=MEMBERSHIP_TOL):
        # tolerance applied to the signed distance so membership is
        # invariant under rescaling of the normal
        a = np.asarray(x, dtype=float)
        margin = (a @ self.normal - self.offset) / np.linalg.norm(self.normal)
        return margin <= tol


@dataclass(frozen=True)
class Intersection(GeometricSet):
    """Finite intersection of convex sets, projected via Dykstra's scheme.

    Construction probes for non-emptiness: if no component anchor lies in
    all components, Dykstra is run from a few deterministic starts and the
    intersection is rejected when the residual distance to the components
    stays above 1e-6.
    """

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("intersection needs at least one component")
        dims = {c.dim for c in comps}
        if len(dims) != 1:
            raise ValueError("intersection components must share a dimension")
        object.__setattr__(self, "components", comps)
        self._probe_nonempty()

    @property
    def dim(self) -> int:
        return self.components[0].dim

    def _residual(self, x) -> float:
        return max(float(np.max(np.linalg.norm(np.atleast_2d(x - c.project(x)), axis=-1)))
                   for c in self.components)

    def _probe_nonempty(self):
        anchors = [c.anchor() for c in self.components]
        for a in anchors:
            if all(bool(c.contains(a, tol=_EMPTY_PROBE_TOL)) for c in self.components):
                return
        rng = np.random.default_rng(7)
        mean = np.mean(anchors, axis=0)
        spread = max(1.0, float(np.max([np.linalg.norm(a - mean) for a in anchors])))
        starts = [mean] + [mean + rng.normal(scale=spread, size=self.dim) for _ in range(2)]
        best = np.inf
        for s in starts:
            x, _, _ = _dykstra(s[None, :], self.components)
            best = min(best, self._residual(x[0]))
            if best <= _EMPTY_PROBE_TOL:
                return
        raise ValueError(f"empty intersection (Dykstra residual {best:.3e})")

    def project(self, x):
        pts, single = _as_batch(x)
        out, converged, moved = _dykstra(pts, self.components)
        residual = self._residual(out)
        if not converged or residual > _DYKSTRA_RESIDUAL_TOL:
            raise ProjectionError("projection did not converge", max(residual, moved))
        return out[0] if single else out

    def contains(self, x, tol=MEMBERSHIP_TOL):
        a = np.asarray(x, dtype=float)
        result = self.components[0].contains(a, tol)
        for c in self.components[1:]:
            result = result & c.contains(a, tol)
        return result


def _dykstra(pts, components, max_sweeps=DYKSTRA_MAX_SWEEPS, move_tol=DYKSTRA_MOVE_TOL):
    """Cyclic Dykstra iteration over a batch of points.

    Returns ``(points, converged, last_move)``. Convergence requires both a
    full sweep moving every point less than ``move_tol`` and the iterate
    lying within the residual tolerance of every component.
    """
    x = np.array(pts, dtype=float)
    corrections = [np.zeros_like(x) for _ in components]
    moved = np.inf
    for _ in range(max_sweeps):
        prev = x
        for i, comp in enumerate(components):
            z = x + corrections[i]
            y = comp.project(z)
            corrections[i] = z - y
            x = y
        moved = float(np.max(np.linalg.norm(x - prev, axis=-1)))
        if moved < move_tol:
            residual = max(
                float(np.max(np.linalg.norm(x - c.project(x), axis=-1)))
                for c in components
            )
            if residual <= _DYKSTRA_RESIDUAL_TOL:
                return x, True, moved
    return x, False, moved


def project(x, s: GeometricSet):
    """Euclidean projection of ``x`` onto ``s``."""
    pts = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(pts)):
        raise ValueError("cannot project a non-finite point")
    return s.project(pts)


def membership(x, s: GeometricSet, tol: float = MEMBERSHIP_TOL):
    """Whether ``x`` satisfies all defining inequalities of ``s`` within ``tol``."""
    result = s.contains(np.asarray(x, dtype=float), tol)
    return bool(result) if np.ndim(result) == 0 else result


def dist(x, s: GeometricSet):
    """Minimum Euclidean distance from ``x`` to ``s``; zero for members."""
    a = np.asarray(x, dtype=float)
    p = project(a, s)
    d = np.linalg.norm(a - p, axis=-1)
    return float(d) if a.ndim == 1 else d


def dist_subgradient(x, s: GeometricSet):
    """Subgradient of the distance-to-set function at ``x``.

    Outside the set this is the unit vector pointing from the projection of
    ``x`` back to ``x``; within ``ZERO_DIST_TOL`` of the set the zero vector
    is returned, which is a valid subgradient on and inside the set.
    """
    a = np.asarray(x, dtype=float)
    p = project(a, s)
    delta = a - p
    n = np.linalg.norm(delta, axis=-1, keepdims=True)
    out = np.divide(delta, n, out=np.zeros_like(delta), where=n > ZERO_DIST_TOL)
    return out
