"""Nearest-point projections onto closed-form-projectable convex sets.

Every supported set has an exact projection formula (clamp, radial scaling,
or an affine correction along the normal), so projections are accurate to
machine precision and inherit the usual axioms: idempotence,
nonexpansiveness, and the variational characterization
``<x - Px, z - Px> <= 0`` for all z in the set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatchError, InvalidConstantError
from .mappings import as_point


@dataclass(frozen=True, eq=False)
class ConvexSet:
    """Base class for projectable convex sets in R^n."""

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def project(self, x) -> np.ndarray:
        point = as_point(x)
        if point.shape[0] != self.dim:
            raise DimensionMismatchError(
                f"{type(self).__name__} lives in R^{self.dim}, got dim {point.shape[0]}"
            )
        return self._project(point)

    def _project(self, point: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def _finite_vector(value, name) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=np.float64))
    if arr.ndim != 1 or not np.all(np.isfinite(arr)):
        raise InvalidConstantError(f"{name} must be a finite vector")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Box(ConvexSet):
    """Axis-aligned box {x : lower <= x <= upper}; may be degenerate."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _finite_vector(self.lower, "lower")
        hi = _finite_vector(self.upper, "upper")
        if lo.shape != hi.shape:
            raise DimensionMismatchError("box bounds have mismatched dims")
        if np.any(lo > hi):
            raise InvalidConstantError("box needs lower <= upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self):
        return self.lower.shape[0]

    def _project(self, point):
        return np.clip(point, self.lower, self.upper)


@dataclass(frozen=True, eq=False)
class Ball(ConvexSet):
    """Euclidean ball {x : ||x - center|| <= radius}."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = _finite_vector(self.center, "center")
        if not (self.radius > 0.0 and np.isfinite(self.radius)):
            raise InvalidConstantError(f"radius must be > 0, got {self.radius}")
        object.__setattr__(self, "center", c)

    @property
    def dim(self):
        return self.center.shape[0]

    def _project(self, point):
        offset = point - self.center
        dist = float(np.linalg.norm(offset))
        if dist <= self.radius:
            return point.copy()
        return self.center + (self.radius / dist) * offset


@dataclass(frozen=True, eq=False)
class Halfspace(ConvexSet):
    """Halfspace {x : <normal, x> <= offset}."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        a = _finite_vector(self.normal, "normal")
        if not np.any(a != 0.0):
            raise InvalidConstantError("halfspace normal must be nonzero")
        if not np.isfinite(self.offset):
            raise InvalidConstantError("halfspace offset must be finite")
        object.__setattr__(self, "normal", a)

    @property
    def dim(self):
        return self.normal.shape[0]

    def _project(self, point):
        excess = float(self.normal @ point) - self.offset
        if excess <= 0.0:
            return point.copy()
        return point - (excess / float(self.normal @ self.normal)) * self.normal


@dataclass(frozen=True, eq=False)
class Hyperplane(ConvexSet):
    """Hyperplane {x : <normal, x> = offset}."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        a = _finite_vector(self.normal, "normal")
        if not np.any(a != 0.0):
            raise InvalidConstantError("hyperplane normal must be nonzero")
        if not np.isfinite(self.offset):
            raise InvalidConstantError("hyperplane offset must be finite")
        object.__setattr__(self, "normal", a)

    @property
    def dim(self):
        return self.normal.shape[0]

    def _project(self, point):
        shift = (float(self.normal @ point) - self.offset) / float(
            self.normal @ self.normal
        )
        return point - shift * self.normal


def project(convex_set: ConvexSet, x) -> np.ndarray:
    """Nearest point of the set to x in the Euclidean norm."""
    return convex_set.project(x)


def distance(convex_set: ConvexSet, x) -> float:
    """Euclidean distance from x to the set."""
    point = as_point(x)
    return float(np.linalg.norm(point - convex_set.project(point)))


def contains(convex_set: ConvexSet, x, tol: float = 0.0) -> bool:
    """True iff dist(x, S) <= tol."""
    if tol < 0.0:
        raise InvalidConstantError(f"tol must be >= 0, got {tol}")
    return distance(convex_set, x) <= tol


def _sampling_window(convex_set: ConvexSet):
    """A box guaranteed to overlap the set, used to seed sampling."""
    if isinstance(convex_set, Box):
        return convex_set.lower, convex_set.upper
    if isinstance(convex_set, Ball):
        return convex_set.center - convex_set.radius, convex_set.center + convex_set.radius
    a = convex_set.normal
    anchor = (convex_set.offset / float(a @ a)) * a
    if isinstance(convex_set, Halfspace):
        anchor = anchor - a / float(np.linalg.norm(a))
    return anchor - 2.0, anchor + 2.0


def sample_points(convex_set: ConvexSet, n: int, seed: int = 0) -> np.ndarray:
    """n seeded points inside the set.

    Boxes are sampled uniformly; balls and halfspaces by rejection inside a
    window that overlaps them. Hyperplanes have measure zero, so window
    samples are projected onto the plane instead of rejected.
    """
    if n < 1:
        raise InvalidConstantError("need n >= 1 sample points")
    rng = np.random.default_rng(seed)
    lo, hi = _sampling_window(convex_set)
    dim = convex_set.dim

    if isinstance(convex_set, Box):
        return lo + rng.uniform(size=(n, dim)) * (hi - lo)
    if isinstance(convex_set, Hyperplane):
        raw = lo + rng.uniform(size=(n, dim)) * (hi - lo)
        return np.stack([convex_set.project(z) for z in raw])

    out = []
    for _ in range(1000):
        raw = lo + rng.uniform(size=(4 * n, dim)) * (hi - lo)
        for z in raw:
            if contains(convex_set, z, 0.0):
                out.append(z)
                if len(out) == n:
                    return np.stack(out)
    raise InvalidConstantError(
        f"rejection sampling failed to fill {n} points for {type(convex_set).__name__}"
    )
