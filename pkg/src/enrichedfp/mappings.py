"""Self-map catalog and the averaging transform.

Mappings act on points of R^n (1-D numpy arrays of float64). Every mapping
is immutable after construction and evaluation is a pure function, so
instances can be shared freely across threads. Some catalog members are
restricted to a box domain; evaluating them outside it is an error rather
than a silent extension, because certified contraction constants are only
claimed on the declared domain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatchError, InvalidConstantError, OutOfDomainError

# Inputs this close to the domain box are accepted; averaging and projection
# arithmetic can overshoot a boundary by a few ulp.
DOMAIN_ATOL = 1e-9


def as_point(x) -> np.ndarray:
    """Coerce scalars/sequences to a finite 1-D float64 array."""
    arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if arr.ndim != 1 or arr.size < 1:
        raise DimensionMismatchError(f"expected a 1-D point, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidConstantError(f"point has non-finite entries: {arr}")
    return arr


def norm_dist(x, y) -> float:
    """Euclidean distance between two points of equal dimension."""
    xa, ya = as_point(x), as_point(y)
    if xa.shape != ya.shape:
        raise DimensionMismatchError(
            f"dimension mismatch: {xa.shape[0]} vs {ya.shape[0]}"
        )
    return float(np.linalg.norm(xa - ya))


@dataclass(frozen=True, eq=False)
class Mapping:
    """Base class for self-maps of R^n."""

    def apply(self, x) -> np.ndarray:
        point = as_point(x)
        if point.shape[0] != self.dim:
            raise DimensionMismatchError(
                f"{type(self).__name__} acts on R^{self.dim}, got dim {point.shape[0]}"
            )
        self._check_domain(point)
        return self._apply(point)

    __call__ = apply

    @property
    def dim(self) -> int:
        raise NotImplementedError

    @property
    def domain(self):
        """``(lower, upper)`` box bounds, or ``None`` when unrestricted."""
        return None

    def _check_domain(self, point: np.ndarray) -> None:
        box = self.domain
        if box is None:
            return
        lo, hi = box
        if np.any(point < lo - DOMAIN_ATOL) or np.any(point > hi + DOMAIN_ATOL):
            raise OutOfDomainError(
                f"{type(self).__name__}: point {point} outside domain box "
                f"[{lo}, {hi}]"
            )

    def _apply(self, point: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Reflection1D(Mapping):
    """x -> 1 - x on [0, 1]. An isometry with fixed point 1/2."""

    @property
    def dim(self):
        return 1

    @property
    def domain(self):
        return np.array([0.0]), np.array([1.0])

    def _apply(self, point):
        return 1.0 - point


@dataclass(frozen=True, eq=False)
class Scale1D(Mapping):
    """x -> c * x with an optional box restriction."""

    c: float
    bounds: tuple[float, float] | None = None

    def __post_init__(self):
        if not np.isfinite(self.c):
            raise InvalidConstantError("scale factor must be finite")
        if self.bounds is not None:
            lo, hi = self.bounds
            if not lo < hi:
                raise InvalidConstantError("bounds must satisfy lo < hi")

    @property
    def dim(self):
        return 1

    @property
    def domain(self):
        if self.bounds is None:
            return None
        lo, hi = self.bounds
        return np.array([lo]), np.array([hi])

    def _apply(self, point):
        return self.c * point


@dataclass(frozen=True, eq=False)
class AffineMap(Mapping):
    """x -> M x + b with a dense square matrix M."""

    matrix: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        b = np.asarray(self.offset, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"matrix must be square, got {m.shape}")
        if b.shape != (m.shape[0],):
            raise DimensionMismatchError(
                f"offset dim {b.shape} does not match matrix {m.shape}"
            )
        if not (np.all(np.isfinite(m)) and np.all(np.isfinite(b))):
            raise InvalidConstantError("affine map entries must be finite")
        m.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "offset", b)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def _apply(self, point):
        return self.matrix @ point + self.offset


@dataclass(frozen=True, eq=False)
class AveragedMap(Mapping):
    """The averaged mapping x -> (1 - lam) x + lam T(x).

    Shares its fixed-point set with the inner map for any lam in (0, 1];
    lam = 1 reproduces the inner map exactly.
    """

    inner: Mapping
    lam: float

    def __post_init__(self):
        if not (0.0 < self.lam <= 1.0):
            raise InvalidConstantError(
                f"averaging factor must lie in (0, 1], got {self.lam}"
            )

    @property
    def dim(self):
        return self.inner.dim

    @property
    def domain(self):
        return self.inner.domain

    def _apply(self, point):
        return (1.0 - self.lam) * point + self.lam * self.inner.apply(point)


@dataclass(frozen=True, eq=False)
class PiecewiseTable(Mapping):
    """1-D piecewise-affine map given by a breakpoint table.

    ``breakpoints`` b_0 < ... < b_m delimit m pieces; piece i applies
    ``slopes[i] * x + intercepts[i]`` on [b_i, b_{i+1}). The map is
    right-continuous at interior breakpoints and the final piece also covers
    x = b_m. Each piece must map its interval back into [b_0, b_m], which is
    the declared domain. This is the vehicle for discontinuous
    contraction examples.
    """

    breakpoints: np.ndarray
    slopes: np.ndarray
    intercepts: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=np.float64)
        s = np.asarray(self.slopes, dtype=np.float64)
        c = np.asarray(self.intercepts, dtype=np.float64)
        if b.ndim != 1 or b.size < 2:
            raise InvalidConstantError("need at least two breakpoints")
        if np.any(np.diff(b) <= 0):
            raise InvalidConstantError("breakpoints must be strictly increasing")
        if s.shape != c.shape or s.shape != (b.size - 1,):
            raise DimensionMismatchError(
                "need one (slope, intercept) pair per breakpoint interval"
            )
        lo, hi = b[0], b[-1]
        ends = np.concatenate([s * b[:-1] + c, s * b[1:] + c])
        if np.any(ends < lo - 1e-12) or np.any(ends > hi + 1e-12):
            raise InvalidConstantError(
                "piece images must stay inside the breakpoint span"
            )
        for name, arr in (("breakpoints", b), ("slopes", s), ("intercepts", c)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dim(self):
        return 1

    @property
    def domain(self):
        return np.array([self.breakpoints[0]]), np.array([self.breakpoints[-1]])

    def _apply(self, point):
        x = point[0]
        idx = int(np.searchsorted(self.breakpoints, x, side="right")) - 1
        idx = min(max(idx, 0), self.slopes.size - 1)
        return np.array([self.slopes[idx] * x + self.intercepts[idx]])


def apply(mapping: Mapping, x) -> np.ndarray:
    """Evaluate ``mapping`` at ``x``. Deterministic, no hidden state."""
    return mapping.apply(x)


def averaged(mapping: Mapping, lam: float) -> Mapping:
    """Build the averaged mapping with relaxation factor ``lam`` in (0, 1]."""
    return AveragedMap(inner=mapping, lam=float(lam))
