"""Named desk-scale instances used by the demo, the benchmarks and tests.

The mapping entries span the certifier's classes: an isometry that only
certifies after enrichment, plain geometric contractions, a discontinuous
piecewise map, a spiral affine contraction in the plane, and a
pre-averaged map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import apps, convex
from .mappings import AffineMap, AveragedMap, Mapping, PiecewiseTable, Reflection1D, Scale1D


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    mapping: Mapping
    bounds: tuple  # sampling box for certification, one (lo, hi) per axis
    x0: tuple  # default start point
    k_grid: tuple = (0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0)


def standard_catalog() -> list[CatalogEntry]:
    return [
        CatalogEntry(
            name="reflection",
            mapping=Reflection1D(),
            bounds=((0.0, 1.0),),
            x0=(0.0,),
        ),
        CatalogEntry(
            name="scale_third",
            mapping=Scale1D(c=1.0 / 3.0, bounds=(0.0, 1.0)),
            bounds=((0.0, 1.0),),
            x0=(1.0,),
        ),
        CatalogEntry(
            name="scale_quarter",
            mapping=Scale1D(c=0.25, bounds=(0.0, 1.0)),
            bounds=((0.0, 1.0),),
            x0=(1.0,),
        ),
        CatalogEntry(
            name="kannan_jump",
            mapping=PiecewiseTable(
                breakpoints=np.array([0.0, 0.5, 1.0]),
                slopes=np.array([0.25, 0.2]),
                intercepts=np.array([0.0, 0.0]),
            ),
            bounds=((0.0, 1.0),),
            x0=(0.9,),
        ),
        CatalogEntry(
            name="spiral_affine",
            mapping=AffineMap(
                matrix=np.array([[0.15, 0.1], [-0.1, 0.15]]),
                offset=np.array([0.05, -0.1]),
            ),
            bounds=((-2.0, 2.0), (-2.0, 2.0)),
            x0=(1.0, 1.0),
        ),
        CatalogEntry(
            name="averaged_reflection",
            mapping=AveragedMap(inner=Reflection1D(), lam=2.0 / 3.0),
            bounds=((0.0, 1.0),),
            x0=(0.0,),
        ),
    ]


def catalog_entry(name: str) -> CatalogEntry:
    for entry in standard_catalog():
        if entry.name == name:
            return entry
    raise KeyError(f"unknown catalog entry: {name}")


def standard_sfp() -> apps.SfpInstance:
    """Consistent 2-D instance: C=[0,1]^2, Q=[2,3]^2, A=2I; solution (1,1)."""
    return apps.SfpInstance(
        c_set=convex.Box(lower=np.zeros(2), upper=np.ones(2)),
        q_set=convex.Box(lower=np.full(2, 2.0), upper=np.full(2, 3.0)),
        matrix=2.0 * np.eye(2),
        gamma=0.25,
    )


def degenerate_sfp() -> apps.SfpInstance:
    """Inconsistent 1-D instance: C={0}, Q={1}, A=[[1]]; fixed point 0."""
    return apps.SfpInstance(
        c_set=convex.Box(lower=np.zeros(1), upper=np.zeros(1)),
        q_set=convex.Box(lower=np.ones(1), upper=np.ones(1)),
        matrix=np.eye(1),
        gamma=0.5,
    )


def vip_line() -> apps.VipInstance:
    """1-D instance: C=[0,2], G(x)=x-1; interior solution x*=1."""
    return apps.VipInstance(
        c_set=convex.Box(lower=np.zeros(1), upper=np.full(1, 2.0)),
        operator=AffineMap(matrix=np.eye(1), offset=np.array([-1.0])),
        gamma=0.5,
    )


def vip_boundary() -> apps.VipInstance:
    """1-D instance: C=[0,1], G=1; the constant force pins x*=0."""
    return apps.VipInstance(
        c_set=convex.Box(lower=np.zeros(1), upper=np.ones(1)),
        operator=AffineMap(matrix=np.zeros((1, 1)), offset=np.array([1.0])),
        gamma=0.5,
    )


def vip_plane() -> apps.VipInstance:
    """2-D instance: C=[0,3]^2, G(x)=2x-(2,2); interior solution (1,1)."""
    return apps.VipInstance(
        c_set=convex.Box(lower=np.zeros(2), upper=np.full(2, 3.0)),
        operator=AffineMap(matrix=2.0 * np.eye(2), offset=np.array([-2.0, -2.0])),
        gamma=0.25,
    )
