"""Carnot-Carathéodory distance on ``d = 2``, one-vertical-direction groups.

Nodes form the lattice ``(a h, b h, c h^2 / (2 den))`` where ``gamma = num/den``
is the single bracket coefficient.  An edge follows the straight horizontal
segment with integer direction ``(i, j)``; its length is ``h |(i, j)|`` and
its vertical change is exactly ``num (a j - b i)`` lattice units, so every
graph path is a genuine horizontal curve and graph distances are upper
bounds for the true distance.  Direction sets grow with ``resolution``
(all primitive ``(i, j)`` with ``max(|i|, |j|) <= resolution``), so the
distances are non-increasing in ``resolution``.  Left translations act on
the lattice, hence one search from the origin gives every pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from subcurv.errors import BallClipped, InvalidParameter, NotCarnot, Unreachable
from subcurv.structures import StructureConstants


def directions(resolution: int) -> list[tuple[int, int]]:
    if resolution < 1:
        raise InvalidParameter("resolution must be >= 1")
    out = []
    for i in range(-resolution, resolution + 1):
        for j in range(-resolution, resolution + 1):
            if (i, j) != (0, 0) and math.gcd(i, j) == 1:
                out.append((i, j))
    return out


def _bracket(sc: StructureConstants) -> Fraction:
    if not sc.is_step2_carnot or sc.d != 2 or sc.h != 1:
        raise NotCarnot("the lattice distance supports step-2 Carnot groups with d = 2 and one vertical direction")
    g = sc.gamma[0][0][1]
    if g == 0:
        raise NotCarnot("degenerate bracket")
    return g


@dataclass(frozen=True)
class DistanceTable:
    """Distances from the origin on the lattice, indexed ``[a + R, b + R, c + C]``."""

    spacing: float
    radius: int
    z_radius: int
    z_unit: float
    resolution: int
    dist: np.ndarray
    num: int

    def lattice_index(self, point) -> tuple[int, int, int]:
        a = point[0] / self.spacing
        b = point[1] / self.spacing
        c = point[2] / self.z_unit
        ia, ib, ic = (int(round(v)) for v in (a, b, c))
        if max(abs(a - ia), abs(b - ib), abs(c - ic)) > 1e-6:
            raise InvalidParameter(f"{point} is not a lattice node")
        if abs(ia) > self.radius or abs(ib) > self.radius or abs(ic) > self.z_radius:
            raise Unreachable(f"{point} lies outside the lattice")
        return ia + self.radius, ib + self.radius, ic + self.z_radius

    def from_origin(self, point) -> float:
        v = float(self.dist[self.lattice_index(point)])
        if not math.isfinite(v):
            raise Unreachable(f"{point} is not reachable inside the lattice")
        return v


@lru_cache(maxsize=8)
def _table(num: int, den: int, spacing: float, radius: int, z_radius: int, resolution: int) -> DistanceTable:
    n_h, n_z = 2 * radius + 1, 2 * z_radius + 1
    a, b, c = np.meshgrid(
        np.arange(-radius, radius + 1), np.arange(-radius, radius + 1), np.arange(-z_radius, z_radius + 1), indexing="ij"
    )
    a, b, c = a.ravel(), b.ravel(), c.ravel()
    src_all, dst_all, w_all = [], [], []
    node = lambda aa, bb, cc: ((aa + radius) * n_h + (bb + radius)) * n_z + (cc + z_radius)
    for i, j in directions(resolution):
        a2, b2, c2 = a + i, b + j, c + num * (a * j - b * i)
        ok = (np.abs(a2) <= radius) & (np.abs(b2) <= radius) & (np.abs(c2) <= z_radius)
        src_all.append(node(a[ok], b[ok], c[ok]))
        dst_all.append(node(a2[ok], b2[ok], c2[ok]))
        w_all.append(np.full(int(ok.sum()), spacing * math.hypot(i, j)))
    n = n_h * n_h * n_z
    graph = csr_matrix((np.concatenate(w_all), (np.concatenate(src_all), np.concatenate(dst_all))), shape=(n, n))
    origin = node(0, 0, 0)
    dist = dijkstra(graph, directed=True, indices=origin).reshape(n_h, n_h, n_z)
    z_unit = spacing * spacing / (2 * den)
    return DistanceTable(spacing, radius, z_radius, z_unit, resolution, dist, num)


def distance_table(
    sc: StructureConstants, spacing: float, half_width: float, z_half_width: float, resolution: int
) -> DistanceTable:
    g = _bracket(sc)
    radius = int(math.ceil(half_width / spacing - 1e-9))
    z_unit = spacing * spacing / (2 * g.denominator)
    z_radius = int(math.ceil(z_half_width / z_unit - 1e-9))
    return _table(g.numerator, g.denominator, float(spacing), radius, z_radius, resolution)


def relative_position(sc: StructureConstants, a, b) -> tuple[float, float, float]:
    """Coordinates of ``a^{-1} b`` under ``(x, z)(x', z') = (x + x', z + z' + 1/2 gamma(x, x'))``."""
    g = float(_bracket(sc))
    dx, dy = b[0] - a[0], b[1] - a[1]
    dz = b[2] - a[2] - 0.5 * g * (a[0] * b[1] - a[1] * b[0])
    return dx, dy, dz


def cc_distance(
    sc: StructureConstants,
    a,
    b,
    resolution: int,
    spacing: float = 0.1,
    half_width: float | None = None,
    z_half_width: float | None = None,
) -> float:
    """Lattice upper bound for ``d(a, b)``; ``a^{-1} b`` must be a lattice node."""
    p = relative_position(sc, a, b)
    if half_width is None:
        half_width = max(abs(p[0]), abs(p[1])) + 1.5 * math.sqrt(abs(p[2]) / abs(float(_bracket(sc)))) + 2 * spacing
    if z_half_width is None:
        z_half_width = 1.5 * abs(p[2]) + spacing * half_width
    table = distance_table(sc, spacing, half_width, z_half_width, resolution)
    return table.from_origin(p)


def coordinate_lower_bound(a, b, d: int = 2) -> float:
    """``max_i |x_i(b) - x_i(a)|``: horizontal coordinates are 1-Lipschitz."""
    return max(abs(b[i] - a[i]) for i in range(d))


def ball_measure(
    sc: StructureConstants, r: float, resolution: int, cells_per_radius: int = 20, table: DistanceTable | None = None
) -> float:
    """Haar measure of ``B(0, r)``: lattice nodes at distance ``<= r`` times the cell volume.

    Without ``table`` the lattice spacing is ``r / cells_per_radius``.  That
    lattice is the dilate of the one for ``r = 1``, so the unit count is
    computed once and scaled by ``r^4``.  Left invariance makes the centre
    irrelevant.
    """
    if r <= 0:
        raise InvalidParameter("r must be > 0")
    if table is None:
        g = _bracket(sc)
        return _unit_ball(g.numerator, g.denominator, resolution, cells_per_radius) * r**4
    return _count_ball(table, r)


@lru_cache(maxsize=16)
def _unit_ball(num: int, den: int, resolution: int, cells_per_radius: int) -> float:
    g = abs(num / den)
    spacing = 1.0 / cells_per_radius
    # the ball lies in |x|, |y| <= 1 and |z| <= g / (2 pi): a half circle sweeps the most area
    radius = cells_per_radius + 2
    z_unit = spacing * spacing / (2 * den)
    z_radius = int(math.ceil((g / 6 + 4 * spacing * spacing) / z_unit))
    return _count_ball(_table(num, den, spacing, radius, z_radius, resolution), 1.0)


def _count_ball(table: DistanceTable, r: float) -> float:
    inside = table.dist <= r * (1 + 1e-12)
    if inside[0].any() or inside[-1].any() or inside[:, 0].any() or inside[:, -1].any():
        raise BallClipped("ball meets the lattice boundary")
    if inside[:, :, 0].any() or inside[:, :, -1].any():
        raise BallClipped("ball meets the vertical lattice boundary")
    return float(inside.sum()) * table.spacing**2 * table.z_unit
