import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subcurv.errors import BallClipped, InvalidParameter, NotCarnot, Unreachable
from subcurv.heat.ccdist import (
    ball_measure,
    cc_distance,
    coordinate_lower_bound,
    directions,
    distance_table,
    relative_position,
)
from subcurv.structures import catalog_model

H1 = catalog_model("heisenberg", 1)
H = 0.1


@pytest.fixture(scope="module")
def table():
    return distance_table(H1, H, 1.5, 1.0, 2)


def lattice_point(table, a, b, c):
    return (a * table.spacing, b * table.spacing, c * table.z_unit)


def test_directions():
    assert len(directions(1)) == 8
    # primitive vectors in the 5x5 box: 24 minus the 8 non-primitive ones
    assert len(directions(2)) == 16
    with pytest.raises(InvalidParameter):
        directions(0)


def test_unit_horizontal_segment():
    assert cc_distance(H1, (0, 0, 0), (1.0, 0, 0), 2) == pytest.approx(1.0, rel=0.02)


def test_vertical_point_via_isoperimetry():
    # shortest horizontal loop enclosing unit area: a circle of length 2 sqrt(pi)
    d = cc_distance(H1, (0, 0, 0), (0, 0, 1.0), 3)
    assert d >= 2 * math.sqrt(math.pi) * (1 - 1e-9) - 2 * H
    assert d == pytest.approx(2 * math.sqrt(math.pi), rel=0.05)


def test_monotone_in_resolution():
    ds = [cc_distance(H1, (0, 0, 0), (0.3, 0.2, 0.5), r, spacing=H) for r in (1, 2, 3)]
    assert ds[0] >= ds[1] >= ds[2]


def test_left_translation_and_symmetry():
    a, b = (0.2, -0.1, 0.3), (0.5, 0.4, 0.1)
    ra, rb = relative_position(H1, a, b), relative_position(H1, b, a)
    # a^{-1} b and b^{-1} a are inverse group elements
    assert ra == pytest.approx(tuple(-x for x in rb))


def test_graph_symmetry(table):
    R, C = table.radius, table.z_radius
    rng = np.random.default_rng(1)
    for _ in range(50):
        a, b = rng.integers(-R // 2, R // 2 + 1, 2)
        c = rng.integers(-C // 2, C // 2 + 1)
        p = lattice_point(table, a, b, c)
        q = lattice_point(table, -a, -b, -c)
        try:
            assert table.from_origin(p) == pytest.approx(table.from_origin(q), rel=1e-12)
        except Unreachable:
            pass


@settings(max_examples=60, deadline=None)
@given(st.integers(-6, 6), st.integers(-6, 6), st.integers(-40, 40), st.integers(-6, 6), st.integers(-6, 6), st.integers(-40, 40))
def test_triangle_inequality_and_lower_bound(a1, b1, c1, a2, b2, c2):
    t = distance_table(H1, H, 1.5, 1.0, 2)
    p, q = lattice_point(t, a1, b1, c1), lattice_point(t, a2, b2, c2)
    try:
        dp, dq = t.from_origin(p), t.from_origin(q)
        dpq = t.from_origin(relative_position(H1, p, q))
    except Unreachable:
        return
    assert dq <= dp + dpq + 1e-9
    assert dp >= coordinate_lower_bound((0, 0, 0), p) - 1e-12


def test_errors(table):
    with pytest.raises(NotCarnot):
        distance_table(catalog_model("heisenberg", 2), H, 1.0, 1.0, 1)
    with pytest.raises(InvalidParameter):
        table.from_origin((0.05, 0.0, 0.0))
    with pytest.raises(Unreachable):
        table.from_origin((100 * H, 0.0, 0.0))


def test_ball_measure_small_and_monotone(table):
    assert ball_measure(H1, 1e-6, 2, table=table) == pytest.approx(table.spacing**2 * table.z_unit)
    rs = [0.2, 0.4, 0.6, 0.8]
    ms = [ball_measure(H1, r, 2, table=table) for r in rs]
    assert all(x <= y for x, y in zip(ms, ms[1:]))
    with pytest.raises(BallClipped):
        ball_measure(H1, 1.5, 2, table=table)


def test_ball_measure_scaling():
    assert ball_measure(H1, 2.0, 2, 10) == pytest.approx(16 * ball_measure(H1, 1.0, 2, 10), rel=1e-12)


def test_ball_dilation_on_fixed_lattice():
    # geodesics to points of B(1) stay inside B(1), whose |z| extent is 1 / (2 pi)
    t = distance_table(H1, 0.05, 1.1, 0.2, 3)
    ratio = ball_measure(H1, 1.0, 3, table=t) / ball_measure(H1, 0.5, 3, table=t)
    assert ratio == pytest.approx(16, rel=0.1)
