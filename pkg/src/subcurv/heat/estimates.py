"""Desk-scale checks of the semigroup inequalities on simulated heat flows.

Every pointwise check reports a residual normalized by the local size of the
bound, so a residual ``>= -C_tol * h`` passes.  Derivatives of ``u`` use the
same exact-flow shifts as the solver, ``L u`` is the solver's own stencil
and vertical derivatives are spectral.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from subcurv.errors import InvalidParameter, NonPositiveTime
from subcurv.forms import CDParams
from subcurv.heat.ccdist import (
    DistanceTable,
    ball_measure,
    coordinate_lower_bound,
    distance_table,
    relative_position,
)
from subcurv.heat.grid import CarnotChart, HeatField, Stencil, evolve, near_delta, to_physical

U_FLOOR = 1e-12


@dataclass
class EstimateReport:
    name: str
    samples: int
    worst: float
    location: tuple | None
    time: float | None
    tolerance: float
    passed: bool
    details: dict = field(default_factory=dict)

    @classmethod
    def build(cls, name, samples, worst, location, time, tolerance, details=None, passed=None) -> "EstimateReport":
        ok = worst >= -tolerance if passed is None else passed
        return cls(name, int(samples), float(worst), location, time, float(tolerance), bool(ok), details or {})

    def to_dict(self) -> dict:
        d = asdict(self)
        d["location"] = list(self.location) if self.location is not None else None
        return d


@dataclass
class Derivatives:
    """Physical-space ``u``, ``Gamma(u)``, ``Gamma^Z(u)`` and ``L u`` of one field."""

    u: np.ndarray
    gamma: np.ndarray
    gammaZ: np.ndarray
    lu: np.ndarray


def derivatives(f: HeatField, stencil: Stencil | None = None) -> Derivatives:
    ch = f.chart
    st = stencil or Stencil(ch)
    c = f.coeffs
    g = sum(to_physical(ch, st.derivative(c, i)) ** 2 for i in range(ch.d))
    gz = sum(to_physical(ch, st.vertical_derivative(c, m)) ** 2 for m in range(ch.h))
    return Derivatives(f.values, g, gz, to_physical(ch, st.laplacian(c)))


def monitored_mask(chart: CarnotChart, half_width: float) -> np.ndarray:
    inside = np.abs(chart.x_nodes) <= half_width + 1e-12
    mask = np.ones(chart.shape, dtype=bool)
    for i in range(chart.d):
        shape = [1] * len(chart.shape)
        shape[i] = chart.n_horizontal
        mask &= inside.reshape(shape)
    return mask


def _worst(residual: np.ndarray, mask: np.ndarray, chart: CarnotChart):
    r = np.where(mask, residual, np.inf)
    k = int(np.argmin(r))
    idx = np.unravel_index(k, r.shape)
    return float(r[idx]), chart.point_of(idx), int(mask.sum())


def trajectory(field0: HeatField, times: Sequence[float], dt: float | None = None) -> list[HeatField]:
    """Snapshots of the evolved field at increasing ``times``."""
    out, cur = [], field0
    for t in sorted(times):
        if t <= 0:
            raise NonPositiveTime("sample times must be > 0")
        cur = evolve(cur, t, dt)
        out.append(cur)
    return out


def tolerance(chart: CarnotChart, c_tol: float = 1.0) -> float:
    return c_tol * chart.spacing


# -- Li-Yau ---------------------------------------------------------------------


def li_yau_residual(f: HeatField, p: CDParams, mask_half_width: float = 1.5) -> tuple[np.ndarray, np.ndarray]:
    """Normalized ``(RHS - LHS) / RHS-scale`` of the Li-Yau bound at ``f.time`` for ``rho1 = 0``."""
    rho2, kappa, d = float(p.rho2), float(p.kappa), float(p.d)
    t = f.time
    q = 1 + 3 * kappa / (2 * rho2)
    der = derivatives(f)
    u = der.u
    mask = monitored_mask(f.chart, mask_half_width) & (u > U_FLOOR)
    us = np.where(mask, u, 1.0)
    lhs = der.gamma / us**2 + (2 * rho2 / 3) * t * der.gammaZ / us**2
    ratio = der.lu / us
    rhs = q * ratio + d * q * q / (2 * t)
    scale = np.abs(q * ratio) + d * q * q / (2 * t)
    return (rhs - lhs) / scale, mask


def check_li_yau(
    field0: HeatField, p: CDParams, times: Iterable[float], tol: float | None = None, mask_half_width: float = 1.5
) -> EstimateReport:
    if float(p.rho1) != 0:
        raise InvalidParameter("the Li-Yau check uses the rho1 = 0 form")
    tol = tolerance(field0.chart) if tol is None else tol
    worst, loc, when, n = math.inf, None, None, 0
    per_time = {}
    for f in trajectory(field0, list(times)):
        res, mask = li_yau_residual(f, p, mask_half_width)
        w, where, cnt = _worst(res, mask, f.chart)
        per_time[f"{f.time:g}"] = w
        n += cnt
        if w < worst:
            worst, loc, when = w, where, f.time
    return EstimateReport.build("li_yau", n, worst, loc, when, tol, {"worst_by_time": per_time})


def violation(report: EstimateReport) -> float:
    return max(0.0, -report.worst)


def refinement_shrinks(coarse: EstimateReport, fine: EstimateReport, factor: float = 1.5) -> bool:
    """A positive violation must drop by ``factor``; an absent one must stay absent."""
    vc, vf = violation(coarse), violation(fine)
    if vc == 0:
        return vf == 0
    return vf <= vc / factor


# -- Harnack ----------------------------------------------------------------------


def harnack_ratio(us: float, ut: float, s: float, t: float, dist: float, p: CDParams) -> float:
    D, d = float(p.D), float(p.d)
    return us / (ut * (t / s) ** (D / 2) * math.exp((D / d) * dist * dist / (4 * (t - s))))


def check_harnack(
    field0: HeatField,
    pairs: Sequence[tuple[tuple, float, tuple, float]],
    p: CDParams,
    tol: float = 0.05,
    table: DistanceTable | None = None,
    resolution: int = 3,
) -> EstimateReport:
    """``pairs`` holds ``(x, s, y, t)``; ``x^{-1} y`` must be a node of the distance lattice."""
    for x, s, y, t in pairs:
        if not 0 < s < t:
            raise InvalidParameter(f"need 0 < s < t, got s = {s}, t = {t}")
    sc = field0.chart.sc
    if table is None:
        rel = [relative_position(sc, x, y) for x, _, y, _ in pairs]
        hw = max(max(abs(r[0]), abs(r[1])) for r in rel) + 1.0
        zw = max(abs(r[2]) for r in rel) * 1.5 + 0.5
        table = distance_table(sc, 2 * field0.chart.spacing, hw, zw, resolution)
    times = sorted({s for _, s, _, _ in pairs} | {t for _, _, _, t in pairs})
    snaps = {f.time: f for f in trajectory(field0, times)}

    def snap(t):
        return snaps[min(snaps, key=lambda k: abs(k - t))]

    worst, worst_pair, inconclusive, rows = math.inf, None, [], []
    for x, s, y, t in pairs:
        us, ut = snap(s).at(x), snap(t).at(y)
        dist = table.from_origin(relative_position(sc, x, y))
        ratio = harnack_ratio(us, ut, s, t, dist, p)
        ratio_lb = harnack_ratio(us, ut, s, t, coordinate_lower_bound(x, y, field0.chart.d), p)
        rows.append({"x": list(x), "s": s, "y": list(y), "t": t, "distance": dist, "ratio": ratio, "ratio_lower": ratio_lb})
        if ratio <= 1 + tol < ratio_lb:
            inconclusive.append(len(rows) - 1)
        if 1 - ratio < worst:
            worst, worst_pair = 1 - ratio, (tuple(x), s, tuple(y), t)
    return EstimateReport.build(
        "harnack",
        len(pairs),
        worst,
        worst_pair,
        None,
        tol,
        {"pairs": rows, "inconclusive": inconclusive},
    )


# -- semigroup laws -----------------------------------------------------------------


def check_monotonicity(
    field0: HeatField,
    p: CDParams,
    times: Sequence[float],
    tol: float,
    mask_half_width: float = 1.5,
    snaps: Sequence[HeatField] | None = None,
):
    """``t^{D/2} u(x, t)`` non-decreasing along consecutive sample times."""
    D = float(p.D)
    snaps = snaps if snaps is not None else trajectory(field0, times)
    mask = monitored_mask(field0.chart, mask_half_width)
    worst, loc, when, n = math.inf, None, None, 0
    prev = None
    for f in snaps:
        u = f.values
        cur = f.time ** (D / 2) * u
        if prev is not None:
            m = mask & (u > U_FLOOR)
            res = (cur - prev) / np.where(m, np.maximum(np.abs(cur), U_FLOOR), 1.0)
            w, where, cnt = _worst(res, m, f.chart)
            n += cnt
            if w < worst:
                worst, loc, when = w, where, f.time
        prev = cur
    return EstimateReport.build("ultracontractivity", n, worst, loc, when, tol)


def on_diagonal_constant(p: CDParams) -> float:
    D, d = float(p.D), float(p.d)
    return 2 ** (D / 2) * math.exp(D / (4 * d))


def check_on_diagonal(
    chart: CarnotChart,
    p: CDParams,
    times: Sequence[float],
    tol: float,
    x0=None,
    resolution: int = 3,
    cells_per_radius: int = 20,
    kernel: Sequence[HeatField] | None = None,
) -> EstimateReport:
    """``p(x0, x0, t) mu(B(x0, sqrt t)) <= C`` for the near-delta kernel."""
    x0 = x0 or (0.0,) * (chart.d + chart.h)
    C = on_diagonal_constant(p)
    snaps = kernel if kernel is not None else trajectory(near_delta(chart, x0), times)
    rows, worst, when = [], math.inf, None
    for f in snaps:
        mu = ball_measure(chart.sc, math.sqrt(f.time), resolution, cells_per_radius)
        val = f.at(x0) * mu
        rows.append({"t": f.time, "p_mu": val})
        r = 1 - val / C
        if r < worst:
            worst, when = r, f.time
    return EstimateReport.build("on_diagonal", len(rows), worst, tuple(x0), when, tol, {"C": C, "samples": rows})


def fitted_offdiagonal_constant(
    f: HeatField, p: CDParams, eps: float = 1.0, resolution: int = 2, x0=None, rel_floor: float = 1e-2
) -> EstimateReport:
    """Smallest ``C`` consistent with the simulated off-diagonal Gaussian bound at ``f.time``.

    Distances use the nearest lattice node, so this is a reported estimate
    only.  Nodes below ``rel_floor * max u`` are skipped: there the smoothed
    initial datum leaves algebraic vertical tails that no Gaussian bound fits.
    """
    ch = f.chart
    x0 = x0 or (0.0,) * (ch.d + ch.h)
    t = f.time
    mu = ball_measure(ch.sc, math.sqrt(t), resolution)
    u = f.values
    spacing = 2 * ch.spacing
    mask = monitored_mask(ch, 1.5) & (u > rel_floor * u.max())
    idx = np.argwhere(mask)
    pts = [ch.point_of(tuple(i)) for i in idx]
    rel = [relative_position(ch.sc, x0, q) for q in pts]
    hw = max(max(abs(r[0]), abs(r[1])) for r in rel) + 0.5
    zw = max(abs(r[2]) for r in rel) + 0.25
    table = distance_table(ch.sc, spacing, hw, zw, resolution)
    best = 0.0
    for i, r in zip(idx, rel):
        a = int(round(r[0] / table.spacing))
        b = int(round(r[1] / table.spacing))
        c = int(round(r[2] / table.z_unit))
        dist = float(table.dist[a + table.radius, b + table.radius, c + table.z_radius])
        best = max(best, u[tuple(i)] * mu * math.exp(dist * dist / ((4 + eps) * t)))
    return EstimateReport.build(
        "off_diagonal_fit", len(idx), 0.0, tuple(x0), t, 0.0, {"fitted_constant": float(best), "epsilon": eps, "rel_floor": rel_floor}, passed=True
    )


def check_gradient_decay(
    field0: HeatField,
    p: CDParams,
    times: Sequence[float],
    tol: float,
    mask_half_width: float = 1.5,
    rel_floor: float = 1e-8,
    snaps: Sequence[HeatField] | None = None,
) -> EstimateReport:
    """``Gamma(P_t f) + Gamma^Z(P_t f) <= e^{-alpha t} P_t(Gamma f + Gamma^Z f)`` with ``alpha = 2 min(rho2, rho1 - kappa)``."""
    alpha = 2 * min(float(p.rho2), float(p.rho1 - p.kappa))
    d0 = derivatives(field0)
    g0 = HeatField.from_values(field0.chart, d0.gamma + d0.gammaZ, smooth=False)
    fs = snaps if snaps is not None else trajectory(field0, times)
    gs = trajectory(g0, times)
    mask0 = monitored_mask(field0.chart, mask_half_width)
    worst, loc, when, n = math.inf, None, None, 0
    for f, g in zip(fs, gs):
        der = derivatives(f)
        lhs = der.gamma + der.gammaZ
        rhs = math.exp(-alpha * f.time) * g.values
        m = mask0 & (rhs > rel_floor * rhs.max())
        res = (rhs - lhs) / np.where(m, rhs, 1.0)
        w, where, cnt = _worst(res, m, f.chart)
        n += cnt
        if w < worst:
            worst, loc, when = w, where, f.time
    return EstimateReport.build("gradient_decay", n, worst, loc, when, tol, {"alpha": alpha})


def check_semigroup_laws(
    field0: HeatField,
    p: CDParams,
    tol: float | None = None,
    times: Sequence[float] = (0.05, 0.1, 0.2, 0.3, 0.4),
    kernel_times: Sequence[float] = (0.05, 0.1, 0.2, 0.3),
    kernel_chart: CarnotChart | None = None,
) -> dict[str, EstimateReport]:
    tol = tolerance(field0.chart) if tol is None else tol
    kchart = kernel_chart or field0.chart
    kernel = trajectory(near_delta(kchart, (0.0,) * (kchart.d + kchart.h)), kernel_times)
    snaps = trajectory(field0, times)
    return {
        "ultracontractivity": check_monotonicity(field0, p, times, tol, snaps=snaps),
        "on_diagonal": check_on_diagonal(kchart, p, kernel_times, tol, kernel=kernel),
        "gradient_decay": check_gradient_decay(field0, p, times, tol, snaps=snaps),
        "off_diagonal_fit": fitted_offdiagonal_constant(kernel[-1], p),
    }


# -- variational inequality ---------------------------------------------------------


def variational_integrals(p: CDParams, T: float, k: float = 3.0) -> tuple[float, float]:
    """``int_0^T b' gamma`` and ``int_0^T b' gamma^2`` for ``b(t) = (T - t)^k``, ``k > 2``."""
    if k <= 2:
        raise InvalidParameter("b(t) = (T - t)^k needs k > 2 for the integrals to converge")
    rho1, rho2, kappa, d = (float(v) for v in (p.rho1, p.rho2, p.kappa, p.d))
    c = k - 1 + k * kappa / rho2
    i1 = -k * (d / 4) * (2 * rho1 * T**k / k - c * T ** (k - 1) / (k - 1))
    i2 = -k * (d * d / 16) * (
        4 * rho1 * rho1 * T**k / k - 4 * rho1 * c * T ** (k - 1) / (k - 1) + c * c * T ** (k - 2) / (k - 2)
    )
    return i1, i2


def variational_sides(f: HeatField, p: CDParams, k: float = 3.0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Both sides of the integrated inequality at ``T = f.time`` with ``b = (T - t)^k``.

    ``b(T) = b'(T) = 0`` removes the terms at time ``T`` of the initial datum.
    """
    T = f.time
    rho2, d = float(p.rho2), float(p.d)
    i1, i2 = variational_integrals(p, T, k)
    bp0, b0 = -k * T ** (k - 1), T**k
    der = derivatives(f)
    u = der.u
    us = np.where(u > U_FLOOR, u, 1.0)
    lhs = (bp0 / (2 * rho2)) * der.gamma / us - b0 * der.gammaZ / us
    rhs = -(2 / (d * rho2)) * i1 * der.lu + (1 / (d * rho2)) * i2 * u
    scale = np.abs((2 / (d * rho2)) * i1 * der.lu) + np.abs((1 / (d * rho2)) * i2 * u)
    return lhs, rhs, scale


def check_variational(
    field0: HeatField,
    T: float,
    p: CDParams,
    tol: float | None = None,
    k: float = 3.0,
    eps: float = 1e-3,
    mask_half_width: float = 1.5,
) -> EstimateReport:
    """Run from ``f + eps`` to ``T`` and compare both sides at the monitored nodes."""
    if T <= 0:
        raise NonPositiveTime("T must be > 0")
    tol = tolerance(field0.chart) if tol is None else tol
    ch = field0.chart
    shifted = field0.copy()
    zero = (slice(None),) * ch.d + (0,) * ch.h
    shifted.coeffs[zero] += eps * math.prod(ch.nz)
    f = evolve(shifted, T)
    lhs, rhs, scale = variational_sides(f, p, k)
    mask = monitored_mask(ch, mask_half_width) & (f.values > U_FLOOR)
    res = (lhs - rhs) / np.where(mask, scale, 1.0)
    w, where, n = _worst(res, mask, ch)
    return EstimateReport.build("variational", n, w, where, T, tol, {"k": k, "eps": eps})


def kernel_symmetry(chart: CarnotChart, a, b, t: float) -> tuple[float, float, float]:
    """``(p(a, b, t), p(b, a, t), relative difference)`` from two near-delta runs."""
    pab = evolve(near_delta(chart, a), t).at(b)
    pba = evolve(near_delta(chart, b), t).at(a)
    return pab, pba, abs(pab - pba) / max(abs(pab), abs(pba), 1e-300)


def default_harnack_pairs(chart: CarnotChart, s: float = 0.1, t: float = 0.2) -> list[tuple[tuple, float, tuple, float]]:
    """24 pairs across the bump; coordinates on even grid nodes with equal heights."""
    h2 = 2 * chart.spacing
    z = chart.z_nodes[0][(chart.nz[0] - 1) // 2 + 2]
    xs = [(-2 * h2, 0.0), (0.0, 2 * h2), (h2, h2), (-h2, -2 * h2)]
    ys = [(2 * h2, 0.0), (0.0, -2 * h2), (-h2, h2), (3 * h2, 2 * h2), (0.0, 0.0), (-3 * h2, h2)]
    out = []
    for x in xs:
        for y in ys:
            out.append(((*x, 0.0), s, (*y, 0.0), t) if len(out) % 2 == 0 else ((*x, z), s, (*y, z), t))
    return out
