"""The full desk-scale heat suite on one Carnot chart."""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np

from subcurv.forms import CDParams
from subcurv.heat.estimates import (
    EstimateReport,
    check_harnack,
    check_li_yau,
    check_semigroup_laws,
    check_variational,
    default_harnack_pairs,
    kernel_symmetry,
    refinement_shrinks,
    violation,
)
from subcurv.heat.grid import CarnotChart, evolve, gaussian_bump, near_delta
from subcurv.structures import StructureConstants


@dataclass(frozen=True)
class HeatConfig:
    spacing: float = 0.0625
    coarse_spacing: float = 0.125
    half_width: float = 4.0
    z_half_width: float = 4.0
    nz: int = 129
    li_yau_times: tuple[float, ...] = (0.05, 0.1, 0.2, 0.4)
    semigroup_times: tuple[float, ...] = (0.05, 0.1, 0.2, 0.3, 0.4)
    kernel_times: tuple[float, ...] = (0.05, 0.1, 0.2, 0.3)
    harnack_times: tuple[float, float] = (0.1, 0.2)
    variational_T: float = 0.2
    monitor_time: float = 0.1
    symmetry_time: float = 0.1
    c_tol: float = 1.0
    harnack_tol: float = 0.05
    bump_sigma: float = 0.5

    def chart(self, sc: StructureConstants, spacing: float | None = None) -> CarnotChart:
        return CarnotChart(sc, self.half_width, (self.z_half_width,) * sc.h, spacing or self.spacing, (self.nz,) * sc.h)

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, doc: dict) -> "HeatConfig":
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in doc.items()})

    def quick(self) -> "HeatConfig":
        """Coarser variant for smoke runs."""
        return replace(self, spacing=0.125, coarse_spacing=0.25, half_width=3.0, nz=65)


def mass_and_positivity(chart: CarnotChart, t: float) -> EstimateReport:
    f = evolve(near_delta(chart, (0.0,) * (chart.d + chart.h)), t, monitor=True)
    hist = f.history
    masses = np.array([1.0] + [r.mass for r in hist])
    peak = float(np.max(near_delta(chart, (0.0,) * (chart.d + chart.h)).values))
    rise = float(np.max(np.diff(masses)))
    low = min(r.min_value for r in hist)
    # round-off allowances: relative 1e-12 on the mass, 1e-12 of the peak on values
    ok = rise <= 1e-12 and low >= -1e-12 * peak
    return EstimateReport.build(
        "mass_positivity",
        len(hist),
        min(-rise, low / peak),
        None,
        t,
        1e-12,
        {"max_mass_increase": rise, "min_value": low, "final_mass": float(masses[-1]), "steps": len(hist)},
        passed=ok,
    )


def symmetry_report(sc: StructureConstants, cfg: HeatConfig) -> EstimateReport:
    small = CarnotChart(sc, 2.0, (2.0,) * sc.h, cfg.spacing, (65,) * sc.h)
    h = cfg.spacing
    a = (4 * h, 0.0) + (0.0,) * sc.h
    b = (-2 * h, 4 * h) + tuple(float(z[34]) for z in small.z_nodes)
    pab, pba, rel = kernel_symmetry(small, a, b, cfg.symmetry_time)
    return EstimateReport.build(
        "kernel_symmetry", 1, -rel, (a, b), cfg.symmetry_time, 1e-8, {"p_ab": pab, "p_ba": pba, "relative": rel}
    )


def run_heat_suite(sc: StructureConstants, p: CDParams, cfg: HeatConfig | None = None) -> dict[str, EstimateReport]:
    cfg = cfg or HeatConfig()
    chart = cfg.chart(sc)
    coarse = cfg.chart(sc, cfg.coarse_spacing)
    tol = cfg.c_tol * cfg.spacing
    out: dict[str, EstimateReport] = {}
    out["mass_positivity"] = mass_and_positivity(chart, cfg.monitor_time)
    out["kernel_symmetry"] = symmetry_report(sc, cfg)

    origin = (0.0,) * (sc.d + sc.h)
    ly_fine = check_li_yau(near_delta(chart, origin), p, cfg.li_yau_times, tol)
    ly_coarse = check_li_yau(near_delta(coarse, origin), p, cfg.li_yau_times, cfg.c_tol * cfg.coarse_spacing)
    shrink = refinement_shrinks(ly_coarse, ly_fine)
    ly_fine.details.update(
        coarse_violation=violation(ly_coarse), fine_violation=violation(ly_fine), shrinks=shrink,
        coarse_spacing=cfg.coarse_spacing,
    )
    ly_fine.passed = ly_fine.passed and shrink
    out["li_yau"] = ly_fine

    bump = gaussian_bump(chart, cfg.bump_sigma, cfg.bump_sigma)
    s, t = cfg.harnack_times
    out["harnack"] = check_harnack(bump, default_harnack_pairs(chart, s, t), p, cfg.harnack_tol)
    out.update(check_semigroup_laws(bump, p, tol, cfg.semigroup_times, cfg.kernel_times))
    out["variational"] = check_variational(bump, cfg.variational_T, p, tol)
    return out
