"""CD constants of Carnot groups and closed-form geometric constants.

Floating point throughout. Eigenvalues come from a cyclic Jacobi method and
the diameter integral from an adaptive Gauss-Kronrod (7/15) rule, both kept
local so each result has a fully visible error control.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from subcurv.errors import (
    NegativeInput,
    NoConvergence,
    NonPositiveTime,
    NotCarnot,
    NotSymmetric,
    QuadratureFailure,
    InvalidParameter,
)
from subcurv.forms import CDParams
from subcurv.structures import StructureConstants


def symmetric_eigen(A, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a symmetric matrix."""
    a = np.array(A, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    scale = np.linalg.norm(a)
    if np.linalg.norm(a - a.T) > 1e-12 * max(scale, np.finfo(float).tiny):
        raise NotSymmetric("matrix is not symmetric within 1e-12 relative")
    a = (a + a.T) / 2
    v = np.eye(n)
    if n == 0 or scale == 0:
        return np.zeros(n), v
    target = 1e-14 * scale
    mask = ~np.eye(n, dtype=bool)
    for sweep in range(max_sweeps):
        off = float(np.linalg.norm(a[mask]))
        if off < target:
            break
        # threshold pass: skip rotations whose pivot is already negligible
        thresh = off / (4 * n * n) if sweep < 3 else 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= thresh or apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(apq) < 1e-150 * abs(diff):
                    # theta would overflow; tan of the angle is apq / diff to full precision
                    t = apq / diff
                else:
                    theta = diff / (2 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = rot_p, rot_q
                rot_p = c * a[p, :] - s * a[q, :]
                rot_q = s * a[p, :] + c * a[q, :]
                a[p, :], a[q, :] = rot_p, rot_q
                vp = c * v[:, p] - s * v[:, q]
                vq = s * v[:, p] + c * v[:, q]
                v[:, p], v[:, q] = vp, vq
    else:
        if float(np.linalg.norm(a[mask])) >= target:
            raise NoConvergence(f"Jacobi sweeps did not converge in {max_sweeps} sweeps")
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def gamma_arrays(sc: StructureConstants) -> np.ndarray:
    """``J[m]`` = the ``d x d`` matrix with entries ``gamma[m][i][j]``."""
    return np.array([[[float(x) for x in row] for row in plane] for plane in sc.gamma], dtype=float).reshape(
        sc.h, sc.d, sc.d
    )


@dataclass(frozen=True)
class CarnotConstants:
    rho2: float
    kappa: float
    is_htype: bool


def carnot_cd_constants(sc: StructureConstants) -> CarnotConstants:
    if not sc.is_step2_carnot:
        raise NotCarnot(f"{sc.name or 'structure'} is not a step-2 Carnot structure")
    J = gamma_arrays(sc)
    M = np.einsum("mij,nij->mn", J, J)
    K = np.einsum("mij,mkj->ik", J, J)
    rho2 = symmetric_eigen(M)[0][0] / 4
    kappa = symmetric_eigen(K)[0][-1]
    eye = np.eye(sc.d)
    htype = all(
        np.max(np.abs(J[m].T @ J[n] + J[n].T @ J[m] - (2 * eye if m == n else 0))) <= 1e-12
        for m in range(sc.h)
        for n in range(sc.h)
    )
    return CarnotConstants(float(rho2), float(kappa), bool(htype))


def brute_force_extrema(sc: StructureConstants, samples: int, seed: int) -> tuple[float, float]:
    """Sampled ``min`` of the vertical form (divided by 4) and ``max`` of the horizontal one."""
    J = gamma_arrays(sc)
    rng = np.random.default_rng(seed)
    eta = rng.standard_normal((samples, sc.h))
    eta /= np.linalg.norm(eta, axis=1, keepdims=True)
    x = rng.standard_normal((samples, sc.d))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    # |sum_m eta_m J_m|_F^2 and sum_{j,m} (sum_i gamma^m_ij x_i)^2
    q_v = np.sum(np.einsum("sm,mij->sij", eta, J) ** 2, axis=(1, 2))
    q_h = np.sum(np.einsum("si,mij->smj", x, J) ** 2, axis=(1, 2))
    return float(q_v.min() / 4), float(q_h.max())


@dataclass(frozen=True)
class GeometricConstants:
    D: float
    alpha: float | None
    diameter_bound: float | None


def _floats(p: CDParams) -> tuple[float, float, float, float]:
    return float(p.rho1), float(p.rho2), float(p.kappa), float(p.d)


def geometric_constants(p: CDParams) -> GeometricConstants:
    rho1, rho2, kappa, d = _floats(p)
    D = d * (1 + 3 * kappa / (2 * rho2))
    if rho1 <= 0:
        return GeometricConstants(D, None, None)
    alpha = 2 * rho1 * rho2 / (3 * (rho2 + kappa))
    diam = 2 * math.sqrt(3) * math.pi * math.sqrt((rho2 + kappa) / (rho1 * rho2) * (1 + 3 * kappa / (2 * rho2)) * d)
    return GeometricConstants(D, alpha, diam)


def _positive_alpha(p: CDParams) -> tuple[float, float]:
    g = geometric_constants(p)
    if g.alpha is None:
        raise InvalidParameter("rho1 must be > 0")
    return g.D, g.alpha


def entropy_phi(x: float, p: CDParams) -> float:
    if x < 0:
        raise NegativeInput(f"x must be >= 0, got {x}")
    D, alpha = _positive_alpha(p)
    y = 2 * x / (alpha * D)
    if y == 0:
        return 0.0
    return D * ((1 + y) * math.log1p(y) - y * math.log(y))


def entropy_phi_prime(x: float, p: CDParams) -> float:
    D, alpha = _positive_alpha(p)
    if x <= 0:
        return math.inf
    return (2 / alpha) * math.log1p(alpha * D / (2 * x))


def entropy_phi_second(x: float, p: CDParams) -> float:
    D, alpha = _positive_alpha(p)
    return -2 * D / (x * (2 * x + alpha * D))


# Kronrod 15-point nodes/weights with the embedded 7-point Gauss rule (QUADPACK qk15).
_XGK = (
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
)
_WGK = (
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
)
_WG = (
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
)


def _gk15(f: Callable[[float], float], a: float, b: float) -> tuple[float, float]:
    c, hl = (a + b) / 2, (b - a) / 2
    fc = f(c)
    kron = _WGK[7] * fc
    gauss = _WG[3] * fc
    for k in range(7):
        dx = hl * _XGK[k]
        s = f(c - dx) + f(c + dx)
        kron += _WGK[k] * s
        if k % 2 == 1:
            gauss += _WG[k // 2] * s
    return kron * hl, abs((kron - gauss) * hl)


def adaptive_gk(f: Callable[[float], float], a: float, b: float, tol: float, max_panels: int = 2000) -> tuple[float, float]:
    """Globally adaptive Gauss-Kronrod integration; returns ``(value, error estimate)``."""
    panels = [(a, b, *_gk15(f, a, b))]
    while True:
        total = math.fsum(p[2] for p in panels)
        err = math.fsum(p[3] for p in panels)
        if err <= tol or len(panels) >= max_panels:
            return total, err
        k = max(range(len(panels)), key=lambda i: panels[i][3])
        lo, hi, _, _ = panels.pop(k)
        mid = (lo + hi) / 2
        panels.append((lo, mid, *_gk15(f, lo, mid)))
        panels.append((mid, hi, *_gk15(f, mid, hi)))


def diameter_closed_form(p: CDParams) -> float:
    D, alpha = _positive_alpha(p)
    return 2 * math.sqrt(2) * math.pi * math.sqrt(D / alpha)


def diameter_via_quadrature(p: CDParams, tol: float = 1e-8) -> float:
    """``-2 int_0^inf sqrt(x) Phi''(x) dx`` computed by quadrature after ``x = u^2``.

    The integral becomes ``8D int_0^inf du / (2u^2 + alpha D)``; it is cut at
    ``U = 40 D / tol`` where the analytic tail ``4D / U`` is below ``tol / 10``.
    """
    if tol <= 0:
        raise InvalidParameter("tol must be > 0")
    D, alpha = _positive_alpha(p)
    bd = alpha * D
    upper = 40 * D / tol
    tail = 8 * D * (math.pi / 2 - math.atan(upper * math.sqrt(2 / bd))) / math.sqrt(2 * bd)

    def f(u: float) -> float:
        return 8 * D / (2 * u * u + bd)

    # split at the natural scale so the first panel already resolves the bump
    scale = math.sqrt(bd / 2)
    breaks = [0.0, scale, 10 * scale, 100 * scale, upper]
    breaks = sorted({b for b in breaks if b <= upper})
    value, err = 0.0, 0.0
    for lo, hi in zip(breaks, breaks[1:]):
        v, e = adaptive_gk(f, lo, hi, tol / (2 * len(breaks)))
        value += v
        err += e
    if err > tol:
        raise QuadratureFailure(f"error estimate {err:.3e} exceeds tol {tol:.3e}")
    result = value + tail
    if not math.isclose(diameter_closed_form(p), geometric_constants(p).diameter_bound, rel_tol=1e-12):
        raise QuadratureFailure("closed forms of the diameter bound disagree")
    return result


def kernel_global_bound(t: float, p: CDParams) -> float:
    if t <= 0:
        raise NonPositiveTime(f"t must be > 0, got {t}")
    D, alpha = _positive_alpha(p)
    return (-math.expm1(-alpha * t)) ** (-D / 2)


def is_htype(sc: StructureConstants) -> bool:
    return carnot_cd_constants(sc).is_htype


def carnot_params(sc: StructureConstants) -> CDParams:
    """``CD(0, rho2, kappa, d)`` for a step-2 Carnot structure, with constants rationalized."""
    from fractions import Fraction

    c = carnot_cd_constants(sc)
    rat = lambda x: Fraction(x).limit_denominator(10**6)
    return CDParams(0, rat(c.rho2), rat(c.kappa), sc.d)


__all__: Sequence[str] = (
    "CarnotConstants",
    "GeometricConstants",
    "adaptive_gk",
    "brute_force_extrema",
    "carnot_cd_constants",
    "carnot_params",
    "diameter_closed_form",
    "diameter_via_quadrature",
    "entropy_phi",
    "entropy_phi_prime",
    "entropy_phi_second",
    "geometric_constants",
    "kernel_global_bound",
    "symmetric_eigen",
)
