"""Exponential-coordinate charts and the heat solver.

The field is stored as its Fourier transform in the vertical coordinates.
Horizontal derivatives use exact flows: moving by ``h`` along ``X_i`` shifts
``x_i`` by ``h`` and each ``z_m`` by ``s_m = -(h/2) sum_l gamma^m_{il} x_l``,
which in Fourier space is the phase ``exp(i xi . s)``.  With forward
differences ``D_i`` along these flows the discrete sub-Laplacian is
``-sum D_i^T D_i = sum (S_i^+ + S_i^- - 2) / h^2``: symmetric, and a convex
combination of shifts whenever ``dt <= h^2 / (2d)``.  Shifting a nonnegative
trigonometric polynomial keeps it nonnegative, so positivity is exact for
data built by :func:`fejer_smooth`.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numba
import numpy as np

from subcurv.errors import CFLViolation, InvalidParameter, NonFiniteValue, NotCarnot, ShapeMismatch
from subcurv.structures import StructureConstants


@dataclass(frozen=True)
class CarnotChart:
    """Grid on ``[-bx, bx]^d x prod [-bz_m, bz_m)``; horizontal nodes ``k h``, vertical nodes odd in number."""

    sc: StructureConstants
    half_width: float
    z_half_width: tuple[float, ...]
    spacing: float
    nz: tuple[int, ...]
    vertical_periodic: bool = field(default=True)

    def __post_init__(self) -> None:
        if not self.sc.is_step2_carnot:
            raise NotCarnot("heat charts need a step-2 Carnot structure")
        nz = tuple(int(n) for n in (self.nz if isinstance(self.nz, (tuple, list)) else (self.nz,) * self.sc.h))
        zw = self.z_half_width
        zw = tuple(float(z) for z in (zw if isinstance(zw, (tuple, list)) else (zw,) * self.sc.h))
        object.__setattr__(self, "nz", nz)
        object.__setattr__(self, "z_half_width", zw)
        if len(nz) != self.sc.h or len(zw) != self.sc.h:
            raise ShapeMismatch("one vertical size per vertical direction")
        if any(n < 1 or n % 2 == 0 for n in nz):
            raise InvalidParameter("vertical node counts must be odd")
        if self.spacing <= 0 or self.half_width < self.spacing:
            raise InvalidParameter("need 0 < spacing <= half_width")
        if not self.vertical_periodic:
            raise InvalidParameter("only periodic vertical boundaries are supported")

    @classmethod
    def heisenberg_default(cls, sc: StructureConstants, spacing: float = 0.0625, nz: int = 129) -> "CarnotChart":
        return cls(sc, 4.0, (4.0,), spacing, (nz,))

    @property
    def d(self) -> int:
        return self.sc.d

    @property
    def h(self) -> int:
        return self.sc.h

    @property
    def radius(self) -> int:
        return int(round(self.half_width / self.spacing))

    @property
    def n_horizontal(self) -> int:
        return 2 * self.radius + 1

    @cached_property
    def x_nodes(self) -> np.ndarray:
        return self.spacing * np.arange(-self.radius, self.radius + 1)

    @cached_property
    def z_nodes(self) -> tuple[np.ndarray, ...]:
        out = []
        for n, bz in zip(self.nz, self.z_half_width):
            dz = 2 * bz / n
            out.append(dz * (np.arange(n) - (n - 1) // 2))
        return tuple(out)

    @property
    def dz(self) -> tuple[float, ...]:
        return tuple(2 * bz / n for n, bz in zip(self.nz, self.z_half_width))

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_horizontal,) * self.d + self.nz

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.d * math.prod(self.dz)

    @cached_property
    def gamma(self) -> np.ndarray:
        return np.array([[[float(x) for x in row] for row in plane] for plane in self.sc.gamma]).reshape(
            self.h, self.d, self.d
        )

    @cached_property
    def frequencies(self) -> tuple[np.ndarray, ...]:
        """Angular frequencies, broadcast to the spectral array shape."""
        out = []
        for m, (n, bz) in enumerate(zip(self.nz, self.z_half_width)):
            period = 2 * bz
            f = np.fft.rfftfreq(n, d=period / n) if m == self.h - 1 else np.fft.fftfreq(n, d=period / n)
            shape = [1] * (self.d + self.h)
            shape[self.d + m] = f.size
            out.append((2 * np.pi * f).reshape(shape))
        return tuple(out)

    @cached_property
    def spectral_shape(self) -> tuple[int, ...]:
        return (self.n_horizontal,) * self.d + self.nz[:-1] + (self.nz[-1] // 2 + 1,)

    @cached_property
    def z_phase(self) -> np.ndarray:
        """``exp(-i xi . z_0)``: the vertical grid starts at ``z_0``, not at 0."""
        ph = np.zeros(self.spectral_shape[self.d :], dtype=float)
        for m, (xi, zn) in enumerate(zip(self.frequencies, self.z_nodes)):
            ph = ph + xi.reshape(xi.shape[self.d :]) * zn[0]
        return np.exp(-1j * ph)

    def flow_phases(self) -> list[np.ndarray]:
        """``exp(i xi . s)`` for the unit step along each ``X_i``; broadcastable."""
        out = []
        x = self.x_nodes
        for i in range(self.d):
            arg = 0.0
            for m in range(self.h):
                s = 0.0
                for l in range(self.d):
                    g = self.gamma[m, i, l]
                    if g:
                        shape = [1] * (self.d + self.h)
                        shape[l] = x.size
                        s = s + (-self.spacing / 2) * g * x.reshape(shape)
                arg = arg + self.frequencies[m] * s
            out.append(np.exp(1j * arg) if not np.isscalar(arg) else np.ones(1))
        return out

    def to_dict(self) -> dict:
        return {
            "structure": self.sc.to_document(),
            "half_width": self.half_width,
            "z_half_width": list(self.z_half_width),
            "spacing": self.spacing,
            "nz": list(self.nz),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CarnotChart":
        return cls(
            StructureConstants.from_document(doc["structure"]),
            float(doc["half_width"]),
            tuple(doc["z_half_width"]),
            float(doc["spacing"]),
            tuple(doc["nz"]),
        )

    def index_of(self, point) -> tuple[int, ...]:
        """Grid index of a node; raises if ``point`` is not (close to) a node."""
        idx = []
        for k in range(self.d):
            j = point[k] / self.spacing + self.radius
            idx.append(int(round(j)))
        for m in range(self.h):
            zn = self.z_nodes[m]
            idx.append(int(round((point[self.d + m] - zn[0]) / self.dz[m])))
        if any(not 0 <= i < n for i, n in zip(idx, self.shape)):
            raise InvalidParameter(f"point {point} outside the chart")
        return tuple(idx)

    def point_of(self, idx) -> tuple[float, ...]:
        return tuple(float(self.x_nodes[i]) for i in idx[: self.d]) + tuple(
            float(self.z_nodes[m][idx[self.d + m]]) for m in range(self.h)
        )


# -- spectral helpers ---------------------------------------------------------


def _vertical_axes(chart: CarnotChart) -> tuple[int, ...]:
    return tuple(range(chart.d, chart.d + chart.h))


def to_spectral(chart: CarnotChart, values: np.ndarray) -> np.ndarray:
    return np.fft.rfftn(values, axes=_vertical_axes(chart))


def to_physical(chart: CarnotChart, coeffs: np.ndarray) -> np.ndarray:
    return np.fft.irfftn(coeffs, s=chart.nz, axes=_vertical_axes(chart))


def shift(a: np.ndarray, axis: int, step: int) -> np.ndarray:
    """``out[k] = a[k + step]`` along ``axis``, zero outside (absorbing boundary)."""
    out = np.zeros_like(a)
    n = a.shape[axis]
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    if step > 0:
        src[axis], dst[axis] = slice(step, n), slice(0, n - step)
    else:
        src[axis], dst[axis] = slice(0, n + step), slice(-step, n)
    out[tuple(dst)] = a[tuple(src)]
    return out


def fejer_weights(chart: CarnotChart) -> np.ndarray:
    """Multipliers ``prod_m (1 - |k_m| / (K_m + 1))`` on the spectral grid."""
    w = 1.0
    for m, n in enumerate(chart.nz):
        K = (n - 1) // 2
        k = np.fft.rfftfreq(n, d=1 / n) if m == chart.h - 1 else np.fft.fftfreq(n, d=1 / n)
        shape = [1] * (chart.d + chart.h)
        shape[chart.d + m] = k.size
        w = w * (1 - np.abs(k) / (K + 1)).reshape(shape)
    return w


def fejer_smooth(chart: CarnotChart, values: np.ndarray) -> np.ndarray:
    """Spectral coefficients of a trigonometric polynomial that is >= 0 wherever ``values`` is."""
    return to_spectral(chart, values) * fejer_weights(chart)


@numba.njit(cache=True, fastmath=True)
def _laplacian_2d(c, px, py, inv_h2):
    # d = 2, one vertical direction: px[j, k] is the X-phase at row j, py[i, k] the Y-phase at column i
    nx, ny, nk = c.shape
    out = np.empty_like(c)
    for i in range(nx):
        for j in range(ny):
            for k in range(nk):
                out[i, j, k] = -4.0 * c[i, j, k]
    for i in range(nx - 1):
        for j in range(ny):
            for k in range(nk):
                p = px[j, k]
                out[i, j, k] += c[i + 1, j, k] * p
                out[i + 1, j, k] += c[i, j, k] * p.conjugate()
    for i in range(nx):
        for j in range(ny - 1):
            for k in range(nk):
                p = py[i, k]
                out[i, j, k] += c[i, j + 1, k] * p
                out[i, j + 1, k] += c[i, j, k] * p.conjugate()
    for i in range(nx):
        for j in range(ny):
            for k in range(nk):
                out[i, j, k] *= inv_h2
    return out


class Stencil:
    """Flow-shift operators of one chart."""

    def __init__(self, chart: CarnotChart):
        self.chart = chart
        self.phases = chart.flow_phases()
        self._fast = chart.d == 2 and chart.h == 1
        if self._fast:
            n, nk = chart.n_horizontal, chart.spectral_shape[-1]
            self._px = np.ascontiguousarray(np.broadcast_to(self.phases[0], (1, n, nk))[0])
            self._py = np.ascontiguousarray(np.broadcast_to(self.phases[1], (n, 1, nk))[:, 0, :])

    def plus(self, c: np.ndarray, i: int) -> np.ndarray:
        return shift(c, i, 1) * self.phases[i]

    def minus(self, c: np.ndarray, i: int) -> np.ndarray:
        return shift(c, i, -1) * np.conj(self.phases[i])

    def laplacian(self, c: np.ndarray) -> np.ndarray:
        h2 = self.chart.spacing**2
        if self._fast:
            return _laplacian_2d(np.ascontiguousarray(c), self._px, self._py, 1.0 / h2)
        out = -2 * self.chart.d * c
        for i in range(self.chart.d):
            out += self.plus(c, i) + self.minus(c, i)
        return out / h2

    def centered_laplacian(self, c: np.ndarray) -> np.ndarray:
        """Composition of centered flow differences ``(S^+ - S^-)/(2h)`` with itself."""
        out = np.zeros_like(c)
        for i in range(self.chart.d):
            out += self.derivative(self.derivative(c, i), i)
        return out

    def derivative(self, c: np.ndarray, i: int) -> np.ndarray:
        """Centered ``X_i`` along the exact flow (spectral coefficients)."""
        return (self.plus(c, i) - self.minus(c, i)) / (2 * self.chart.spacing)

    def vertical_derivative(self, c: np.ndarray, m: int) -> np.ndarray:
        return 1j * self.chart.frequencies[m] * c


def max_stable_dt(chart: CarnotChart) -> float:
    return chart.spacing**2 / (2 * chart.d)


# -- fields -------------------------------------------------------------------


@dataclass
class HeatField:
    chart: CarnotChart
    coeffs: np.ndarray
    time: float = 0.0

    @classmethod
    def from_values(cls, chart: CarnotChart, values: np.ndarray, time: float = 0.0, smooth: bool = True) -> "HeatField":
        values = np.asarray(values, dtype=float)
        if values.shape != chart.shape:
            raise ShapeMismatch(f"values shape {values.shape} != chart shape {chart.shape}")
        c = fejer_smooth(chart, values) if smooth else to_spectral(chart, values)
        return cls(chart, c, time)

    @classmethod
    def zeros(cls, chart: CarnotChart) -> "HeatField":
        return cls(chart, np.zeros(chart.spectral_shape, dtype=complex))

    @property
    def values(self) -> np.ndarray:
        return to_physical(self.chart, self.coeffs)

    def mass(self) -> float:
        zero = (slice(None),) * self.chart.d + (0,) * self.chart.h
        return float(np.sum(self.coeffs[zero].real)) * self.chart.cell_volume

    def copy(self) -> "HeatField":
        return HeatField(self.chart, self.coeffs.copy(), self.time)

    def at(self, point) -> float:
        """Exact evaluation of the vertical trigonometric polynomial at a horizontal node."""
        ch = self.chart
        idx = ch.index_of(point)
        c = self.coeffs[idx[: ch.d]]
        arg = 0.0
        for m in range(ch.h):
            xi = ch.frequencies[m].reshape(ch.frequencies[m].shape[ch.d :])
            arg = arg + xi * (point[ch.d + m] - ch.z_nodes[m][0])
        terms = c * np.exp(1j * arg)
        # real-FFT half spectrum: count conjugate partners twice except the zero column
        last = terms.shape[-1]
        weights = np.full(last, 2.0)
        weights[0] = 1.0
        n = ch.nz[-1]
        if n % 2 == 0:
            weights[-1] = 1.0
        return float(np.sum(terms.real * weights) / math.prod(ch.nz))


def near_delta(chart: CarnotChart, point) -> HeatField:
    """Unit-mass field: one horizontal cell times a Fejér kernel in the vertical variables."""
    vals = np.zeros(chart.shape)
    vals[chart.index_of(point)] = 1.0 / chart.cell_volume
    return HeatField.from_values(chart, vals)


def gaussian_bump(chart: CarnotChart, sigma: float = 0.5, sigma_z: float = 0.5, center=None) -> HeatField:
    grids = np.meshgrid(*([chart.x_nodes] * chart.d), *chart.z_nodes, indexing="ij")
    center = center or (0.0,) * (chart.d + chart.h)
    r2 = sum((g - c) ** 2 for g, c in zip(grids[: chart.d], center))
    z2 = sum((g - c) ** 2 for g, c in zip(grids[chart.d :], center[chart.d :]))
    return HeatField.from_values(chart, np.exp(-r2 / (2 * sigma**2) - z2 / (2 * sigma_z**2)))


@dataclass
class StepRecord:
    time: float
    mass: float
    min_value: float | None


def evolve(
    field: HeatField,
    t_target: float,
    dt: float | None = None,
    monitor: bool = False,
    callback=None,
) -> HeatField:
    """Explicit Euler steps ``u <- u + dt L u`` up to ``t_target``; the last step is shortened.

    ``callback(field, lu)`` is called after every step with the stencil value
    ``L u`` of the state *before* the step, so ``lu`` is the exact discrete
    time derivative used by that step.
    """
    chart = field.chart
    bound = max_stable_dt(chart)
    if dt is None:
        dt = 0.5 * bound
    if dt <= 0 or dt > bound * (1 + 1e-12):
        raise CFLViolation(f"dt = {dt} outside (0, {bound}]")
    if t_target < field.time:
        raise InvalidParameter("t_target precedes the field time")
    st = Stencil(chart)
    out = field.copy()
    history: list[StepRecord] = []
    while out.time < t_target - 1e-15:
        step = min(dt, t_target - out.time)
        lu = st.laplacian(out.coeffs)
        out.coeffs += step * lu
        out.time = t_target if t_target - out.time - step < 1e-15 else out.time + step
        if not np.isfinite(out.coeffs).all():
            raise NonFiniteValue(f"non-finite values at t = {out.time}")
        if monitor:
            history.append(StepRecord(out.time, out.mass(), float(out.values.min())))
        if callback is not None:
            callback(out, lu)
    if monitor:
        out.history = history  # type: ignore[attr-defined]
    return out


# -- snapshots ----------------------------------------------------------------

SNAPSHOT_MAGIC = b"SRCDHEAT"
SNAPSHOT_VERSION = 1


def write_snapshot(path: str | Path, field: HeatField) -> None:
    """``magic | uint32 version | uint32 header length | JSON header | <f8 values (C order)``."""
    header = json.dumps(
        {"chart": field.chart.to_dict(), "time": field.time, "shape": list(field.chart.shape), "dtype": "<f8"},
        sort_keys=True,
    ).encode()
    values = np.ascontiguousarray(field.values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<II", SNAPSHOT_VERSION, len(header)))
        fh.write(header)
        fh.write(values.tobytes(order="C"))


def read_snapshot(path: str | Path) -> HeatField:
    data = Path(path).read_bytes()
    if data[:8] != SNAPSHOT_MAGIC:
        raise ValueError("not a heat snapshot")
    version, n = struct.unpack("<II", data[8:16])
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    header = json.loads(data[16 : 16 + n])
    chart = CarnotChart.from_dict(header["chart"])
    values = np.frombuffer(data[16 + n :], dtype="<f8").reshape(header["shape"])
    return HeatField.from_values(chart, values, header["time"], smooth=False)
