"""Periodic-box spectral fields and the free Klein-Gordon propagator.

Everything lives on a cubic lattice with period L and n samples per axis.
Units are dimensionless with mass m = 1, so the dispersion relation is
w(xi) = <xi> = (1 + |xi|^2)^(1/2) and the half-wave flows are exp(+-it<D>).
Fields are immutable value objects; every operation returns a new field.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

PHYSICAL = "physical"
FREQUENCY = "frequency"


def bracket(xi, k: int = 0):
    """Modified Japanese bracket <xi>_k = (2^(-2k) + |xi|^2)^(1/2).

    `xi` is a single 3-vector or an array whose last axis has length 3.
    k = 0 gives the standard Klein-Gordon weight <xi>.
    """
    xi = np.asarray(xi, dtype=float)
    return np.sqrt(4.0 ** (-k) + np.sum(xi * xi, axis=-1))


def bracket_of_norm(r, k: int = 0):
    """<r>_k for a scalar radius r >= 0 (vectorized)."""
    r = np.asarray(r, dtype=float)
    return np.sqrt(4.0 ** (-k) + r * r)


@dataclass(frozen=True)
class Grid:
    """Cubic periodic lattice and its dual frequency lattice.

    n_per_axis must be even and >= 8.  The dual lattice is
    xi_j = 2*pi*j/L for j in the centered integer cube; the single
    Nyquist plane per axis (j = -n/2) is zeroed by convention so the
    lattice is exactly symmetric under xi -> -xi.
    """

    n_per_axis: int
    box_length: float

    def __post_init__(self):
        if self.n_per_axis % 2 != 0 or self.n_per_axis < 8:
            raise ValueError("n_per_axis must be even and >= 8")
        if not self.box_length > 0:
            raise ValueError("box_length must be positive")

    @property
    def dx(self) -> float:
        return self.box_length / self.n_per_axis

    @property
    def dxi(self) -> float:
        return 2.0 * np.pi / self.box_length

    @property
    def cell_volume(self) -> float:
        return self.dx ** 3

    @cached_property
    def xi_axis(self) -> np.ndarray:
        """1-d dual axis in FFT ordering (rad per unit length)."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_per_axis, d=self.dx)

    @cached_property
    def xi(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable dual-lattice components (xi1, xi2, xi3)."""
        a = self.xi_axis
        n = self.n_per_axis
        return (a.reshape(n, 1, 1), a.reshape(1, n, 1), a.reshape(1, 1, n))

    @cached_property
    def xi_norm(self) -> np.ndarray:
        x1, x2, x3 = self.xi
        return np.sqrt(x1 * x1 + x2 * x2 + x3 * x3)

    @cached_property
    def kg_weight(self) -> np.ndarray:
        """<xi> on the lattice."""
        return np.sqrt(1.0 + self.xi_norm ** 2)

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """Boolean mask of modes kept (False on the Nyquist planes)."""
        keep1d = np.ones(self.n_per_axis, dtype=bool)
        keep1d[self.n_per_axis // 2] = False
        n = self.n_per_axis
        return (keep1d.reshape(n, 1, 1) & keep1d.reshape(1, n, 1)
                & keep1d.reshape(1, 1, n))

    @cached_property
    def x_axis(self) -> np.ndarray:
        return self.dx * np.arange(self.n_per_axis)

    def max_resolved_xi(self) -> float:
        """Largest |xi| along an axis with the Nyquist plane removed."""
        return self.dxi * (self.n_per_axis // 2 - 1)

    def zero_nyquist(self, spectrum: np.ndarray) -> np.ndarray:
        out = spectrum.copy()
        m = self.n_per_axis // 2
        out[..., m, :, :] = 0.0
        out[..., :, m, :] = 0.0
        out[..., :, :, m] = 0.0
        return out


def _fft(values):
    return np.fft.fftn(values, axes=(-3, -2, -1), norm="ortho")


def _ifft(values):
    return np.fft.ifftn(values, axes=(-3, -2, -1), norm="ortho")


@dataclass(frozen=True)
class ScalarField:
    """Complex scalar samples on a Grid, tagged physical or frequency."""

    grid: Grid
    values: np.ndarray
    space: str = PHYSICAL

    def __post_init__(self):
        n = self.grid.n_per_axis
        if self.values.shape != (n, n, n):
            raise ValueError("values shape does not match grid")
        if self.space not in (PHYSICAL, FREQUENCY):
            raise ValueError(f"unknown space tag {self.space!r}")

    @staticmethod
    def from_spectrum(grid: Grid, spectrum: np.ndarray) -> "ScalarField":
        return ScalarField(grid, grid.zero_nyquist(np.ascontiguousarray(
            spectrum, dtype=complex)), FREQUENCY)

    def to_frequency(self) -> "ScalarField":
        if self.space == FREQUENCY:
            return self
        return ScalarField(self.grid, self.grid.zero_nyquist(_fft(self.values)),
                           FREQUENCY)

    def to_physical(self) -> "ScalarField":
        if self.space == PHYSICAL:
            return self
        return ScalarField(self.grid, _ifft(self.values), PHYSICAL)

    def l2_norm(self) -> float:
        """L^2(box) norm; by Parseval identical in either space."""
        return float(np.linalg.norm(self.values)) * self.grid.dx ** 1.5

    def __add__(self, other):
        _check_compatible(self, other)
        return ScalarField(self.grid, self.values + other.values, self.space)

    def __sub__(self, other):
        _check_compatible(self, other)
        return ScalarField(self.grid, self.values - other.values, self.space)

    def __mul__(self, c):
        return ScalarField(self.grid, self.values * c, self.space)

    __rmul__ = __mul__


@dataclass(frozen=True)
class SpinorField:
    """Four complex components sharing one grid and one space tag."""

    grid: Grid
    values: np.ndarray  # shape (4, n, n, n)
    space: str = PHYSICAL

    def __post_init__(self):
        n = self.grid.n_per_axis
        if self.values.shape != (4, n, n, n):
            raise ValueError("spinor values must have shape (4, n, n, n)")
        if self.space not in (PHYSICAL, FREQUENCY):
            raise ValueError(f"unknown space tag {self.space!r}")

    @staticmethod
    def from_components(components) -> "SpinorField":
        comps = list(components)
        if len(comps) != 4:
            raise ValueError("a spinor needs exactly 4 components")
        g = comps[0].grid
        s = comps[0].space
        for c in comps[1:]:
            if c.grid != g or c.space != s:
                raise ValueError("spinor components must share grid and space")
        return SpinorField(g, np.stack([c.values for c in comps]), s)

    def component(self, i: int) -> ScalarField:
        return ScalarField(self.grid, self.values[i], self.space)

    def to_frequency(self) -> "SpinorField":
        if self.space == FREQUENCY:
            return self
        return SpinorField(self.grid, self.grid.zero_nyquist(_fft(self.values)),
                           FREQUENCY)

    def to_physical(self) -> "SpinorField":
        if self.space == PHYSICAL:
            return self
        return SpinorField(self.grid, _ifft(self.values), PHYSICAL)

    def l2_norm(self) -> float:
        return float(np.linalg.norm(self.values)) * self.grid.dx ** 1.5

    def h1_norm(self) -> float:
        hat = self.to_frequency()
        w = self.grid.kg_weight
        return float(np.sqrt(np.sum(np.abs(hat.values) ** 2 * w ** 2))) \
            * self.grid.dx ** 1.5

    def __add__(self, other):
        _check_compatible(self, other)
        return SpinorField(self.grid, self.values + other.values, self.space)

    def __sub__(self, other):
        _check_compatible(self, other)
        return SpinorField(self.grid, self.values - other.values, self.space)

    def __mul__(self, c):
        return SpinorField(self.grid, self.values * c, self.space)

    __rmul__ = __mul__


def _check_compatible(a, b):
    if a.grid != b.grid or a.space != b.space:
        raise ValueError("fields live on different grids or space tags")


def apply_multiplier(f, symbol):
    """Apply a Fourier multiplier.

    `symbol` is either a callable (xi1, xi2, xi3) -> complex array (scalar
    multiplier, acts on scalar or spinor fields componentwise) or a callable
    returning a (4, 4, ...) matrix array which acts on the 4 spinor
    components per mode.  Matrix symbols are rejected on scalar fields.
    """
    hat = f.to_frequency()
    m = symbol(*f.grid.xi)
    m = np.asarray(m)
    is_matrix = m.ndim >= 2 and m.shape[:2] == (4, 4) and m.ndim == 5
    if isinstance(f, ScalarField):
        if is_matrix:
            raise ValueError("matrix symbol applied to a ScalarField")
        out = hat.values * m
        return ScalarField(f.grid, f.grid.zero_nyquist(out), FREQUENCY)
    if is_matrix:
        out = np.einsum("ab...,b...->a...", m, hat.values)
    else:
        out = hat.values * m
    return SpinorField(f.grid, f.grid.zero_nyquist(out), FREQUENCY)


def free_propagator(f, t: float, sign: int = +1):
    """exp(sign * i t <D>) f, exact per mode (no time-stepping error)."""
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    hat = f.to_frequency()
    phase = np.exp(1j * sign * t * f.grid.kg_weight)
    cls = type(f)
    return cls(f.grid, hat.values * phase, FREQUENCY)


def kg_solution(f0: ScalarField, f1: ScalarField, t: float) -> ScalarField:
    """Klein-Gordon solution with data u(0) = f0, u_t(0) = f1.

    u(t) = cos(t<D>) f0 + sin(t<D>) <D>^-1 f1, the half-wave combination
    (exp(it<D>) + exp(-it<D>))/2 f0 + (exp(it<D>) - exp(-it<D>))/(2i<D>) f1.
    """
    h0 = f0.to_frequency()
    h1 = f1.to_frequency()
    w = f0.grid.kg_weight
    out = np.cos(t * w) * h0.values + np.sin(t * w) / w * h1.values
    return ScalarField(f0.grid, f0.grid.zero_nyquist(out), FREQUENCY)


@dataclass(frozen=True)
class SpaceTimeSeries:
    """A time-sampled field history on one grid over a window [0, T].

    `values` has shape (M, n, n, n) for scalar histories or (M, 4, n, n, n)
    for spinor histories; `times` must be uniformly spaced.  The Hann taper
    used for all time-direction spectral analysis is attached once so
    modulation diagnostics agree across call sites.
    """

    grid: Grid
    times: np.ndarray
    values: np.ndarray
    space: str = PHYSICAL
    window: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("need at least two sample times")
        dt = np.diff(t)
        if np.any(dt <= 0):
            raise ValueError("times must be strictly increasing")
        if np.max(np.abs(dt - dt[0])) > 1e-12 * max(abs(t[-1]), 1.0):
            raise ValueError("times must be uniformly spaced")
        if self.values.shape[0] != t.size:
            raise ValueError("values leading axis must match times")
        if self.window is None:
            object.__setattr__(self, "window", np.hanning(t.size))

    @property
    def n_times(self) -> int:
        return self.times.size

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def field_at(self, i: int):
        if self.values.ndim == 5:
            return SpinorField(self.grid, self.values[i], self.space)
        return ScalarField(self.grid, self.values[i], self.space)

    def map_fields(self, fn) -> "SpaceTimeSeries":
        out = np.stack([fn(self.field_at(i)).values
                        for i in range(self.n_times)])
        return SpaceTimeSeries(self.grid, self.times, out, self.space,
                               self.window)


def free_series(f, times, sign: int = +1) -> SpaceTimeSeries:
    """Sampled free evolution exp(sign*it<D>) f on the given times."""
    hat = f.to_frequency()
    times = np.asarray(times, dtype=float)
    w = f.grid.kg_weight
    frames = np.stack([hat.values * np.exp(1j * sign * t * w) for t in times])
    return SpaceTimeSeries(f.grid, times, frames, FREQUENCY)


def mixed_norm(series: SpaceTimeSeries, p: float, q: float) -> float:
    """Discrete lab-frame L^p_t L^q_x norm of a series.

    Trapezoidal in time (so windowed measurements do not overweight the
    endpoints), exact lattice sums in space.  p or q may be inf.
    """
    dx3 = series.grid.cell_volume
    slices = []
    for i in range(series.n_times):
        v = series.field_at(i).to_physical().values
        a = np.abs(v)
        if np.isinf(q):
            slices.append(a.max())
        else:
            slices.append((np.sum(a ** q) * dx3) ** (1.0 / q))
    s = np.asarray(slices)
    if np.isinf(p):
        return float(s.max())
    wts = np.full(series.n_times, series.dt)
    wts[0] *= 0.5
    wts[-1] *= 0.5
    return float((np.sum(s ** p * wts)) ** (1.0 / p))
