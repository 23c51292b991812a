"""Frequency-localization machinery: radial dyadic cutoffs, spherical cap
covers with smooth degree-zero angular partitions, and modulation
projections relative to the characteristic surface tau = +-<xi>.

The radial transition profile is an order-7 polynomial smoothstep (C^3),
chosen for reproducibility over exp-bump numerics; only its support and
plateau matter for the identities verified downstream.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .spectral import (FREQUENCY, Grid, ScalarField, SpaceTimeSeries,
                       SpinorField, apply_multiplier)

#: gap used by the "well separated modulation" projection Q_{prec m};
#: Q_prec(m) sums bands mu <= m - MODULATION_GAP.
MODULATION_GAP = 10


def smoothstep7(x):
    """Order-7 smoothstep: 0 for x<=0, 1 for x>=1, C^3 at both ends."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return x ** 4 * (35.0 - 84.0 * x + 70.0 * x ** 2 - 20.0 * x ** 3)


def rho(s):
    """Even cutoff: 1 on [-1, 1], 0 outside (-2, 2), monotone between."""
    a = np.abs(np.asarray(s, dtype=float))
    return 1.0 - smoothstep7(a - 1.0)


def chi_k(y, k: int):
    """Annular cutoff chi_k(y) = rho(2^-k |y|) - rho(2^-k+1 |y|).

    `y` is a radius, an array of radii, or an array of 3-vectors
    (last axis length 3).  Support is {2^(k-1) <= |y| <= 2^(k+1)} with
    plateau value 1 at |y| = 2^k.
    """
    r = _radii(y)
    return rho(r * 2.0 ** (-k)) - rho(r * 2.0 ** (-k + 1))


def chi_le_k(y, k: int):
    """chi_{<=k}; the telescoping sum over l <= k collapses to a single rho."""
    return rho(_radii(y) * 2.0 ** (-k))


def chi_gt_k(y, k: int):
    return 1.0 - chi_le_k(y, k)


def chi_tilde_k(y, k: int):
    """Fattened annulus chi_(k-1) + chi_k + chi_(k+1)."""
    r = _radii(y)
    return rho(r * 2.0 ** (-k - 1)) - rho(r * 2.0 ** (-k + 2))


def _radii(y):
    y = np.asarray(y, dtype=float)
    if y.ndim >= 1 and y.shape[-1] == 3:
        return np.sqrt(np.sum(y * y, axis=-1))
    return np.abs(y)


def resolvable_k_range(grid: Grid) -> tuple[int, int]:
    """Dyadic indices k whose fattened annulus fits strictly inside the
    resolved ball and contains at least one lattice shell."""
    lo = int(np.ceil(np.log2(grid.dxi))) + 1
    hi = int(np.floor(np.log2(grid.max_resolved_xi()))) - 1
    return lo, hi


def project_k(f, k: int):
    """Littlewood-Paley piece P_k f."""
    return apply_multiplier(f, lambda x1, x2, x3:
                            chi_k(np.sqrt(x1**2 + x2**2 + x3**2), k))


def project_le_k(f, k: int):
    return apply_multiplier(f, lambda x1, x2, x3:
                            chi_le_k(np.sqrt(x1**2 + x2**2 + x3**2), k))


# ---------------------------------------------------------------------------
# spherical cap covers


def fibonacci_sphere(count: int) -> np.ndarray:
    """`count` roughly equidistributed unit vectors (golden-angle spiral)."""
    i = np.arange(count, dtype=float)
    z = 1.0 - (2.0 * i + 1.0) / count
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    golden = np.pi * (3.0 - np.sqrt(5.0))
    th = golden * i
    return np.column_stack([r * np.cos(th), r * np.sin(th), z])


@dataclass(frozen=True)
class Cap:
    """Spherical cap at angular level l with center direction omega."""

    level: int
    index: int
    omega: np.ndarray

    @property
    def radius(self) -> float:
        """Nominal angular scale 2^-l."""
        return 2.0 ** (-self.level)


class CapCover:
    """Symmetric, finitely overlapping cover of S^2 at angular level l.

    Centers are Fibonacci-sphere points symmetrized with their antipodes;
    the angular cutoffs eta_kappa are normalized smoothstep bumps of the
    angle to each center (outer support radius 2^(1-l), plateau 2^-l), so
    sum_kappa eta_kappa = 1 holds exactly away from the origin and each
    eta_kappa is homogeneous of degree zero by construction.
    """

    def __init__(self, level: int):
        if level < 0:
            raise ValueError("cap level must be >= 0")
        self.level = level
        base = fibonacci_sphere(int(np.ceil(3 * 4 ** level)))
        centers = _symmetrize(base)
        self.caps = tuple(Cap(level, i, centers[i])
                          for i in range(len(centers)))
        self._centers = centers

    def __len__(self) -> int:
        return len(self.caps)

    def __iter__(self):
        return iter(self.caps)

    @property
    def centers(self) -> np.ndarray:
        return self._centers

    def antipode_of(self, cap: Cap) -> Cap:
        d = self._centers @ (-cap.omega)
        return self.caps[int(np.argmax(d))]

    def _bumps(self, units: np.ndarray, enlarged: bool) -> np.ndarray:
        """Raw bump values, shape (ncaps, npoints)."""
        cosang = np.clip(self._centers @ units.T, -1.0, 1.0)
        ang = np.arccos(cosang)
        # support radius 0.9 * 2^(1-l): wide enough that the cover has no
        # gaps, narrow enough that no direction meets more than 8 supports
        outer = 0.9 * 2.0 ** (1 - self.level)
        if enlarged:
            # plateau covers the whole eta support, so eta_tilde*eta = eta
            return 1.0 - smoothstep7(ang / outer - 1.0)
        return 1.0 - smoothstep7(2.0 * ang / outer - 1.0)

    def eta_all(self, directions: np.ndarray) -> np.ndarray:
        """All eta_kappa at the given directions; rows sum to 1 exactly.

        `directions` has shape (npoints, 3); nonzero vectors are normalized
        first (degree-zero homogeneity), zero vectors get eta = 0.
        Evaluation is chunked over points to bound memory.
        """
        d = np.asarray(directions, dtype=float)
        norms = np.linalg.norm(d, axis=-1, keepdims=True)
        ok = norms[:, 0] > 0
        units = np.where(norms > 0, d / np.where(norms == 0, 1.0, norms), 0.0)
        out = np.empty((len(self.caps), d.shape[0]))
        step = max(1, 2 ** 22 // max(len(self.caps), 1))
        for i in range(0, d.shape[0], step):
            b = self._bumps(units[i:i + step], enlarged=False)
            total = b.sum(axis=0)
            if np.any(ok[i:i + step] & (total <= 0)):
                raise RuntimeError("cap cover fails to cover the sphere")
            out[:, i:i + step] = np.where(
                total > 0, b / np.where(total == 0, 1.0, total), 0.0)
        out[:, ~ok] = 0.0
        return out

    def eta(self, cap: Cap, directions: np.ndarray) -> np.ndarray:
        return self.eta_all(directions)[cap.index]

    def eta_tilde(self, cap: Cap, directions: np.ndarray) -> np.ndarray:
        """Enlarged cutoff, = 1 on supp(eta_kappa), slightly bigger support."""
        d = np.asarray(directions, dtype=float)
        norms = np.linalg.norm(d, axis=-1, keepdims=True)
        units = np.where(norms > 0, d / np.where(norms == 0, 1.0, norms), 0.0)
        vals = self._bumps(units, enlarged=True)[cap.index]
        vals[norms[:, 0] == 0] = 0.0
        return vals

    def overlap_counts(self, directions: np.ndarray) -> np.ndarray:
        units = np.asarray(directions, dtype=float)
        units = units / np.linalg.norm(units, axis=-1, keepdims=True)
        out = np.empty(units.shape[0], dtype=int)
        step = max(1, 2 ** 22 // max(len(self.caps), 1))
        for i in range(0, units.shape[0], step):
            out[i:i + step] = (self._bumps(units[i:i + step],
                                           enlarged=False) > 0).sum(axis=0)
        return out


def _symmetrize(points: np.ndarray) -> np.ndarray:
    """Append antipodes, then drop near-duplicates keeping +-pairs intact."""
    pts = points / np.linalg.norm(points, axis=1, keepdims=True)
    seen: set[tuple] = set()
    out: list[np.ndarray] = []
    for p in pts:
        key = tuple(np.round(p, 9))
        anti = tuple(np.round(-p, 9))
        if key in seen or anti in seen:
            continue
        seen.add(key)
        seen.add(anti)
        out.append(p)
        out.append(-p)
    return np.array(out)


def max_cap_level(grid: Grid) -> int:
    """l_max = log2(n) - 2: caps narrower than the lattice's angular
    resolution silently lose their support, so they are rejected."""
    return int(np.log2(grid.n_per_axis)) - 2


@lru_cache(maxsize=16)
def build_cap_cover(level: int, grid: Grid | None = None) -> CapCover:
    """Construct (and cache) the level-l cap cover.

    With a grid attached the request is validated against the grid's
    angular resolution (see max_cap_level).
    """
    if grid is not None and level > max_cap_level(grid):
        raise ValueError(
            f"cap level {level} exceeds grid angular resolution "
            f"(l_max = {max_cap_level(grid)})")
    return CapCover(level)


def _cap_multiplier(grid: Grid, cover: CapCover, cap: Cap, k: int,
                    enlarged: bool) -> np.ndarray:
    x1, x2, x3 = grid.xi
    n = grid.n_per_axis
    dirs = np.stack(np.broadcast_arrays(x1, x2, x3), axis=-1).reshape(-1, 3)
    if enlarged:
        ang = cover.eta_tilde(cap, dirs)
        rad = chi_tilde_k(grid.xi_norm, k)
    else:
        ang = cover.eta(cap, dirs)
        rad = chi_k(grid.xi_norm, k)
    return ang.reshape(n, n, n) * rad


def project_cap(f, cover: CapCover, cap: Cap, k: int, enlarged: bool = False):
    """P_{k,kappa} f = eta_kappa(D) chi_k(D) f (tilde variants if enlarged)."""
    m = _cap_multiplier(f.grid, cover, cap, k, enlarged)
    return apply_multiplier(f, lambda *_: m)


# ---------------------------------------------------------------------------
# modulation projections


def resolvable_m_range(series: SpaceTimeSeries) -> tuple[int, int]:
    """Modulation bands 2^m the window can resolve: 2^m >= 4*pi/T below
    the time-Nyquist of the sampling."""
    lo = int(np.ceil(np.log2(4.0 * np.pi / series.duration)))
    hi = int(np.floor(np.log2(np.pi / series.dt))) - 1
    return lo, hi


def _time_frequencies(series: SpaceTimeSeries) -> np.ndarray:
    return 2.0 * np.pi * np.fft.fftfreq(series.n_times, d=series.dt)


def modulation_project(series: SpaceTimeSeries, m: int, sign: int = +1,
                       mode: str = "annulus") -> SpaceTimeSeries:
    """Q_m^{+-} via conjugation by the free flow.

    Uses Q_m^+ = e^{it<D>} chi_m(D_t) e^{-it<D>} (and the time-reversed
    conjugation for the - sign): the series is pulled back along the free
    flow, Hann-tapered, filtered in the time frequency tau by chi_m
    (or chi_{<=m} for mode "up_to", 1 - chi_{<=m-GAP} for "rough_tail",
    chi_{<=m-GAP} for "precise"), and pushed forward again.

    The taper is part of the definition of every windowed modulation
    quantity here; thresholds downstream account for its leakage.
    """
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    lo, hi = resolvable_m_range(series)
    if mode == "annulus" and not (lo <= m <= hi):
        raise ValueError(f"modulation band m={m} outside resolvable "
                         f"range [{lo}, {hi}]")
    tau = _time_frequencies(series)
    if mode == "annulus":
        filt = chi_k(tau, m)
    elif mode == "up_to":
        filt = chi_le_k(tau, m)
    elif mode == "precise":
        filt = chi_le_k(tau, m - MODULATION_GAP)
    elif mode == "rough_tail":
        filt = 1.0 - chi_le_k(tau, m - MODULATION_GAP)
    else:
        raise ValueError(f"unknown mode {mode!r}")

    hat = series.map_fields(lambda f: f.to_frequency())
    w = series.grid.kg_weight
    t = series.times.reshape((-1,) + (1,) * (hat.values.ndim - 1))
    pulled = hat.values * np.exp(-1j * sign * t * w)
    pulled *= series.window.reshape(t.shape)
    spec = np.fft.fft(pulled, axis=0)
    spec *= filt.reshape(t.shape)
    back = np.fft.ifft(spec, axis=0)
    back *= np.exp(1j * sign * t * w)
    return SpaceTimeSeries(series.grid, series.times, back, FREQUENCY,
                           series.window)


def tapered_series(series: SpaceTimeSeries) -> SpaceTimeSeries:
    """The Hann-tapered series all modulation pieces resum to."""
    hat = series.map_fields(lambda f: f.to_frequency())
    t = series.times.reshape((-1,) + (1,) * (hat.values.ndim - 1))
    return SpaceTimeSeries(series.grid, series.times,
                           hat.values * series.window.reshape(t.shape),
                           FREQUENCY, series.window)


def modulation_mass(series: SpaceTimeSeries, sign: int = +1) -> dict:
    """Windowed L^2_{t,x} mass per resolvable modulation band, plus the
    below-window and above-Nyquist tail masses.  Keys are band indices m;
    'low_tail'/'high_tail' capture the rest."""
    tau = _time_frequencies(series)
    hat = series.map_fields(lambda f: f.to_frequency())
    w = series.grid.kg_weight
    t = series.times.reshape((-1,) + (1,) * (hat.values.ndim - 1))
    pulled = hat.values * np.exp(-1j * sign * t * w)
    pulled *= series.window.reshape(t.shape)
    spec = np.fft.fft(pulled, axis=0)
    power = np.abs(spec) ** 2
    flat = power.reshape(series.n_times, -1).sum(axis=1)
    lo, hi = resolvable_m_range(series)
    out = {}
    for m in range(lo, hi + 1):
        out[m] = float(np.sum(chi_k(tau, m) ** 2 * flat))
    out["low_tail"] = float(np.sum(chi_le_k(tau, lo - 1) ** 2 * flat))
    out["high_tail"] = float(np.sum(chi_gt_k(tau, hi + 1) ** 2 * flat))
    out["total"] = float(flat.sum())
    return out


# ---------------------------------------------------------------------------
# L^1 kernel mass


def kernel_l1_check(k: int, cap: Cap | None = None,
                    cover: CapCover | None = None,
                    n: int = 64, shells_per_octave: float = 8.0) -> float:
    """L^1(box) mass of the inverse transform of eta~_kappa chi~_k.

    The box is scaled with 2^-k so the kernel (width ~ 2^-k) is equally
    resolved at every k; in the continuum the mass is exactly dilation
    invariant, so the returned values should be stable across k.
    """
    dxi = 2.0 ** k / shells_per_octave
    grid = Grid(n, 2.0 * np.pi / dxi)
    if 2.0 ** (k + 2) > grid.max_resolved_xi():
        raise ValueError("annulus k not resolvable at this n")
    rad = chi_tilde_k(grid.xi_norm, k)
    if cap is not None:
        if cover is None:
            raise ValueError("a cap needs its cover")
        m = _cap_multiplier(grid, cover, cap, k, enlarged=True)
    else:
        m = rad
    f = ScalarField.from_spectrum(grid, m.astype(complex)).to_physical()
    return float(np.sum(np.abs(f.values)) * grid.cell_volume)
