"""Adapted spacetime frames, the characteristic-surface geometry seen from
them, and mixed norms over frame-aligned slabs.

A frame is the orthonormal 4-basis (Theta, Theta_perp, Theta_2, Theta_3)
built from a speed parameter lambda in (0, 1) and a unit direction omega:

    Theta      = (lambda, omega) / sqrt(1 + lambda^2)
    Theta_perp = (-1, lambda*omega) / sqrt(1 + lambda^2)
    Theta_2    = (0, omega_2),   Theta_3 = (0, omega_3)

with (omega, omega_2, omega_3) positively oriented.  The frame's time axis
is Euclidean-orthogonal to the worldline of wave packets whose spatial
frequency points along omega at speed lambda, which is what makes the
frame-time direction "slow" for those packets.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.ndimage import map_coordinates

from .spectral import SpaceTimeSeries, bracket


def lambda_of_k(k: int) -> float:
    """Group speed of a unit-mass wave at frequency 2^k:
    lambda(k) = (1 + 2^(-2k))^(-1/2)."""
    return float((1.0 + 4.0 ** (-k)) ** -0.5)


def _complete_axes(omega: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic completion of omega to a positively oriented
    orthonormal triple: Gram-Schmidt against the least-aligned
    coordinate axis, orientation fixed by the cross product."""
    i = int(np.argmin(np.abs(omega)))
    e = np.zeros(3)
    e[i] = 1.0
    w2 = e - np.dot(e, omega) * omega
    w2 /= np.linalg.norm(w2)
    w3 = np.cross(omega, w2)
    return w2, w3


@dataclass(frozen=True)
class Frame:
    """Orthonormal spacetime basis adapted to (lambda, omega)."""

    lam: float
    omega: np.ndarray

    def __post_init__(self):
        if not 0.0 < self.lam <= 1.0:
            raise ValueError("lambda must lie in (0, 1]")
        w = np.asarray(self.omega, dtype=float)
        if abs(np.linalg.norm(w) - 1.0) > 1e-12:
            raise ValueError("omega must be a unit vector")
        object.__setattr__(self, "omega", w)

    @staticmethod
    def for_cap(k: int, omega: np.ndarray) -> "Frame":
        return Frame(lambda_of_k(k), np.asarray(omega, dtype=float))

    @cached_property
    def matrix(self) -> np.ndarray:
        """Columns (Theta, Theta_perp, Theta_2, Theta_3); orthonormal."""
        s = 1.0 / np.sqrt(1.0 + self.lam ** 2)
        w2, w3 = _complete_axes(self.omega)
        cols = np.empty((4, 4))
        cols[:, 0] = s * np.concatenate(([self.lam], self.omega))
        cols[:, 1] = s * np.concatenate(([-1.0], self.lam * self.omega))
        cols[:, 2] = np.concatenate(([0.0], w2))
        cols[:, 3] = np.concatenate(([0.0], w3))
        return cols

    def to_frame(self, events: np.ndarray) -> np.ndarray:
        """(t, x) -> (t_Theta, x1_Theta, x2, x3); last axis length 4."""
        return np.asarray(events, dtype=float) @ self.matrix

    def from_frame(self, coords: np.ndarray) -> np.ndarray:
        return np.asarray(coords, dtype=float) @ self.matrix.T

    def frame_time(self, events: np.ndarray) -> np.ndarray:
        return np.asarray(events, dtype=float) @ self.matrix[:, 0]


def identity_frame() -> Frame:
    """The lab coordinates packaged as a Frame (time axis = lab time).

    This is not of the (lambda, omega) family; it exists so frame-norm
    code paths can be checked against direct lab-frame computations.
    """
    f = Frame(1.0, np.array([1.0, 0.0, 0.0]))
    f.__dict__["matrix"] = np.eye(4)  # preempts the cached_property
    return f


# ---------------------------------------------------------------------------
# characteristic surface in frame coordinates


def frame_dual_coords(frame: Frame, tau, xi) -> np.ndarray:
    """(tau, xi) -> (tau_Theta, xi1_Theta, xi2, xi3) (same orthogonal map)."""
    tau = np.asarray(tau, dtype=float)
    xi = np.asarray(xi, dtype=float)
    ev = np.concatenate([tau[..., None], xi], axis=-1)
    return frame.to_frame(ev)


def discriminant(frame: Frame, xi_frame: np.ndarray) -> np.ndarray:
    """Delta_{lambda,omega} at frame-frequency (xi1, xi2, xi3)."""
    lam = frame.lam
    xi_frame = np.asarray(xi_frame, dtype=float)
    xi1 = xi_frame[..., 0]
    xp2 = xi_frame[..., 1] ** 2 + xi_frame[..., 2] ** 2
    return (lam ** 2 + 1.0) ** 2 * xi1 ** 2 + (lam ** 4 - 1.0) * (xp2 + 1.0)


def quadratic_residual(frame: Frame, tau_frame, xi_frame) -> np.ndarray:
    """Value of the frame-coordinate quadratic whose zero set is the
    characteristic surface tau = <xi>; used as the root back-substitution
    oracle."""
    lam = frame.lam
    xi_frame = np.asarray(xi_frame, dtype=float)
    xi1 = xi_frame[..., 0]
    xp2 = xi_frame[..., 1] ** 2 + xi_frame[..., 2] ** 2
    a = (lam ** 2 - 1.0) / (lam ** 2 + 1.0)
    b = -4.0 * lam / (lam ** 2 + 1.0)
    return (a * tau_frame ** 2 + b * tau_frame * xi1
            - a * xi1 ** 2 - xp2 - 1.0)


def h_roots(frame: Frame, xi_frame: np.ndarray):
    """Both roots (h+, h-) of the characteristic quadratic in tau_Theta.

    Requires lambda < 1 strictly (the null case lambda = 1 degenerates the
    quadratic) and a nonnegative discriminant; h+ parametrizes the branch
    tau = <xi> wherever tau_{lambda,-omega} > 0 on it.
    """
    lam = frame.lam
    if lam >= 1.0:
        raise ValueError("h_roots is singular at lambda = 1")
    xi_frame = np.asarray(xi_frame, dtype=float)
    delta = discriminant(frame, xi_frame)
    if np.any(delta < 0):
        raise ValueError("negative discriminant: point off the admissible "
                         "region for this frame")
    xi1 = xi_frame[..., 0]
    root = np.sqrt(delta)
    denom = lam ** 2 - 1.0
    return ((2.0 * lam * xi1 + root) / denom,
            (2.0 * lam * xi1 - root) / denom)


def reflected_coords_on_root(frame: Frame, xi_frame: np.ndarray):
    """(tau_{lambda,-omega}, xi1_{lambda,-omega}) of the surface point
    (h+(xi_frame), xi_frame), for the slope identity
    dh+/dxi1 = -xi1_{lambda,-omega} / tau_{lambda,-omega}."""
    xi_frame = np.asarray(xi_frame, dtype=float)
    hp, _ = h_roots(frame, xi_frame)
    # back to lab coordinates, then project on the (lambda, -omega) axes
    coords = np.concatenate([hp[..., None], xi_frame], axis=-1)
    lab = frame.from_frame(coords)
    tau, xi = lab[..., 0], lab[..., 1:]
    lam = frame.lam
    s = 1.0 / np.sqrt(1.0 + lam ** 2)
    xiw = xi @ frame.omega
    tau_ref = s * (lam * tau - xiw)
    xi1_ref = s * (-tau - lam * xiw)
    return tau_ref, xi1_ref


def h_plus_gradient(frame: Frame, xi_frame: np.ndarray) -> np.ndarray:
    """Gradient of h+ by implicit differentiation of the quadratic."""
    xi_frame = np.asarray(xi_frame, dtype=float)
    hp, _ = h_roots(frame, xi_frame)
    lam = frame.lam
    a = (lam ** 2 - 1.0) / (lam ** 2 + 1.0)
    b = -4.0 * lam / (lam ** 2 + 1.0)
    xi1 = xi_frame[..., 0]
    denom = 2.0 * a * hp + b * xi1
    g = np.empty_like(xi_frame)
    g[..., 0] = -(b * hp - 2.0 * a * xi1) / denom
    g[..., 1] = 2.0 * xi_frame[..., 1] / denom
    g[..., 2] = 2.0 * xi_frame[..., 2] / denom
    return g


def reflected_frame_time(lam: float, omega: np.ndarray, tau, xi) -> np.ndarray:
    """tau_{lambda,-omega} = (lambda*tau - omega.xi)/sqrt(1+lambda^2)."""
    tau = np.asarray(tau, dtype=float)
    xi = np.asarray(xi, dtype=float)
    return (lam * tau - xi @ np.asarray(omega)) / np.sqrt(1.0 + lam ** 2)


def sample_region(k: int, level: int, cap_omega: np.ndarray,
                  rng: np.random.Generator, count: int) -> tuple:
    """Sample (tau, xi) in the localized spacetime-frequency region: xi at
    radius on the plateau of the dyadic cutoff (0.75..1.5 times 2^k),
    direction in the nominal cap {angle <= 2^(-l-1)} around cap_omega, and
    tau within 2^(k-2l-GAP) of <xi> (the well-separated modulation band).

    The radial plateau keeps the diagnostics at the region's nominal
    scales; the cutoff tails shade continuously into the neighbouring
    dyadic scales and are covered by those scans."""
    from .dyadic import MODULATION_GAP
    w2, w3 = _complete_axes(np.asarray(cap_omega, dtype=float))
    r = 2.0 ** k * (0.75 + 0.75 * rng.random(count))
    theta = 2.0 ** (-level - 1) * rng.random(count)
    phi = 2.0 * np.pi * rng.random(count)
    u = (np.cos(theta)[:, None] * cap_omega[None, :]
         + np.sin(theta)[:, None] * (np.cos(phi)[:, None] * w2[None, :]
                                     + np.sin(phi)[:, None] * w3[None, :]))
    xi = r[:, None] * u
    eps = 2.0 ** (k - 2 * level - MODULATION_GAP) * (2 * rng.random(count) - 1)
    tau = bracket(xi) + eps
    return tau, xi


@dataclass(frozen=True)
class SurfaceReport:
    """Min/max of the scale-normalized surface quantities over a region."""
    k: int
    level: int
    j: int
    alpha: float
    tau_ratio: tuple[float, float]
    delta_ratio: tuple[float, float]
    tau_min: float
    samples: int


def surface_diagnostics(k: int, level: int, cap_omega: np.ndarray,
                        omega: np.ndarray, j: int,
                        rng: np.random.Generator | None = None,
                        count: int = 4096) -> SurfaceReport:
    """Scan the localized region and report tau_{lambda,-omega}/(2^k a^2)
    and Delta/(2^(2k) a^4), a = dist(omega, cap).

    Admissibility: the frame direction omega must sit at angular distance
    alpha in [2^(-3-l), 2^(3-l)] from the cap, and l <= min(j, k) - 4 so
    the mass and curvature corrections stay below the angular terms.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    omega = np.asarray(omega, dtype=float)
    cap_omega = np.asarray(cap_omega, dtype=float)
    if level > min(j, k) - 4:
        raise ValueError("inadmissible: need l <= min(j, k) - 4")
    ang_center = np.arccos(np.clip(np.dot(omega, cap_omega), -1, 1))
    # angular distance from omega to the nominal cap set
    alpha = max(ang_center - 2.0 ** (-level - 1), 0.0)
    if not 2.0 ** (-3 - level) <= alpha <= 2.0 ** (3 - level):
        raise ValueError("inadmissible alpha: dist(omega, cap) outside "
                         "[2^(-3-l), 2^(3-l)]")
    tau, xi = sample_region(k, level, cap_omega, rng, count)
    if tau.size == 0:
        raise ValueError("empty sample region")
    lam = lambda_of_k(j)
    tref = reflected_frame_time(lam, omega, tau, xi)
    frame = Frame(lam, omega)
    fc = frame_dual_coords(frame, tau, xi)
    delta = discriminant(frame, fc[..., 1:])
    tr = tref / (2.0 ** k * alpha ** 2)
    dr = delta / (2.0 ** (2 * k) * alpha ** 4)
    return SurfaceReport(k, level, j, float(alpha),
                         (float(tr.min()), float(tr.max())),
                         (float(dr.min()), float(dr.max())),
                         float(tref.min()), count)


# ---------------------------------------------------------------------------
# frame mixed norms by resampling


@dataclass(frozen=True)
class FrameNormResult:
    value: float
    truncated: bool
    frame_time_span: tuple[float, float]


def frame_mixed_norm(series: SpaceTimeSeries, frame: Frame, p: float,
                     q: float, oversample: int = 2,
                     margin: float = 0.1) -> FrameNormResult:
    """L^p_{t_Theta} L^q_{x_Theta} of a series by resampling onto a lattice
    aligned with the frame axes.

    Interpolation is cubic in space (periodic wrap) and linear in time on
    the tapered series; L^infinity over a slice is approximated by the max
    over an `oversample`x refined lattice.  Slices whose lab-time preimage
    leaves the window are dropped and the result flagged truncated; the
    trustworthy frame-time span is returned alongside the value.
    """
    grid = series.grid
    n = grid.n_per_axis
    T = series.duration
    L = grid.box_length

    phys = np.empty((series.n_times, n, n, n), dtype=complex)
    for i in range(series.n_times):
        phys[i] = series.field_at(i).to_physical().values
    phys *= series.window.reshape(-1, 1, 1, 1)

    # frame-time range covered by the slab's interior
    t0 = np.asarray(series.times)
    corners = np.array([[t, a, b, c]
                        for t in (t0[0], t0[-1])
                        for a in (0.0, L) for b in (0.0, L) for c in (0.0, L)])
    s_all = frame.frame_time(corners)
    s_lo, s_hi = s_all.min(), s_all.max()

    n_slices = max(8, int(series.n_times))
    n_sp = oversample * n
    ds = (s_hi - s_lo) / n_slices
    ax = np.linspace(0.0, L, n_sp, endpoint=False)
    Y = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), axis=-1).reshape(-1, 3)

    slice_vals = []
    s_used = []
    truncated = False
    for i in range(n_slices):
        s = s_lo + (i + 0.5) * ds
        # events on the slice: s*Theta + sum y_i * (spatial frame axes)
        ev = s * frame.matrix[:, 0][None, :] + Y @ frame.matrix[:, 1:].T
        tt = ev[:, 0]
        inside = (tt >= t0[0]) & (tt <= t0[-1])
        if not np.any(inside):
            truncated = True
            continue
        if not np.all(inside):
            truncated = True
        ev = ev[inside]
        # fractional lattice coordinates
        it = (ev[:, 0] - t0[0]) / series.dt
        ix = np.mod(ev[:, 1:], L) / grid.dx
        i0 = np.clip(np.floor(it).astype(int), 0, series.n_times - 2)
        ft = it - i0
        vals = np.empty(ev.shape[0], dtype=complex)
        for lo_idx in np.unique(i0):
            sel = i0 == lo_idx
            c = ix[sel].T
            v0r = map_coordinates(phys[lo_idx].real, c, order=3, mode="wrap")
            v0i = map_coordinates(phys[lo_idx].imag, c, order=3, mode="wrap")
            v1r = map_coordinates(phys[lo_idx + 1].real, c, order=3,
                                  mode="wrap")
            v1i = map_coordinates(phys[lo_idx + 1].imag, c, order=3,
                                  mode="wrap")
            w = ft[sel]
            vals[sel] = ((1 - w) * (v0r + 1j * v0i) + w * (v1r + 1j * v1i))
        a = np.abs(vals)
        if np.isinf(q):
            slice_vals.append(a.max())
        else:
            # the map (s, y) -> (t, x mod L) preserves spacetime measure,
            # so mean over inside-points times the inside measure makes
            # p = q = 2 reproduce the lab L^2_{t,x} norm
            measure = (a.size / Y.shape[0]) * L ** 3
            slice_vals.append((np.mean(a ** q) * measure) ** (1.0 / q))
        s_used.append(s)
    if not slice_vals:
        raise ValueError("empty overlap between the slab and the frame")
    sv = np.asarray(slice_vals)
    if np.isinf(p):
        val = float(sv.max())
    else:
        val = float((np.sum(sv ** p) * ds) ** (1.0 / p))
    span = (float(min(s_used)), float(max(s_used)))
    if (span[1] - span[0]) < (1.0 - margin) * (s_hi - s_lo) * 0.5:
        truncated = True
    return FrameNormResult(val, truncated, span)
