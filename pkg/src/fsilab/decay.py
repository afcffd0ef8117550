"""Empirical decay rates and constants of the linear (Stokes-disk) evolution.

Field channel (S(t) v0, rates 1/p - 1/q): impulse probes.  A Leray-projected
point impulse is evolved; its state v(t) at time t is itself admissible data
whose length scale is sqrt(nu t), and ||v(2t)||_p / ||v(t)||_q = ||S(t) v(t)||_p
/ ||v(t)||_q measures the semigroup on data matched to the time scale, which
is where the bound is attained.

Forced channels (S(t) P div F, rates -1/2 + 1/p - 1/q for the field and
-(1/2 + 1/q) for the disk velocity): a ladder of Gaussian tensors of widths
sigma, cut off near the disk; the curve is the envelope over the ladder.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import fft2, ifft2, _leray_hat
from .solver import SimConfig, stokes_evolve, stokes_evolve_div
from .bogovskii import smooth_step

__all__ = [
    "DecayCurve",
    "impulse_probes",
    "tensor_probes",
    "field_decay",
    "forced_decay",
    "fit_exponent",
    "expected_exponent",
    "log_window",
]


def expected_exponent(channel: str, p: float, q: float) -> float:
    ip = 0.0 if np.isinf(p) else 1.0 / p
    iq = 0.0 if np.isinf(q) else 1.0 / q
    if channel == "field":
        return ip - iq
    if channel == "div-forced":
        return -0.5 + ip - iq
    if channel == "ell":
        return -(0.5 + iq)
    raise ValueError(f"unknown channel {channel!r}")


def log_window(t_min: float, t_max: float, n: int = 9) -> np.ndarray:
    if not 0 < t_min < t_max:
        raise ValueError("fit window must satisfy 0 < t_min < t_max")
    return np.geomspace(t_min, t_max, n)


def fit_exponent(t, values) -> tuple[float, float]:
    """Least-squares slope and intercept of log(values) against log(t)."""
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.size < 2:
        raise ValueError("fit window is empty")
    if np.any(v <= 0):
        raise ValueError("nonpositive values cannot be fitted on a log scale")
    slope, icpt = np.polyfit(np.log(t), np.log(v), 1)
    return float(slope), float(icpt)


@dataclass(frozen=True)
class DecayCurve:
    channel: str
    p: float
    q: float
    eps: float | None
    times: np.ndarray
    values: np.ndarray        # envelope over probes
    per_probe: np.ndarray     # (probes, times)

    @property
    def expected(self) -> float:
        return expected_exponent(self.channel, self.p, self.q)

    @property
    def exponent(self) -> float:
        return fit_exponent(self.times, self.values)[0]

    def K(self, rate: float | None = None) -> float:
        """max over the window of value * t^(-rate); rate defaults to the expected one."""
        rate = self.expected if rate is None else rate
        return float(np.max(self.values * self.times ** (-rate)))


def _lp(fields, p, rho, cell_area):
    mag = np.sqrt((fields**2).sum(axis=-3))
    if np.isinf(p):
        return mag.max(axis=(-2, -1))
    return (np.sum(rho * mag**p, axis=(-2, -1)) * cell_area) ** (1.0 / p)


def impulse_probes(config: SimConfig, n: int = 3, rng: np.random.Generator | None = None,
                   keep_mean: bool | None = None) -> np.ndarray:
    """Leray-projected point impulses, shape (n, 2, N, N).

    The constant mode is kept by default only without a disk: the no-disk
    ratio then equals the exact periodic supremum ||P G_t||_2, 1/L floor of
    the mean included.  With a disk it is removed, as the plane has none.  Positions sit at distances 2, 3, 4,... disk radii from the centre (or at
    random nodes without a disk); directions alternate between the axes.
    """
    g = config.grid
    rng = rng or np.random.default_rng(0)
    h0 = np.asarray(config.init.h0, float)
    out = np.zeros((n, 2, g.N, g.N))
    for k in range(n):
        if config.eps is not None and config.mode != "reference":
            ang = 2 * np.pi * rng.random()
            pos = h0 + (2.0 + k) * config.eps * np.array([np.cos(ang), np.sin(ang)])
        else:
            pos = rng.uniform(-g.L / 4, g.L / 4, 2)
        i, j = np.round((g.wrap(pos) + g.L / 2) / g.h).astype(int) % g.N
        out[k, k % 2, i, j] = 1.0 / g.cell_area
    oh = _leray_hat(fft2(out), g)
    if keep_mean is None:
        keep_mean = not (config.eps is not None and config.mode != "reference")
    if not keep_mean:
        oh[..., 0, 0] = 0.0
    return ifft2(oh, g)


def tensor_probes(config: SimConfig, sigmas, center=None, direction=(1.0, 0.0), keep_out: float = 1.5,
                  offset: float = 0.0):
    """Gaussian tensor fields F = G_sigma(x - c) e (x) d, zeroed smoothly on B(h, keep_out*eps).

    With ``offset`` > 0 the centre of the width-sigma probe is moved by
    offset*sigma along the x axis, which breaks the symmetry that would
    otherwise leave the disk at rest.
    """
    g = config.grid
    h0 = np.asarray(config.init.h0, float)
    c0 = h0 if center is None else np.asarray(center, float)
    cut = np.ones((g.N, g.N))
    if config.eps is not None and config.mode != "reference":
        hx, hy = g.offsets(h0)
        rad = np.hypot(hx, hy)
        e = config.eps
        cut = smooth_step((rad - keep_out * e) / (0.5 * keep_out * e))
    d = np.asarray(direction, float)
    d = d / np.linalg.norm(d)
    F = np.zeros((len(sigmas), 2, 2, g.N, g.N))
    for k, s in enumerate(sigmas):
        dx, dy = g.offsets(c0 + np.array([offset * s, 0.0]))
        G = np.exp(-(dx * dx + dy * dy) / (2 * s * s)) * cut
        F[k, 0, 0] = G * d[0] * d[0]
        F[k, 0, 1] = G * d[0] * d[1]
        F[k, 1, 0] = G * d[1] * d[0]
        F[k, 1, 1] = G * d[1] * d[1]
    # a mixed shear component as well, so the projected forcing is not a pure gradient
    F[:, 0, 1] += F[:, 0, 0]
    return F


def field_decay(config: SimConfig, pairs, window, probes=None, dt_rel: float = 0.02, dt0: float | None = None):
    """Field-channel curves for the (p, q) pairs over the time ``window``."""
    g = config.grid
    window = np.asarray(window, float)
    if probes is None:
        probes = impulse_probes(config)
    targets = np.unique(np.concatenate([window, 2 * window]))
    dt0 = dt0 or 0.25 * g.h**2 / config.nu
    smp = stokes_evolve(probes, targets, config, dt=dt0, dt_rel=dt_rel, project_initial=True)
    idx = {t: i for i, t in enumerate(smp.times)}
    out = []
    for p, q in pairs:
        num = np.array([_lp(smp.fields[idx[2 * t]], p, smp.rho, g.cell_area) for t in window]).T
        den = np.array([_lp(smp.fields[idx[t]], q, smp.rho, g.cell_area) for t in window]).T
        r = num / den
        out.append(DecayCurve("field", p, q, config.eps, window, r.max(axis=0), r))
    return out


def forced_decay(config: SimConfig, pairs, q_ell, window, sigmas, dt_rel: float = 0.02, dt0: float | None = None,
                 F=None, offset: float = 0.0):
    """Div-forced field curves for ``pairs`` and disk-velocity curves for exponents ``q_ell``."""
    g = config.grid
    window = np.asarray(window, float)
    if F is None:
        F = tensor_probes(config, sigmas, offset=offset)
    dt0 = dt0 or 0.25 * g.h**2 / config.nu
    smp = stokes_evolve_div(F, window, config, dt=dt0, dt_rel=dt_rel)
    Fmag = np.sqrt((F**2).sum(axis=(-4, -3)))
    out = []
    for p, q in pairs:
        den = (np.sum(Fmag**q, axis=(-2, -1)) * g.cell_area) ** (1.0 / q) if not np.isinf(q) else Fmag.max(axis=(-2, -1))
        num = _lp(smp.fields, p, smp.rho, g.cell_area)  # (T, probes)
        r = (num / den[None, :]).T
        out.append(DecayCurve("div-forced", p, q, config.eps, window, r.max(axis=0), r))
    for q in q_ell:
        den = (np.sum(Fmag**q, axis=(-2, -1)) * g.cell_area) ** (1.0 / q)
        num = np.linalg.norm(smp.ell, axis=-1)  # (T, probes)
        r = (num / den[None, :]).T
        out.append(DecayCurve("ell", np.nan, q, config.eps, window, r.max(axis=0), r))
    return out
