"""Mild solutions by Picard iteration of the Duhamel formula, the weighted
norm of the fixed-point space and empirical assembly of its constants.

The disk is held fixed (body frame).  One Picard step maps v to

    Z(v)(t) = S(t) v0 + int_0^t S(t - s) P div F(v(s)) ds,
    F(v) = (1 - mask) v (x) (ell_v - v),

with S the linear Stokes-disk stepper.  The integral uses a graded mesh
s_j = t (1 - (1 - j/M)^(8/3)) and the trapezoid rule on it.
"""
from __future__ import annotations

import json
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .decay import field_decay, forced_decay, impulse_probes, log_window
from .fields import VectorField, fft2, ifft2, _leray_hat
from .norms import beta_int
from .solver import SimConfig, StokesSamples, _Projector, _batched_average, _stokes_setup, stokes_evolve

log = logging.getLogger(__name__)

__all__ = [
    "XNorm",
    "xnorm",
    "FixedPointConstants",
    "estimate_constants",
    "PicardResult",
    "picard_iterate",
    "duhamel_oracle",
    "ContractionReport",
    "contraction_report",
    "graded_nodes",
]

K1_PAIRS = ((8.0, 2.0), (2.0, 2.0), (np.inf, 2.0))
K2_PAIRS = ((8.0, 4.0), (2.0, 2.0))
KELL_Q = (4.0,)


# ---------------------------------------------------------------------------
# the X norm


@dataclass(frozen=True)
class XNorm:
    c0_l2: float
    c0_38_l8: float
    c0_12_ell: float

    def __post_init__(self):
        vals = (self.c0_l2, self.c0_38_l8, self.c0_12_ell)
        if not all(np.isfinite(v) and v >= 0 for v in vals):
            raise ValueError(f"X-norm components must be finite and nonnegative, got {vals}")

    @property
    def total(self) -> float:
        return self.c0_l2 + self.c0_38_l8 + self.c0_12_ell

    def as_dict(self) -> dict:
        return {"c0_l2": self.c0_l2, "c0_38_l8": self.c0_38_l8, "c0_12_ell": self.c0_12_ell,
                "total": self.total}


def _lp_batch(fields, p, rho, cell_area):
    mag = np.sqrt((fields**2).sum(axis=-3))
    if np.isinf(p):
        return mag.max(axis=(-2, -1))
    return (np.sum(rho * mag**p, axis=(-2, -1)) * cell_area) ** (1.0 / p)


def xnorm(traj, ell=None, grid=None, rho=1.0, times=None) -> XNorm:
    """sup ||v||_2 + sup t^(3/8) ||v||_8 + sup t^(1/2) |ell_v| over the samples.

    ``traj`` is a StokesSamples / PicardResult (anything with times, fields,
    ell, grid) or an array of fields (n, 2, N, N) together with ``times``,
    ``ell`` and ``grid``.  The first sample must lie within T/100 of zero.
    """
    if hasattr(traj, "fields"):
        times, fields, ell, grid = traj.times, traj.fields, traj.ell, traj.grid
        rho = getattr(traj, "rho", rho)
    else:
        fields = np.asarray(traj, dtype=float)
    t = np.asarray(times, dtype=float)
    if t.size == 0 or fields.shape[0] == 0:
        raise ValueError("empty trajectory")
    if fields.shape[0] != t.size:
        raise ValueError("times and fields disagree in length")
    if t[0] > t[-1] / 100:
        raise ValueError("the first sample must be at most T/100 for the weighted sups")
    ell = np.zeros((t.size, 2)) if ell is None else np.asarray(ell, dtype=float)
    l2 = _lp_batch(fields, 2.0, rho, grid.cell_area)
    l8 = _lp_batch(fields, 8.0, rho, grid.cell_area)
    la = np.linalg.norm(ell, axis=-1)
    return XNorm(float(l2.max()), float((t**0.375 * l8).max()), float((np.sqrt(t) * la).max()))


# ---------------------------------------------------------------------------
# constants


def _key(pq) -> str:
    return ",".join("inf" if np.isinf(x) else f"{x:g}" for x in pq)


@dataclass(frozen=True)
class FixedPointConstants:
    K1: dict
    K2: dict
    Kell: dict
    C0: float
    C1: float
    R: float
    lambda0: float
    mu0: float
    per_eps: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("C0", "C1", "R", "lambda0", "mu0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def assemble(cls, K1: dict, K2: dict, Kell: dict, per_eps=None) -> "FixedPointConstants":
        """C0, C1, R = 1/(4 C0), lambda0 = min(R/(2 C1), R); mu0 = R bounds t^(1/2)|ell|."""
        C0 = 2.0 * (K2[(8.0, 4.0)] * beta_int(5 / 8, 3 / 4)
                    + K2[(2.0, 2.0)] * beta_int(1 / 2, 1 / 2)
                    + Kell[4.0] * beta_int(3 / 4, 3 / 4))
        C1 = K1[(8.0, 2.0)] + K1[(2.0, 2.0)] + K1[(np.inf, 2.0)]
        R = 1.0 / (4.0 * C0)
        lam = min(R / (2.0 * C1), R)
        return cls(dict(K1), dict(K2), dict(Kell), C0, C1, R, lam, R, dict(per_eps or {}))

    def identities_hold(self) -> bool:
        # exact up to the rounding of one division and two products
        return (math.isclose(self.R * 4.0 * self.C0, 1.0, rel_tol=1e-14)
                and self.lambda0 == min(self.R / (2.0 * self.C1), self.R))

    def to_json(self) -> dict:
        doc = {
            "K1": {_key(k): v for k, v in self.K1.items()},
            "K2": {_key(k): v for k, v in self.K2.items()},
            "Kell": {_key((k,)): v for k, v in self.Kell.items()},
            "C0": self.C0, "C1": self.C1, "R": self.R, "lambda0": self.lambda0, "mu0": self.mu0,
        }
        if self.per_eps:
            doc["per_eps"] = {
                ("none" if e is None else f"{e:g}"): {
                    "K1": {_key(k): v for k, v in t["K1"].items()},
                    "K2": {_key(k): v for k, v in t["K2"].items()},
                    "Kell": {_key((k,)): v for k, v in t["Kell"].items()},
                } for e, t in self.per_eps.items()
            }
        return doc

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)


def matched_config(config: SimConfig, eps: float | None) -> SimConfig:
    """Same box, with N scaled so the disk keeps as many cells per radius as in ``config``."""
    if eps is None or config.eps is None:
        return replace(config, eps=eps, mode="stokes")
    n = int(round(config.N * config.eps / eps))
    n += n % 2
    return replace(config, eps=eps, N=n, mode="stokes")


def default_window(config: SimConfig, n: int = 8) -> np.ndarray:
    """t from max(1, 4 h^2/nu) up to where sqrt(2 nu t) reaches L/8 (2t is also sampled)."""
    g = config.grid
    t_min = max(1.0 if config.eps is None else config.eps**2, 4 * g.h**2 / config.nu)
    t_max = g.L**2 / (128.0 * config.nu)
    if not t_max > t_min:
        raise ValueError(f"empty fit window: domain too small (t_min={t_min:.3g}, t_max={t_max:.3g})")
    return log_window(t_min, t_max, n)


def _tables_for(config: SimConfig, n_probes: int, window, sigmas, seed: int):
    if window is None:
        window = default_window(config)
    window = np.asarray(window, float)
    if window.size < 2 or not window[0] > 0:
        raise ValueError("fit window is empty")
    rng = np.random.default_rng(seed)
    probes = impulse_probes(config, n=n_probes, rng=rng)
    K1 = {(float(p), float(q)): c.K() for (p, q), c in
          zip(K1_PAIRS, field_decay(config, K1_PAIRS, window, probes=probes))}
    if sigmas is None:
        e = config.eps or 1.0
        sigmas = e * np.geomspace(0.5, 8.0, max(n_probes, 3))
    curves = forced_decay(config, K2_PAIRS, KELL_Q, window, sigmas=sigmas, offset=2.0)
    K2 = {(float(c.p), float(c.q)): c.K() for c in curves if c.channel == "div-forced"}
    Kell = {float(c.q): c.K() for c in curves if c.channel == "ell"}
    if config.eps is None:
        Kell = {q: 0.0 for q in Kell}
    return {"K1": K1, "K2": K2, "Kell": Kell, "window": window.tolist()}


def estimate_constants(eps_list, config: SimConfig, n_probes: int = 3, window=None, sigmas=None,
                       seed: int = 0, threads: int = 1) -> FixedPointConstants:
    """Empirical K tables per radius, and the constants assembled from their maxima.

    Each K is the largest value of (observed norm) / (t^rate * data norm) over
    the probes and the fit window.  Radii are processed concurrently.
    """
    if n_probes < 3:
        raise ValueError("at least three probes per pair are required")
    eps_list = list(eps_list)
    cfgs = [matched_config(config, e) for e in eps_list]
    if window is not None and np.asarray(window).size < 2:
        raise ValueError("fit window is empty")

    def job(c):
        return _tables_for(c, n_probes, window, sigmas, seed)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            tables = list(ex.map(job, cfgs))
    else:
        tables = [job(c) for c in cfgs]
    per = dict(zip(eps_list, tables))
    K1 = {k: max(t["K1"][k] for t in tables) for k in tables[0]["K1"]}
    K2 = {k: max(t["K2"][k] for t in tables) for k in tables[0]["K2"]}
    Kell = {k: max(t["Kell"][k] for t in tables) for k in tables[0]["Kell"]}
    if not all(v > 0 for v in Kell.values()):
        raise ValueError("K_ell needs at least one radius with a disk")
    return FixedPointConstants.assemble(K1, K2, Kell, per)


# ---------------------------------------------------------------------------
# Picard iteration


def graded_nodes(t: float, M: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes s_j = t (1 - (1 - j/M)^(8/3)), j = 0..M, and their trapezoid weights."""
    if M < 1:
        raise ValueError("need at least one quadrature interval")
    j = np.arange(M + 1) / M
    s = t * (1.0 - (1.0 - j) ** (8.0 / 3.0))
    w = np.zeros(M + 1)
    d = np.diff(s)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return s, w


class _Body:
    """Fixed-disk linear operators shared by the Picard loop and the oracle."""

    def __init__(self, config: SimConfig, dt: float | None = None):
        self.config = config
        g, state, params = _stokes_setup(replace(config, mode="stokes"))
        self.grid = g
        self.nu = config.nu
        self.proj = None if params is None else _Projector(
            g, state, params, config.smoothing_cells, config.mask_min_cells, config.proj_iter)
        self.mask = 0.0 if self.proj is None else self.proj.mask
        self.rho = 1.0 if self.proj is None else self.proj.rho
        self.dt = dt or config.dt or 0.25 * g.h**2 / config.nu

    def ell(self, u):
        if self.proj is None:
            return np.zeros(u.shape[:-3] + (2,))
        lx, ly, _ = _batched_average(u, self.proj, self.proj.rho_s)
        return np.stack([lx, ly], axis=-1)

    def project(self, uh):
        if self.proj is None:
            return uh
        return self.proj(ifft2(uh, self.grid))

    def forcing_hat(self, u):
        """P div F(u), spectral, for u (..., 2, N, N)."""
        g = self.grid
        ell = self.ell(u)[..., :, None, None]
        a = (1.0 - self.mask) * (ell - u)      # (..., 2, N, N): the second factor
        Fh = fft2(u[..., :, None, :, :] * a[..., None, :, :, :])
        dv = 1j * (g.kx * Fh[..., 0, :, :] + g.ky * Fh[..., 1, :, :])
        return _leray_hat(dv, g)

    def evolve(self, uh, durations):
        """S(d_b) applied to the batch uh (B, 2, N, Nh) after an initial rigid projection."""
        g = self.grid
        d = np.asarray(durations, dtype=float)
        n = np.maximum(1, np.ceil(d / self.dt - 1e-9)).astype(int)
        n[d == 0] = 0
        step = np.where(n > 0, d / np.maximum(n, 1), 0.0)
        E = np.exp(-self.nu * g.k2[None] * step[:, None, None])[:, None]
        uh = self.project(uh)
        if self.proj is None:
            uh = uh.copy()
        for k in range(int(n.max(initial=0))):
            act = n > k
            if act.all():
                uh = self.project(E * uh)
            else:
                uh[act] = self.project(E[act] * uh[act])
        return uh


@dataclass
class PicardResult:
    times: np.ndarray
    fields: np.ndarray          # (T, 2, N, N) last iterate
    ell: np.ndarray             # (T, 2)
    grid: object
    rho: np.ndarray | float
    distances: list             # X-norm distance between successive iterates
    xnorms: list                # XNorm per iterate, iterate 0 = S(t) v0
    iterations: int
    converged: bool
    status: str                 # converged | max_iter | diverged

    @property
    def contraction_factors(self) -> np.ndarray:
        d = np.asarray(self.distances, dtype=float)
        if d.size < 2:
            return np.zeros(0)
        with np.errstate(divide="ignore", invalid="ignore"):
            f = d[1:] / d[:-1]
        return f[np.isfinite(f)]

    @property
    def contraction(self) -> float:
        f = self.contraction_factors
        return float(f.max()) if f.size else 0.0

    def field(self, i=-1) -> VectorField:
        return VectorField(self.grid, self.fields[i])


def picard_times(T: float, n: int = 24, t_min_frac: float = 1e-3) -> np.ndarray:
    return np.concatenate([[0.0], np.geomspace(t_min_frac * T, T, n)])


def _interp(times, fields, s):
    """Piecewise-linear interpolation in time of sampled fields."""
    i = np.clip(np.searchsorted(times, s, side="right") - 1, 0, times.size - 2)
    t0, t1 = times[i], times[i + 1]
    a = ((s - t0) / (t1 - t0))[:, None, None, None]
    return (1 - a) * fields[i] + a * fields[i + 1]


def picard_iterate(v0, T: float, config: SimConfig, quad_nodes: int = 16, max_iter: int = 20, tol: float = 1e-8,
                   times=None, lambda0: float | None = None, nonlinear: bool = True, dt: float | None = None,
                   batch: int = 256) -> PicardResult:
    """Iterate v <- Z(v) from v^0 = S(t) v0 on the sample times until the
    X-norm distance of successive iterates is at most ``tol``.

    ``nonlinear=False`` replaces F by zero.  An iterate whose X norm exceeds
    ten times that of v^0 stops the loop with status ``diverged``.
    """
    body = _Body(config, dt)
    g = body.grid
    u0 = v0.values if isinstance(v0, VectorField) else np.asarray(v0, dtype=float)
    if u0.shape != (2, g.N, g.N):
        raise ValueError("initial field does not match the grid")
    l2 = float(np.sqrt(np.sum(body.rho * (u0**2).sum(axis=0)) * g.cell_area))
    if lambda0 is not None and l2 > lambda0:
        warnings.warn(f"||v0||_2 = {l2:.3g} exceeds the smallness level {lambda0:.3g}", stacklevel=2)
    t = picard_times(T) if times is None else np.asarray(times, dtype=float)
    if t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise ValueError("Picard times must start at 0 and increase")

    # linear part, exact at each sample time
    lin = np.empty((t.size, 2, g.N, g.N))
    lin[0] = u0
    lin[1:] = ifft2(body.evolve(fft2(u0)[None].repeat(t.size - 1, 0), t[1:]), g)

    # quadrature layout: for sample i >= 1, nodes s_ij with weights w_ij
    nodes, weights, owner = [], [], []
    for i in range(1, t.size):
        s, w = graded_nodes(t[i], quad_nodes)
        nodes.append(s)
        weights.append(w)
        owner.append(np.full(s.size, i))
    nodes, weights, owner = map(np.concatenate, (nodes, weights, owner))
    durations = t[owner] - nodes

    def Z(v):
        out = lin.copy()
        if not nonlinear:
            return out
        acc = np.zeros((t.size,) + fft2(u0).shape, dtype=complex)
        for a in range(0, nodes.size, batch):
            sl = slice(a, a + batch)
            vs = _interp(t, v, nodes[sl])
            gh = body.forcing_hat(vs)
            sh = body.evolve(gh, durations[sl])
            np.add.at(acc, owner[sl], weights[sl, None, None, None] * sh)
        out[1:] += ifft2(acc[1:], g)
        return out

    def xn(v):
        return xnorm(v, ell=body.ell(v), grid=g, rho=body.rho, times=t)

    v = lin
    x0 = xn(v)
    xs, dists = [x0], []
    status = "max_iter"
    for k in range(max_iter):
        w = Z(v)
        dists.append(xn(w - v).total)
        xs.append(xn(w))
        v = w
        if xs[-1].total > 10 * max(x0.total, 1e-300):
            status = "diverged"
            log.warning("Picard iteration diverged at iterate %d", k + 1)
            break
        if dists[-1] <= tol:
            status = "converged"
            break
    return PicardResult(t, v, body.ell(v), g, body.rho, dists, xs, len(dists), status == "converged", status)


def duhamel_oracle(v0, times, config: SimConfig, dt: float | None = None) -> StokesSamples:
    """Time-stepped solution of dv/dt = A v + P div F(v) with the disk fixed."""
    body = _Body(config, dt)

    def forcing(u, stepper):
        return body.forcing_hat(u)

    t = np.asarray(times, dtype=float)
    return stokes_evolve(v0, t, replace(config, mode="stokes"), dt=body.dt, forcing=forcing)


@dataclass(frozen=True)
class ContractionReport:
    data_distance: float
    fixed_point_distance: float
    lipschitz_ratio: float
    factors_a: np.ndarray
    factors_b: np.ndarray

    @property
    def max_factor(self) -> float:
        f = np.concatenate([self.factors_a, self.factors_b])
        return float(f.max()) if f.size else 0.0


def contraction_report(v0a, v0b, T: float, config: SimConfig, **kw) -> ContractionReport:
    """Lipschitz ratio of the fixed points with respect to the data (X norm over L2)."""
    ra = picard_iterate(v0a, T, config, **kw)
    rb = ra if v0b is v0a else picard_iterate(v0b, T, config, **kw)
    g = ra.grid
    a = v0a.values if isinstance(v0a, VectorField) else np.asarray(v0a)
    b = v0b.values if isinstance(v0b, VectorField) else np.asarray(v0b)
    dd = float(np.sqrt(np.sum(ra.rho * ((a - b) ** 2).sum(axis=0)) * g.cell_area))
    diff = ra.fields - rb.fields
    fd = xnorm(diff, ell=ra.ell - rb.ell, grid=g, rho=ra.rho, times=ra.times).total
    ratio = fd / dd if dd > 0 else 0.0
    return ContractionReport(dd, fd, ratio, ra.contraction_factors, rb.contraction_factors)
