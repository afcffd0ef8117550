"""Time stepping for the fluid-disk system, the linear Stokes evolution and the
disk-free reference solver.

One integrator covers all modes: integrating-factor Heun (RK2) with exact
spectral diffusion, explicit dealiased advection in divergence form, and the
rigid projection after each stage.  In Stokes mode advection is off and the
disk stays where it is, so each step is simply ``project(exp(nu dt Lap) u)``.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .fields import Grid2D, VectorField, fft2, ifft2, _leray_hat, make_grid
from .initial import InitialSpec, build_initial
from .norms import NormSeries, lp_norm
from .solid import SolidParams, SolidState, indicator_mask, rigid_average

log = logging.getLogger(__name__)

__all__ = [
    "SimConfig",
    "TrajectoryRecord",
    "CFLViolation",
    "Stepper",
    "step",
    "simulate",
    "ns_reference",
    "stokes_evolve",
    "stokes_evolve_div",
    "StokesSamples",
    "load_config",
    "write_trajectory_csv",
]

MODES = ("nonlinear", "stokes", "reference")


class CFLViolation(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    L: float = 32.0
    N: int = 256
    nu: float = 0.05
    eps: float | None = 0.2
    rho_s: float = 1.0
    scaling: str = "massless"   # massless | massive | none
    init: InitialSpec = field(default_factory=InitialSpec)
    dt: float | None = None
    cfl: float = 0.4
    T: float = 1.0
    samples: tuple = ()
    mode: str = "nonlinear"
    smoothing_cells: float = 2.0
    mask_min_cells: float = 3.0
    proj_iter: int = 1
    norms: tuple = (2.0, np.inf)
    keep_fields: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if not self.nu > 0:
            raise ValueError("viscosity must be positive")
        if self.eps is not None and self.eps >= self.L / 8:
            raise ValueError(f"eps={self.eps} must be below L/8={self.L / 8}")
        if not self.T >= 0:
            raise ValueError("final time must be nonnegative")
        s = tuple(float(t) for t in self.samples)
        if any(t < 0 or t > self.T * (1 + 1e-12) for t in s):
            raise ValueError("sample times must lie in [0, T]")
        object.__setattr__(self, "samples", tuple(sorted(set(s))))
        make_grid(self.L, self.N)

    @property
    def grid(self) -> Grid2D:
        return make_grid(self.L, self.N)

    @property
    def has_solid(self) -> bool:
        return self.eps is not None and self.mode != "reference"

    @property
    def params(self) -> SolidParams | None:
        if self.eps is None:
            return None
        if self.scaling == "massive":
            # rho_s is the density of the unit disk; the mass stays at pi rho_s
            return SolidParams.massive(self.eps, np.pi * self.rho_s, self.nu)
        return SolidParams(self.eps, self.rho_s, self.nu, self.scaling)

    def sample_times(self) -> np.ndarray:
        return np.array(self.samples) if self.samples else np.array([self.T])

    def to_dict(self) -> dict:
        d = asdict(self)
        d["norms"] = [("inf" if np.isinf(p) else p) for p in self.norms]
        return d

    @classmethod
    def from_dict(cls, doc: dict) -> "SimConfig":
        """Parse the nested JSON layout (grid.*, solid.*, time.*, init.*)."""
        doc = dict(doc)
        grid = doc.pop("grid", {})
        solid = doc.pop("solid", None)
        time = doc.pop("time", {})
        init = doc.pop("init", None)
        num = doc.pop("numerics", {})
        kw = {}
        if "L" in grid:
            kw["L"] = float(grid["L"])
        if "N" in grid:
            kw["N"] = int(grid["N"])
        if "nu" in doc:
            kw["nu"] = float(doc.pop("nu"))
        if "mode" in doc:
            kw["mode"] = doc.pop("mode")
        if solid is None or solid.get("eps") is None:
            kw["eps"] = None
        else:
            kw["eps"] = float(solid["eps"])
            kw["rho_s"] = float(solid.get("rho_s", 1.0))
            kw["scaling"] = solid.get("scaling", "massless")
        if init is not None:
            kw["init"] = InitialSpec.from_dict(init)
        if "dt" in time:
            kw["dt"] = float(time["dt"])
        if "cfl" in time:
            kw["cfl"] = float(time["cfl"])
        if "T" in time:
            kw["T"] = float(time["T"])
        if "samples" in time:
            s = time["samples"]
            T = kw.get("T", 1.0)
            kw["samples"] = tuple(np.linspace(0, T, int(s) + 1)[1:]) if isinstance(s, int) else tuple(s)
        for key in ("smoothing_cells", "mask_min_cells", "proj_iter"):
            if key in num:
                kw[key] = num[key]
        if "norms" in num:
            kw["norms"] = tuple(np.inf if p in ("inf", "Infinity") else float(p) for p in num["norms"])
        if doc:
            log.debug("ignoring non-solver config keys: %s", sorted(doc))
        return cls(**kw)


def load_config(path) -> tuple[SimConfig, dict]:
    with open(path) as fh:
        doc = json.load(fh)
    return SimConfig.from_dict(doc), doc


# ---------------------------------------------------------------------------
# projection and right-hand sides


class _Projector:
    """Rigid projection for a fixed mask, batched over leading axes, spectral output."""

    def __init__(self, grid: Grid2D, state: SolidState, params: SolidParams, smoothing_cells=2.0,
                 min_cells=3.0, n_iter=1):
        self.grid = grid
        self.state = state
        self.rho_s = params.rho_s
        self.n_iter = n_iter
        self.mask = indicator_mask(grid, state, params.eps, smoothing_cells * grid.h, min_cells).values
        m = self.mask
        self.rho = 1.0 + (self.rho_s - 1.0) * m
        w = m * self.rho
        self.w = w
        dx, dy = grid.offsets(state.h)
        self.dx, self.dy = dx, dy
        px, py = -dy, dx
        W = w.sum()
        Mx, My = (w * px).sum(), (w * py).sum()
        I = (w * (dx * dx + dy * dy)).sum()
        self.Ainv = np.linalg.inv(np.array([[W, 0.0, Mx], [0.0, W, My], [Mx, My, I]]))
        # rows of the moment map: b = sum(w * basis . u)
        self.wx = w
        self.wpx = w * px
        self.wpy = w * py

    def fit(self, u):
        b0 = np.einsum("...ij,ij->...", u[..., 0, :, :], self.wx)
        b1 = np.einsum("...ij,ij->...", u[..., 1, :, :], self.wx)
        b2 = (np.einsum("...ij,ij->...", u[..., 0, :, :], self.wpx)
              + np.einsum("...ij,ij->...", u[..., 1, :, :], self.wpy))
        sol = np.einsum("ab,b...->a...", self.Ainv, np.stack([b0, b1, b2]))
        return sol[0], sol[1], sol[2]

    def rigid(self, lx, ly, r):
        lx, ly, r = (np.asarray(a)[..., None, None] for a in (lx, ly, r))
        return np.stack(np.broadcast_arrays(lx - r * self.dy, ly + r * self.dx), axis=-3)

    def __call__(self, u):
        """Physical u (..., 2, N, N) -> projected spectral field."""
        g = self.grid
        for it in range(self.n_iter):
            lx, ly, r = self.fit(u)
            u = u + self.mask * (self.rigid(lx, ly, r) - u)
            uh = _leray_hat(fft2(u), g)
            if it + 1 < self.n_iter:
                u = ifft2(uh, g)
        return uh


def _advection_hat(uh, g: Grid2D):
    """-D P div(Du (x) Du), dealiased so that the product is alias free."""
    ud = ifft2(uh * g.dealias, g)
    u, v = ud[..., 0, :, :], ud[..., 1, :, :]
    fxx, fxy, fyy = fft2(u * u), fft2(u * v), fft2(v * v)
    nh = np.stack([-1j * (g.kx * fxx + g.ky * fxy), -1j * (g.kx * fxy + g.ky * fyy)], axis=-3)
    return _leray_hat(nh, g) * g.dealias


# ---------------------------------------------------------------------------
# stepper


class Stepper:
    """Owns the evolving state of one run; ``advance(dt)`` performs one step."""

    def __init__(self, grid: Grid2D, nu: float, u0: np.ndarray, state: SolidState | None,
                 params: SolidParams | None, mode: str = "nonlinear", smoothing_cells=2.0,
                 min_cells=3.0, proj_iter=1, forcing: Callable | None = None, t0: float = 0.0):
        self.grid = grid
        self.nu = nu
        self.mode = mode
        self.params = params
        self.state = state
        self.forcing = forcing
        self.t = t0
        self._proj_kw = dict(smoothing_cells=smoothing_cells, min_cells=min_cells, n_iter=proj_iter)
        self.proj = None
        if params is not None and state is not None:
            self.proj = _Projector(grid, state, params, **self._proj_kw)
        self.u = np.asarray(u0, dtype=float)
        self.uh = fft2(self.u)
        self._E_cache = {}
        self.last_ell = None

    @property
    def advect(self) -> bool:
        return self.mode != "stokes"

    def _E(self, dt):
        E = self._E_cache.get(dt)
        if E is None:
            if len(self._E_cache) > 64:
                self._E_cache.clear()
            E = self._E_cache[dt] = np.exp(-self.nu * self.grid.k2 * dt)
        return E

    def _rhs(self, uh, u):
        n = None
        if self.advect:
            n = _advection_hat(uh, self.grid)
        if self.forcing is not None:
            f = self.forcing(u, self)
            n = f if n is None else n + f
        return n

    def advance(self, dt: float):
        g = self.grid
        if self.proj is not None and self.mode == "nonlinear":
            # move the disk with the current rigid velocity, then project there
            self.state = self.state.advanced(dt, self.state.ell, self.state.r, g)
            self.proj = _Projector(g, self.state, self.params, **self._proj_kw)
        E = self._E(dt)
        n0 = self._rhs(self.uh, self.u)
        if n0 is None:
            uh = E * self.uh
            if self.proj is not None:
                uh = self.proj(ifft2(uh, g))
        else:
            uh1 = E * (self.uh + dt * n0)
            if self.proj is not None:
                uh1 = self.proj(ifft2(uh1, g))
            u1 = ifft2(uh1, g)
            n1 = self._rhs(uh1, u1)
            uh = E * self.uh + 0.5 * dt * (E * n0 + n1)
            if self.proj is not None:
                uh = self.proj(ifft2(uh, g))
        self.uh = uh
        self.u = ifft2(uh, g)
        self.t += dt
        if not np.all(np.isfinite(self.u)):
            raise CFLViolation(f"non-finite velocity at t={self.t:.4g}")
        if self.proj is not None and self.u.ndim == 3:
            ell, r = rigid_average(VectorField(g, self.u), self.proj.mask, self.state, self.params.rho_s)
            self.state = SolidState(self.state.h, self.state.theta, ell, r)
        return self

    def density(self) -> np.ndarray | float:
        return 1.0 if self.proj is None else self.proj.rho

    def energy(self) -> float:
        return 0.5 * float((self.density() * (self.u**2).sum(axis=-3)).sum() * self.grid.cell_area)

    def dissipation_rate(self) -> float:
        return float(self.dissipation_spectrum().sum())

    def dissipation_spectrum(self) -> np.ndarray:
        """Per-mode contributions to 2 nu int |D u|^2 (Parseval, rfft layout)."""
        g = self.grid
        uh = self.uh
        d11 = g.kx * uh[0]
        d22 = g.ky * uh[1]
        d12 = 0.5 * (g.ky * uh[0] + g.kx * uh[1])
        dens = np.abs(d11) ** 2 + np.abs(d22) ** 2 + 2 * np.abs(d12) ** 2
        w = np.full(dens.shape[-1], 2.0)
        w[0] = 1.0
        if g.N % 2 == 0:
            w[-1] = 1.0
        return 2.0 * self.nu * dens * w * g.cell_area / g.N**2


def _log_mean_integral(r0: np.ndarray, r1: np.ndarray, h: float) -> float:
    """int_0^h r(s) ds per mode, exact when each mode decays exponentially."""
    tiny = 1e-300
    a = np.maximum(r0, tiny)
    b = np.maximum(r1, tiny)
    q = np.log(a / b)
    close = np.abs(q) < 1e-6
    lm = np.where(close, 0.5 * (a + b) * (1 - q * q / 12), (a - b) / np.where(close, 1.0, q))
    lm = np.where((r0 <= tiny) | (r1 <= tiny), 0.5 * (r0 + r1), lm)
    return float(h * lm.sum())


def step(state: SolidState, fields: VectorField, config: SimConfig, dt: float | None = None):
    """Single step of the configured mode; returns the new (state, field)."""
    g = config.grid
    dt = dt if dt is not None else (config.dt or config.cfl * g.h / max(1.0, float(np.abs(fields.values).max())))
    st = Stepper(g, config.nu, fields.values, state if config.has_solid else None,
                 config.params if config.has_solid else None, config.mode, config.smoothing_cells,
                 config.mask_min_cells, config.proj_iter)
    st.advance(dt)
    return st.state, VectorField(g, st.u, solenoidal=True)


# ---------------------------------------------------------------------------
# records


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    times: np.ndarray
    fields: tuple
    states: tuple
    energy: np.ndarray
    dissipation: np.ndarray            # cumulative 2 nu int |D u|^2
    norms: dict
    ell: np.ndarray
    r: np.ndarray
    n_steps: int = 0
    dt: float = 0.0
    config: SimConfig | None = None
    step_energy: np.ndarray | None = None      # per-step bookkeeping (t, E, D)

    @property
    def residual(self) -> np.ndarray:
        e0 = self.energy[0]
        if e0 == 0:
            return np.zeros_like(self.energy)
        return np.abs(self.energy + self.dissipation - e0) / e0

    @property
    def max_residual(self) -> float:
        if self.step_energy is not None and self.step_energy.shape[0] > 0:
            t, E, D = self.step_energy.T
            return 0.0 if E[0] == 0 else float(np.max(np.abs(E + D - E[0]) / E[0]))
        return float(self.residual.max())

    def norm_series(self, p) -> NormSeries:
        return self.norms[_label(p)]


def _label(p) -> str:
    if p == "ell":
        return "ell"
    return "linf" if np.isinf(p) else f"l{p:g}"


def _segments(t0, targets, dt, dt_rel=0.0, dt_max=np.inf):
    """Yield (target, n_steps, step) with uniform steps inside each segment."""
    t = t0
    for ts in targets:
        span = ts - t
        if span <= 1e-14 * max(1.0, abs(ts)):
            yield ts, 0, 0.0
            continue
        h = min(max(dt, dt_rel * t), dt_max)
        n = int(np.ceil(span / h - 1e-9))
        yield ts, n, span / n
        t = ts


def _check_cfl(config: SimConfig, u0: np.ndarray) -> float:
    g = config.grid
    umax = float(np.sqrt((u0**2).sum(axis=0)).max())
    limit = config.cfl * g.h / max(1.0, umax)
    if config.dt is None:
        return limit
    if config.mode != "stokes" and config.dt > limit * (1 + 1e-12):
        raise CFLViolation(f"dt={config.dt} exceeds the CFL bound {limit:.4g} (cfl={config.cfl})")
    return config.dt


def simulate(config: SimConfig, u0: VectorField | None = None, state0: SolidState | None = None,
             forcing: Callable | None = None) -> TrajectoryRecord:
    """Run the configured mode from t=0 to T and record the sample times.

    Energies, dissipation and the energy-identity residual are tracked at
    every step; fields and norms are stored at the sample times (and t=0).
    """
    g = config.grid
    if u0 is None:
        eps = config.eps if config.has_solid else None
        u0, _ = build_initial(config.init, g, eps)
    if state0 is None:
        init = config.init.resolved(g)
        state0 = SolidState(init.h0, 0.0, init.ell0, init.r0).wrapped(g)
    has_solid = config.has_solid
    dt = _check_cfl(config, u0.values)
    st = Stepper(g, config.nu, u0.values, state0 if has_solid else None, config.params if has_solid else None,
                 config.mode, config.smoothing_cells, config.mask_min_cells, config.proj_iter, forcing)
    if has_solid:
        ell, r = rigid_average(VectorField(g, st.u), st.proj.mask, st.state, config.params.rho_s)
        st.state = SolidState(st.state.h, st.state.theta, ell, r)
    u_ref = max(1.0, float(np.abs(u0.values).max()))

    times, flds, states, E, D, ells, rs = [], [], [], [], [], [], []
    norm_vals = {_label(p): [] for p in config.norms}
    steps = []
    cum = 0.0
    rate = st.dissipation_spectrum()

    def record():
        times.append(st.t)
        v = VectorField(g, st.u, solenoidal=True)
        flds.append(v if config.keep_fields else None)
        states.append(st.state)
        E.append(st.energy())
        D.append(cum)
        ells.append(np.zeros(2) if st.state is None else st.state.ell)
        rs.append(0.0 if st.state is None else st.state.r)
        rho = st.density()
        for p in config.norms:
            w = rho if (np.ndim(rho) and not np.isinf(p)) else None
            norm_vals[_label(p)].append(lp_norm(v, p, weight=w))

    record()
    steps.append((0.0, E[0], 0.0))
    n_total = 0
    for ts, n, h in _segments(0.0, config.sample_times(), dt):
        for _ in range(n):
            st.advance(h)
            n_total += 1
            new_rate = st.dissipation_spectrum()
            cum += _log_mean_integral(rate, new_rate, h)
            rate = new_rate
            steps.append((st.t, st.energy(), cum))
            if config.mode != "stokes" and np.abs(st.u).max() > 20 * u_ref:
                raise CFLViolation(f"velocity growth at t={st.t:.4g}: max |u| = {np.abs(st.u).max():.3g}")
        st.t = ts
        record()
    tarr = np.array(times)
    norms = {}
    for k, vals in norm_vals.items():
        norms[k] = (tarr, np.array(vals))
    norms["ell"] = (tarr, np.linalg.norm(np.array(ells), axis=1))
    return TrajectoryRecord(
        times=tarr, fields=tuple(flds), states=tuple(states), energy=np.array(E), dissipation=np.array(D),
        norms=_NormDict(norms), ell=np.array(ells), r=np.array(rs), n_steps=n_total, dt=dt, config=config,
        step_energy=np.array(steps),
    )


class _NormDict(dict):
    """Maps labels to NormSeries; t=0 is dropped because the series times must be positive."""

    def __init__(self, raw):
        super().__init__()
        for k, (t, v) in raw.items():
            keep = t > 0
            self[k] = NormSeries(t[keep], v[keep], k)
        self.initial = {k: float(v[0]) for k, (t, v) in raw.items() if t[0] == 0}


def ns_reference(config: SimConfig, u0: VectorField | None = None) -> TrajectoryRecord:
    """Whole-plane surrogate without the disk."""
    return simulate(replace(config, mode="reference"), u0=u0)


# ---------------------------------------------------------------------------
# Stokes (semigroup) mode


@dataclass(frozen=True, eq=False)
class StokesSamples:
    times: np.ndarray
    fields: np.ndarray           # (T, ..., 2, N, N)
    ell: np.ndarray              # (T, ..., 2)
    r: np.ndarray                # (T, ...)
    grid: Grid2D
    mask: np.ndarray | None = None
    rho: np.ndarray | float = 1.0

    def field(self, i, b=None) -> VectorField:
        a = self.fields[i] if b is None else self.fields[i][b]
        return VectorField(self.grid, a, solenoidal=True)

    def norm(self, p, weighted=True) -> np.ndarray:
        """L^p norms per sample (and batch member); rho-weighted for finite p."""
        mag = np.sqrt((self.fields**2).sum(axis=-3))
        if np.isinf(p):
            return mag.max(axis=(-2, -1))
        w = self.rho if weighted else 1.0
        return (np.sum(w * mag**p, axis=(-2, -1)) * self.grid.cell_area) ** (1.0 / p)


def _stokes_setup(config: SimConfig, h=None):
    g = config.grid
    if config.eps is None or config.mode == "reference":
        return g, None, None
    h = config.init.h0 if h is None else h
    state = SolidState(h).wrapped(g)
    return g, state, config.params


def stokes_evolve(v0, t_targets: Sequence[float], config: SimConfig, dt: float | None = None,
                  dt_rel: float = 0.0, dt_max: float = np.inf, h=None, forcing: Callable | None = None,
                  project_initial: bool = False) -> StokesSamples:
    """Linear evolution with the disk held fixed, sampled at ``t_targets``.

    ``v0`` is a VectorField or an array (..., 2, N, N) of fields evolved
    together.  Steps are uniform between consecutive targets, of size about
    max(dt, dt_rel t) capped by dt_max.  ``forcing(u, stepper)`` adds an
    explicit spectral right-hand side.
    """
    g, state, params = _stokes_setup(config, h)
    u0 = v0.values if isinstance(v0, VectorField) else np.asarray(v0, dtype=float)
    if u0.shape[-3:] != (2, g.N, g.N):
        raise ValueError("initial field does not match the grid")
    dt = dt or config.dt or 0.1 * g.h
    targets = np.atleast_1d(np.asarray(t_targets, dtype=float))
    if np.any(np.diff(targets) < 0) or targets[0] < 0:
        raise ValueError("targets must be ascending and nonnegative")
    st = Stepper(g, config.nu, u0, state, params, "stokes", config.smoothing_cells, config.mask_min_cells,
                 config.proj_iter, forcing)
    if project_initial and st.proj is not None:
        st.uh = st.proj(st.u)
        st.u = ifft2(st.uh, g)
    out, ells, rs = [], [], []
    for ts, n, hstep in _segments(0.0, targets, dt, dt_rel, dt_max):
        for _ in range(n):
            st.advance(hstep)
        st.t = ts
        out.append(st.u.copy())
        if st.proj is not None:
            lx, ly, r = _batched_average(st.u, st.proj, params.rho_s)
            ells.append(np.stack([lx, ly], axis=-1))
            rs.append(r)
        else:
            ells.append(np.zeros(st.u.shape[:-3] + (2,)))
            rs.append(np.zeros(st.u.shape[:-3]))
    return StokesSamples(targets, np.array(out), np.array(ells), np.array(rs), g,
                         None if st.proj is None else st.proj.mask,
                         1.0 if st.proj is None else st.proj.rho)


def _batched_average(u, proj: _Projector, rho_s):
    m = proj.mask
    w = proj.w
    W = w.sum()
    lx = np.einsum("...ij,ij->...", u[..., 0, :, :], w) / W
    ly = np.einsum("...ij,ij->...", u[..., 1, :, :], w) / W
    dx, dy = proj.dx, proj.dy
    ang = np.einsum("...ij,ij->...", u[..., 0, :, :], -m * dy) + np.einsum("...ij,ij->...", u[..., 1, :, :], m * dx)
    return lx, ly, ang / (m * (dx * dx + dy * dy)).sum()


def stokes_evolve_div(F: np.ndarray, t_targets, config: SimConfig, tol: float = 1e-8, **kw) -> StokesSamples:
    """Evolve P div F, F a 2x2 tensor field (..., 2, 2, N, N) vanishing on the disk.

    The initial field is the rigid projection of div F (which includes the
    Leray step); ``tol`` bounds |F| on the disk relative to max |F|.
    """
    g, state, params = _stokes_setup(config, kw.get("h"))
    F = np.asarray(F, dtype=float)
    if params is not None:
        dx, dy = g.offsets(state.h)
        on_disk = dx * dx + dy * dy <= params.eps**2
        fmax = np.abs(F).max()
        if fmax > 0 and np.abs(F[..., on_disk]).max() > tol * fmax:
            raise ValueError("forcing tensor does not vanish on the disk")
    Fh = fft2(F)
    dv = np.stack([1j * (g.kx * Fh[..., 0, 0, :, :] + g.ky * Fh[..., 0, 1, :, :]),
                   1j * (g.kx * Fh[..., 1, 0, :, :] + g.ky * Fh[..., 1, 1, :, :])], axis=-3)
    v0 = ifft2(_leray_hat(dv, g), g)
    return stokes_evolve(v0, t_targets, config, project_initial=True, **kw)


# ---------------------------------------------------------------------------
# output


def write_trajectory_csv(rec: TrajectoryRecord, path) -> None:
    l2 = rec.norms.get("l2")
    linf = rec.norms.get("linf")
    init = getattr(rec.norms, "initial", {})

    def col(series, label, i):
        if series is None:
            return float("nan")
        if rec.times[i] == 0:
            return init.get(label, float("nan"))
        j = np.searchsorted(series.times, rec.times[i])
        return series.values[j]

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write("t,E,dissipation,l2,linf,ellx,elly,r\n")
        for i, t in enumerate(rec.times):
            fh.write(",".join(f"{x:.17g}" for x in (
                t, rec.energy[i], rec.dissipation[i], col(l2, "l2", i), col(linf, "linf", i),
                rec.ell[i][0], rec.ell[i][1], rec.r[i])) + "\n")
