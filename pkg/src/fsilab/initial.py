"""Compatible initial data for the disk problem and a compatibility checker.

Three constructions are provided, all producing a divergence-free field that
moves rigidly inside the disk B(h0, eps):

* ``exterior_disk_field``: whole-plane Biot-Savart velocity corrected by the
  image system of the disk (zero circulation) plus the potential dipole of a
  translating disk;
* ``stream_cutoff_field``: the stream function is cut off around the disk
  and replaced by the stream function of a rigid motion;
* ``field_cutoff_initial``: the velocity itself is cut off and the resulting
  divergence is removed by an annulus corrector.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .bogovskii import AnnulusGrid, _solver_for, cutoff, cutoff_gradient, smooth_step
from .fields import (Grid2D, ScalarField, VectorField, divergence, fft2, ifft2, leray_project,
                     curl, perp_gradient, spectral_interpolate)
from .norms import lp_norm

__all__ = [
    "biot_savart",
    "gaussian_psi",
    "gaussian_dipole_vorticity",
    "annular_bump_vorticity",
    "bump_dipole_vorticity",
    "exterior_disk_field",
    "exterior_disk_velocity",
    "stream_cutoff_field",
    "field_cutoff_initial",
    "field_cutoff_details",
    "check_compatibility",
    "CompatibilityReport",
    "InitialSpec",
    "build_initial",
]


def _rel_mean(omega: np.ndarray) -> float:
    tot = np.abs(omega).sum()
    return abs(omega.sum()) / tot if tot > 0 else 0.0


def biot_savart(omega: ScalarField) -> VectorField:
    """Velocity with vorticity ``omega`` and zero mean: u^ = -i k^perp w^ / |k|^2."""
    if _rel_mean(omega.values) > 1e-8:
        raise ValueError("vorticity must have zero mean for the periodic Biot-Savart law")
    g = omega.grid
    wh = fft2(omega.values) / g._kd2_safe
    wh[0, 0] = 0.0
    uh = np.stack([1j * g.ky * wh, -1j * g.kx * wh])
    return VectorField(g, ifft2(uh, g), solenoidal=True)


# ---------------------------------------------------------------------------
# catalog


def gaussian_psi(grid: Grid2D, center=(0.0, 0.0), sigma=0.5, amp=1.0) -> ScalarField:
    """Gaussian stream function; its velocity is a shielded vortex (zero net circulation)."""
    dx, dy = grid.offsets(center)
    return ScalarField(grid, amp * np.exp(-(dx * dx + dy * dy) / (2 * sigma**2)))


def gaussian_dipole_vorticity(grid: Grid2D, center=(0.0, 0.0), sigma=0.5, amp=1.0,
                              direction=(1.0, 0.0)) -> ScalarField:
    """Directional derivative of a Gaussian, differentiated spectrally so the mean is exactly zero."""
    dx, dy = grid.offsets(center)
    G = np.exp(-(dx * dx + dy * dy) / (2 * sigma**2))
    Gh = fft2(G)
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    w = ifft2(1j * (d[0] * grid.kx + d[1] * grid.ky) * Gh, grid)
    return ScalarField(grid, amp * w)


def bump_dipole_vorticity(grid: Grid2D, center=(0.0, 0.0), radius=0.5, amp=1.0,
                          direction=(1.0, 0.0)) -> ScalarField:
    """Directional derivative of a compactly supported C-infinity bump of the given radius."""
    from .bogovskii import _smooth_step_deriv

    dx, dy = grid.offsets(center)
    rad = np.hypot(dx, dy)
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    safe = np.where(rad > 0, rad, 1.0)
    dB = -_smooth_step_deriv(1.0 - rad / radius) / radius
    w = dB * (d[0] * dx + d[1] * dy) / safe
    B = smooth_step(1.0 - rad / radius)
    w -= B * w.sum() / B.sum()  # exact discrete mean zero
    return ScalarField(grid, amp * w)


def _bump(s):
    return smooth_step(s) * smooth_step(1.0 - s)


def annular_bump_vorticity(grid: Grid2D, center=(0.0, 0.0), r_core=0.5, r_outer=1.0,
                           amp=1.0) -> ScalarField:
    """Radial vorticity: positive core on [0, r_core], negative ring on [r_core, r_outer],
    balanced so the discrete integral vanishes exactly."""
    dx, dy = grid.offsets(center)
    rad = np.hypot(dx, dy)
    core = smooth_step(1.0 - rad / r_core)  # flat top, vanishes at r_core
    ring = _bump((rad - r_core) / (r_outer - r_core))
    w = core - ring * core.sum() / ring.sum()
    return ScalarField(grid, amp * w)


def _support_nodes(omega: ScalarField, rel=1e-14):
    g = omega.grid
    w = omega.values
    keep = np.abs(w) > rel * np.abs(w).max()
    return g.X[keep], g.Y[keep], w[keep] * g.cell_area


# ---------------------------------------------------------------------------
# exterior-disk construction


def _kernel_sum(px, py, sx, sy, sw, chunk=2048):
    """Whole-plane Biot-Savart sum of point vortices (sx, sy, sw) at points (px, py)."""
    out = np.zeros((2, px.size))
    for i in range(0, px.size, chunk):
        dx = px[i:i + chunk, None] - sx[None, :]
        dy = py[i:i + chunk, None] - sy[None, :]
        r2 = dx * dx + dy * dy
        out[0, i:i + chunk] = (-dy / r2 * sw).sum(axis=1)
        out[1, i:i + chunk] = (dx / r2 * sw).sum(axis=1)
    return out / (2 * np.pi)


@dataclass(frozen=True)
class _ImageSystem:
    """Image vorticity of a disk, as a multipole series about the centre plus a
    direct sum for the few support points close to the disk."""

    h0: np.ndarray
    eps: float
    coeffs: np.ndarray      # c_k of sum_k c_k zeta^{-(k+1)} (complex velocity u - i v)
    near: tuple             # image points (x, y, weight) handled directly

    @classmethod
    def build(cls, omega: ScalarField, eps, h0, n_terms=96):
        g = omega.grid
        h0 = np.asarray(h0, dtype=float)
        sx, sy, sw = _support_nodes(omega)
        dx = (sx - h0[0] + g.L / 2) % g.L - g.L / 2
        dy = (sy - h0[1] + g.L / 2) % g.L - g.L / 2
        d2 = dx * dx + dy * dy
        if np.any(d2 < eps**2) and np.abs(sw[d2 < eps**2]).max() > 1e-10 * np.abs(sw).max():
            raise ValueError("vorticity support overlaps the disk")
        # image points y* = eps^2 y / |y|^2 (relative to h0), complex form eps^2 / conj(zeta)
        zs = eps**2 / (dx - 1j * dy)
        near = d2 < (1.5 * eps) ** 2
        far = ~near
        k = np.arange(n_terms)
        zf = zs[far]
        coeffs = -(sw[far][None, :] * zf[None, :] ** k[:, None]).sum(axis=1) / (2j * np.pi)
        return cls(h0, float(eps), coeffs, (zs[near].real, zs[near].imag, sw[near]))

    def velocity(self, dx, dy) -> np.ndarray:
        """Image velocity at offsets (dx, dy) from the centre, |offset| >= eps."""
        zeta = dx + 1j * dy
        inv = 1.0 / zeta
        w = np.zeros_like(zeta)
        p = inv.copy()
        for c in self.coeffs:
            w += c * p
            p *= inv
        u = np.stack([w.real, -w.imag])
        nx, ny, nw = self.near
        if nx.size:
            u -= _kernel_sum(dx.ravel(), dy.ravel(), nx, ny, nw).reshape(2, *dx.shape)
        return u


def _dipole(dx, dy, ell0, eps):
    r2 = dx * dx + dy * dy
    dot = ell0[0] * dx + ell0[1] * dy
    return -eps**2 * np.stack([ell0[0] / r2 - 2 * dot * dx / r2**2, ell0[1] / r2 - 2 * dot * dy / r2**2])


def exterior_disk_velocity(points, omega0: ScalarField, ell0, eps, h0, r0=0.0) -> np.ndarray:
    """Exact evaluation of the exterior-disk velocity at arbitrary points (P, 2).

    Outside the disk: whole-plane Biot-Savart integral of omega0 (direct
    quadrature over its support nodes) minus the image system plus the
    translating-disk dipole.  Inside: l0 + r0 (x - h0)^perp.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    g = omega0.grid
    h0 = np.asarray(h0, dtype=float)
    ell0 = np.asarray(ell0, dtype=float)
    dx = (pts[:, 0] - h0[0] + g.L / 2) % g.L - g.L / 2
    dy = (pts[:, 1] - h0[1] + g.L / 2) % g.L - g.L / 2
    inside = dx * dx + dy * dy < eps**2
    out = np.empty((2, pts.shape[0]))
    out[0, inside] = ell0[0] - r0 * dy[inside]
    out[1, inside] = ell0[1] + r0 * dx[inside]
    o = ~inside
    sx, sy, sw = _support_nodes(omega0) if np.any(omega0.values) else (np.zeros(0),) * 3
    u = _dipole(dx[o], dy[o], ell0, eps)
    if sw.size:
        sdx = (sx - h0[0] + g.L / 2) % g.L - g.L / 2
        sdy = (sy - h0[1] + g.L / 2) % g.L - g.L / 2
        u += _kernel_sum(dx[o], dy[o], sdx, sdy, sw)
        u += _ImageSystem.build(omega0, eps, h0).velocity(dx[o], dy[o])
    out[:, o] = u
    return out.T


def exterior_disk_field(omega0: ScalarField, ell0, eps, h0, r0=0.0) -> VectorField:
    """Grid realization of the exterior-disk data.

    The image and dipole corrections are added to the periodic Biot-Savart
    velocity with a smooth weight equal to 1 up to 4 eps and 0 beyond 8 eps;
    the disk itself moves rigidly.  The result is Leray projected.
    """
    g = omega0.grid
    if 8 * eps >= g.L / 2:
        raise ValueError("disk too large for the blending window")
    if _rel_mean(omega0.values) > 1e-8:
        raise ValueError("vorticity must have zero mean")
    h0 = np.asarray(h0, dtype=float)
    ell0 = np.asarray(ell0, dtype=float)
    u = biot_savart(omega0).values.copy() if np.any(omega0.values) else np.zeros((2, g.N, g.N))
    dx, dy = g.offsets(h0)
    rad = np.hypot(dx, dy)
    inside = rad < eps
    win = (rad >= eps) & (rad < 8 * eps)
    beta = 1.0 - smooth_step((rad[win] - 4 * eps) / (4 * eps))
    corr = _dipole(dx[win], dy[win], ell0, eps)
    if np.any(omega0.values):
        corr += _ImageSystem.build(omega0, eps, h0).velocity(dx[win], dy[win])
    u[:, win] += beta * corr
    u[0][inside] = ell0[0] - r0 * dy[inside]
    u[1][inside] = ell0[1] + r0 * dx[inside]
    if not np.any(u):
        return VectorField.zeros(g)
    return leray_project(VectorField(g, u))


# ---------------------------------------------------------------------------
# cutoff constructions


def _rigid(dx, dy, ell0, r0):
    return np.stack([ell0[0] - r0 * dy, ell0[1] + r0 * dx])


def _check_eps(grid: Grid2D, eps):
    if not eps > 0:
        raise ValueError("eps must be positive")
    if eps >= grid.L / 8:
        raise ValueError(f"eps={eps} too large for the box (needs eps < L/8)")


def stream_cutoff_field(psi0: ScalarField, ell0, r0, eps, h0) -> VectorField:
    """grad^perp of psi0 chi + (1 - chi) psi_R with psi_R the rigid stream function.

    chi vanishes on B(h0, 1.5 eps) and equals 1 off B(h0, 2 eps); psi0 is
    shifted so that psi0(h0) = 0.
    """
    g = psi0.grid
    _check_eps(g, eps)
    ell0 = np.asarray(ell0, dtype=float)
    h0 = np.asarray(h0, dtype=float)
    p0 = spectral_interpolate(psi0.values, g, h0[None])[0]
    dx, dy = g.offsets(h0)
    chi = smooth_step((np.hypot(dx, dy) / eps - 1.5) / 0.5)
    psi_r = ell0[0] * (-dy) + ell0[1] * dx + 0.5 * r0 * (dx * dx + dy * dy)
    psi = (psi0.values - p0) * chi + (1.0 - chi) * psi_r
    return perp_gradient(ScalarField(g, psi))


@dataclass(frozen=True, eq=False)
class CutoffDetails:
    field: VectorField
    corrector_l2: float            # ||g||_2 in physical variables
    corrector_h1: float            # ||grad g||_2
    pointwise_divergence: np.ndarray = field(repr=False)
    mean_defect: float = 0.0
    solver_constant: float = 0.0   # ||G||_{H^1(A)} / ||f||_{L^2(A)}


def _sample(u0, pts):
    if callable(u0):
        return np.asarray(u0(pts[..., 0], pts[..., 1]))
    flat = pts.reshape(-1, 2)
    out = np.empty((2, flat.shape[0]))
    for i in range(0, flat.shape[0], 1024):
        out[:, i:i + 1024] = spectral_interpolate(u0.values, u0.grid, flat[i:i + 1024])
    return out.reshape(2, *pts.shape[:-1])


def field_cutoff_details(u0: VectorField, ell0, r0, eps, h0, annulus: AnnulusGrid | None = None,
                         mean_tol: float = 1e-6) -> CutoffDetails:
    """chi u0 + (1 - chi)(l0 + r0 (x-h0)^perp) + g with div g = -grad chi . (u0 - rigid).

    chi ramps from 0 at 1.5 eps to 1 at 2 eps; g is supported in the same
    annulus, obtained from the annulus solver after rescaling by 2 eps.
    """
    g = u0.grid
    _check_eps(g, eps)
    ell0 = np.asarray(ell0, dtype=float)
    h0 = np.asarray(h0, dtype=float)
    r_in = 0.75
    annulus = annulus or AnnulusGrid(r_in=r_in)
    if annulus.r_in != r_in:
        raise ValueError("annulus inner radius must be 0.75 for this construction")
    s = 2.0 * eps
    pts = annulus.points
    u_pts = _sample(u0, h0 + s * pts)
    rig = _rigid(s * pts[..., 0], s * pts[..., 1], ell0, r0)
    dchi = cutoff_gradient(pts, r_in, 1.0)
    f = -(dchi[..., 0] * (u_pts[0] - rig[0]) + dchi[..., 1] * (u_pts[1] - rig[1]))
    scale = annulus.integrate(np.abs(f))
    defect = abs(annulus.integrate(f)) / scale if scale > 0 else 0.0
    if defect > mean_tol:
        raise ValueError(f"cutoff flux does not vanish (relative {defect:.2e}); is u0 solenoidal?")
    f = f - annulus.integrate(f) / annulus.integrate(np.ones_like(f))
    G = _solver_for(annulus).solve(f)
    fl2 = np.sqrt(annulus.integrate(f * f))
    const = G.h1_seminorm() / fl2 if fl2 > 0 else 0.0

    dx, dy = g.offsets(h0)
    yy = np.stack([dx / s, dy / s], axis=-1)
    chi = cutoff(yy, r_in, 1.0)
    rig_g = _rigid(dx, dy, ell0, r0)
    corr = np.moveaxis(G.evaluate(yy), -1, 0)
    out = chi * u0.values + (1.0 - chi) * rig_g + corr
    # pointwise divergence of the construction
    dchi_g = cutoff_gradient(yy, r_in, 1.0) / s
    div_u0 = divergence(u0).values
    pdiv = (chi * div_u0 + dchi_g[..., 0] * (u0.values[0] - rig_g[0])
            + dchi_g[..., 1] * (u0.values[1] - rig_g[1]) + G.divergence_at(yy) / s)
    return CutoffDetails(
        field=VectorField(g, out, solenoidal=True),
        corrector_l2=s * G.l2_norm(),
        corrector_h1=G.h1_seminorm(),
        pointwise_divergence=pdiv,
        mean_defect=defect,
        solver_constant=const,
    )


def field_cutoff_initial(u0: VectorField, ell0, r0, eps, h0) -> VectorField:
    return field_cutoff_details(u0, ell0, r0, eps, h0).field


# ---------------------------------------------------------------------------
# compatibility


@dataclass(frozen=True)
class CompatibilityReport:
    max_div: float
    div_scale: float
    normal_mismatch: float
    normal_scale: float
    circulation: float
    circulation_expected: float
    circulation_scale: float
    eps_ell: float
    eps2_r: float
    u_l2: float
    div_tol: float = 1e-8
    trace_tol: float = 1e-3

    @property
    def div_ok(self) -> bool:
        return self.max_div <= self.div_tol * max(self.div_scale, 1e-300) or self.max_div <= self.div_tol

    @property
    def trace_ok(self) -> bool:
        return self.normal_mismatch <= self.trace_tol * max(self.normal_scale, 1e-300)

    @property
    def circulation_ok(self) -> bool:
        return abs(self.circulation - self.circulation_expected) <= self.trace_tol * max(self.circulation_scale, 1e-300)

    @property
    def ok(self) -> bool:
        return self.div_ok and self.trace_ok and self.circulation_ok


def _bilinear(values, grid: Grid2D, pts):
    """Periodic bilinear interpolation of (..., N, N) samples at points (P, 2)."""
    n = grid.N
    fx = (pts[:, 0] + grid.L / 2) / grid.h
    fy = (pts[:, 1] + grid.L / 2) / grid.h
    i0 = np.floor(fx).astype(int)
    j0 = np.floor(fy).astype(int)
    ax = fx - i0
    ay = fy - j0
    i0 %= n
    j0 %= n
    i1 = (i0 + 1) % n
    j1 = (j0 + 1) % n
    v = values
    return ((1 - ax) * (1 - ay) * v[..., i0, j0] + ax * (1 - ay) * v[..., i1, j0]
            + (1 - ax) * ay * v[..., i0, j1] + ax * ay * v[..., i1, j1])


def check_compatibility(v: VectorField, state, eps: float, sampler: Callable | None = None,
                        expected_circulation: float | None = None, divergence_field=None,
                        n_ring: int = 256, u0_l2: float | None = None) -> CompatibilityReport:
    """Divergence, normal trace and circulation on the circle |x - h| = eps.

    ``state`` carries h, ell and r.  The ring is sampled at ``n_ring`` points,
    by bilinear interpolation unless an exact ``sampler(points) -> (P, 2)`` is
    given.  The default expected circulation is that of the rigid motion,
    2 pi eps^2 r.  ``divergence_field`` overrides the spectral divergence.
    """
    g = v.grid
    h = np.asarray(state.h, dtype=float)
    ell = np.asarray(state.ell, dtype=float)
    r = float(state.r)
    div = divergence(v).values if divergence_field is None else np.asarray(divergence_field)
    th = 2 * np.pi * np.arange(n_ring) / n_ring
    nrm = np.stack([np.cos(th), np.sin(th)], axis=-1)
    pts = h + eps * nrm
    uv = sampler(pts) if sampler is not None else _bilinear(v.values, g, pts).T
    un = (uv * nrm).sum(axis=1)
    mismatch = float(np.abs(un - nrm @ ell).max())
    tau = np.stack([-nrm[:, 1], nrm[:, 0]], axis=-1)
    circ = float((uv * tau).sum(axis=1).sum() * eps * 2 * np.pi / n_ring)
    umax = float(np.sqrt((v.values**2).sum(axis=0)).max())
    scale = np.linalg.norm(ell) + umax
    exp_c = 2 * np.pi * eps**2 * r if expected_circulation is None else expected_circulation
    l2 = lp_norm(v, 2)
    return CompatibilityReport(
        max_div=float(np.abs(div).max()),
        div_scale=l2 * 2 * np.pi / g.L,
        normal_mismatch=mismatch,
        normal_scale=scale,
        circulation=circ,
        circulation_expected=exp_c,
        circulation_scale=2 * np.pi * eps * scale,
        eps_ell=float(eps * np.linalg.norm(ell)),
        eps2_r=float(eps**2 * abs(r)),
        u_l2=l2 if u0_l2 is None else u0_l2,
    )


# ---------------------------------------------------------------------------
# config-level construction


@dataclass(frozen=True)
class InitialSpec:
    construction: str = "stream-cutoff"
    data: dict = field(default_factory=lambda: {"kind": "gaussian_psi"})
    ell0: tuple = (0.0, 0.0)
    r0: float = 0.0
    h0: tuple = (0.0, 0.0)
    eps0: float | None = None

    @classmethod
    def from_dict(cls, d: dict | None) -> "InitialSpec":
        d = dict(d or {})
        known = {"construction", "data", "ell0", "r0", "h0", "eps0"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown init keys: {sorted(unknown)}")
        if "ell0" in d and d["ell0"] != "auto":
            d["ell0"] = tuple(d["ell0"])
        if "h0" in d:
            d["h0"] = tuple(d["h0"])
        return cls(**d)

    def resolved(self, grid: Grid2D) -> "InitialSpec":
        """Replace ``"auto"`` in ell0 / r0 by the limit velocity / half the vorticity at h0."""
        if self.ell0 != "auto" and self.r0 != "auto":
            return self
        kind, obj = _catalog(grid, self.data)
        u = _to_velocity(kind, obj)
        h0 = np.asarray(self.h0, float)[None]
        ell0, r0 = self.ell0, self.r0
        if ell0 == "auto":
            ell0 = tuple(float(a) for a in spectral_interpolate(u.values, grid, h0)[:, 0])
        if r0 == "auto":
            r0 = 0.5 * float(spectral_interpolate(curl(u).values, grid, h0)[0])
        return replace(self, ell0=ell0, r0=float(r0))


_CONSTRUCTIONS = ("stream-cutoff", "field-cutoff", "exterior-disk", "extend-fixed", "plain")


def _catalog(grid: Grid2D, data: dict):
    """Returns (kind, object) with kind in {'psi', 'omega', 'velocity'}."""
    d = dict(data)
    kind = d.pop("kind", "gaussian_psi")
    if kind == "gaussian_psi":
        return "psi", gaussian_psi(grid, **d)
    if kind == "gaussian_dipole":
        return "omega", gaussian_dipole_vorticity(grid, **d)
    if kind == "bump_dipole":
        return "omega", bump_dipole_vorticity(grid, **d)
    if kind == "annular_bump":
        return "omega", annular_bump_vorticity(grid, **d)
    if kind == "taylor_green":
        k = d.get("k", 1)
        amp = d.get("amp", 1.0)
        a = 2 * np.pi * k / grid.L
        psi = amp / a * np.sin(a * grid.X) * np.sin(a * grid.Y)
        return "psi", ScalarField(grid, psi)
    if kind == "sum":
        parts = [_catalog(grid, q) for q in d["parts"]]
        psi = sum(_to_psi(k, o).values for k, o in parts)
        return "psi", ScalarField(grid, psi)
    if kind == "zero":
        return "psi", ScalarField(grid, np.zeros((grid.N, grid.N)))
    if kind == "file":
        from .io import read_field

        f = read_field(d["path"])
        if f.grid != grid:
            raise ValueError("field dump grid does not match the configured grid")
        if isinstance(f, ScalarField):
            return d.get("as", "omega"), f
        return "velocity", f
    raise ValueError(f"unknown initial data kind {kind!r}")


def _to_velocity(kind, obj):
    if kind == "psi":
        return perp_gradient(obj)
    if kind == "omega":
        return biot_savart(obj)
    return leray_project(obj)


def _to_psi(kind, obj):
    if kind == "psi":
        return obj
    if kind == "omega":
        g = obj.grid
        ph = -fft2(obj.values) / g._kd2_safe
        ph[0, 0] = 0.0
        return ScalarField(g, ifft2(ph, g))
    raise ValueError("stream-cutoff needs a stream function or vorticity")


def build_initial(spec: InitialSpec, grid: Grid2D, eps: float | None):
    """Return (u0_eps, u0_limit): the compatible data and the whole-plane data it approximates."""
    if spec.construction not in _CONSTRUCTIONS:
        raise ValueError(f"unknown construction {spec.construction!r}")
    spec = spec.resolved(grid)
    kind, obj = _catalog(grid, spec.data)
    u_lim = _to_velocity(kind, obj)
    if eps is None or spec.construction == "plain":
        return u_lim, u_lim
    h0, ell0 = np.asarray(spec.h0, float), np.asarray(spec.ell0, float)
    c = spec.construction
    if c == "extend-fixed":
        e0 = spec.eps0 if spec.eps0 is not None else eps
        if eps > e0:
            raise ValueError("extend-fixed data requires eps <= eps0")
        return stream_cutoff_field(_to_psi(kind, obj), ell0, spec.r0, e0, h0), u_lim
    if c == "stream-cutoff":
        return stream_cutoff_field(_to_psi(kind, obj), ell0, spec.r0, eps, h0), u_lim
    if c == "field-cutoff":
        # pointwise solenoidal; project so the grid divergence vanishes too
        return leray_project(field_cutoff_initial(u_lim, ell0, spec.r0, eps, h0)), u_lim
    if kind != "omega":
        obj = ScalarField(grid, ifft2(1j * (grid.kx * fft2(u_lim.values[1]) - grid.ky * fft2(u_lim.values[0])), grid))
    return exterior_disk_field(obj, ell0, eps, h0, spec.r0), u_lim
