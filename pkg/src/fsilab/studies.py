"""Study runners behind the command line: each writes a CSV plus a JSON
manifest next to it and returns whether its primary assertion held."""
from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .bogovskii import AnnulusGrid, gaussian_vortex_pair, verify_bogovskii_bounds
from .decay import field_decay, forced_decay, impulse_probes, log_window
from .duhamel import duhamel_oracle, estimate_constants, picard_iterate
from .initial import build_initial
from .solver import (CFLViolation, SimConfig, ns_reference, simulate, stokes_evolve, write_trajectory_csv)

log = logging.getLogger(__name__)

__all__ = [
    "StudySpec",
    "StudyResult",
    "STUDIES",
    "run_study",
    "run_energy_check",
    "run_decay_study",
    "run_scaling_check",
    "run_shrink_study",
    "run_picard_study",
    "run_bogovskii_study",
]

STUDIES = ("energy", "decay", "scaling", "shrink", "picard", "bogovskii")


def _exp(x):
    if isinstance(x, str) and x.lower() in ("inf", "infinity"):
        return np.inf
    return float(x)


@dataclass(frozen=True)
class StudySpec:
    study: str
    base: SimConfig
    eps_list: tuple = ()
    pairs: tuple = ()
    forced_pairs: tuple = ()
    q_ell: tuple = ()
    eta_list: tuple = ()
    window: tuple | None = None
    out: Path = Path("out")
    seed: int = 0
    threads: int = 1
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.study not in STUDIES:
            raise ValueError(f"unknown study {self.study!r}; expected one of {STUDIES}")
        e = [x for x in self.eps_list if x is not None]
        if any(b >= a for a, b in zip(e, e[1:])):
            raise ValueError("eps_list must be strictly descending")
        if self.window is not None:
            t0, t1 = self.window
            if not 0 < t0 < t1:
                raise ValueError("fit window must satisfy 0 < t_min < t_max")
            if np.sqrt(self.base.nu * t1) > self.base.L / 4 * (1 + 1e-12):
                raise ValueError("fit window too long: sqrt(nu t_max) exceeds L/4")
        if self.threads < 1:
            raise ValueError("threads must be positive")

    @classmethod
    def from_dict(cls, doc: dict, study: str | None = None, out=None, seed=None, threads=None) -> "StudySpec":
        """Solver keys at the top level, study keys under ``"study"``."""
        doc = dict(doc)
        st = dict(doc.pop("study", {}) or {})
        name = study or st.pop("name", None)
        st.pop("name", None)
        base = SimConfig.from_dict(doc)
        kw = dict(
            eps_list=tuple(None if e is None else float(e) for e in st.pop("eps_list", ())),
            pairs=tuple((_exp(p), _exp(q)) for p, q in st.pop("pairs", ())),
            forced_pairs=tuple((_exp(p), _exp(q)) for p, q in st.pop("forced_pairs", ())),
            q_ell=tuple(_exp(q) for q in st.pop("q_ell", ())),
            eta_list=tuple(float(x) for x in st.pop("eta_list", ())),
            window=None if st.get("window") is None else tuple(float(x) for x in st.pop("window")),
        )
        st.pop("window", None)
        return cls(name, base, out=Path(out or st.pop("out", "out")),
                   seed=int(seed if seed is not None else st.pop("seed", 0)),
                   threads=int(threads or st.pop("threads", 1)), params=st, **kw)

    def to_dict(self) -> dict:
        enc = lambda x: "inf" if (isinstance(x, float) and np.isinf(x)) else x  # noqa: E731
        return {
            "study": self.study,
            "config": _jsonable(self.base.to_dict()),
            "eps_list": list(self.eps_list),
            "pairs": [[enc(p), enc(q)] for p, q in self.pairs],
            "forced_pairs": [[enc(p), enc(q)] for p, q in self.forced_pairs],
            "q_ell": [enc(q) for q in self.q_ell],
            "eta_list": list(self.eta_list),
            "window": None if self.window is None else list(self.window),
            "seed": self.seed,
            "params": _jsonable(self.params),
        }


@dataclass
class StudyResult:
    study: str
    passed: bool
    csv_paths: list
    manifest_path: Path
    summary: dict

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1


# ---------------------------------------------------------------------------
# output helpers


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        if np.isnan(x):
            return None
        return x
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, Path):
        return str(x)
    return x


def _fmt(x):
    if isinstance(x, str):
        return x
    if x is None:
        return "none"
    x = float(x)
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    if np.isnan(x):
        return "nan"
    return f"{x:.12g}"


def write_csv(path: Path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def _finish(spec: StudySpec, passed: bool, csvs, summary: dict, extra: dict | None = None) -> StudyResult:
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    g = spec.base.grid
    doc = {
        "study": spec.study,
        "version": __version__,
        "passed": bool(passed),
        "seed": spec.seed,
        "grid": {"L": g.L, "N": g.N, "h": g.h},
        "window": None if spec.window is None else list(spec.window),
        "spec": spec.to_dict(),
        "csv": [Path(c).name for c in csvs],
        "summary": summary,
    }
    if extra:
        doc.update(extra)
    manifest = out / f"{spec.study}_manifest.json"
    with open(manifest, "w") as fh:
        json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
    for c in csvs:  # per-CSV sidecar pointing at the run manifest
        with open(Path(c).with_suffix(".json"), "w") as fh:
            json.dump(_jsonable({"manifest": manifest.name, **{k: doc[k] for k in ("study", "version", "seed",
                                                                                   "grid", "window", "spec")}}),
                      fh, indent=2, sort_keys=True)
    return StudyResult(spec.study, bool(passed), [Path(c) for c in csvs], manifest, summary)


def _map(fn, items, threads):
    items = list(items)
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(min(threads, len(items))) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


# ---------------------------------------------------------------------------
# energy


def _energy_rows(rec):
    t, E, D = rec.step_energy.T
    res = np.zeros_like(E) if E[0] == 0 else np.abs(E + D - E[0]) / E[0]
    keep = np.isin(t, rec.times) | (np.arange(t.size) == t.size - 1)
    return [(a, b, c, d) for a, b, c, d, k in zip(t, E, D, res, keep) if k]


def run_energy_check(spec: StudySpec) -> StudyResult:
    """Energy identity residual; with ``params.refine`` also the dt-halving ratio."""
    thr = float(spec.params.get("threshold", 1e-3))
    header = ("t", "E", "cumulative_dissipation", "residual")
    out = Path(spec.out)
    cfg = spec.base
    summary = {"threshold": thr}
    try:
        rec = simulate(cfg)
    except CFLViolation as exc:
        log.error("energy check failed: %s", exc)
        p = write_csv(out / "energy.csv", header, [])
        return _finish(spec, False, [p], {"error": str(exc), **summary})
    csvs = [write_csv(out / "energy.csv", header, _energy_rows(rec))]
    summary.update(max_residual=rec.max_residual, dt=rec.dt, n_steps=rec.n_steps)
    passed = rec.max_residual <= thr
    if spec.params.get("refine"):
        half = simulate(replace(cfg, dt=rec.dt / 2))
        csvs.append(write_csv(out / "energy_half_dt.csv", header, _energy_rows(half)))
        ratio = rec.max_residual / half.max_residual if half.max_residual > 0 else np.inf
        min_ratio = float(spec.params.get("min_ratio", 1.8))
        summary.update(max_residual_half_dt=half.max_residual, refinement_ratio=ratio, min_ratio=min_ratio)
        passed = passed and ratio >= min_ratio
    return _finish(spec, passed, csvs, summary)


# ---------------------------------------------------------------------------
# decay


def _decay_one(spec: StudySpec, eps):
    cfg = replace(spec.base, eps=eps, mode="stokes")
    if eps is not None and spec.params.get("matched", False) and spec.base.eps is not None:
        n = int(round(spec.base.N * spec.base.eps / eps))
        cfg = replace(cfg, N=n + n % 2)
    if spec.window is None:
        raise ValueError("decay study needs a fit window")
    n_win = int(spec.params.get("n_window", 9))
    window = log_window(*spec.window, n=n_win)
    rng = np.random.default_rng(spec.seed)
    curves = []
    if spec.pairs:
        probes = impulse_probes(cfg, n=int(spec.params.get("n_probes", 3)), rng=rng)
        curves += field_decay(cfg, spec.pairs, window, probes=probes)
    q_ell = spec.q_ell if eps is not None else ()
    if spec.forced_pairs or q_ell:
        e = eps or 1.0
        sig = spec.params.get("sigmas")
        sig = e * np.geomspace(0.5, 8.0, 5) if sig is None else np.asarray(sig, float)
        curves += forced_decay(cfg, spec.forced_pairs, q_ell, window, sigmas=sig,
                               offset=float(spec.params.get("offset", 2.0)))
    return eps, cfg, curves


def run_decay_study(spec: StudySpec) -> StudyResult:
    tol = {"field": 0.1, "div-forced": 0.15, "ell": 0.15}
    tol.update(spec.params.get("tolerances", {}))
    eps_list = spec.eps_list or (spec.base.eps,)
    results = _map(lambda e: _decay_one(spec, e), eps_list, spec.threads)
    rows, checks = [], []
    for eps, cfg, curves in results:
        for c in curves:
            slope, K = c.exponent, c.K()
            rows.append((eps, c.p, c.q, c.channel, slope, c.expected, K))
            ok = abs(slope - c.expected) <= tol[c.channel]
            if c.channel == "field" and c.p == 2 and c.q == 2 and eps is None:
                ok = ok and K <= 1 + 1e-6
            checks.append(ok)
    p = write_csv(Path(spec.out) / "decay.csv",
                  ("eps", "p", "q", "channel", "fitted_exponent", "expected_exponent", "K_estimate"), rows)
    k_inf = [r[6] for r in rows if r[3] == "field" and np.isinf(r[1]) and r[2] == 2 and r[0] is not None]
    summary = {"tolerances": tol, "checks": checks,
               "grids": {str(e): {"L": c.L, "N": c.N} for e, c, _ in results}}
    if len(k_inf) > 1:
        spread = max(k_inf) / min(k_inf) - 1.0
        summary["K1_inf_2_spread"] = spread
        if "max_spread" in spec.params:
            checks.append(spread <= float(spec.params["max_spread"]))
    return _finish(spec, all(checks), [p], summary)


# ---------------------------------------------------------------------------
# scaling


def run_scaling_check(spec: StudySpec) -> StudyResult:
    """Compare the eps-run at eps^2 t with the unit run at t on grids with L_eps = eps L_1 and equal N."""
    base = replace(spec.base, eps=1.0, mode="stokes")
    times = np.asarray(spec.params.get("times", (1.0, 2.0, 4.0)), float)
    thr = float(spec.params.get("threshold", 1e-2))
    g1 = base.grid
    dt = base.dt or 0.25 * g1.h**2 / base.nu
    for gd in spec.params.get("grids", ()):
        eps = float(gd["eps"])
        if abs(float(gd["L"]) - eps * base.L) > 1e-12 * base.L or int(gd["N"]) != base.N:
            raise ValueError(f"unmatched grids for eps={eps}: need L={eps * base.L}, N={base.N}")
    u0, _ = build_initial(base.init, g1, 1.0)
    ref = stokes_evolve(u0, times, base, dt=dt, project_initial=True)
    eps_list = spec.eps_list or (1.0, 0.5)

    def one(eps):
        cfg = replace(base, L=eps * base.L, eps=eps)
        # v0^eps(x) = v0(x/eps) is the same sample array on the matched grid
        run = stokes_evolve(u0.values, eps**2 * times, cfg, dt=eps**2 * dt, project_initial=True)
        return eps, run

    rows, worst, ell_worst = [], {}, {}
    for eps, run in _map(one, eps_list, spec.threads):
        w = e_w = 0.0
        for i, t in enumerate(times):
            d = np.sqrt(((run.fields[i] - ref.fields[i]) ** 2).sum() / (ref.fields[i] ** 2).sum())
            rows.append((eps, t, d))
            w = max(w, d)
            den = max(np.linalg.norm(ref.ell[i]), 1e-300)
            e_w = max(e_w, np.linalg.norm(run.ell[i] - ref.ell[i]) / den)
        worst[eps], ell_worst[eps] = w, e_w
    p = write_csv(Path(spec.out) / "scaling.csv", ("eps", "t", "rel_l2_mismatch"), rows)
    passed = all(worst[e] <= (1e-12 if e == 1.0 else thr) and ell_worst[e] <= (1e-12 if e == 1.0 else thr)
                 for e in worst)
    return _finish(spec, passed, [p], {"max_mismatch": worst, "max_ell_mismatch": ell_worst, "threshold": thr})


# ---------------------------------------------------------------------------
# shrinking obstacle


def _subdomain_diff(g, u, v, h, radius):
    d = ((u - v) ** 2).sum(axis=0)
    dx, dy = g.offsets(h)
    keep = dx * dx + dy * dy > radius**2
    return float(np.sqrt(d[keep].sum() * g.cell_area)), float(np.sqrt(d.sum() * g.cell_area))


def _shrink_variant(spec: StudySpec, scaling: str, ref, out: Path):
    radius = float(spec.params.get("exclude_radius", 0.5))
    lam = spec.params.get("lambda0")
    g = spec.base.grid

    def one(eps):
        cfg = replace(spec.base, eps=eps, scaling=scaling, mode="nonlinear")
        rec = simulate(cfg)
        write_trajectory_csv(rec, out / "trajectories" / f"{scaling}_eps{eps:g}.csv")
        return eps, rec

    runs = _map(one, spec.eps_list, spec.threads)
    rows, flags = [], []
    prev = None
    for eps, rec in runs:
        hs = np.array([s.h for s in rec.states])
        sub = glob = 0.0
        for i in range(rec.times.size):
            a, b = _subdomain_diff(g, rec.fields[i].values, ref.fields[i].values, hs[i], radius)
            sub, glob = max(sub, a), max(glob, b)
        pos = rec.times > 0
        st = float(np.max(np.sqrt(rec.times[pos]) * np.linalg.norm(rec.ell[pos], axis=1)))
        cauchy = np.nan if prev is None else float(np.max(np.linalg.norm(g.wrap(hs - prev), axis=1)))
        prev = hs
        rows.append((eps, sub, glob, st, cauchy))
        s0 = rec.states[0]
        u_l2 = float(np.sqrt(2 * rec.energy[0]))
        small = {"eps_ell0": eps * float(np.linalg.norm(s0.ell)), "eps2_r0": eps**2 * abs(s0.r), "u0_l2": u_l2}
        if lam is not None and max(small.values()) > float(lam):
            flags.append({"eps": eps, **small})
    return rows, flags


def run_shrink_study(spec: StudySpec) -> StudyResult:
    if len(spec.eps_list) < 3:
        raise ValueError("shrink study needs at least three radii")
    out = Path(spec.out)
    _, u_lim = build_initial(spec.base.init, spec.base.grid, None)
    ref = ns_reference(spec.base, u0=u_lim)
    write_trajectory_csv(ref, out / "trajectories" / "reference.csv")
    header = ("eps", "sup_t_l2_diff_subdomain", "sup_t_l2_diff_global", "max_sqrt_t_ell", "h_cauchy_diff")
    max_ratio = float(spec.params.get("max_ell_ratio", 2.0))
    csvs, summary, passed = [], {}, True
    for scaling in spec.params.get("scalings", [spec.base.scaling]):
        rows, flags = _shrink_variant(spec, scaling, ref, out)
        csvs.append(write_csv(out / f"shrink_{scaling}.csv", header, rows))
        sub = [r[1] for r in rows]
        ell = [r[3] for r in rows]
        cau = [r[4] for r in rows[1:]]
        ok = {
            "subdomain_decreasing": all(b < a for a, b in zip(sub, sub[1:])),
            "cauchy_decreasing": all(b < a for a, b in zip(cau, cau[1:])),
            "ell_ratio": max(ell) / min(ell) if min(ell) > 0 else np.inf,
        }
        ok["ell_bounded"] = ok["ell_ratio"] <= max_ratio
        summary[scaling] = {**ok, "smallness_flags": flags}
        passed = passed and ok["subdomain_decreasing"] and ok["cauchy_decreasing"] and ok["ell_bounded"]
    return _finish(spec, passed, csvs, summary)


# ---------------------------------------------------------------------------
# Picard and Bogovskii wrappers


def run_picard_study(spec: StudySpec) -> StudyResult:
    prm = spec.params
    cfg = replace(spec.base, mode="stokes")
    T = float(prm.get("T", cfg.T))
    if "lambda0" in prm:
        lam, consts = float(prm["lambda0"]), None
    else:
        ccfg = replace(cfg, **prm.get("constants_grid", {}))
        consts = estimate_constants([cfg.eps], ccfg, seed=spec.seed)
        lam = consts.lambda0
        Path(spec.out).mkdir(parents=True, exist_ok=True)
        consts.dump(Path(spec.out) / "constants.json")
    u0, _ = build_initial(cfg.init, cfg.grid, cfg.eps)
    v = u0.values
    n = float(np.sqrt((v**2).sum() * cfg.grid.cell_area))
    scale = float(prm.get("scale", 0.5))
    if n > 0:
        v = v / n * scale * lam
    res = picard_iterate(v, T, cfg, quad_nodes=int(prm.get("quad_nodes", 16)),
                         max_iter=int(prm.get("max_iter", 20)), tol=float(prm.get("tol", 1e-8)), lambda0=lam)
    factors = np.concatenate([[np.nan], res.contraction_factors])
    rows = [(k + 1, d, factors[k] if k < factors.size else np.nan, res.xnorms[k + 1].total)
            for k, d in enumerate(res.distances)]
    p = write_csv(Path(spec.out) / "picard.csv", ("iteration", "xnorm_distance", "contraction_factor",
                                                   "xnorm_total"), rows)
    summary = {"lambda0": lam, "status": res.status, "iterations": res.iterations,
               "max_contraction": res.contraction, "data_l2": scale * lam if n > 0 else 0.0}
    passed = res.converged and res.contraction <= float(prm.get("max_factor", 0.6))
    if prm.get("oracle", True) and n > 0:
        o = duhamel_oracle(v, res.times, cfg)
        rel = float(np.sqrt(((o.fields[-1] - res.fields[-1]) ** 2).sum() / (o.fields[-1] ** 2).sum()))
        summary["oracle_rel_l2"] = rel
        passed = passed and rel <= float(prm.get("oracle_tol", 0.02))
    extra = {"constants": consts.to_json()} if consts is not None else None
    return _finish(spec, passed, [p], summary, extra)


def run_bogovskii_study(spec: StudySpec) -> StudyResult:
    prm = spec.params
    phi = gaussian_vortex_pair(**prm.get("phi", {"drift": (0.3, 0.1)}))
    path = prm.get("h_path", {"times": [0.0, 1.0], "points": [[0.0, 0.0], [0.2, 0.1]]})
    h_path = (np.asarray(path["times"], float), np.asarray(path["points"], float))
    times = np.linspace(0.0, float(h_path[0][-1]), int(prm.get("n_times", 5)))
    etas = spec.eta_list or (0.2, 0.1, 0.05, 0.025)
    ann = AnnulusGrid(**prm.get("annulus", {}))
    rep = verify_bogovskii_bounds(phi, h_path, etas, times=times, annulus=ann)
    p = write_csv(Path(spec.out) / "bogovskii.csv",
                  ("eta", "g_scaled_l2", "grad_g_l2", "g_nablag", "phi_distance", "div_residual", "boundary_max"),
                  rep.rows())
    lo, hi = prm.get("slope_range", (0.7, 1.3))
    passed = (rep.uniform and lo <= rep.slope <= hi and rep.residual.max() <= 1e-8
              and rep.boundary.max() <= 1e-10)
    summary = {"uniform": rep.uniform, "slope": rep.slope, "max_residual": rep.residual.max(),
               "max_boundary": rep.boundary.max()}
    return _finish(spec, passed, [p], summary)


_RUNNERS = {
    "energy": run_energy_check,
    "decay": run_decay_study,
    "scaling": run_scaling_check,
    "shrink": run_shrink_study,
    "picard": run_picard_study,
    "bogovskii": run_bogovskii_study,
}


def run_study(spec: StudySpec) -> StudyResult:
    log.info("running %s study into %s", spec.study, spec.out)
    return _RUNNERS[spec.study](spec)
