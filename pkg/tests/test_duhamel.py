import json

import numpy as np
import pytest

from fsilab.duhamel import (FixedPointConstants, XNorm, contraction_report, default_window, duhamel_oracle,
                            estimate_constants, graded_nodes, matched_config, picard_iterate, picard_times, xnorm)
from fsilab.fields import VectorField, fft2, ifft2
from fsilab.initial import InitialSpec, build_initial
from fsilab.solver import SimConfig, stokes_evolve

B_58_34 = 5.99105193247766417679068172635
B_34_34 = 7.41629870920548767373540138878

LAMBDA0 = 0.0524  # estimated on the L=32, N=128 grid, see configs/picard.json


@pytest.fixture(scope="module")
def cfg():
    init = InitialSpec(data={"kind": "gaussian_psi", "center": [2.5, 0.5], "sigma": 1.0, "amp": 1.0})
    return SimConfig(L=16.0, N=64, nu=1.0, eps=1.0, mode="stokes", T=1.0, init=init)


def data(cfg, l2):
    u, _ = build_initial(cfg.init, cfg.grid, cfg.eps)
    n = np.sqrt((u.values**2).sum() * cfg.grid.cell_area)
    return VectorField(cfg.grid, u.values * (l2 / n))


# ---------------------------------------------------------------------------
# X norm


def test_xnorm_zero_and_homogeneity(cfg):
    g = cfg.grid
    t = picard_times(1.0, 8)
    z = np.zeros((t.size, 2, g.N, g.N))
    assert xnorm(z, grid=g, times=t) == XNorm(0.0, 0.0, 0.0)
    f = stokes_evolve(data(cfg, 0.1), t, cfg, project_initial=True)
    x1 = xnorm(f)
    x2 = xnorm(f.fields * 2, ell=f.ell * 2, grid=g, rho=f.rho, times=t)
    for a, b in zip(x1.as_dict().values(), x2.as_dict().values()):
        assert b == pytest.approx(2 * a, rel=1e-14)


def test_xnorm_errors(cfg):
    g = cfg.grid
    with pytest.raises(ValueError):
        xnorm(np.zeros((0, 2, g.N, g.N)), grid=g, times=[])
    with pytest.raises(ValueError):
        xnorm(np.zeros((2, 2, g.N, g.N)), grid=g, times=[0.5, 1.0])
    with pytest.raises(ValueError):
        XNorm(np.nan, 0.0, 0.0)


def test_xnorm_heat_matches_exact_fourier_evolution():
    cfg = SimConfig(L=16.0, N=64, nu=1.0, eps=None, mode="stokes", dt=0.01)
    g = cfg.grid
    v0, _ = build_initial(InitialSpec(data={"kind": "gaussian_psi", "sigma": 0.7}), g, None)
    t = picard_times(2.0, 12)
    num = xnorm(stokes_evolve(v0, t, cfg))
    exact = np.array([ifft2(fft2(v0.values) * np.exp(-g.k2 * s), g) for s in t])
    ref = xnorm(exact, grid=g, times=t)
    assert num.c0_38_l8 == pytest.approx(ref.c0_38_l8, rel=1e-10)
    assert num.c0_l2 == pytest.approx(ref.c0_l2, rel=1e-12)
    assert num.c0_12_ell == 0.0
    # the weighted L8 sup is reached at an interior time, the L2 sup at t=0
    l8 = np.array([(np.sqrt((f**2).sum(0)) ** 8).sum() * g.cell_area for f in exact]) ** 0.125
    assert 0 < np.argmax(t**0.375 * l8) < t.size - 1


# ---------------------------------------------------------------------------
# constants


def _tables():
    K1 = {(8.0, 2.0): 0.3, (2.0, 2.0): 1.0, (np.inf, 2.0): 0.2}
    K2 = {(8.0, 4.0): 0.1, (2.0, 2.0): 0.25}
    Kell = {4.0: 0.05}
    return K1, K2, Kell


def test_constants_assembly_against_beta_oracle():
    c = FixedPointConstants.assemble(*_tables())
    C0 = 2 * (0.1 * B_58_34 + 0.25 * np.pi + 0.05 * B_34_34)
    assert c.C0 == pytest.approx(C0, rel=1e-10)
    assert c.C1 == pytest.approx(1.5, rel=1e-15)
    assert c.R * 4 * c.C0 == pytest.approx(1.0, rel=1e-14)
    assert c.lambda0 == min(c.R / (2 * c.C1), c.R)
    assert c.identities_hold() and c.mu0 == c.R


def test_constants_json(tmp_path):
    c = FixedPointConstants.assemble(*_tables(), per_eps={1.0: {"K1": _tables()[0], "K2": _tables()[1],
                                                                "Kell": _tables()[2]}})
    c.dump(tmp_path / "c.json")
    doc = json.loads((tmp_path / "c.json").read_text())
    assert set(doc) == {"K1", "K2", "Kell", "C0", "C1", "R", "lambda0", "mu0", "per_eps"}
    assert set(doc["K1"]) == {"8,2", "2,2", "inf,2"} and set(doc["Kell"]) == {"4"}
    assert doc["R"] * 4 * doc["C0"] == pytest.approx(1.0, rel=1e-14)


def test_constants_must_be_positive():
    K1, K2, Kell = _tables()
    with pytest.raises(ValueError):
        FixedPointConstants(K1, K2, Kell, 0.0, 1.0, 1.0, 1.0, 1.0)


def test_estimate_constants_validation(cfg):
    with pytest.raises(ValueError):
        estimate_constants([1.0], cfg, n_probes=2)
    with pytest.raises(ValueError):
        default_window(SimConfig(L=4.0, N=32, nu=1.0, eps=0.4, mode="stokes"))


def test_estimate_constants_small(cfg):
    c = estimate_constants([1.0, None], cfg, window=[0.5, 1.0, 2.0], n_probes=3)
    assert c.identities_hold()
    assert set(c.per_eps) == {1.0, None}
    assert c.per_eps[None]["K1"][(2.0, 2.0)] <= 1 + 1e-6


def test_matched_config(cfg):
    m = matched_config(cfg, 0.5)
    assert m.N == 128 and m.eps == 0.5 and m.mode == "stokes"


# ---------------------------------------------------------------------------
# Picard


def test_graded_nodes():
    s, w = graded_nodes(2.0, 16)
    assert s[0] == 0.0 and s[-1] == 2.0
    assert w.sum() == pytest.approx(2.0, rel=1e-14)
    d = np.diff(s)
    assert np.all(np.diff(d) < 0)  # clustered towards s = t
    with pytest.raises(ValueError):
        graded_nodes(1.0, 0)


def test_picard_zero_data(cfg):
    r = picard_iterate(VectorField.zeros(cfg.grid), 1.0, cfg, times=picard_times(1.0, 6))
    assert r.converged and r.iterations == 1
    assert np.abs(r.fields).max() == 0


def test_picard_linear_case_is_semigroup(cfg):
    v0 = data(cfg, 0.05)
    t = np.array([0.0, 0.25, 0.5, 1.0])
    r = picard_iterate(v0, 1.0, cfg, times=t, nonlinear=False, dt=0.05)
    assert r.converged and r.iterations == 1 and r.distances[0] == 0.0
    ref = stokes_evolve(v0, t[1:], cfg, dt=0.05, project_initial=True).fields
    assert np.abs(r.fields[1:] - ref).max() <= 1e-12 * np.abs(ref).max()


def test_picard_quadrature_consistency(cfg):
    v0 = data(cfg, LAMBDA0 / 2)
    t = picard_times(1.0, 10)
    a = picard_iterate(v0, 1.0, cfg, times=t, quad_nodes=16, max_iter=1)
    b = picard_iterate(v0, 1.0, cfg, times=t, quad_nodes=32, max_iter=1)
    g = cfg.grid
    d = xnorm(a.fields - b.fields, ell=a.ell - b.ell, grid=g, rho=a.rho, times=t).total
    assert d <= 1e-3 * xnorm(a).total


def test_picard_small_data_contracts_and_matches_oracle(cfg):
    v0 = data(cfg, LAMBDA0 / 2)
    t = picard_times(1.0, 12)
    r = picard_iterate(v0, 1.0, cfg, times=t, lambda0=LAMBDA0)
    assert r.converged and r.contraction <= 0.6
    o = duhamel_oracle(v0, t[1:], cfg)
    rel = np.sqrt(np.sum((r.fields[-1] - o.fields[-1]) ** 2) / np.sum(o.fields[-1] ** 2))
    assert rel <= 0.02


def test_picard_monotone_in_scale(cfg):
    t = picard_times(1.0, 8)
    tot = [xnorm(picard_iterate(data(cfg, a * LAMBDA0 / 2), 1.0, cfg, times=t)).total for a in (0.25, 0.5, 1.0)]
    assert tot[0] <= tot[1] <= tot[2]


def test_picard_warns_and_detects_divergence(cfg):
    v0 = data(cfg, 200.0)
    with pytest.warns(UserWarning):
        r = picard_iterate(v0, 1.0, cfg, times=picard_times(1.0, 6), lambda0=LAMBDA0, max_iter=8)
    assert r.status == "diverged" and not r.converged


def test_picard_rejects_bad_times(cfg):
    with pytest.raises(ValueError):
        picard_iterate(VectorField.zeros(cfg.grid), 1.0, cfg, times=[0.1, 1.0])


def test_contraction_report(cfg):
    a = data(cfg, LAMBDA0 / 2)
    t = picard_times(1.0, 8)
    same = contraction_report(a, a, 1.0, cfg, times=t)
    assert same.data_distance == 0.0 and same.fixed_point_distance == 0.0
    b = data(cfg, LAMBDA0 / 2 * 0.8)
    rep = contraction_report(a, b, 1.0, cfg, times=t)
    assert rep.max_factor <= 0.6
    assert rep.fixed_point_distance <= 3 * rep.data_distance
