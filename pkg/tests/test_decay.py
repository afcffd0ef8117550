import numpy as np
import pytest

from fsilab.decay import (expected_exponent, field_decay, fit_exponent, forced_decay, impulse_probes,
                          log_window, tensor_probes)
from fsilab.fields import VectorField, divergence
from fsilab.solver import SimConfig


@pytest.mark.parametrize("channel,p,q,rate", [
    ("field", np.inf, 2, -0.5),
    ("field", 2, 2, 0.0),
    ("field", 8, 2, -0.375),
    ("div-forced", 8, 4, -0.625),
    ("div-forced", 2, 2, -0.5),
    ("ell", np.nan, 4, -0.75),
])
def test_expected_exponents(channel, p, q, rate):
    assert expected_exponent(channel, p, q) == pytest.approx(rate, abs=1e-15)


def test_expected_exponent_rejects_channel():
    with pytest.raises(ValueError):
        expected_exponent("pressure", 2, 2)


def test_fit_exponent_recovers_power_law():
    t = log_window(0.5, 50, 7)
    slope, icpt = fit_exponent(t, 3.0 * t**-0.625)
    assert slope == pytest.approx(-0.625, abs=1e-12)
    assert np.exp(icpt) == pytest.approx(3.0, rel=1e-12)


@pytest.mark.parametrize("t,v", [([1.0], [1.0]), ([1.0, 2.0], [1.0, 0.0])])
def test_fit_exponent_errors(t, v):
    with pytest.raises(ValueError):
        fit_exponent(t, v)


def test_log_window_errors():
    with pytest.raises(ValueError):
        log_window(0.0, 1.0)
    with pytest.raises(ValueError):
        log_window(2.0, 1.0)


def test_impulse_probes_are_solenoidal():
    cfg = SimConfig(L=16.0, N=64, nu=1.0, eps=1.0, mode="stokes")
    pr = impulse_probes(cfg, n=3)
    g = cfg.grid
    for k in range(3):
        v = VectorField(g, pr[k])
        assert np.abs(divergence(v).values).max() <= 1e-10 * np.abs(pr[k]).max()
        np.testing.assert_allclose(v.mean(), 0, atol=1e-14)  # mean removed with a disk
    pr0 = impulse_probes(SimConfig(L=16.0, N=64, nu=1.0, eps=None, mode="stokes"), n=3)
    assert np.abs(pr0.mean(axis=(-2, -1))).max() > 0  # periodic impulse keeps its mean


def test_tensor_probes_vanish_on_disk():
    cfg = SimConfig(L=16.0, N=64, nu=1.0, eps=1.0, mode="stokes")
    F = tensor_probes(cfg, [0.5, 1.0, 2.0], offset=2.0)
    g = cfg.grid
    on = np.hypot(g.X, g.Y) <= 1.5
    assert np.abs(F[..., on]).max() == 0
    assert F.shape == (3, 2, 2, 64, 64)


def test_heat_rates_without_disk():
    cfg = SimConfig(L=32.0, N=128, nu=1.0, eps=None, mode="stokes")
    w = log_window(0.5, 8.0, 6)
    inf2, l22 = field_decay(cfg, [(np.inf, 2), (2, 2)], w)
    assert abs(inf2.exponent - inf2.expected) <= 0.1
    assert l22.K() <= 1 + 1e-6  # the heat semigroup is an L2 contraction


def test_disk_field_rate_small_box():
    cfg = SimConfig(L=32.0, N=128, nu=1.0, eps=1.0, mode="stokes")
    (c,) = field_decay(cfg, [(np.inf, 2)], log_window(0.5, 8.0, 6))
    assert abs(c.exponent + 0.5) <= 0.1
    assert c.per_probe.shape == (3, 6)


def test_forced_curves_shapes_and_ell_channel():
    cfg = SimConfig(L=32.0, N=128, nu=1.0, eps=1.0, mode="stokes")
    w = log_window(1.0, 4.0, 3)
    curves = forced_decay(cfg, [(8, 4)], [4], w, sigmas=[0.5, 1.0, 2.0], offset=2.0)
    assert [c.channel for c in curves] == ["div-forced", "ell"]
    for c in curves:
        assert c.per_probe.shape == (3, 3) and np.all(c.values > 0)
