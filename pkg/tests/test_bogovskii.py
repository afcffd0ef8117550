import numpy as np
import pytest

from fsilab.bogovskii import (AnnulusGrid, annulus_divergence_solve, build_test_function, cutoff,
                              cutoff_gradient, gaussian_vortex_pair, smooth_step, verify_bogovskii_bounds)
from fsilab.fields import make_grid


def test_smooth_step_limits():
    s = smooth_step(np.array([-1.0, 0.0, 0.5, 1.0, 2.0]))
    np.testing.assert_allclose(s, [0, 0, 0.5, 1, 1], atol=1e-15)


def test_cutoff_gradient_matches_finite_difference():
    y = np.array([[0.7, 0.2], [-0.3, 0.6]])
    d = 1e-6
    num = np.stack([(cutoff(y + [d, 0]) - cutoff(y - [d, 0])) / (2 * d),
                    (cutoff(y + [0, d]) - cutoff(y - [0, d])) / (2 * d)], axis=-1)
    np.testing.assert_allclose(cutoff_gradient(y), num, atol=1e-8)


@pytest.mark.parametrize("kw", [dict(n_r=8), dict(n_theta=16), dict(n_theta=33), dict(r_in=1.0)])
def test_annulus_grid_validation(kw):
    with pytest.raises(ValueError):
        AnnulusGrid(**kw)


def test_solve_zero():
    gr = AnnulusGrid()
    g = annulus_divergence_solve(np.zeros((gr.r.size, gr.n_theta)), gr)
    assert np.abs(g.g_r).max() == 0 and np.abs(g.g_t).max() == 0


def test_solve_rejects_nonzero_mean():
    gr = AnnulusGrid()
    with pytest.raises(ValueError):
        annulus_divergence_solve(np.ones((gr.r.size, gr.n_theta)), gr)


def test_solve_cos_theta_bump():
    gr = AnnulusGrid()
    R, T = gr.RT
    s = (R - 0.5) / 0.5
    f = np.cos(T) * (s * (1 - s)) ** 2
    g = annulus_divergence_solve(f, gr)
    assert np.abs(g.divergence - f).max() <= 1e-8 * np.abs(f).max()
    boundary = max(np.abs(g.g_r[[0, -1]]).max(), np.abs(g.g_t[[0, -1]]).max())
    assert boundary <= 1e-10
    fl2 = np.sqrt(gr.integrate(f * f))
    assert g.h1_seminorm() / fl2 < 50  # logged constant C_A


def test_solve_callable_rhs_and_general_modes():
    gr = AnnulusGrid()
    rng = np.random.default_rng(4)
    c = rng.normal(size=6)

    def f(y):
        r = np.hypot(y[..., 0], y[..., 1])
        t = np.arctan2(y[..., 1], y[..., 0])
        s = (r - 0.5) / 0.5
        return (s * (1 - s)) ** 2 * (c[0] * np.cos(t) + c[1] * np.sin(2 * t) + c[2] * np.cos(5 * t)
                                     + c[3] * np.sin(t) + c[4] * np.cos(3 * t))

    g = annulus_divergence_solve(f, gr)
    ff = f(gr.points)
    assert np.abs(g.divergence - ff).max() <= 1e-8 * np.abs(ff).max()


def test_mean_zero_identity_for_solenoidal_phi():
    # flux of a solenoidal field through grad chi vanishes
    phi = gaussian_vortex_pair(drift=(0.3, -0.1))
    gr = AnnulusGrid()
    dchi = cutoff_gradient(gr.points)
    for eta, h in [(0.4, (0.1, 0.2)), (0.1, (-0.5, 0.05))]:
        pts = gr.points
        ph = phi(0.0, h[0] + eta * pts[..., 0], h[1] + eta * pts[..., 1])
        f = ph[0] * dchi[..., 0] + ph[1] * dchi[..., 1]
        assert abs(gr.integrate(f)) <= 1e-6 * gr.integrate(np.abs(f))


def test_constant_phi_vanishes_on_inner_ball():
    c = np.array([0.7, -0.4])
    phi = lambda t, x, y: np.stack([np.full_like(np.asarray(x, float), c[0]), np.full_like(np.asarray(y, float), c[1])])
    tf = build_test_function(phi, ([0.0, 1.0], [[0.0, 0.0], [0.5, 0.0]]), 0.2, times=[0.0, 0.5, 1.0])
    for i, h in enumerate(tf.centers):
        th = np.linspace(0, 2 * np.pi, 17)
        for rad, expect in [(0.3 * 0.2, np.zeros(2)), (0.49 * 0.2, np.zeros(2)), (1.2 * 0.2, c)]:
            val = tf.evaluate(i, h[0] + rad * np.cos(th), h[1] + rad * np.sin(th))
            np.testing.assert_allclose(val, expect[:, None] * np.ones_like(th), atol=1e-12)
        assert np.abs(tf.divergence_at(i, h[0] + 0.75 * 0.2 * np.cos(th), h[1] + 0.75 * 0.2 * np.sin(th))).max() <= 1e-8
    np.testing.assert_allclose(tf.centers[1], [0.25, 0.0])


def test_test_function_far_from_support_is_zero():
    phi = gaussian_vortex_pair(centers=((3.0, 0.0), (-3.0, 0.0)), sigma=0.2)
    tf = build_test_function(phi, ([0.0], [[0.0, 0.0]]), 0.3)
    l2, h1 = tf.corrector_norms()
    assert l2.max() <= 1e-12 and h1.max() <= 1e-12


def test_test_function_pointwise_divergence():
    phi = gaussian_vortex_pair()
    tf = build_test_function(phi, ([0.0, 1.0], [[0.0, 0.0], [0.2, 0.1]]), 0.25, times=[0.0, 1.0])
    th = np.linspace(0, 2 * np.pi, 40)
    for i, h in enumerate(tf.centers):
        for rad in (0.13, 0.18, 0.23):
            d = tf.divergence_at(i, h[0] + rad * np.cos(th), h[1] + rad * np.sin(th))
            assert np.abs(d).max() <= 1e-8


def test_test_function_rejects_under_resolved():
    g = make_grid(8.0, 64)
    with pytest.raises(ValueError):
        build_test_function(gaussian_vortex_pair(), ([0.0], [[0, 0]]), 2 * g.h, grid=g)


def test_bogovskii_bounds_uniform_and_slope():
    phi = gaussian_vortex_pair()
    rep = verify_bogovskii_bounds(phi, ([0.0, 1.0], [[0.0, 0.0], [0.3, 0.0]]), [0.4, 0.2, 0.1],
                                  times=[0.0, 0.5, 1.0])
    assert rep.uniform
    tot = rep.g_scaled + rep.grad_g
    assert tot.max() <= 3 * tot.min()
    assert 0.7 <= rep.slope <= 1.3
    assert rep.residual.max() <= 1e-8 and rep.boundary.max() <= 1e-10


def test_bogovskii_bounds_zero_phi_and_single_eta():
    zero = lambda t, x, y: np.zeros((2,) + np.shape(x))
    rep = verify_bogovskii_bounds(zero, ([0.0], [[0, 0]]), [0.3])
    assert len(list(rep.rows())) == 1
    assert rep.g_scaled[0] == 0 and rep.grad_g[0] == 0 and rep.distance[0] == 0


def test_bogovskii_bounds_requires_descending():
    with pytest.raises(ValueError):
        verify_bogovskii_bounds(gaussian_vortex_pair(), ([0.0], [[0, 0]]), [0.1, 0.2])
