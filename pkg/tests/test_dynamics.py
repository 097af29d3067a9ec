import io
import math

import numpy as np
import pytest

from convlyap.dynamics import (
    DivergenceError,
    ball_samples,
    estimate,
    estimate_K_lambda,
    estimate_L,
    simulate,
    sphere_directions,
    sup_norm,
)
from convlyap.polyalg import parse_system, vector_field


def test_linear_decay():
    f = parse_system("x1' = -x1")
    tr = simulate(f, [1.0], 1.0, 1e-3)
    assert tr.states[-1, 0] == pytest.approx(math.exp(-1), abs=1e-8)
    assert tr.times[-1] == 1.0 and len(tr.times) == 1001


def test_cubic_closed_form(cubic):
    tr = simulate(cubic, [1.0], 2.0, 1e-4)
    exact = (1 + 2 * tr.times) ** -0.5
    assert np.max(np.abs(tr.states[:, 0] - exact)) < 1e-6


def test_fourth_order_convergence():
    f = parse_system("x1' = -x1")
    exact = math.exp(-2)
    e1 = abs(simulate(f, [1.0], 2.0, 0.2).states[-1, 0] - exact)
    e2 = abs(simulate(f, [1.0], 2.0, 0.1).states[-1, 0] - exact)
    assert 14 < e1 / e2 < 18


def test_vdp_reverse_time_decays(vdp):
    tr = simulate(vdp, [0.5, 0.0], 10.0)
    n = tr.norms()
    assert n[-1] < n[0]
    # the norm is non-increasing inside the unit disk
    assert np.all(np.diff(n) <= 1e-12)


def test_last_step_lands_on_t_end():
    f = parse_system("x1' = -x1")
    tr = simulate(f, [1.0], 0.25, 0.1)
    assert tr.times[-1] == pytest.approx(0.25, abs=1e-15)
    assert tr.states[-1, 0] == pytest.approx(math.exp(-0.25), abs=1e-5)


def test_divergence_carries_partial_trajectory():
    f = parse_system("x1' = x1")
    with pytest.raises(DivergenceError) as err:
        simulate(f, [1.0], 30.0, 1e-2)
    part = err.value.partial
    assert part.diverged and part.times[-1] < 30
    assert abs(part.states[-1, 0]) > 1e6
    assert abs(part.states[-2, 0]) <= 1e6


def test_input_validation(vdp):
    with pytest.raises(ValueError):
        simulate(vdp, [1.0], 1.0)
    with pytest.raises(ValueError):
        simulate(vdp, [1.0, 0.0], -1.0)


def test_csv_export(vdp):
    tr = simulate(vdp, [0.1, 0.2], 0.003, 1e-3)
    text = tr.to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == "t,x1,x2"
    assert len(lines) == 5
    buf = io.StringIO()
    tr.write_csv(buf)
    assert buf.getvalue() == text
    assert float(lines[1].split(",")[1]) == 0.1


# -- sampling -----------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 3])
def test_ball_samples(n):
    pts = ball_samples(n, 0.7, 300)
    assert len(pts) == 300 + 6 * n
    norms = np.linalg.norm(pts, axis=1)
    assert norms.max() <= 0.7 + 1e-12 and norms.min() > 0
    np.testing.assert_array_equal(pts, ball_samples(n, 0.7, 300))
    for rho in (0.07, 0.35, 0.7):
        e = np.zeros(n)
        e[0] = rho
        assert np.any(np.all(np.isclose(pts, e), axis=1))


def test_ball_samples_fill_the_ball():
    pts = ball_samples(2, 1.0, 4000, axes=False)
    # fraction inside radius 1/2 should be close to the area ratio 1/4
    assert abs(np.mean(np.linalg.norm(pts, axis=1) < 0.5) - 0.25) < 0.02


def test_sphere_directions_are_unit():
    for n in (1, 2, 4):
        d = sphere_directions(n, 16)
        np.testing.assert_allclose(np.linalg.norm(d, axis=1), 1.0)


# -- estimators ---------------------------------------------------------------


def test_estimates_for_scalar_decay():
    rep = estimate(parse_system("x1' = -x1"), 1.0)
    assert rep.stable
    assert rep.K_hat == pytest.approx(1, rel=0.02)
    assert rep.lambda_hat == pytest.approx(1, rel=0.02)
    assert rep.L_hat == pytest.approx(1, rel=1e-12)


def test_slow_mode_dominates_tail():
    K, lam, resid, _ = estimate_K_lambda(parse_system("x1' = -x1; x2' = -2*x2"), 1.0)
    assert K == 1.0
    assert lam == pytest.approx(1, rel=0.1)


def test_L_linear_is_sigma_max():
    A = np.array([[1.0, -2.0], [-2.0, 1.0]])
    f = vector_field(["x1 - 2*x2", "-2*x1 + x2"])
    sv = np.linalg.svd(A, compute_uv=False)[0]
    for grid in (5, 31):
        assert estimate_L(f, 0.5, grid) == pytest.approx(sv, rel=1e-12)


def test_L_cubic(cubic):
    assert estimate_L(cubic, 1.0) == pytest.approx(3.0, rel=1e-9)


def test_L_vdp_unit_ball(vdp):
    assert estimate_L(vdp, 1.0) == pytest.approx(2.1, abs=0.05)


def test_L_monotone_in_radius(vdp):
    vals = [estimate_L(vdp, r, 41) for r in (0.25, 0.5, 0.75, 1.0)]
    assert vals == sorted(vals)


def test_sup_norm_linear(linear):
    # |A x| = sqrt(2) |x| for the rotation-scaling A
    assert sup_norm(linear, 2.0) == pytest.approx(2 * math.sqrt(2), rel=1e-9)


def test_unstable_reported():
    rep = estimate(parse_system("x1' = x1"), 1.0, n_samples=4)
    assert not rep.stable and "exceeded" in rep.message
