"""Scaled coordinates and the parametrized convex inner problem."""

import numpy as np
import pytest

from vfdcf.config import PenaltyConfig
from vfdcf.sca import _initial_scaled_point, initialize
from vfdcf.subproblem import (ConvexSubproblem, ScaledGains, scale_point,
                              scaled_residuals, unscale_point)

from conftest import make_instance


def _feasible_scaled_point(cfg, stats, net, seed=0):
    """A QoS-feasible scaled anchor produced by the initializer."""
    penalty = PenaltyConfig()
    rng = np.random.default_rng(seed)
    point = initialize(cfg, stats, net, penalty, rng)
    return scale_point(cfg, stats, point)


# --- coordinate changes --------------------------------------------------------

def test_scale_unscale_roundtrip():
    cfg, stats, net = make_instance(seed=0)
    sp = _initial_scaled_point(cfg, np.random.default_rng(1))
    again = scale_point(cfg, stats, unscale_point(cfg, stats, sp))
    for f in ("a", "b", "e", "th", "vs", "vst", "etf"):
        np.testing.assert_allclose(getattr(again, f), getattr(sp, f),
                                   rtol=1e-12, atol=1e-15)


def test_scaled_ses_match_raw_formulas():
    """The solver-side exact SE helpers agree with the closed forms."""
    from vfdcf.se import dl_se, ul_se_lower
    cfg, stats, net = make_instance(seed=2)
    sp = _initial_scaled_point(cfg, np.random.default_rng(3))
    gains = ScaledGains(cfg, stats)
    point = unscale_point(cfg, stats, sp)
    np.testing.assert_allclose(
        gains.dl_se_exact(sp),
        dl_se(cfg, stats, point.power.theta, point.power.varsigma_tilde),
        rtol=1e-9)
    np.testing.assert_allclose(
        gains.ul_se_lower_exact(sp),
        ul_se_lower(cfg, stats, net, point.mode.b, point.power.varsigma,
                    point.power.eta_tilde),
        rtol=1e-9)


def test_scaled_residuals_zero_on_consistent_point():
    cfg, stats, net = make_instance(seed=4)
    sp = _initial_scaled_point(cfg, np.random.default_rng(5))
    c1, c2, c3 = scaled_residuals(sp)
    assert c1 == pytest.approx(0.0, abs=1e-12)
    assert c2 == pytest.approx(0.0, abs=1e-12)
    assert c3 > 0.0  # fractional starting modes


# --- problem structure -----------------------------------------------------------

def test_decision_variable_count():
    """2M + 2MK_d + MK_u + K_u + M^2 K_d + K_u + K_d genuine variables."""
    cfg, stats, net = make_instance(seed=0, num_aps=3, num_dl_ues=2,
                                    num_ul_ues=2)
    sp = ConvexSubproblem(cfg, stats, PenaltyConfig())
    m, kd, ku = 3, 2, 2
    assert sp.num_decision_vars == \
        2 * m + 2 * m * kd + m * ku + ku + m * m * kd + ku + kd


def test_problem_is_dpp_convex():
    cfg, stats, net = make_instance(seed=0)
    sp = ConvexSubproblem(cfg, stats, PenaltyConfig())
    assert sp.problem.is_dcp(dpp=True)


def test_anchor_remains_feasible_after_one_solve():
    """Majorization tightness: a feasible anchor stays subproblem-feasible,
    so the solve succeeds and does not increase the penalized objective."""
    cfg, stats, net = make_instance(seed=2)
    sp_point = _feasible_scaled_point(cfg, stats, net, seed=2)
    prob = ConvexSubproblem(cfg, stats, PenaltyConfig())
    prob.set_anchor(sp_point)
    before = prob.penalized_objective(sp_point)
    out = prob.solve()
    after = prob.penalized_objective(out)
    assert after <= before + 1e-6


def test_relaxed_single_ap_subproblem_is_feasible():
    """With one AP and a UE on each side, the box relaxation can still split
    the mode fractionally; structural infeasibility only appears once the
    modes are binary (covered by the end-to-end test)."""
    cfg, stats, net = make_instance(seed=3, num_aps=1, num_dl_ues=1,
                                    num_ul_ues=1)
    prob = ConvexSubproblem(cfg, stats, PenaltyConfig(), feasibility=True)
    sp = _initial_scaled_point(cfg, np.random.default_rng(0))
    prob.set_anchor(sp)
    prob.solve()  # must not raise Infeasible


def test_solvers_agree_on_fixed_instance():
    """CLARABEL and SCS reach the same subproblem optimum within 1e-4."""
    cfg, stats, net = make_instance(seed=3, num_aps=2, num_dl_ues=1,
                                    num_ul_ues=1)
    anchor = _feasible_scaled_point(cfg, stats, net, seed=3)
    prob = ConvexSubproblem(cfg, stats, PenaltyConfig())
    prob.set_anchor(anchor)
    out1 = prob.solve(solver="CLARABEL")
    val1 = prob.problem.value
    out2 = prob.solve(solver="SCS")
    val2 = prob.problem.value
    assert val1 == pytest.approx(val2, rel=1e-4, abs=1e-4)
    np.testing.assert_allclose(out1.a, out2.a, atol=5e-3)


def test_fixed_mode_subproblem_consistency():
    """With binary modes fixed, the returned point couples varsigma exactly."""
    cfg, stats, net = make_instance(seed=8)
    m = cfg.num_aps
    a = np.array([1.0, 0.0, 1.0])[:m]
    b = 1.0 - a
    prob = ConvexSubproblem(cfg, stats, PenaltyConfig(), fixed_modes=(a, b),
                            feasibility=True)
    sp = _initial_scaled_point(cfg, np.random.default_rng(9), modes=(a, b))
    prob.set_anchor(sp)
    out = prob.solve()
    np.testing.assert_allclose(out.vs**2, b[:, None] * out.vst[None, :],
                               atol=1e-9)
    c1, c2, c3 = scaled_residuals(out)
    assert abs(c2) <= 1e-9 and abs(c3) <= 1e-12
