"""Comparison schemes: random-mode vFD (HEU-vFD) and half-duplex (HD).

HEU-vFD reuses the power-only SCA machinery with a random binary mode
vector. HD splits the payload into equal UL and DL time fractions and
optimizes the two (now decoupled) power-control problems with the same SCA
surrogates on the halved-prefactor SE expressions.
"""

from __future__ import annotations

import warnings

import cvxpy as cp
import numpy as np

from .config import PenaltyConfig, SystemConfig
from .errors import Infeasible, NumericalFailure
from .network import ChannelStats, NetworkRealization
from .sca import DEFAULT_SOLVER, FALLBACK_SOLVER, QOS_TOL, solve_power_only
from .se import hd_dl_se, hd_ul_se
from .state import (DecisionPoint, IterationRecord, ModeAssignment,
                    PowerAllocation, RunResult, SEVector, Status)
from .subproblem import FEASIBILITY_SLACK_CAP, ScaledGains

MODE_REDRAW_BUDGET = 100


def draw_random_modes(cfg: SystemConfig, rng: np.random.Generator):
    """Fair-coin mode vector, re-drawn if a needed mode set came up empty."""
    m = cfg.num_aps
    for _ in range(MODE_REDRAW_BUDGET):
        a = rng.integers(0, 2, size=m).astype(float)
        b = 1.0 - a
        if cfg.num_dl_ues and a.sum() == 0:
            continue
        if cfg.num_ul_ues and b.sum() == 0:
            continue
        return a, b
    return a, b  # pathological config; let the optimizer report infeasible


def heu_vfd(cfg: SystemConfig, stats: ChannelStats, net: NetworkRealization,
            mode_seed, penalty: PenaltyConfig) -> RunResult:
    """vFD with a uniformly random fixed mode assignment, optimized powers."""
    rng = np.random.default_rng(mode_seed)
    a, b = draw_random_modes(cfg, rng)
    return solve_power_only(cfg, stats, net, penalty, a, b)


class _HalfDuplexPhase:
    """One SCA loop for a decoupled HD phase (DL or UL power control)."""

    def __init__(self, cfg: SystemConfig, stats: ChannelStats, is_dl: bool,
                 penalty: PenaltyConfig):
        self.cfg = cfg
        self.penalty = penalty
        self.is_dl = is_dl
        gains = ScaledGains(cfg, stats)
        self.gains = gains
        self.pref = gains.pref_ln / 2.0
        m = cfg.num_aps

        if is_dl:
            kd = cfg.num_dl_ues
            self.k = kd
            self.target = cfg.hd_target_dl
            th = cp.Variable((m, kd), name="th")
            rvar = cp.Variable(m)
            sig = cp.sum(cp.multiply(np.sqrt(gains.g_dl), th), axis=0) \
                * np.sqrt(gains.n * gains.rho_d)
            den = gains.rho_d * (gains.b_dl.T @ rvar) + 1.0
            cons = [th >= 0,
                    cp.sum(cp.square(th), axis=1) <= rvar,
                    cp.sum(cp.square(th), axis=1) <= 1.0]
            self.var = th
        else:
            ku = cfg.num_ul_ues
            self.k = ku
            self.target = cfg.hd_target_ul
            u = cp.Variable(ku, name="u")  # u_l = sqrt(varsigma_tilde_l)
            su = cp.Variable(ku)
            gsum = np.sum(gains.g_ul, axis=0)           # (K_u,)
            sig = np.sqrt(gains.n * gains.rho_u) * cp.multiply(gsum, u)
            # W[l, q] = Sum_m b_ul[m, l] g_ul[m, q]
            w = gains.b_ul.T @ gains.g_ul
            den = gains.rho_u * (w @ su) + np.sum(gains.g_ul, axis=0)
            cons = [u >= 0, u <= 1, cp.square(u) <= su]
            self.var = u

        self.p_const = cp.Parameter(self.k)
        self.p_lin = cp.Parameter(self.k, nonneg=True)
        self.p_quad = cp.Parameter(self.k, nonneg=True)
        ssq = cp.Variable(self.k)
        cons.append(cp.square(sig) <= ssq)
        se_expr = self.pref * (self.p_const + cp.multiply(self.p_lin, sig)
                               - cp.multiply(self.p_quad, ssq + den))

        q = cp.Variable(self.k, name="q")
        slack = cp.Variable(name="t")
        self.opt_problem = cp.Problem(
            cp.Minimize(-cp.sum(q)),
            cons + [se_expr >= q, q >= self.target])
        self.feas_problem = cp.Problem(
            cp.Minimize(-slack),
            cons + [se_expr >= self.target + slack,
                    slack <= FEASIBILITY_SLACK_CAP])

    def _anchor_terms(self, x: np.ndarray):
        g = self.gains
        if self.is_dl:
            sig = np.sqrt(g.n * g.rho_d) * np.sum(np.sqrt(g.g_dl) * x, axis=0)
            den = g.rho_d * (g.b_dl.T @ np.sum(x**2, axis=1)) + 1.0
        else:
            sig = np.sqrt(g.n * g.rho_u) * np.sum(g.g_ul, axis=0) * x
            den = g.rho_u * ((g.b_ul.T @ g.g_ul) @ x**2) \
                + np.sum(g.g_ul, axis=0)
        return sig, den

    def se_at(self, x: np.ndarray) -> np.ndarray:
        sig, den = self._anchor_terms(x)
        se = np.zeros(self.k)
        pos = sig > 0
        se[pos] = self.pref * np.log1p(sig[pos]**2 / den[pos])
        return se

    def set_anchor(self, x: np.ndarray) -> None:
        sig, den = self._anchor_terms(x)
        ratio = sig**2 / den
        self.p_const.value = np.log1p(ratio) - ratio
        self.p_lin.value = 2.0 * sig / den
        self.p_quad.value = sig**2 / (den * (sig**2 + den))

    def _solve(self, problem) -> np.ndarray:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            try:
                problem.solve(solver=DEFAULT_SOLVER)
            except cp.error.SolverError:
                problem.solve(solver=FALLBACK_SOLVER)
        if problem.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
            raise NumericalFailure(f"HD phase solver status {problem.status}")
        shape = (self.cfg.num_aps, self.k) if self.is_dl else (self.k,)
        return np.maximum(np.asarray(self.var.value).reshape(shape), 0.0)

    def run(self, x0: np.ndarray):
        """Feasibility push then SE maximization; returns (x, trace, ok)."""
        pen = self.penalty
        x = x0
        if np.any(self.se_at(x) < self.target):
            for _ in range(pen.max_feasibility_iters):
                self.set_anchor(x)
                x = self._solve(self.feas_problem)
                if np.all(self.se_at(x) >= self.target):
                    break
            else:
                raise Infeasible("HD phase feasibility push failed")
        trace = []
        prev = -float(np.sum(self.se_at(x)))
        phase = "hd_dl" if self.is_dl else "hd_ul"
        trace.append(IterationRecord(0, prev, 0.0, 0.0, 0.0, phase=phase))
        converged = False
        for it in range(1, pen.max_outer_iters + 1):
            self.set_anchor(x)
            x = self._solve(self.opt_problem)
            obj = -float(np.sum(self.se_at(x)))
            trace.append(IterationRecord(it, obj, 0.0, 0.0, 0.0, phase=phase))
            if abs(obj - prev) <= pen.epsilon_conv:
                converged = True
                break
            prev = obj
        return x, trace, converged


def hd_baseline(cfg: SystemConfig, stats: ChannelStats,
                net: NetworkRealization, penalty: PenaltyConfig) -> RunResult:
    """Half-duplex baseline: decoupled DL and UL power control.

    The returned point stores the DL-phase powers in eta/theta and the
    UL-phase powers in varsigma_tilde (all APs active in each phase); the
    mode vectors are not meaningful for HD and are stored as all-DL.
    """
    m, kd, ku = cfg.num_aps, cfg.num_dl_ues, cfg.num_ul_ues
    gains = ScaledGains(cfg, stats)
    trace: list[IterationRecord] = []
    status = Status.CONVERGED

    th_hat = np.zeros((m, kd))
    if kd:
        dl_phase = _HalfDuplexPhase(cfg, stats, True, penalty)
        x0 = np.full((m, kd), np.sqrt(0.5 / kd))
        try:
            th_hat, tr, ok = dl_phase.run(x0)
            trace += tr
            if not ok:
                status = Status.MAX_ITERS
        except Infeasible:
            status = Status.INFEASIBLE

    u = np.zeros(ku)
    if ku and status is not Status.INFEASIBLE:
        ul_phase = _HalfDuplexPhase(cfg, stats, False, penalty)
        try:
            u, tr, ok = ul_phase.run(np.full(ku, np.sqrt(0.5)))
            trace += tr
            if not ok and status is Status.CONVERGED:
                status = Status.MAX_ITERS
        except Infeasible:
            status = Status.INFEASIBLE

    theta = th_hat / np.sqrt(gains.n * stats.gamma_dl) if kd \
        else np.zeros((m, kd))
    varsigma_tilde = u**2
    se = SEVector(dl=hd_dl_se(cfg, stats, theta),
                  ul=hd_ul_se(cfg, stats, varsigma_tilde))

    if status is not Status.INFEASIBLE:
        qos_ok = bool(np.all(se.dl >= cfg.hd_target_dl - QOS_TOL)
                      and np.all(se.ul >= cfg.hd_target_ul - QOS_TOL))
        if not qos_ok:
            status = Status.INFEASIBLE

    point = DecisionPoint(
        mode=ModeAssignment(a=np.ones(m), b=np.zeros(m)),
        power=PowerAllocation(
            eta=theta**2,
            theta=theta,
            varsigma_tilde=varsigma_tilde,
            varsigma=np.broadcast_to(u, (m, ku)).copy(),
            eta_tilde=np.zeros((m, m, kd)),
        ),
        q_ul=se.ul.copy(),
        q_dl=se.dl.copy(),
    )
    return RunResult(point=point, se=se, trace=trace,
                     residuals=(0.0, 0.0, 0.0), status=status,
                     iterations=trace[-1].iteration if trace else 0,
                     mode_gap=0.0)
