"""Parametrized convex inner problem of the penalized SCA loop.

The solver works in a scaled variable space to keep coefficients O(1):

  e_mk   = N gamma_dl_mk eta_mk        in [0, a_m]  (per-AP DL power share)
  th_mk  = sqrt(N gamma_dl_mk) theta_mk   with th^2 = e when consistent
  etf_imk = N gamma_dl_ik eta_tilde_imk
  channel gains and rho are jointly rescaled by max(gamma), which leaves
  every SINR (hence every SE and every q) unchanged.

All anchor-dependent quantities are cvxpy Parameters, so one problem object
is built per (config, realization[, fixed modes]) and re-solved cheaply
each SCA iteration.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import cvxpy as cp
import numpy as np

from .config import PenaltyConfig, SystemConfig
from .errors import DegenerateAnchor, Infeasible, NumericalFailure
from .network import ChannelStats
from .state import DecisionPoint, ModeAssignment, PowerAllocation

SOLVER_TOL = 1e-7  # constraint-violation / accuracy contract of one solve
FEASIBILITY_SLACK_CAP = 100.0


@dataclass
class ScaledPoint:
    """Decision point in solver coordinates (all entries O(1))."""

    a: np.ndarray    # (M,)
    b: np.ndarray    # (M,)
    e: np.ndarray    # (M, K_d)
    th: np.ndarray   # (M, K_d)
    vs: np.ndarray   # (M, K_u)
    vst: np.ndarray  # (K_u,)
    etf: np.ndarray  # (M, M, K_d), [i, m, k]
    q_ul: np.ndarray
    q_dl: np.ndarray

    def copy(self) -> "ScaledPoint":
        return ScaledPoint(*(getattr(self, f).copy() for f in
                             ("a", "b", "e", "th", "vs", "vst", "etf",
                              "q_ul", "q_dl")))


def scale_point(cfg: SystemConfig, stats: ChannelStats,
                point: DecisionPoint) -> ScaledPoint:
    n = cfg.antennas_per_ap
    g = stats.gamma_dl
    p = point.power
    return ScaledPoint(
        a=point.mode.a.copy(),
        b=point.mode.b.copy(),
        e=n * g * p.eta,
        th=np.sqrt(n * g) * p.theta,
        vs=p.varsigma.copy(),
        vst=p.varsigma_tilde.copy(),
        etf=n * g[:, None, :] * p.eta_tilde,
        q_ul=point.q_ul.copy(),
        q_dl=point.q_dl.copy(),
    )


def unscale_point(cfg: SystemConfig, stats: ChannelStats,
                  sp: ScaledPoint) -> DecisionPoint:
    n = cfg.antennas_per_ap
    g = stats.gamma_dl
    return DecisionPoint(
        mode=ModeAssignment(sp.a.copy(), sp.b.copy()),
        power=PowerAllocation(
            eta=sp.e / (n * g) if g.size else sp.e.copy(),
            theta=sp.th / np.sqrt(n * g) if g.size else sp.th.copy(),
            varsigma_tilde=sp.vst.copy(),
            varsigma=sp.vs.copy(),
            eta_tilde=sp.etf / (n * g[:, None, :]) if g.size else sp.etf.copy(),
        ),
        q_ul=sp.q_ul.copy(),
        q_dl=sp.q_dl.copy(),
    )


class ScaledGains:
    """Channel constants in solver coordinates, shared by all subproblems."""

    def __init__(self, cfg: SystemConfig, stats: ChannelStats):
        net = stats.net
        gmax = 1.0
        if stats.gamma_dl.size or stats.gamma_ul.size:
            gmax = max(stats.gamma_dl.max(initial=0.0),
                       stats.gamma_ul.max(initial=0.0))
        self.gmax = gmax
        self.g_dl = stats.gamma_dl / gmax
        self.g_ul = stats.gamma_ul / gmax
        self.b_dl = net.beta_dl / gmax
        self.b_ul = net.beta_ul / gmax
        self.b_du = net.beta_du / gmax
        self.b_ap = net.beta_ap / gmax
        self.rho_d = cfg.rho_d * gmax
        self.rho_u = cfg.rho_u * gmax
        self.n = cfg.antennas_per_ap
        self.pref_ln = cfg.prefactor / np.log(2.0)

    def dl_anchor_terms(self, sp: ScaledPoint):
        """(Xi_n, Omega_n) per DL UE at the scaled anchor."""
        xi = np.sqrt(self.n * self.rho_d) * np.sum(sp.th * np.sqrt(self.g_dl), axis=0)
        r = np.sum(sp.th**2, axis=1)
        omega = self.rho_d * (self.b_dl.T @ r) + 1.0
        if sp.vst.size:
            omega = omega + self.rho_u * (self.b_du @ sp.vst)
        return xi, omega

    def ul_anchor_terms(self, sp: ScaledPoint):
        """(Psi_n, Phi_n) per UL UE at the scaled anchor."""
        psi = np.sqrt(self.n * self.rho_u) * np.sum(sp.vs * self.g_ul, axis=0)
        t = np.sum(sp.vs**2 * self.g_ul, axis=1)
        phi = self.rho_u * (self.b_ul.T @ t) + self.g_ul.T @ sp.b
        if sp.e.size:
            # Sum_i etf_imk b_ap_mi g_ul_ml  (etf already carries gamma_dl)
            dl_power = np.sum(sp.etf, axis=2)                 # (i, m)
            cross = np.einsum("mi,im->m", self.b_ap, dl_power)  # per AP m
            phi = phi + self.rho_d * (self.g_ul.T @ cross)
        return psi, phi

    def dl_se_exact(self, sp: ScaledPoint):
        xi, omega = self.dl_anchor_terms(sp)
        se = np.zeros_like(xi)
        pos = xi > 0
        se[pos] = self.pref_ln * np.log1p(xi[pos]**2 / omega[pos])
        return se

    def ul_se_lower_exact(self, sp: ScaledPoint):
        psi, phi = self.ul_anchor_terms(sp)
        se = np.zeros_like(psi)
        pos = psi > 0
        se[pos] = self.pref_ln * np.log1p(psi[pos]**2 / phi[pos])
        return se


def scaled_residuals(sp: ScaledPoint):
    """(C1, C2, C3) at a scaled point; C1 in scaled (power-share) units."""
    c1 = float(np.sum(sp.e - sp.th**2))
    c2 = float(np.sum(sp.b[:, None] * sp.vst[None, :] - sp.vs**2))
    c3 = float(np.sum(sp.a - sp.a**2) + np.sum(sp.b - sp.b**2))
    return c1, c2, c3


def _log_bound_params(sig_n: np.ndarray, den_n: np.ndarray):
    """(const, lin, quad) of the concave log lower bound at (sig_n, den_n)."""
    if np.any(den_n <= 0):
        raise DegenerateAnchor("anchor denominator must be positive")
    ratio = sig_n**2 / den_n
    const = np.log1p(ratio) - ratio
    lin = 2.0 * sig_n / den_n
    quad = sig_n**2 / (den_n * (sig_n**2 + den_n))
    return const, lin, quad


class ConvexSubproblem:
    """One SCA inner problem; anchor enters through Parameters only.

    With fixed_modes=(a, b) the mode vectors become constants: the bilinear
    couplings turn exact/convex and the binariness penalty drops out. With
    feasibility=True the objective maximizes the worst QoS slack t instead
    of the sum of the SE epigraph variables.
    """

    def __init__(self, cfg: SystemConfig, stats: ChannelStats,
                 penalty: PenaltyConfig, fixed_modes=None,
                 feasibility: bool = False):
        self.cfg = cfg
        self.stats = stats
        self.penalty = penalty
        self.feasibility = feasibility
        self.fixed_modes = fixed_modes
        self.gains = gains = ScaledGains(cfg, stats)

        m, kd, ku = cfg.num_aps, cfg.num_dl_ues, cfg.num_ul_ues
        self.m, self.kd, self.ku = m, kd, ku
        ones_row = np.ones((1, m))

        cons = []
        if fixed_modes is None:
            a = cp.Variable(m, name="a")
            b = cp.Variable(m, name="b")
            cons += [a + b == 1, a >= 0, a <= 1, b >= 0, b <= 1]
        else:
            a = np.asarray(fixed_modes[0], dtype=float)
            b = np.asarray(fixed_modes[1], dtype=float)
        self._a, self._b = a, b

        e = cp.Variable((m, kd), name="e") if kd else None
        th = cp.Variable((m, kd), name="th") if kd else None
        etf = cp.Variable((m * kd, m), name="etf") if (kd and ku) else None
        if ku and fixed_modes is None:
            vs = cp.Variable((m, ku), name="vs")
            vst = cp.Variable(ku, name="vst")
            u = None
        elif ku:
            # binary modes make varsigma determined: vs_ml = b_m u_l with
            # u_l = sqrt(vst_l); the problem becomes exact in (u, u^2)
            vs = vst = None
            u = cp.Variable(ku, name="u")
            s_u = cp.Variable(ku, name="s_u")  # epigraph of u^2 (= vst)
        else:
            vs = vst = u = s_u = None
        self._e, self._th, self._vs, self._vst, self._u, self._etf = \
            e, th, vs, vst, u, etf
        vst_expr = vst if fixed_modes is None else s_u

        if feasibility:
            slack = cp.Variable(name="t")
            cons.append(slack <= FEASIBILITY_SLACK_CAP)
            self._slack = slack
            q_ul = q_dl = None
        else:
            slack = None
            q_ul = cp.Variable(ku, name="q_ul") if ku else None
            q_dl = cp.Variable(kd, name="q_dl") if kd else None
        self._q_ul, self._q_dl = q_ul, q_dl

        # --- DL power structure -------------------------------------------
        dl_expr = None
        if kd:
            cons += [e >= 0, th >= 0, cp.square(th) <= e,
                     cp.sum(e, axis=1) <= 1]
            a_mat = (cp.reshape(a, (m, 1), order="C") @ np.ones((1, kd))
                     if fixed_modes is None else np.outer(a, np.ones(kd)))
            cons.append(e <= a_mat)

            rvar = cp.Variable(m, name="r")
            cons.append(cp.sum(cp.square(th), axis=1) <= rvar)
            xi = cp.sum(cp.multiply(np.sqrt(gains.g_dl), th), axis=0) \
                * np.sqrt(gains.n * gains.rho_d)
            s_dl = cp.Variable(kd, name="s_dl")
            cons.append(cp.square(xi) <= s_dl)
            omega = gains.rho_d * (gains.b_dl.T @ rvar) + 1.0
            if ku:
                omega = omega + gains.rho_u * (gains.b_du @ vst_expr)

            self.p_dl_const = cp.Parameter(kd)
            self.p_dl_lin = cp.Parameter(kd, nonneg=True)
            self.p_dl_quad = cp.Parameter(kd, nonneg=True)
            dl_expr = gains.pref_ln * (
                self.p_dl_const + cp.multiply(self.p_dl_lin, xi)
                - cp.multiply(self.p_dl_quad, s_dl + omega))
            if feasibility:
                cons.append(dl_expr >= cfg.se_target_dl + slack)
            else:
                cons += [dl_expr >= q_dl, q_dl >= cfg.se_target_dl]

        # --- UL power structure -------------------------------------------
        ul_expr = None
        if ku:
            if fixed_modes is None:
                cons += [vs >= 0, vs <= 1, vst >= 0, vst <= 1]
                tvar = cp.Variable(m, name="tvar")
                cons.append(cp.sum(cp.multiply(gains.g_ul, cp.square(vs)),
                                   axis=1) <= tvar)
                psi = cp.sum(cp.multiply(gains.g_ul, vs), axis=0) \
                    * np.sqrt(gains.n * gains.rho_u)
                phi = gains.rho_u * (gains.b_ul.T @ tvar) + gains.g_ul.T @ b
            else:
                cons += [u >= 0, u <= 1, cp.square(u) <= s_u, s_u <= 1]
                # psi_l = sqrt(n rho_u) (Sum_m g_ml b_m) u_l
                psi = np.sqrt(gains.n * gains.rho_u) \
                    * cp.multiply(gains.g_ul.T @ b, u)
                # W[l, q] = Sum_m beta_ml b_m g_mq
                w = (gains.b_ul * b[:, None]).T @ gains.g_ul
                phi = gains.rho_u * (w @ s_u) + gains.g_ul.T @ b
            s_ul = cp.Variable(ku, name="s_ul")
            cons.append(cp.square(psi) <= s_ul)
            if kd:
                cons += [etf >= 0]
                e_flat = cp.reshape(e, (m * kd, 1), order="C")
                cons.append(etf <= e_flat @ ones_row)
                i_of_row = np.repeat(np.arange(m), kd)   # row ik -> AP i
                b_ap_rows = gains.b_ap[:, i_of_row].T    # [ik, m] = b_ap[m, i]
                cross_per_ap = cp.sum(cp.multiply(b_ap_rows, etf), axis=0)
                phi = phi + gains.rho_d * (gains.g_ul.T @ cross_per_ap)

            self.p_ul_const = cp.Parameter(ku)
            self.p_ul_lin = cp.Parameter(ku, nonneg=True)
            self.p_ul_quad = cp.Parameter(ku, nonneg=True)
            ul_expr = gains.pref_ln * (
                self.p_ul_const + cp.multiply(self.p_ul_lin, psi)
                - cp.multiply(self.p_ul_quad, s_ul + phi))
            if feasibility:
                cons.append(ul_expr >= cfg.se_target_ul + slack)
            else:
                cons += [ul_expr >= q_ul, q_ul >= cfg.se_target_ul]
        self._dl_expr, self._ul_expr = dl_expr, ul_expr

        # --- bilinear couplings -------------------------------------------
        if kd and ku:
            e_flat = cp.reshape(e, (m * kd, 1), order="C")
            e_mat = e_flat @ ones_row                     # [ik, m] = e_ik
            if fixed_modes is None:
                b_mat = np.ones((m * kd, 1)) @ cp.reshape(b, (1, m), order="C")
                self.p_c36_lin = cp.Parameter((m * kd, m))
                self.p_c36_const = cp.Parameter((m * kd, m))
                lhs = 0.25 * (cp.square(b_mat + e_mat)
                              - cp.multiply(self.p_c36_lin, b_mat - e_mat)
                              + self.p_c36_const)
                cons.append(lhs <= etf)
            else:
                cons.append(cp.multiply(e_mat, np.tile(b, (m * kd, 1))) <= etf)
        if ku and fixed_modes is None:
            b_col = cp.reshape(b, (m, 1), order="C") @ np.ones((1, ku))
            v_row = np.ones((m, 1)) @ cp.reshape(vst, (1, ku), order="C")
            self.p_c37_lin = cp.Parameter((m, ku))
            self.p_c37_const = cp.Parameter((m, ku))
            cons.append(cp.square(vs)
                        + 0.25 * (cp.square(b_col - v_row)
                                  - cp.multiply(self.p_c37_lin, b_col + v_row)
                                  + self.p_c37_const) <= 0)

        # --- penalized objective ------------------------------------------
        pen = 0
        if kd:
            self.p_c1_lin = cp.Parameter((m, kd))
            self.p_c1_const = cp.Parameter()
            pen = pen + penalty.mu1 * (cp.sum(e)
                                       - cp.sum(cp.multiply(self.p_c1_lin, th))
                                       + self.p_c1_const)
        if ku and fixed_modes is None:
            self.p_c2_vs = cp.Parameter((m, ku))
            self.p_c2_const = cp.Parameter()
            c2 = -cp.sum(cp.multiply(self.p_c2_vs, vs)) + self.p_c2_const
            b_col = cp.reshape(b, (m, 1), order="C") @ np.ones((1, ku))
            v_row = np.ones((m, 1)) @ cp.reshape(vst, (1, ku), order="C")
            self.p_c2_lin = cp.Parameter((m, ku))
            c2 = c2 + 0.25 * (cp.sum(cp.square(b_col + v_row))
                              - cp.sum(cp.multiply(self.p_c2_lin,
                                                   b_col - v_row)))
            pen = pen + penalty.mu2 * c2
        if fixed_modes is None:
            self.p_a3 = cp.Parameter(m)
            self.p_b3 = cp.Parameter(m)
            self.p_c3_const = cp.Parameter()
            pen = pen + penalty.mu3 * (cp.sum(a) - self.p_a3 @ a
                                       + cp.sum(b) - self.p_b3 @ b
                                       + self.p_c3_const)

        if feasibility:
            # pure slack maximization: penalties (esp. the binariness one)
            # would drive the modes binary before a feasible point is found
            obj = -slack
        else:
            obj = penalty.lam * pen
            if ku:
                obj = obj - cp.sum(q_ul)
            if kd:
                obj = obj - cp.sum(q_dl)
        self.problem = cp.Problem(cp.Minimize(obj), cons)

    @property
    def num_decision_vars(self) -> int:
        """Count of genuine decision variables (epigraph helpers excluded)."""
        m, kd, ku = self.m, self.kd, self.ku
        free = self.fixed_modes is None
        count = 2 * m * free + 2 * m * kd + m * ku * free + ku \
            + m * m * kd * (ku > 0) + (1 if self.feasibility else ku + kd)
        return count

    # -- anchor handling ---------------------------------------------------

    def set_anchor(self, sp: ScaledPoint) -> None:
        gains = self.gains
        if self.kd:
            xi_n, om_n = gains.dl_anchor_terms(sp)
            const, lin, quad = _log_bound_params(xi_n, om_n)
            self.p_dl_const.value = const
            self.p_dl_lin.value = lin
            self.p_dl_quad.value = quad
            self.p_c1_lin.value = 2.0 * sp.th
            self.p_c1_const.value = float(np.sum(sp.th**2))
        if self.ku:
            psi_n, phi_n = gains.ul_anchor_terms(sp)
            const, lin, quad = _log_bound_params(psi_n, phi_n)
            self.p_ul_const.value = const
            self.p_ul_lin.value = lin
            self.p_ul_quad.value = quad
            if self.fixed_modes is None:
                self.p_c2_vs.value = 2.0 * sp.vs
                diff = sp.b[:, None] - sp.vst[None, :]
                self.p_c2_lin.value = 2.0 * diff
                self.p_c2_const.value = float(0.25 * np.sum(diff**2)
                                              + np.sum(sp.vs**2))
        if self.fixed_modes is None:
            if self.kd and self.ku:
                e_n = np.repeat(sp.e.reshape(-1, 1), self.m, axis=1)  # [ik, m]
                diff = sp.b[None, :] - e_n
                self.p_c36_lin.value = 2.0 * diff
                self.p_c36_const.value = diff**2
            if self.ku:
                s = sp.b[:, None] + sp.vst[None, :]
                self.p_c37_lin.value = 2.0 * s
                self.p_c37_const.value = s**2
            self.p_a3.value = 2.0 * sp.a
            self.p_b3.value = 2.0 * sp.b
            self.p_c3_const.value = float(np.sum(sp.a**2) + np.sum(sp.b**2))

    # -- solving -----------------------------------------------------------

    def solve(self, solver: str = "CLARABEL") -> ScaledPoint:
        """Solve at the current anchor; raises Infeasible / NumericalFailure."""
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", UserWarning)
                self.problem.solve(solver=solver)
        except cp.error.SolverError as exc:
            raise NumericalFailure(str(exc)) from exc
        status = self.problem.status
        if status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            raise Infeasible(f"subproblem infeasible ({status})")
        if status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
            raise NumericalFailure(f"solver status {status}")
        return self._extract()

    @property
    def slack_value(self) -> float:
        return float(self._slack.value)

    def _extract(self) -> ScaledPoint:
        m, kd, ku = self.m, self.kd, self.ku

        def val(v, shape):
            if v is None:
                return np.zeros(shape)
            x = np.asarray(v.value if isinstance(v, cp.Variable) else v,
                           dtype=float)
            return x.reshape(shape)

        b = val(self._b, (m,))
        if ku and self.fixed_modes is not None:
            # reconstruct the exactly coupled (vs, vst) pair from u
            uv = np.clip(val(self._u, (ku,)), 0.0, 1.0)
            vs_val = b[:, None] * uv[None, :]
            vst_val = uv**2
        else:
            vs_val = val(self._vs, (m, ku))
            vst_val = val(self._vst, (ku,))
        sp = ScaledPoint(
            a=val(self._a, (m,)),
            b=b,
            e=val(self._e, (m, kd)),
            th=val(self._th, (m, kd)),
            vs=vs_val,
            vst=vst_val,
            etf=val(self._etf, (m, kd, m)).transpose(0, 2, 1)
                if (kd and ku) else np.zeros((m, m, kd)),
            q_ul=val(self._q_ul, (ku,)),
            q_dl=val(self._q_dl, (kd,)),
        )
        # clip solver-level noise off the box bounds
        np.clip(sp.a, 0.0, 1.0, out=sp.a)
        np.clip(sp.b, 0.0, 1.0, out=sp.b)
        np.clip(sp.vs, 0.0, 1.0, out=sp.vs)
        np.clip(sp.vst, 0.0, 1.0, out=sp.vst)
        np.maximum(sp.e, 0.0, out=sp.e)
        np.maximum(sp.th, 0.0, out=sp.th)
        np.maximum(sp.etf, 0.0, out=sp.etf)
        if self.feasibility:
            # record the surrogate SE values reached, floored at the targets
            if kd:
                sp.q_dl = np.asarray(self._dl_expr.value, dtype=float).reshape(kd)
            if ku:
                sp.q_ul = np.asarray(self._ul_expr.value, dtype=float).reshape(ku)
        return sp

    # -- diagnostics -------------------------------------------------------

    def residuals(self, sp: ScaledPoint):
        return scaled_residuals(sp)

    def penalized_objective(self, sp: ScaledPoint) -> float:
        """Exact penalized objective L at a scaled point."""
        c1, c2, c3 = self.residuals(sp)
        pen = self.penalty.lam * (self.penalty.mu1 * c1 + self.penalty.mu2 * c2
                                  + self.penalty.mu3 * c3)
        return float(-np.sum(sp.q_ul) - np.sum(sp.q_dl) + pen)
