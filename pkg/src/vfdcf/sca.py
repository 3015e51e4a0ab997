"""Penalized successive convex approximation: outer loop, init, rounding.

The outer loop is a majorize-minimize scheme: each inner problem is a convex
restriction that is tight at the anchor, so the penalized objective is
nonincreasing up to solver tolerance. After convergence the near-binary
modes are rounded, a power-only pass polishes the allocation, and the
redundant variable copies (theta/eta, varsigma, eta_tilde) are made exactly
consistent before the exact SEs are evaluated.
"""

from __future__ import annotations

import numpy as np

from .config import PenaltyConfig, SystemConfig
from .errors import Infeasible, NumericalFailure
from .network import ChannelStats, NetworkRealization
from .se import dl_se, ul_se
from .state import (DecisionPoint, IterationRecord, ModeAssignment, RunResult,
                    SEVector, Status)
from .subproblem import (ConvexSubproblem, ScaledGains, ScaledPoint,
                         scale_point, scaled_residuals, unscale_point)

DEFAULT_SOLVER = "CLARABEL"
FALLBACK_SOLVER = "SCS"
QOS_TOL = 1e-4     # slack on the per-UE SE targets at the final point
POWER_TOL = 1e-7   # slack on the per-AP power budget


def _solve(prob: ConvexSubproblem) -> ScaledPoint:
    try:
        return prob.solve(solver=DEFAULT_SOLVER)
    except NumericalFailure:
        return prob.solve(solver=FALLBACK_SOLVER)


def _initial_scaled_point(cfg: SystemConfig, rng: np.random.Generator,
                          modes=None) -> ScaledPoint:
    """Interior starting point: fractional modes, 50% power margins."""
    m, kd, ku = cfg.num_aps, cfg.num_dl_ues, cfg.num_ul_ues
    if modes is None:
        a = rng.uniform(0.3, 0.7, size=m)
        b = 1.0 - a
    else:
        a = np.asarray(modes[0], dtype=float)
        b = np.asarray(modes[1], dtype=float)

    e = np.zeros((m, kd))
    if kd:
        e[:] = 0.5 * np.minimum(1.0 / kd, a)[:, None]
    th = np.sqrt(e)
    vst = np.full(ku, 0.5)
    vs = np.sqrt(b[:, None] * vst[None, :]) if ku else np.zeros((m, 0))
    etf = b[None, :, None] * e[:, None, :]
    return ScaledPoint(a=a, b=b, e=e, th=th, vs=vs, vst=vst, etf=etf,
                       q_ul=np.zeros(ku), q_dl=np.zeros(kd))


def _achieved_lower_bounds(gains: ScaledGains, sp: ScaledPoint):
    """(DL SE, UL SE lower bound) at a scaled point, in bit/s/Hz."""
    return gains.dl_se_exact(sp), gains.ul_se_lower_exact(sp)


def _qos_met(cfg: SystemConfig, gains: ScaledGains, sp: ScaledPoint,
             margin: float = 0.0) -> bool:
    se_dl, se_ul = _achieved_lower_bounds(gains, sp)
    return bool(np.all(se_dl >= cfg.se_target_dl - margin)
                and np.all(se_ul >= cfg.se_target_ul - margin))


def _feasibility_phase(cfg: SystemConfig, stats: ChannelStats,
                       penalty: PenaltyConfig, sp: ScaledPoint,
                       fixed_modes=None) -> ScaledPoint:
    """Drive the worst QoS slack nonnegative; raises Infeasible on failure."""
    gains = ScaledGains(cfg, stats)
    if not _qos_met(cfg, gains, sp):
        prob = ConvexSubproblem(cfg, stats, penalty, fixed_modes=fixed_modes,
                                feasibility=True)
        for _ in range(penalty.max_feasibility_iters):
            prob.set_anchor(sp)
            sp = _solve(prob)
            if _qos_met(cfg, gains, sp):
                break
        else:
            raise Infeasible("feasibility phase exhausted its iterations")
    se_dl, se_ul = _achieved_lower_bounds(gains, sp)
    sp.q_dl = np.maximum(se_dl, cfg.se_target_dl)
    sp.q_ul = np.maximum(se_ul, cfg.se_target_ul)
    return sp


def initialize(cfg: SystemConfig, stats: ChannelStats,
               net: NetworkRealization, penalty: PenaltyConfig,
               rng: np.random.Generator, modes=None) -> DecisionPoint:
    """Random interior point pushed into the QoS-feasible region."""
    sp = _initial_scaled_point(cfg, rng, modes=modes)
    sp = _feasibility_phase(cfg, stats, penalty, sp,
                            fixed_modes=modes)
    return unscale_point(cfg, stats, sp)


def _optimize_loop(cfg: SystemConfig, stats: ChannelStats,
                   penalty: PenaltyConfig, sp: ScaledPoint, fixed_modes=None,
                   trace=None, start_iter: int = 0, phase: str = "joint"):
    """Iterate the inner problem to convergence of the penalized objective.

    Returns (point, converged_flag); appends IterationRecords to trace.
    """
    prob = ConvexSubproblem(cfg, stats, penalty, fixed_modes=fixed_modes)
    prev = prob.penalized_objective(sp)
    if trace is not None:
        trace.append(IterationRecord(start_iter, prev, *prob.residuals(sp),
                                     phase=phase))
    converged = False
    it = start_iter
    for it in range(start_iter + 1, start_iter + penalty.max_outer_iters + 1):
        prob.set_anchor(sp)
        try:
            sp = _solve(prob)
        except (Infeasible, NumericalFailure):
            break  # keep the last good anchor
        obj = prob.penalized_objective(sp)
        if trace is not None:
            trace.append(IterationRecord(it, obj, *prob.residuals(sp),
                                         phase=phase))
        if abs(obj - prev) <= penalty.epsilon_conv:
            converged = True
            break
        prev = obj
    return sp, converged, it


def _make_consistent(sp: ScaledPoint) -> ScaledPoint:
    """Collapse the redundant variable copies onto their defining equalities."""
    out = sp.copy()
    if np.all((out.a == 0.0) | (out.a == 1.0)):
        # solver-tolerance dust on e/th of UL APs unscales to large raw eta
        out.th = out.th * out.a[:, None]
    out.e = out.th**2
    out.etf = out.b[None, :, None] * out.e[:, None, :]
    out.vs = np.sqrt(out.b[:, None] * out.vst[None, :]) if out.vst.size \
        else out.vs
    return out


def _finalize(cfg: SystemConfig, stats: ChannelStats, net: NetworkRealization,
              penalty: PenaltyConfig, sp: ScaledPoint, trace,
              outer_converged: bool, mode_gap: float) -> RunResult:
    """Consistency projection, exact SEs, and constraint verification."""
    sp = _make_consistent(sp)
    point = unscale_point(cfg, stats, sp)
    se = SEVector(
        dl=dl_se(cfg, stats, point.power.theta, point.power.varsigma_tilde),
        ul=ul_se(cfg, stats, net, point.mode.b, point.power.varsigma,
                 point.power.eta),
    )
    point.q_dl = se.dl.copy()
    point.q_ul = se.ul.copy()

    # C1 in scaled (per-AP power-share) units: the raw eta are ~1e10 and
    # their float roundoff alone would swamp the epsilon-level check
    c1, c2, c3 = scaled_residuals(sp)

    power_ok = bool(np.all(np.sum(sp.e, axis=1) <= 1.0 + POWER_TOL))
    qos_ok = bool(np.all(se.dl >= cfg.se_target_dl - QOS_TOL)
                  and np.all(se.ul >= cfg.se_target_ul - QOS_TOL))
    residual_ok = max(c1, c2, c3) <= penalty.epsilon_penalty

    if power_ok and qos_ok and residual_ok:
        status = Status.CONVERGED if outer_converged else Status.MAX_ITERS
    else:
        status = Status.INFEASIBLE
    return RunResult(point=point, se=se, trace=list(trace),
                     residuals=(c1, c2, c3), status=status,
                     iterations=trace[-1].iteration if trace else 0,
                     mode_gap=mode_gap)


def round_and_polish(cfg: SystemConfig, stats: ChannelStats,
                     net: NetworkRealization, penalty: PenaltyConfig,
                     point: DecisionPoint, trace=None,
                     outer_converged: bool = True) -> RunResult:
    """Round modes to binary (ties to DL), re-optimize powers, verify.

    The relaxation occasionally keeps an AP at a tiny fractional DL mode
    that is essential for some UE's QoS; naively rounding it away makes the
    binary point infeasible. When the rounded vector fails, every single-AP
    flip of it is tried with power-only SCA and the best converged
    candidate is returned.
    """
    trace = list(trace) if trace else []
    sp = scale_point(cfg, stats, point)
    mode_gap = float(np.max(np.abs(sp.a - np.round(sp.a)), initial=0.0))

    a = (sp.a >= 0.5).astype(float)
    b = 1.0 - a
    # a side with UEs must keep at least one AP; move the most fractional one
    if cfg.num_ul_ues and b.sum() == 0:
        i = int(np.argmin(sp.a))
        a[i], b[i] = 0.0, 1.0
    if cfg.num_dl_ues and a.sum() == 0:
        i = int(np.argmax(sp.a))
        a[i], b[i] = 1.0, 0.0
    sp.a, sp.b = a, b
    # zero powers that the binary modes forbid, keeping the anchor feasible
    sp.e = sp.e * a[:, None]
    sp.th = np.minimum(sp.th * a[:, None], np.sqrt(sp.e))
    sp.vs = np.sqrt(b[:, None] * sp.vst[None, :]) if sp.vst.size else sp.vs
    sp.etf = b[None, :, None] * sp.e[:, None, :]

    start = trace[-1].iteration if trace else 0
    try:
        sp_feas = _feasibility_phase(cfg, stats, penalty, sp.copy(),
                                     fixed_modes=(a, b))
    except Infeasible:
        result = _finalize(cfg, stats, net, penalty, sp, trace,
                           outer_converged, mode_gap)
    else:
        sp_opt, polish_ok, _ = _optimize_loop(cfg, stats, penalty, sp_feas,
                                              fixed_modes=(a, b), trace=trace,
                                              start_iter=start, phase="polish")
        result = _finalize(cfg, stats, net, penalty, sp_opt, trace,
                           outer_converged and polish_ok, mode_gap)
    if result.converged:
        return result
    return _repair_modes(cfg, stats, net, penalty, a, result, trace, mode_gap)


def _repair_modes(cfg: SystemConfig, stats: ChannelStats,
                  net: NetworkRealization, penalty: PenaltyConfig,
                  a0: np.ndarray, fallback: RunResult, trace,
                  mode_gap: float) -> RunResult:
    """Best converged single-AP flip of a failed binary mode vector."""
    best = None
    offset = trace[-1].iteration if trace else 0
    for m in range(cfg.num_aps):
        a = a0.copy()
        a[m] = 1.0 - a[m]
        b = 1.0 - a
        if (cfg.num_dl_ues and a.sum() == 0) or (cfg.num_ul_ues and b.sum() == 0):
            continue
        cand = solve_power_only(cfg, stats, net, penalty, a, b)
        if cand.converged and (best is None or cand.se.total > best.se.total):
            best = cand
    if best is None:
        return fallback
    merged = list(trace) + [
        IterationRecord(it.iteration + offset, it.objective, it.c1, it.c2,
                        it.c3, phase="repair") for it in best.trace]
    return RunResult(point=best.point, se=best.se, trace=merged,
                     residuals=best.residuals, status=best.status,
                     iterations=merged[-1].iteration if merged else 0,
                     mode_gap=mode_gap)


def run_sca(cfg: SystemConfig, stats: ChannelStats, net: NetworkRealization,
            penalty: PenaltyConfig, init_seed) -> RunResult:
    """Joint mode-assignment + power-control optimization, multi-start.

    The penalized SCA converges to a stationary point whose quality depends
    on the random initializer, so penalty.num_starts independent starts are
    run and the best converged result (by sum SE) is kept. The start seeds
    are spawned deterministically from init_seed.
    """
    if not isinstance(init_seed, np.random.SeedSequence):
        init_seed = np.random.SeedSequence(init_seed)
    best = None
    for child in init_seed.spawn(max(1, penalty.num_starts)):
        res = _run_sca_once(cfg, stats, net, penalty, child)
        if best is None:
            best = res
        elif res.converged and (not best.converged
                                or res.se.total > best.se.total):
            best = res
    if best.converged:
        best = _hill_climb(cfg, stats, net, penalty, best)
    return best


def _hill_climb(cfg: SystemConfig, stats: ChannelStats,
                net: NetworkRealization, penalty: PenaltyConfig,
                result: RunResult) -> RunResult:
    """Greedy single-AP mode flips around a converged binary solution.

    The relaxed SCA is only guaranteed a stationary point; a cheap local
    search over Hamming-distance-1 mode vectors reliably escapes poor
    basins. At most M accepted moves, each requiring a power-only solve
    per candidate flip.
    """
    m = cfg.num_aps
    current = result
    a_cur = result.point.mode.a.copy()
    for _ in range(m):
        best_cand, best_flip = None, None
        for i in range(m):
            a = a_cur.copy()
            a[i] = 1.0 - a[i]
            b = 1.0 - a
            if (cfg.num_dl_ues and a.sum() == 0) \
                    or (cfg.num_ul_ues and b.sum() == 0):
                continue
            cand = solve_power_only(cfg, stats, net, penalty, a, b)
            floor = best_cand.se.total if best_cand else current.se.total
            if cand.converged and cand.se.total > floor + 1e-9:
                best_cand, best_flip = cand, i
        if best_cand is None:
            break
        current, a_cur[best_flip] = best_cand, 1.0 - a_cur[best_flip]
    if current is result:
        return result
    offset = result.trace[-1].iteration if result.trace else 0
    merged = list(result.trace) + [
        IterationRecord(it.iteration + offset, it.objective, it.c1, it.c2,
                        it.c3, phase="search") for it in current.trace]
    return RunResult(point=current.point, se=current.se, trace=merged,
                     residuals=current.residuals, status=current.status,
                     iterations=merged[-1].iteration if merged else 0,
                     mode_gap=result.mode_gap)


def _run_sca_once(cfg: SystemConfig, stats: ChannelStats,
                  net: NetworkRealization, penalty: PenaltyConfig,
                  init_seed) -> RunResult:
    """One SCA run from one random initializer."""
    rng = np.random.default_rng(init_seed)
    sp = _initial_scaled_point(cfg, rng)
    try:
        sp = _feasibility_phase(cfg, stats, penalty, sp)
    except Infeasible:
        return _infeasible_result(cfg, stats, net, sp)

    trace: list[IterationRecord] = []
    sp, converged, _ = _optimize_loop(cfg, stats, penalty, sp, trace=trace)
    point = unscale_point(cfg, stats, sp)
    return round_and_polish(cfg, stats, net, penalty, point, trace=trace,
                            outer_converged=converged)


def solve_power_only(cfg: SystemConfig, stats: ChannelStats,
                     net: NetworkRealization, penalty: PenaltyConfig,
                     a: np.ndarray, b: np.ndarray,
                     init_point: ScaledPoint | None = None) -> RunResult:
    """Power control with the mode vectors held fixed (binary)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    sp = init_point if init_point is not None \
        else _initial_scaled_point(cfg, None, modes=(a, b))
    trace: list[IterationRecord] = []
    try:
        sp = _feasibility_phase(cfg, stats, penalty, sp, fixed_modes=(a, b))
    except Infeasible:
        return _infeasible_result(cfg, stats, net, sp)
    sp, converged, _ = _optimize_loop(cfg, stats, penalty, sp,
                                      fixed_modes=(a, b), trace=trace,
                                      phase="polish")
    return _finalize(cfg, stats, net, penalty, sp, trace, converged,
                     mode_gap=0.0)


def _infeasible_result(cfg, stats, net, sp: ScaledPoint) -> RunResult:
    point = unscale_point(cfg, stats, sp)
    se = SEVector(
        dl=dl_se(cfg, stats, point.power.theta, point.power.varsigma_tilde),
        ul=ul_se(cfg, stats, net, point.mode.b, point.power.varsigma,
                 point.power.eta),
    )
    return RunResult(point=point, se=se, status=Status.INFEASIBLE)


def enumerate_modes(cfg: SystemConfig, stats: ChannelStats,
                    net: NetworkRealization, penalty: PenaltyConfig):
    """Brute force over all 2^M binary mode vectors with power-only SCA.

    Returns (best_sum_se, best_a, results) where results maps the mode
    bitstring to the achieved sum SE (None when infeasible). Intended for
    tiny M only.
    """
    m = cfg.num_aps
    best_sum, best_a = -np.inf, None
    results: dict[str, float | None] = {}
    for bits in range(2**m):
        a = np.array([(bits >> i) & 1 for i in range(m)], dtype=float)
        b = 1.0 - a
        key = "".join(str(int(x)) for x in a)
        if (cfg.num_dl_ues and a.sum() == 0) or (cfg.num_ul_ues and b.sum() == 0):
            results[key] = None
            continue
        res = solve_power_only(cfg, stats, net, penalty, a, b)
        if res.converged:
            results[key] = res.se.total
            if res.se.total > best_sum:
                best_sum, best_a = res.se.total, a
        else:
            results[key] = None
    return best_sum, best_a, results
