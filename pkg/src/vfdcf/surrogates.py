"""Exact penalty functions and their convex/concave SCA surrogates.

These are the numeric (evaluation) forms used by the outer loop and the
tests; the convex subproblem builds the same expressions symbolically.
"""

from __future__ import annotations

import numpy as np

from .config import SystemConfig
from .errors import DegenerateAnchor
from .network import ChannelStats
from .se import dl_signal_interference, ul_psi_phi
from .state import DecisionPoint


def penalty_c1(theta: np.ndarray, eta: np.ndarray) -> float:
    """Sum of eta - theta^2 (zero when the two representations agree)."""
    return float(np.sum(eta - theta**2))


def penalty_c2(b: np.ndarray, varsigma_tilde: np.ndarray,
               varsigma: np.ndarray) -> float:
    """Sum of b_m varsigma_tilde_l - varsigma_ml^2."""
    return float(np.sum(b[:, None] * varsigma_tilde[None, :] - varsigma**2))


def penalty_c3(a: np.ndarray, b: np.ndarray) -> float:
    """Binariness penalty: sum of a - a^2 plus b - b^2."""
    return float(np.sum(a - a**2) + np.sum(b - b**2))


def bilinear_upper(x, y, xn, yn):
    """Convex upper bound on x*y around (xn, yn), for x, y >= 0."""
    return 0.25 * ((x + y) ** 2 - 2.0 * (xn - yn) * (x - y) + (xn - yn) ** 2)


def neg_bilinear_upper(x, y, xn, yn):
    """Convex upper bound on -x*y around (xn, yn), for x, y >= 0."""
    return 0.25 * ((x - y) ** 2 - 2.0 * (xn + yn) * (x + y) + (xn + yn) ** 2)


def _log_bound(val_n_sq, den_n, val, sq_plus_den):
    """Concave lower bound of ln(1 + s^2/d) linearized at (s_n, d_n).

    val_n_sq = s_n^2, den_n = d_n, val = s, sq_plus_den = s^2 + d.
    """
    ratio = val_n_sq / den_n
    return (np.log1p(ratio) - ratio
            + 2.0 * np.sqrt(val_n_sq) * val / den_n
            - val_n_sq * sq_plus_den / (den_n * (val_n_sq + den_n)))


def surrogate_ul_se(cfg: SystemConfig, stats: ChannelStats,
                    point: DecisionPoint, anchor: DecisionPoint) -> np.ndarray:
    """Concave lower bound of the UL SE bound, tight at the anchor."""
    net = stats.net
    psi_n, phi_n = ul_psi_phi(cfg, stats, net, anchor.mode.b,
                              anchor.power.varsigma, anchor.power.eta_tilde)
    if np.any(phi_n <= 0):
        raise DegenerateAnchor("anchor UL denominator must be positive")
    psi, phi = ul_psi_phi(cfg, stats, net, point.mode.b,
                          point.power.varsigma, point.power.eta_tilde)
    pref = cfg.prefactor / np.log(2.0)
    return pref * _log_bound(psi_n**2, phi_n, psi, psi**2 + phi)


def surrogate_dl_se(cfg: SystemConfig, stats: ChannelStats,
                    point: DecisionPoint, anchor: DecisionPoint) -> np.ndarray:
    """Concave lower bound of the DL SE, tight at the anchor."""
    xi_n, om_n = dl_signal_interference(cfg, stats, anchor.power.theta,
                                        anchor.power.varsigma_tilde)
    if np.any(om_n <= 0):
        raise DegenerateAnchor("anchor DL denominator must be positive")
    xi, om = dl_signal_interference(cfg, stats, point.power.theta,
                                    point.power.varsigma_tilde)
    pref = cfg.prefactor / np.log(2.0)
    return pref * _log_bound(xi_n**2, om_n, xi, xi**2 + om)


def surrogate_penalties(point: DecisionPoint, anchor: DecisionPoint):
    """Convex upper bounds (C1~, C2~, C3~), each tight at the anchor."""
    p, pn = point.power, anchor.power
    a, b = point.mode.a, point.mode.b
    an, bn = anchor.mode.a, anchor.mode.b

    c1 = float(np.sum(p.eta - 2.0 * pn.theta * p.theta + pn.theta**2))

    bs = bilinear_upper(b[:, None], p.varsigma_tilde[None, :],
                        bn[:, None], pn.varsigma_tilde[None, :])
    c2 = float(np.sum(bs - 2.0 * pn.varsigma * p.varsigma + pn.varsigma**2))

    c3 = float(np.sum(a - 2.0 * an * a + an**2)
               + np.sum(b - 2.0 * bn * b + bn**2))
    return c1, c2, c3


def coupling_violations(point: DecisionPoint, anchor: DecisionPoint):
    """Values of the convexified coupling constraints (feasible iff <= 0).

    Returns (v36, v37): v36[i, m, k] is the convex surrogate of
    b_m eta_ik - eta_tilde_imk, v37[m, l] the surrogate of
    varsigma_ml^2 - b_m varsigma_tilde_l.
    """
    p, pn = point.power, anchor.power
    b, bn = point.mode.b, anchor.mode.b

    # [i, m, k] layout: x = b_m, y = eta_ik
    v36 = (bilinear_upper(b[None, :, None], p.eta[:, None, :],
                          bn[None, :, None], pn.eta[:, None, :])
           - p.eta_tilde)

    v37 = (p.varsigma**2
           + neg_bilinear_upper(b[:, None], p.varsigma_tilde[None, :],
                                bn[:, None], pn.varsigma_tilde[None, :]))
    return v36, v37
