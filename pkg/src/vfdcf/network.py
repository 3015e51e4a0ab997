"""Network geometry, large-scale fading, and channel-estimation statistics.

Everything here is a pure function of (config, rng): identical seeds give
identical realizations, so realizations can be generated concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .errors import CovarianceNotPSD, PlacementFailed

AP_PLACEMENT_BUDGET = 10_000  # rejection attempts per AP before failing
MIN_PATHLOSS_DISTANCE = 1.0   # clamp below the model's reference distance


def wrap_distance(p, q, side: float):
    """Torus (wrap-around) distance between points in [0, side)^2.

    Accepts single points or arrays of points broadcasting on the last axis.
    """
    delta = np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float))
    delta = np.minimum(delta, side - delta)
    return np.sqrt(np.sum(delta**2, axis=-1))


def pairwise_wrap_distances(a, b, side: float):
    """Matrix of wrap distances between two point sets, shape (len(a), len(b))."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return wrap_distance(a[:, None, :], b[None, :, :], side)


def path_loss_db(d):
    """Log-distance path loss in dB; distances clamped to >= 1 m."""
    d = np.maximum(np.asarray(d, dtype=float), MIN_PATHLOSS_DISTANCE)
    return -30.5 - 36.7 * np.log10(d)


def place_nodes(cfg: SystemConfig, rng: np.random.Generator):
    """Drop APs (with minimum wrap spacing) and UEs uniformly in the square.

    Returns (ap_positions, dl_ue_positions, ul_ue_positions).
    """
    side = cfg.area_side
    ap_positions = np.zeros((cfg.num_aps, 2))
    for m in range(cfg.num_aps):
        for _ in range(AP_PLACEMENT_BUDGET):
            cand = rng.uniform(0.0, side, size=2)
            if m == 0:
                ap_positions[m] = cand
                break
            d = wrap_distance(ap_positions[:m], cand[None, :], side)
            if np.min(d) >= cfg.min_ap_spacing:
                ap_positions[m] = cand
                break
        else:
            raise PlacementFailed(
                f"could not place AP {m} with spacing {cfg.min_ap_spacing} m "
                f"after {AP_PLACEMENT_BUDGET} attempts"
            )
    dl_ue_positions = rng.uniform(0.0, side, size=(cfg.num_dl_ues, 2))
    ul_ue_positions = rng.uniform(0.0, side, size=(cfg.num_ul_ues, 2))
    return ap_positions, dl_ue_positions, ul_ue_positions


def _psd_sqrt(cov: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition, with one jitter retry."""
    for jitter in (0.0, 1e-10):
        c = cov + jitter * np.eye(cov.shape[0])
        w, v = np.linalg.eigh(c)
        if w.min() >= -1e-12:
            return (v * np.sqrt(np.maximum(w, 0.0))) @ v.T
    raise CovarianceNotPSD(f"min eigenvalue {w.min():g} after jitter")


def shadow_covariance(cfg: SystemConfig, ue_positions: np.ndarray) -> np.ndarray:
    """Covariance of the per-AP shadowing vector across all UEs.

    Cov(F_mk, F_ml) = std^2 * 2^(-delta_kl / decorrelation distance), using
    the wrap metric for the UE-UE distance delta_kl. UL and DL UEs share one
    joint covariance so cross-set links are correlated the same way.
    """
    d = pairwise_wrap_distances(ue_positions, ue_positions, cfg.area_side)
    return cfg.shadow_std_db**2 * np.power(2.0, -d / cfg.shadow_decorrelation)


def correlated_shadowing(cfg: SystemConfig, ue_positions: np.ndarray,
                         rng: np.random.Generator) -> np.ndarray:
    """AP-to-UE shadowing values in dB, shape (M, num UEs).

    Rows (APs) are independent; within a row the UE entries follow the
    distance-based correlation model.
    """
    k = len(ue_positions)
    if k == 0:
        return np.zeros((cfg.num_aps, 0))
    root = _psd_sqrt(shadow_covariance(cfg, ue_positions))
    z = rng.standard_normal((cfg.num_aps, k))
    return z @ root.T


@dataclass
class NetworkRealization:
    """Node positions and all large-scale (linear) channel gains."""

    ap_positions: np.ndarray   # (M, 2)
    dl_ue_positions: np.ndarray  # (K_d, 2)
    ul_ue_positions: np.ndarray  # (K_u, 2)
    beta_dl: np.ndarray        # (M, K_d)
    beta_ul: np.ndarray        # (M, K_u)
    beta_du: np.ndarray        # (K_d, K_u) UL-UE -> DL-UE gains
    beta_ap: np.ndarray        # (M, M) symmetric, zero diagonal
    shadow_db: np.ndarray      # (M, K_d + K_u) AP-UE shadowing (dB)

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in (
            "ap_positions", "dl_ue_positions", "ul_ue_positions",
            "beta_dl", "beta_ul", "beta_du", "beta_ap", "shadow_db")}

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkRealization":
        return cls(**{k: np.asarray(v, dtype=float) for k, v in d.items()})


def realize_network(cfg: SystemConfig, rng: np.random.Generator) -> NetworkRealization:
    """Generate one network: positions, path loss, shadowing, beta matrices.

    AP-UE shadowing is correlated per the distance model; UE-UE and AP-AP
    shadowing is i.i.d. N(0, std^2).
    """
    ap_pos, dl_pos, ul_pos = place_nodes(cfg, rng)
    m, kd, ku = cfg.num_aps, cfg.num_dl_ues, cfg.num_ul_ues
    side = cfg.area_side

    ue_pos = np.vstack([dl_pos, ul_pos]) if kd + ku else np.zeros((0, 2))
    shadow = correlated_shadowing(cfg, ue_pos, rng)

    pl_ue = path_loss_db(pairwise_wrap_distances(ap_pos, ue_pos, side))
    beta_ue = 10.0 ** ((pl_ue + shadow) / 10.0)
    beta_dl = beta_ue[:, :kd]
    beta_ul = beta_ue[:, kd:]

    shadow_du = rng.standard_normal((kd, ku)) * cfg.shadow_std_db
    pl_du = path_loss_db(pairwise_wrap_distances(dl_pos, ul_pos, side))
    beta_du = 10.0 ** ((pl_du + shadow_du) / 10.0)

    shadow_ap = rng.standard_normal((m, m)) * cfg.shadow_std_db
    shadow_ap = np.triu(shadow_ap, 1)
    shadow_ap = shadow_ap + shadow_ap.T
    pl_ap = path_loss_db(pairwise_wrap_distances(ap_pos, ap_pos, side))
    beta_ap = 10.0 ** ((pl_ap + shadow_ap) / 10.0)
    np.fill_diagonal(beta_ap, 0.0)

    return NetworkRealization(ap_pos, dl_pos, ul_pos, beta_dl, beta_ul,
                              beta_du, beta_ap, shadow)


@dataclass
class ChannelStats:
    """Per-link MMSE channel-estimate variances derived from a realization."""

    gamma_dl: np.ndarray  # (M, K_d)
    gamma_ul: np.ndarray  # (M, K_u)
    net: NetworkRealization


def estimate_variance(beta, tau_t: float, rho_t: float):
    """gamma = tau_t rho_t beta^2 / (tau_t rho_t beta + 1), elementwise."""
    beta = np.asarray(beta, dtype=float)
    s = tau_t * rho_t
    return np.divide(s * beta**2, s * beta + 1.0)


def channel_stats(cfg: SystemConfig, net: NetworkRealization) -> ChannelStats:
    return ChannelStats(
        gamma_dl=estimate_variance(net.beta_dl, cfg.pilot_len, cfg.rho_t),
        gamma_ul=estimate_variance(net.beta_ul, cfg.pilot_len, cfg.rho_t),
        net=net,
    )
