"""Closed-form spectral efficiencies and the Monte-Carlo moment oracle.

All SEs are in bit/s/Hz with the payload prefactor (tau_c - tau_t)/tau_c.
Convention: when the desired-signal sum is zero the SE is defined as 0,
which also covers the degenerate 0/0 case of an empty receiving mode set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .errors import ShapeMismatch
from .network import ChannelStats, NetworkRealization


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise ShapeMismatch(msg)


def _se_from_sinr(num, den, prefactor):
    num = np.asarray(num, dtype=float)
    se = np.zeros_like(num)
    pos = num > 0
    se[pos] = prefactor * np.log2(1.0 + num[pos] / np.asarray(den)[pos])
    return se


def dl_signal_interference(cfg: SystemConfig, stats: ChannelStats,
                           theta: np.ndarray, varsigma_tilde: np.ndarray,
                           include_ul_interference: bool = True):
    """(Xi_k, Omega_k): DL desired amplitude and total interference+noise."""
    net = stats.net
    g = stats.gamma_dl
    n = cfg.antennas_per_ap
    _check(theta.shape == g.shape, "theta must be (M, K_d)")
    _check(varsigma_tilde.shape == (cfg.num_ul_ues,), "varsigma_tilde must be (K_u,)")

    xi = n * np.sqrt(cfg.rho_d) * np.sum(theta * g, axis=0)  # (K_d,)
    # per-AP total precoding power Sum_k' theta_mk'^2 gamma_mk'
    per_ap = np.sum(theta**2 * g, axis=1)                    # (M,)
    omega = cfg.rho_d * n * (net.beta_dl.T @ per_ap)         # (K_d,)
    if include_ul_interference and cfg.num_ul_ues:
        omega = omega + cfg.rho_u * (net.beta_du @ varsigma_tilde)
    return xi, omega + 1.0


def dl_se(cfg: SystemConfig, stats: ChannelStats, theta: np.ndarray,
          varsigma_tilde: np.ndarray) -> np.ndarray:
    """Per-DL-UE closed-form SE under maximum-ratio precoding."""
    xi, omega = dl_signal_interference(cfg, stats, theta, varsigma_tilde)
    return _se_from_sinr(xi**2, omega, cfg.prefactor)


def ul_psi_phi(cfg: SystemConfig, stats: ChannelStats, net: NetworkRealization,
               b: np.ndarray, varsigma: np.ndarray, eta_tilde: np.ndarray):
    """(Psi_l, Phi_l): UL desired amplitude and interference+noise.

    eta_tilde has shape (M, M, K_d), indexed [i, m, k]: the DL power of AP i
    toward DL UE k as seen by (coupled with the mode of) UL-side AP m.
    """
    g_ul = stats.gamma_ul
    m, ku = g_ul.shape
    kd = cfg.num_dl_ues
    n = cfg.antennas_per_ap
    _check(b.shape == (m,), "b must be (M,)")
    _check(varsigma.shape == (m, ku), "varsigma must be (M, K_u)")
    _check(eta_tilde.shape == (m, m, kd), "eta_tilde must be (M, M, K_d)")

    psi = np.sqrt(n * cfg.rho_u) * np.sum(varsigma * g_ul, axis=0)  # (K_u,)

    # UL-UE interference: Sum_m beta_ml Sum_q varsigma_mq^2 gamma_mq
    per_ap_ul = np.sum(varsigma**2 * g_ul, axis=1)                  # (M,)
    phi = cfg.rho_u * (net.beta_ul.T @ per_ap_ul)                   # (K_u,)

    # AP-AP cross-link: Sum_m gamma_ml Sum_i Sum_k eta_tilde_imk beta_ap_mi gamma_ik
    if kd:
        dl_power = np.sum(eta_tilde * stats.gamma_dl[:, None, :], axis=2)  # (M_i, M_m)
        cross_per_ap = np.einsum("mi,im->m", net.beta_ap, dl_power)        # (M_m,)
        phi = phi + cfg.rho_d * n * (g_ul.T @ cross_per_ap)

    phi = phi + g_ul.T @ b  # effective noise at listening APs
    return psi, phi


def ul_se(cfg: SystemConfig, stats: ChannelStats, net: NetworkRealization,
          b: np.ndarray, varsigma: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """Per-UL-UE closed-form SE with matched-filter combining at the CPU."""
    _check(eta.shape == (cfg.num_aps, cfg.num_dl_ues), "eta must be (M, K_d)")
    eta_tilde = b[None, :, None] * eta[:, None, :]
    psi, phi = ul_psi_phi(cfg, stats, net, b, varsigma, eta_tilde)
    return _se_from_sinr(psi**2, phi, cfg.prefactor)


def ul_se_lower(cfg: SystemConfig, stats: ChannelStats, net: NetworkRealization,
                b: np.ndarray, varsigma: np.ndarray,
                eta_tilde: np.ndarray) -> np.ndarray:
    """UL SE lower bound with eta_tilde replacing b_m * eta_ik.

    Equals ul_se exactly when eta_tilde_imk = b_m eta_ik; never exceeds it
    when eta_tilde_imk >= b_m eta_ik.
    """
    psi, phi = ul_psi_phi(cfg, stats, net, b, varsigma, eta_tilde)
    return _se_from_sinr(psi**2, phi, cfg.prefactor)


def hd_dl_se(cfg: SystemConfig, stats: ChannelStats, theta: np.ndarray) -> np.ndarray:
    """DL SE of the half-duplex baseline: half time fraction, no UL UEs active."""
    zero_ul = np.zeros(cfg.num_ul_ues)
    xi, omega = dl_signal_interference(cfg, stats, theta, zero_ul,
                                       include_ul_interference=False)
    return _se_from_sinr(xi**2, omega, cfg.prefactor / 2.0)


def hd_ul_se(cfg: SystemConfig, stats: ChannelStats,
             varsigma_tilde: np.ndarray) -> np.ndarray:
    """UL SE of the half-duplex baseline: all APs listen, no DL transmissions."""
    _check(varsigma_tilde.shape == (cfg.num_ul_ues,), "varsigma_tilde must be (K_u,)")
    net = stats.net
    g = stats.gamma_ul
    m = cfg.num_aps
    varsigma = np.broadcast_to(np.sqrt(varsigma_tilde), (m, cfg.num_ul_ues))
    psi = np.sqrt(cfg.antennas_per_ap * cfg.rho_u) * np.sum(varsigma * g, axis=0)
    per_ap = np.sum(varsigma**2 * g, axis=1)
    phi = cfg.rho_u * (net.beta_ul.T @ per_ap) + np.sum(g, axis=0)
    return _se_from_sinr(psi**2, phi, cfg.prefactor / 2.0)


@dataclass
class MomentCheck:
    """Closed-form moment vs. its Monte-Carlo estimate."""

    name: str
    indices: tuple
    expected: float
    estimate: float
    std_err: float

    @property
    def rel_err(self) -> float:
        return abs(self.estimate - self.expected) / self.expected if self.expected else 0.0

    @property
    def z_score(self) -> float:
        return abs(self.estimate - self.expected) / self.std_err if self.std_err else 0.0


def _draw_links(rng, beta, gamma, n, draws):
    """Draw (channel, estimate) pairs: g = g_hat + error, per link."""
    shape = beta.shape + (n,)
    scale_hat = np.sqrt(np.maximum(gamma, 0.0) / 2.0)[..., None]
    scale_err = np.sqrt(np.maximum(beta - gamma, 0.0) / 2.0)[..., None]
    g_hat = scale_hat * (rng.standard_normal((draws,) + shape)
                         + 1j * rng.standard_normal((draws,) + shape))
    err = scale_err * (rng.standard_normal((draws,) + shape)
                       + 1j * rng.standard_normal((draws,) + shape))
    return g_hat + err, g_hat


def _moment_stats(samples: np.ndarray):
    est = float(np.mean(samples))
    std_err = float(np.std(samples, ddof=1) / np.sqrt(len(samples)))
    return est, std_err


def mc_moment_oracle(cfg: SystemConfig, stats: ChannelStats,
                     net: NetworkRealization, num_draws: int,
                     rng: np.random.Generator | None = None) -> list[MomentCheck]:
    """Empirically validate the channel moments behind the closed-form SEs.

    Checks, per link: the desired-signal mean E{g^T ghat^*} = N gamma; the
    beamforming-gain second moments E{|g_mk^T ghat_mk'^*|^2} = N beta gamma'
    (+ N^2 gamma^2 when k' = k); and the AP-AP cross-link second moment
    E{|ghat_ul^dag Z ghat_dl^*|^2} = N^2 beta_ap gamma_ul gamma_dl.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    n = cfg.antennas_per_ap
    report: list[MomentCheck] = []

    for side, beta, gamma in (("dl", net.beta_dl, stats.gamma_dl),
                              ("ul", net.beta_ul, stats.gamma_ul)):
        if beta.size == 0:
            continue
        g, g_hat = _draw_links(rng, beta, gamma, n, num_draws)
        # desired-signal mean, real part (imaginary part has zero mean)
        inner = np.sum(g * np.conj(g_hat), axis=-1)  # (draws, M, K)
        for m in range(beta.shape[0]):
            for k in range(beta.shape[1]):
                est, se_ = _moment_stats(inner[:, m, k].real)
                report.append(MomentCheck(f"{side}_desired_mean", (m, k),
                                          n * gamma[m, k], est, se_))
        # second moments across served-UE pairs at the same AP
        for m in range(beta.shape[0]):
            for k in range(beta.shape[1]):
                for kp in range(beta.shape[1]):
                    x = np.abs(np.sum(g[:, m, k] * np.conj(g_hat[:, m, kp]),
                                      axis=-1))**2
                    expected = n * beta[m, k] * gamma[m, kp]
                    if kp == k:
                        expected += n**2 * gamma[m, k]**2
                    est, se_ = _moment_stats(x)
                    report.append(MomentCheck(f"{side}_interference_sq", (m, k, kp),
                                              expected, est, se_))

    # AP-AP cross-link term; skip m == i (zero gain) and zero-size UE sets
    if cfg.num_dl_ues and cfg.num_ul_ues:
        g_ul, ghat_ul = _draw_links(rng, net.beta_ul, stats.gamma_ul, n, num_draws)
        g_dl, ghat_dl = _draw_links(rng, net.beta_dl, stats.gamma_dl, n, num_draws)
        for m in range(cfg.num_aps):
            for i in range(cfg.num_aps):
                if i == m:
                    continue
                scale = np.sqrt(net.beta_ap[m, i] / 2.0)
                z = scale * (rng.standard_normal((num_draws, n, n))
                             + 1j * rng.standard_normal((num_draws, n, n)))
                for ell in range(cfg.num_ul_ues):
                    for k in range(cfg.num_dl_ues):
                        v = np.einsum("dn,dnp,dp->d",
                                      np.conj(ghat_ul[:, m, ell]), z,
                                      np.conj(ghat_dl[:, i, k]))
                        expected = (n**2 * net.beta_ap[m, i]
                                    * stats.gamma_ul[m, ell] * stats.gamma_dl[i, k])
                        est, se_ = _moment_stats(np.abs(v)**2)
                        report.append(MomentCheck("cross_ap_sq", (m, i, ell, k),
                                                  expected, est, se_))
    return report
