"""Configuration dataclasses and the default parameter profiles."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

# Noise power: k_B * T0 * B * F with B = 20 MHz and a 9 dB noise figure.
NOISE_POWER_DBM = -92.0

# Default transmit powers (watts).
AP_POWER_W = 1.0
UE_POWER_W = 0.2
PILOT_POWER_W = 0.2


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass
class SystemConfig:
    """Scalar parameters of one network scenario.

    Powers are normalized: rho = transmit watts / noise watts.
    """

    num_aps: int
    antennas_per_ap: int
    num_dl_ues: int
    num_ul_ues: int
    coherence_len: int
    pilot_len: int
    rho_t: float
    rho_d: float
    rho_u: float
    se_target_dl: float = 0.2
    se_target_ul: float = 0.2
    area_side: float = 1000.0
    min_ap_spacing: float = 50.0
    shadow_std_db: float = 4.0
    shadow_decorrelation: float = 9.0
    noise_power_dbm: float = NOISE_POWER_DBM
    # Optional override for the QoS target applied to the half-duplex
    # baseline's half-rate SEs; defaults to the vFD targets.
    hd_se_target_dl: float | None = None
    hd_se_target_ul: float | None = None

    def __post_init__(self):
        if self.num_aps < 1 or self.antennas_per_ap < 1:
            raise ValueError("need at least one AP and one antenna")
        if self.num_dl_ues < 0 or self.num_ul_ues < 0:
            raise ValueError("UE counts must be nonnegative")
        if self.pilot_len < self.num_dl_ues + self.num_ul_ues:
            raise ValueError("pilot_len must cover K_u + K_d orthogonal pilots")
        if self.pilot_len >= self.coherence_len:
            raise ValueError("pilot_len must be shorter than the coherence block")
        if min(self.rho_t, self.rho_d, self.rho_u) <= 0:
            raise ValueError("normalized powers must be positive")

    @property
    def prefactor(self) -> float:
        """Payload fraction of the coherence block."""
        return (self.coherence_len - self.pilot_len) / self.coherence_len

    @property
    def hd_target_dl(self) -> float:
        return self.se_target_dl if self.hd_se_target_dl is None else self.hd_se_target_dl

    @property
    def hd_target_ul(self) -> float:
        return self.se_target_ul if self.hd_se_target_ul is None else self.hd_se_target_ul

    @classmethod
    def paper_profile(cls, num_aps: int = 30, num_dl_ues: int = 5,
                      num_ul_ues: int = 5, **overrides) -> "SystemConfig":
        """Parameters of the reference numerical setup (M=30, K_d=K_u=5)."""
        noise_w = dbm_to_watts(NOISE_POWER_DBM)
        kwargs = dict(
            num_aps=num_aps,
            antennas_per_ap=2,
            num_dl_ues=num_dl_ues,
            num_ul_ues=num_ul_ues,
            coherence_len=200,
            pilot_len=num_dl_ues + num_ul_ues,
            rho_t=PILOT_POWER_W / noise_w,
            rho_d=AP_POWER_W / noise_w,
            rho_u=UE_POWER_W / noise_w,
        )
        kwargs.update(overrides)
        return cls(**kwargs)

    @classmethod
    def desk_profile(cls, **overrides) -> "SystemConfig":
        """Reduced scale for fast runs: M=10, K_d=K_u=2."""
        return cls.paper_profile(num_aps=10, num_dl_ues=2, num_ul_ues=2,
                                 **overrides)


@dataclass
class PenaltyConfig:
    """Penalty weights and stopping thresholds of the SCA loop."""

    lam: float = 1.0
    mu1: float = 0.1
    mu2: float = 0.1
    mu3: float = 100.0
    epsilon_penalty: float = 1e-3
    epsilon_conv: float = 1e-3
    max_outer_iters: int = 200
    max_feasibility_iters: int = 20
    # independent random restarts of the joint loop; best converged kept
    num_starts: int = 4

    def __post_init__(self):
        if min(self.lam, self.mu1, self.mu2, self.mu3,
               self.epsilon_penalty, self.epsilon_conv) <= 0:
            raise ValueError("penalty parameters must be positive")
        if self.num_starts < 1:
            raise ValueError("num_starts must be >= 1")


VALID_SCHEMES = ("vfd", "heu", "hd")


@dataclass
class ExperimentConfig:
    """Monte Carlo experiment description consumed by the harness."""

    system: SystemConfig
    schemes: list[str] = field(default_factory=lambda: list(VALID_SCHEMES))
    realizations: int = 20
    base_seed: int = 1
    parallelism: int = 1
    output_dir: str = "out"
    penalty: PenaltyConfig = field(default_factory=PenaltyConfig)

    def __post_init__(self):
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if not self.schemes:
            raise ValueError("at least one scheme must be selected")
        for s in self.schemes:
            if s not in VALID_SCHEMES:
                raise ValueError(f"unknown scheme {s!r}; valid: {VALID_SCHEMES}")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        system = d.pop("system", None)
        if system is None:
            raise ValueError("config must contain a 'system' section")
        penalty = d.pop("penalty", None)
        return cls(
            system=SystemConfig(**system),
            penalty=PenaltyConfig(**penalty) if penalty else PenaltyConfig(),
            **d,
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def to_json(self, path: str | Path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")
