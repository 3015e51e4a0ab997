"""Joint AP mode assignment and power allocation for virtually-full-duplex
cell-free massive MIMO, with a reproducible Monte Carlo experiment harness."""

from .config import ExperimentConfig, PenaltyConfig, SystemConfig
from .network import ChannelStats, NetworkRealization, channel_stats, realize_network
from .sca import enumerate_modes, run_sca, solve_power_only
from .baselines import hd_baseline, heu_vfd
from .harness import ExperimentSummary, export, percentile, run_experiment
from .se import dl_se, hd_dl_se, hd_ul_se, mc_moment_oracle, ul_se
from .state import RunResult, SEVector, Status

__version__ = "0.1.0"

__all__ = [
    "ChannelStats", "ExperimentConfig", "ExperimentSummary",
    "NetworkRealization", "PenaltyConfig", "RunResult", "SEVector", "Status",
    "SystemConfig", "channel_stats", "dl_se", "enumerate_modes", "export",
    "hd_baseline", "hd_dl_se", "hd_ul_se", "heu_vfd", "mc_moment_oracle",
    "percentile", "realize_network", "run_experiment", "run_sca",
    "solve_power_only", "ul_se",
]
