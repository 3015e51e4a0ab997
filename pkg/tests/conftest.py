"""Shared fixtures and instance builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from vfdcf.config import PenaltyConfig, SystemConfig
from vfdcf.network import channel_stats, realize_network


def make_system(num_aps=3, num_dl_ues=2, num_ul_ues=2, **overrides):
    """Small instance with the reference scalar parameters."""
    return SystemConfig.paper_profile(num_aps=num_aps, num_dl_ues=num_dl_ues,
                                      num_ul_ues=num_ul_ues, **overrides)


def make_instance(seed, num_aps=3, num_dl_ues=2, num_ul_ues=2, **overrides):
    """(cfg, stats, net) for one seeded network realization."""
    cfg = make_system(num_aps, num_dl_ues, num_ul_ues, **overrides)
    rng = np.random.default_rng(seed)
    net = realize_network(cfg, rng)
    stats = channel_stats(cfg, net)
    return cfg, stats, net


@pytest.fixture
def small_instance():
    return make_instance(seed=0)


@pytest.fixture
def fast_penalty():
    """Fewer restarts to keep solver-heavy tests quick."""
    return PenaltyConfig(num_starts=1)
