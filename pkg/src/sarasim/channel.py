"""Channel gains, per-slot SINR, and the receiver-side sliding SIR estimator.

Gains are distance^(-alpha) pathloss with optional unit-mean exponential
(Rayleigh power) fading, i.i.d. per link per slot.  Noise is kept in the SINR
denominator by default: it removes the infinite-SIR singularity of an empty
interferer set, turning the interference-free case into a large-but-finite
SNR value.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .geometry import Topology, cross_distances
from .units import dbm_to_watts

__all__ = [
    "FADING_MODES",
    "ChannelParams",
    "pathloss_matrix",
    "sample_gains",
    "save_gains",
    "instantaneous_sinr",
    "SinrEstimator",
]

FADING_MODES = ("off", "rayleigh")


@dataclass(frozen=True)
class ChannelParams:
    """Pathloss exponent, powers (watts) and fading mode.

    Defaults: alpha 4, transmit power 30 dBm, noise floor -70 dBm.  A zero
    noise power gives pure SIR.  ``d_min`` clamps gains of near-colocated
    nodes (a Poisson drop can place points arbitrarily close).
    """

    alpha: float = 4.0
    tx_power: float = dbm_to_watts(30.0)
    noise_power: float = dbm_to_watts(-70.0)
    fading: str = "rayleigh"
    d_min: float = 0.1

    def __post_init__(self) -> None:
        if self.alpha <= 2:
            raise ValueError(
                f"pathloss exponent must exceed 2, got {self.alpha}"
            )
        if self.tx_power <= 0:
            raise ValueError(f"transmit power must be positive, got {self.tx_power}")
        if self.noise_power < 0:
            raise ValueError(
                f"noise power must be non-negative, got {self.noise_power}"
            )
        if self.fading not in FADING_MODES:
            raise ValueError(
                f"fading must be one of {FADING_MODES}, got {self.fading!r}"
            )
        if self.d_min <= 0:
            raise ValueError(f"distance clamp must be positive, got {self.d_min}")


def pathloss_matrix(topology: Topology, params: ChannelParams) -> np.ndarray:
    """(n, n) pathloss gains; entry [u, j] is transmitter u -> receiver of pair j."""
    d = cross_distances(topology.region, topology.tx, topology.rx)
    return np.maximum(d, params.d_min) ** (-params.alpha)


def sample_gains(topology: Topology, params: ChannelParams, seed=None) -> np.ndarray:
    """One slot of channel gains: pathloss times a fresh fading draw per link."""
    g = pathloss_matrix(topology, params)
    if params.fading == "rayleigh":
        rng = np.random.default_rng(seed)
        g = g * rng.standard_exponential(g.shape)
    return g


def save_gains(gains: np.ndarray, path) -> None:
    """Debug dump: one CSV row per link (pair_i, pair_j, gain)."""
    g = np.asarray(gains)
    with open(path, "w") as fh:
        fh.write("pair_i,pair_j,gain\n")
        for i in range(g.shape[0]):
            for j in range(g.shape[1]):
                fh.write(f"{i},{j},{g[i, j]:.6e}\n")


def instantaneous_sinr(i: int, active, gains: np.ndarray, params: ChannelParams) -> float:
    """SINR at receiver i given the set of transmitting pair indices.

    Returns ``math.inf`` when both the interference and the noise power are
    zero (interference-free pure-SIR case).
    """
    active = np.asarray(list(active), dtype=int)
    if i not in active:
        raise ValueError(f"pair {i} must itself transmit to have a SINR")
    signal = gains[i, i] * params.tx_power
    others = active[active != i]
    interference = float(gains[others, i].sum()) * params.tx_power
    denom = interference + params.noise_power
    if denom == 0.0:
        return math.inf
    return signal / denom


class SinrEstimator:
    """Sliding-window arithmetic mean of measured SIR samples.

    Holds at most ``window`` samples; reports no estimate until the first
    sample arrives.
    """

    def __init__(self, window: int):
        if window < 1:
            raise ValueError(f"window must be at least one slot, got {window}")
        self.window = int(window)
        self._samples: deque[float] = deque()

    def update(self, measured_sir: float) -> None:
        if not (measured_sir >= 0.0) or math.isinf(measured_sir):
            raise ValueError(
                f"measured SIR must be finite and non-negative, got {measured_sir}"
            )
        self._samples.append(float(measured_sir))
        if len(self._samples) > self.window:
            self._samples.popleft()

    def extend(self, values) -> None:
        for v in values:
            self.update(v)

    @property
    def n_samples(self) -> int:
        return len(self._samples)

    @property
    def value(self) -> float | None:
        """Current mean, or None while no sample has been seen."""
        if not self._samples:
            return None
        return sum(self._samples) / len(self._samples)
