"""Per-slot medium-access policies behind one interface.

Six schemes: fixed-probability ALOHA, ALOHA at the analytic optimum,
neighbour-count ALOHA (1/N), the SIR-adaptive scheme, and carrier sensing
with fixed or adaptive range.  A policy owns the per-pair state for one
simulation run; each slot it produces a transmit decision per pair, and
adaptive schemes revise their state once per measurement window.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import aloha
from .channel import ChannelParams, SinrEstimator
from .geometry import Topology, cross_distances

__all__ = [
    "POLICY_KINDS",
    "Feedback",
    "PolicySpec",
    "Policy",
    "AlohaPolicy",
    "SaraPolicy",
    "CsmaPolicy",
    "CsmaAdaptivePolicy",
    "sara_phi_update",
    "neighbor_count_phi",
    "adaptive_sensing_range",
    "make_policy",
]

POLICY_KINDS = (
    "fixed_aloha",
    "optimal_aloha",
    "neighbor_aloha",
    "sara",
    "csma_fixed",
    "csma_adaptive",
)


@dataclass(frozen=True)
class Feedback:
    """Per-slot outcome delivered to a transmitter: ACK/NACK plus measured SIR."""

    transmitted: bool
    success: bool
    measured_sir: float | None = None

    def __post_init__(self) -> None:
        if self.success and not self.transmitted:
            raise ValueError("a pair cannot succeed without transmitting")
        if (self.measured_sir is not None) != self.transmitted:
            raise ValueError("measured SIR must be present exactly when transmitting")


@dataclass
class PolicySpec:
    """Configuration-level description of a policy: kind plus its parameters."""

    kind: str
    phi: float | None = None        # fixed_aloha probability (scalar or per-pair)
    phi_min: float = 0.01           # adaptive-scheme bounds
    phi_max: float = 1.0
    window: int = 100               # measurement/adaptation period, slots
    radius: float = 10.0            # neighbor_aloha counting radius, m
    r_cs: float = 10.0              # csma_fixed sensing range, m
    r_b: float = 10.0               # csma_adaptive base sensing range, m
    phi_access: float = 1.0         # csma access-intent probability

    def __post_init__(self) -> None:
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"scheme must be one of {POLICY_KINDS}, got {self.kind!r}")
        if self.kind == "fixed_aloha":
            vals = np.atleast_1d(np.asarray(self.phi, dtype=float) if self.phi is not None else np.nan)
            if np.isnan(vals).any() or vals.min() <= 0.0 or vals.max() > 1.0:
                raise ValueError(
                    f"fixed_aloha needs transmit probabilities in (0, 1], got {self.phi}"
                )
        if not (0.0 < self.phi_min <= self.phi_max <= 1.0):
            raise ValueError(
                f"need 0 < phi_min <= phi_max <= 1, got ({self.phi_min}, {self.phi_max})"
            )
        if self.window < 1:
            raise ValueError(f"window must be at least one slot, got {self.window}")
        if self.radius <= 0 or self.r_cs <= 0 or self.r_b <= 0:
            raise ValueError("sensing/counting ranges must be positive")
        if not (0.0 < self.phi_access <= 1.0):
            raise ValueError(
                f"access-intent probability must lie in (0, 1], got {self.phi_access}"
            )


class Policy:
    """Base interface: per-slot decisions plus adaptation hooks."""

    name = "policy"
    adaptive = False
    window: int | None = None

    def __init__(self, n_pairs: int):
        self.n_pairs = int(n_pairs)

    @property
    def phi(self) -> np.ndarray:
        """Current per-pair transmit (or access-intent) probability."""
        raise NotImplementedError

    def decide_block(self, n_slots: int, rng: np.random.Generator) -> np.ndarray:
        """(n_slots, n_pairs) transmit decisions."""
        raise NotImplementedError

    def observe_block(self, transmitted: np.ndarray, success: np.ndarray, sinr: np.ndarray) -> None:
        """Feedback for a block of slots; sinr is NaN where a pair stayed silent."""

    def end_window(self) -> None:
        """Adaptation hook, invoked once per completed measurement window."""


class AlohaPolicy(Policy):
    """Independent per-pair Bernoulli transmissions."""

    name = "fixed_aloha"

    def __init__(self, n_pairs: int, phi):
        super().__init__(n_pairs)
        self._phi = np.broadcast_to(np.asarray(phi, dtype=float), (n_pairs,)).copy()
        if len(self._phi) and (self._phi.min() <= 0.0 or self._phi.max() > 1.0):
            raise ValueError("transmit probabilities must lie in (0, 1]")

    @property
    def phi(self) -> np.ndarray:
        return self._phi

    def decide_block(self, n_slots: int, rng: np.random.Generator) -> np.ndarray:
        return rng.random((n_slots, self.n_pairs)) < self._phi


def sara_phi_update(gamma: float, beta: float, phi_min: float, phi_max: float) -> float:
    """New transmit probability: the SIR-to-target ratio boxed into the bounds."""
    if gamma < 0:
        raise ValueError(f"average SIR must be non-negative, got {gamma}")
    return min(max(phi_min, gamma / beta), phi_max)


class SaraPolicy(AlohaPolicy):
    """SIR-adaptive ALOHA: start at phi_max, average measured SIR over each
    window, then set phi to the clamped ratio against the target.

    Samples are collected only on slots where the pair itself transmits; a
    pair with no estimate yet keeps its probability.
    """

    name = "sara"
    adaptive = True

    def __init__(self, n_pairs: int, beta: float, phi_min: float = 0.01,
                 phi_max: float = 1.0, window: int = 100):
        super().__init__(n_pairs, np.full(n_pairs, phi_max))
        if not (0.0 < phi_min <= phi_max <= 1.0):
            raise ValueError(
                f"need 0 < phi_min <= phi_max <= 1, got ({phi_min}, {phi_max})"
            )
        self.beta = float(beta)
        self.phi_min = float(phi_min)
        self.phi_max = float(phi_max)
        self.window = int(window)
        self._estimators = [SinrEstimator(window) for _ in range(n_pairs)]

    def observe_block(self, transmitted, success, sinr) -> None:
        for i in range(self.n_pairs):
            samples = sinr[transmitted[:, i], i]
            if len(samples):
                self._estimators[i].extend(samples)

    def end_window(self) -> None:
        for i, est in enumerate(self._estimators):
            gamma = est.value
            if gamma is not None:
                self._phi[i] = sara_phi_update(gamma, self.beta, self.phi_min, self.phi_max)


def neighbor_count_phi(topology: Topology, i: int, radius: float) -> float:
    """1/N with N the transmitters within ``radius`` of transmitter i, itself included."""
    if radius <= 0:
        raise ValueError(f"counting radius must be positive, got {radius}")
    d = cross_distances(topology.region, topology.tx[i : i + 1], topology.tx)[0]
    return 1.0 / int((d <= radius).sum())


def adaptive_sensing_range(n_neighbors, r_b: float, alpha: float):
    """n^(1/alpha) * r_b; zero when there is nothing to defer to."""
    n = np.asarray(n_neighbors, dtype=float)
    if np.any(n < 0):
        raise ValueError("neighbour count must be non-negative")
    out = np.where(n > 0, n ** (1.0 / alpha) * r_b, 0.0)
    return float(out) if out.ndim == 0 else out


class CsmaPolicy(Policy):
    """Slotted carrier sensing: intend with probability phi_access, then defer
    to any higher-priority intender inside the own sensing range.

    Priorities are drawn fresh per slot, which resolves contention without a
    backoff state machine; survivors of the deferral rule transmit, so no two
    simultaneous transmitters ever lie within each other's sensing range.
    """

    name = "csma_fixed"

    def __init__(self, topology: Topology, ranges, phi_access: float = 1.0):
        super().__init__(topology.n_pairs)
        self.phi_access = float(phi_access)
        self._tx_dist = cross_distances(topology.region, topology.tx, topology.tx)
        self._rx_tx_dist = cross_distances(topology.region, topology.rx, topology.tx)
        self.ranges = np.broadcast_to(
            np.asarray(ranges, dtype=float), (self.n_pairs,)
        ).copy()
        self._rebuild_edges()

    def _rebuild_edges(self) -> None:
        if self.n_pairs == 0:
            self._edge_dst = np.empty(0, dtype=int)
            self._edge_src = np.empty(0, dtype=int)
            return
        within = self._tx_dist <= self.ranges[:, None]
        np.fill_diagonal(within, False)
        self._edge_dst, self._edge_src = np.nonzero(within)

    @property
    def phi(self) -> np.ndarray:
        return np.full(self.n_pairs, self.phi_access)

    def decide_block(self, n_slots: int, rng: np.random.Generator) -> np.ndarray:
        n = self.n_pairs
        out = np.empty((n_slots, n), dtype=bool)
        for s in range(n_slots):
            intend = rng.random(n) < self.phi_access
            priority = rng.random(n)
            blocked = intend[self._edge_src] & (
                priority[self._edge_src] > priority[self._edge_dst]
            )
            defer = np.bincount(self._edge_dst[blocked], minlength=n) > 0
            out[s] = intend & ~defer
        return out


class CsmaAdaptivePolicy(CsmaPolicy):
    """Carrier sensing whose range tracks the local transmitter count.

    Each window the receiver counts other transmitters inside its current
    sensing range and rescales the range as count^(1/alpha) times the base;
    an empty neighbourhood collapses the range to zero.
    """

    name = "csma_adaptive"
    adaptive = True

    def __init__(self, topology: Topology, r_b: float, alpha: float,
                 window: int = 100, phi_access: float = 1.0):
        super().__init__(topology, np.full(topology.n_pairs, r_b), phi_access)
        self.r_b = float(r_b)
        self.alpha = float(alpha)
        self.window = int(window)

    def end_window(self) -> None:
        if self.n_pairs == 0:
            return
        within = self._rx_tx_dist <= self.ranges[:, None]
        np.fill_diagonal(within, False)
        counts = within.sum(axis=1)
        self.ranges = adaptive_sensing_range(counts, self.r_b, self.alpha)
        self._rebuild_edges()


def make_policy(
    spec: PolicySpec,
    topology: Topology,
    channel: ChannelParams,
    beta: float,
    lam: float,
) -> Policy:
    """Instantiate and initialise a policy for one run on one topology."""
    n = topology.n_pairs
    if spec.kind == "fixed_aloha":
        policy = AlohaPolicy(n, spec.phi)
    elif spec.kind == "optimal_aloha":
        params = aloha.AlohaParams(lam=lam, r_t=topology.r_t, beta=beta, alpha=channel.alpha)
        policy = AlohaPolicy(n, aloha.optimal_phi(params))
        policy.name = "optimal_aloha"
    elif spec.kind == "neighbor_aloha":
        phis = np.array([neighbor_count_phi(topology, i, spec.radius) for i in range(n)])
        policy = AlohaPolicy(n, phis if n else np.empty(0))
        policy.name = "neighbor_aloha"
    elif spec.kind == "sara":
        policy = SaraPolicy(n, beta, spec.phi_min, spec.phi_max, spec.window)
    elif spec.kind == "csma_fixed":
        policy = CsmaPolicy(topology, spec.r_cs, spec.phi_access)
    elif spec.kind == "csma_adaptive":
        policy = CsmaAdaptivePolicy(
            topology, spec.r_b, channel.alpha, spec.window, spec.phi_access
        )
    else:  # pragma: no cover - PolicySpec already validates
        raise ValueError(f"unknown scheme {spec.kind!r}")
    return policy
