"""Exact combinatorial oracles for the slotted random-access model.

For n pairs, every quantity the adaptive policy estimates from measurements
can be evaluated exactly by enumerating all 2^(n-1) interferer subsets per
pair: subset probabilities, conditional average SIR, expected success counts,
the probability-update map, and its fixed points.  Subset SIR values are the
fading-off (pure pathloss) evaluations, which makes oracle-versus-simulation
comparisons exact rather than distributional.

Enumeration cost is n * 2^(n-1) SIR evaluations; a hard guard rejects n > 20.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .channel import ChannelParams, pathloss_matrix
from .geometry import Topology

__all__ = [
    "MAX_ENUM_PAIRS",
    "EnumerationLimitError",
    "ProbVector",
    "SubsetSinrTable",
    "subset_probability",
    "conditional_avg_sinr",
    "interference_function",
    "interference_map",
    "clamped_interference_map",
    "expected_success_count",
    "utility_value",
    "FixedPointResult",
    "fixed_point_iterate",
    "AxiomReport",
    "check_axioms",
]

MAX_ENUM_PAIRS = 20


class EnumerationLimitError(ValueError):
    """Raised when a subset enumeration would exceed the n <= 20 guard."""


@dataclass
class ProbVector:
    """Per-transmitter probabilities with box constraints [phi_min, phi_max]."""

    phi: np.ndarray
    phi_min: float = 0.01
    phi_max: float = 1.0

    def __post_init__(self) -> None:
        self.phi = np.asarray(self.phi, dtype=float).reshape(-1).copy()
        if not (0.0 < self.phi_min <= self.phi_max <= 1.0):
            raise ValueError(
                f"need 0 < phi_min <= phi_max <= 1, got ({self.phi_min}, {self.phi_max})"
            )
        if len(self.phi) and (
            self.phi.min() < self.phi_min - 1e-12 or self.phi.max() > self.phi_max + 1e-12
        ):
            raise ValueError(
                f"probabilities must lie in [{self.phi_min}, {self.phi_max}], "
                f"got range [{self.phi.min()}, {self.phi.max()}]"
            )
        self.phi = np.clip(self.phi, self.phi_min, self.phi_max)

    @property
    def n(self) -> int:
        return len(self.phi)

    def clamp(self, values):
        return np.clip(values, self.phi_min, self.phi_max)

    def with_phi(self, phi) -> "ProbVector":
        return replace(self, phi=np.asarray(phi, dtype=float))


@dataclass
class SubsetSinrTable:
    """Fading-off SIR of every interferer subset, for every pair.

    ``gamma[i, j]`` is the SIR at receiver i when exactly the subset encoded
    by bitmask j over ``others[i]`` transmits alongside pair i.  The noise
    power enters the denominator, so the empty subset carries the finite SNR
    proxy; building with zero noise yields +inf there.
    """

    gamma: np.ndarray
    others: np.ndarray
    n: int = field(init=False)

    def __post_init__(self) -> None:
        self.gamma = np.asarray(self.gamma, dtype=float)
        self.others = np.asarray(self.others, dtype=int)
        self.n = self.gamma.shape[0]
        if self.gamma.shape != (self.n, 2 ** max(self.n - 1, 0)):
            raise ValueError(f"gamma has wrong shape {self.gamma.shape} for n={self.n}")

    @classmethod
    def build(cls, topology: Topology, params: ChannelParams) -> "SubsetSinrTable":
        n = topology.n_pairs
        if n > MAX_ENUM_PAIRS:
            raise EnumerationLimitError(
                f"subset enumeration is limited to {MAX_ENUM_PAIRS} pairs, got {n}"
            )
        recv_power = pathloss_matrix(topology, params) * params.tx_power
        masks = subset_masks(n - 1)
        gamma = np.empty((n, 2 ** max(n - 1, 0)))
        others = np.empty((n, max(n - 1, 0)), dtype=int)
        for i in range(n):
            others_i = np.array([u for u in range(n) if u != i], dtype=int)
            others[i] = others_i
            interference = masks @ recv_power[others_i, i]
            with np.errstate(divide="ignore"):
                gamma[i] = recv_power[i, i] / (interference + params.noise_power)
        return cls(gamma=gamma, others=others)


def subset_masks(n_bits: int) -> np.ndarray:
    """(2^n_bits, n_bits) matrix of subset membership bits; bit b <-> others[b]."""
    idx = np.arange(2 ** max(n_bits, 0))
    return ((idx[:, None] >> np.arange(max(n_bits, 0))) & 1).astype(float)


def _subset_weights(phi: np.ndarray, others_i: np.ndarray) -> np.ndarray:
    """Probability of every interferer subset of pair i, indexed by bitmask.

    Built by doubling: appending transmitter u splits each existing weight
    into an inactive (1-phi_u) and an active (phi_u) branch, so bit b of the
    subset index corresponds to others_i[b].  The weights sum to one exactly
    for any phi (binomial expansion).
    """
    w = np.ones(1)
    for u in others_i:
        w = np.concatenate([w * (1.0 - phi[u]), w * phi[u]])
    return w


def subset_probability(i: int, subset, pv: ProbVector) -> float:
    """Probability that exactly ``subset`` of the other pairs transmit."""
    subset = set(int(u) for u in subset)
    if i in subset:
        raise ValueError(f"pair {i} cannot appear in its own interferer subset")
    n = pv.n
    if not subset <= set(range(n)):
        raise ValueError(f"subset {sorted(subset)} contains unknown pair indices")
    prob = 1.0
    for m in range(n):
        if m == i:
            continue
        prob *= pv.phi[m] if m in subset else 1.0 - pv.phi[m]
    return prob


def conditional_avg_sinr(i: int, table: SubsetSinrTable, pv: ProbVector) -> float:
    """Average SIR at receiver i over the other pairs' transmit randomness."""
    w = _subset_weights(pv.phi, table.others[i])
    return float(w @ table.gamma[i])


def interference_function(pv: ProbVector, table: SubsetSinrTable, beta: float, i: int) -> float:
    """Unclamped update value for pair i: conditional average SIR over beta."""
    return conditional_avg_sinr(i, table, pv) / beta


def interference_map(pv: ProbVector, table: SubsetSinrTable, beta: float) -> np.ndarray:
    """Unclamped update values for every pair."""
    return np.array(
        [conditional_avg_sinr(i, table, pv) for i in range(table.n)]
    ) / beta


def clamped_interference_map(pv: ProbVector, table: SubsetSinrTable, beta: float) -> np.ndarray:
    """The update actually iterated: the unclamped map boxed into [phi_min, phi_max]."""
    return pv.clamp(interference_map(pv, table, beta))


def expected_success_count(
    topology: Topology, params: ChannelParams, pv: ProbVector, beta: float
) -> float:
    """Exact expected number of pairs that transmit and meet the threshold.

    Sum over pairs of phi_i times the probability mass of interferer subsets
    whose fading-off SIR is at least beta (a pair must itself transmit to
    succeed).  Requires fading off so that per-subset SIR is deterministic.
    """
    if params.fading != "off":
        raise ValueError("exact success counting requires fading off")
    if topology.n_pairs != pv.n:
        raise ValueError(
            f"probability vector has {pv.n} entries for {topology.n_pairs} pairs"
        )
    if topology.n_pairs == 0:
        return 0.0
    table = SubsetSinrTable.build(topology, params)
    total = 0.0
    for i in range(table.n):
        w = _subset_weights(pv.phi, table.others[i])
        total += pv.phi[i] * float(w @ (table.gamma[i] >= beta))
    return total


def utility_value(i: int, pv: ProbVector, table: SubsetSinrTable, beta: float) -> float:
    """Reward-minus-cost utility: clamp(Gamma/beta) * phi_i - phi_i^2 / 2."""
    c = float(pv.clamp(interference_function(pv, table, beta, i)))
    return c * pv.phi[i] - 0.5 * pv.phi[i] ** 2


@dataclass
class FixedPointResult:
    phi: np.ndarray
    trajectory: np.ndarray
    converged: bool
    iterations: int
    residual: float


def fixed_point_iterate(
    table: SubsetSinrTable,
    beta: float,
    pv0: ProbVector,
    tol: float = 1e-6,
    max_iter: int = 10_000,
) -> FixedPointResult:
    """Synchronously apply the clamped update map until the sup-norm step
    falls below ``tol``.

    All coordinates update together from the previous iterate (slotted-time
    semantics).  Non-convergence within ``max_iter`` is reported as an
    outcome, not raised: the map is not guaranteed contractive and tightly
    coupled pairs can lock into period-two cycles.
    """
    pv = pv0.with_phi(pv0.clamp(pv0.phi))
    trajectory = [pv.phi.copy()]
    residual = np.inf
    for it in range(1, max_iter + 1):
        nxt = clamped_interference_map(pv, table, beta)
        residual = float(np.max(np.abs(nxt - pv.phi))) if len(nxt) else 0.0
        pv = pv.with_phi(nxt)
        trajectory.append(pv.phi.copy())
        if residual < tol:
            return FixedPointResult(
                phi=pv.phi, trajectory=np.asarray(trajectory), converged=True,
                iterations=it, residual=residual,
            )
    return FixedPointResult(
        phi=pv.phi, trajectory=np.asarray(trajectory), converged=False,
        iterations=max_iter, residual=residual,
    )


@dataclass
class AxiomReport:
    """Outcome counts of randomized interference-function axiom trials.

    Failures are data, not errors: counts come with witnesses.  The two-sided
    ratio bound is tallied separately for the clamped update map (the function
    the adaptation iterates) and for the raw weighted-average map.  The raw
    map provably violates the bound on instances where a coordinate nears 1:
    the complement probabilities (1 - phi) collapse faster than any theta
    bound, and the interference-free SNR term amplifies the shift.  Classic
    monotonicity does not hold for this map either (raising an interferer's
    probability lowers the average SIR) and is reported informationally.
    """

    trials: int = 0
    positivity_failures: int = 0
    two_sided_failures_update_map: int = 0
    two_sided_failures_raw_map: int = 0
    monotonicity_failures: int = 0
    witnesses: list = field(default_factory=list)

    MAX_WITNESSES = 10

    @property
    def ok(self) -> bool:
        """Positivity and the update-map two-sided bound hold in every trial."""
        return self.positivity_failures == 0 and self.two_sided_failures_update_map == 0

    def merge(self, other: "AxiomReport") -> "AxiomReport":
        return AxiomReport(
            trials=self.trials + other.trials,
            positivity_failures=self.positivity_failures + other.positivity_failures,
            two_sided_failures_update_map=(
                self.two_sided_failures_update_map + other.two_sided_failures_update_map
            ),
            two_sided_failures_raw_map=(
                self.two_sided_failures_raw_map + other.two_sided_failures_raw_map
            ),
            monotonicity_failures=self.monotonicity_failures + other.monotonicity_failures,
            witnesses=(self.witnesses + other.witnesses)[: self.MAX_WITNESSES],
        )

    def _note(self, kind: str, **data) -> None:
        if len(self.witnesses) < self.MAX_WITNESSES:
            self.witnesses.append({"kind": kind, **data})


def check_axioms(
    table: SubsetSinrTable,
    beta: float,
    trials: int,
    seed=None,
    phi_min: float = 0.01,
    phi_max: float = 1.0,
    theta_max: float = 3.0,
) -> AxiomReport:
    """Randomized verification of positivity and two-sided scalability.

    Each trial draws phi uniformly in the probability box, theta > 1, and a
    second vector phi' uniformly inside the theta-neighbourhood
    [phi/theta, theta*phi] intersected with the box, then evaluates
    (1/theta) I(phi) <= I(phi') <= theta I(phi) for the clamped update map
    and, informationally, for the raw map; see AxiomReport.
    """
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    rng = np.random.default_rng(seed)
    n = table.n
    report = AxiomReport(trials=trials)
    rel = 1e-9
    for _ in range(trials):
        phi = rng.uniform(phi_min, phi_max, n)
        theta = rng.uniform(1.0 + 1e-6, theta_max)
        lo = np.maximum(phi_min, phi / theta)
        hi = np.minimum(phi_max, theta * phi)
        phi2 = rng.uniform(lo, hi)
        pv = ProbVector(phi, phi_min, phi_max)
        pv2 = ProbVector(phi2, phi_min, phi_max)

        raw1 = interference_map(pv, table, beta)
        raw2 = interference_map(pv2, table, beta)
        upd1 = pv.clamp(raw1)
        upd2 = pv.clamp(raw2)

        if not (np.all(raw1 > 0) and np.all(raw2 > 0)):
            report.positivity_failures += 1
            report._note("positivity", phi=phi.tolist(), values=raw1.tolist())
        if not (
            np.all(upd2 >= upd1 / theta * (1 - rel))
            and np.all(upd2 <= theta * upd1 * (1 + rel))
        ):
            report.two_sided_failures_update_map += 1
            report._note(
                "two_sided_update_map", theta=theta,
                phi=phi.tolist(), phi2=phi2.tolist(),
                values=upd1.tolist(), values2=upd2.tolist(),
            )
        if not (
            np.all(raw2 >= raw1 / theta * (1 - rel))
            and np.all(raw2 <= theta * raw1 * (1 + rel))
        ):
            report.two_sided_failures_raw_map += 1
            report._note(
                "two_sided_raw_map", theta=theta,
                phi=phi.tolist(), phi2=phi2.tolist(),
                values=raw1.tolist(), values2=raw2.tolist(),
            )

        phi3 = np.maximum(phi_min, phi * rng.uniform(0.2, 1.0, n))
        raw3 = interference_map(ProbVector(phi3, phi_min, phi_max), table, beta)
        if not np.all(raw1 >= raw3 * (1 - rel)):
            report.monotonicity_failures += 1

    return report
