"""Slotted-time Monte Carlo driver.

Each slot: every pair decides transmit/defer, fresh fading is drawn for the
active links, each active receiver's SINR is evaluated, successes are those
meeting the target, and feedback reaches the policies.  Adaptive policies
revise state once per measurement window, so probabilities are constant
within a window and whole windows can be processed as vectorised blocks.

Drops (independent topology realisations) are aggregated into mean and
standard-error statistics; everything is deterministic given the master seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import ChannelParams, pathloss_matrix
from .geometry import Region, Topology, generate_topology
from .policies import Policy, PolicySpec, make_policy
from .units import db_to_linear

__all__ = [
    "RunConfig",
    "SlotTrace",
    "DropResult",
    "RunMetrics",
    "SweepCell",
    "SweepRow",
    "run_drop",
    "run",
    "run_experiment",
    "TwoPhiSurface",
    "two_phi_surface",
]

# Block-vectorised fading needs a (block, n, n) tensor; above this pair count
# the per-slot active-set path is cheaper and lighter on memory.
_DENSE_FADING_LIMIT = 64
_STATIC_BLOCK = 4096
_ADAPTIVE_WARMUP_WINDOWS = 100


@dataclass
class RunConfig:
    """Everything one experiment needs; defaults follow the reference setup
    (5 m links, 30 dBm transmitters, -70 dBm noise floor, 100 m square)."""

    lam: float = 0.02
    region: Region = field(default_factory=lambda: Region(100.0, 100.0))
    r_t: float = 5.0
    channel: ChannelParams = field(default_factory=ChannelParams)
    beta_db: float = 3.0
    policy: PolicySpec = field(default_factory=lambda: PolicySpec("sara"))
    slots: int = 100_000
    drops: int = 30
    seed: int = 1
    warmup: int | None = None       # slots excluded from metrics; None = auto
    n_pairs: int | None = None      # condition the Poisson draw on this count
    topology: Topology | None = None  # fixed-layout ingestion path
    record_trace: bool = False
    record_success_counts: bool = False

    def __post_init__(self) -> None:
        if self.slots < 1:
            raise ValueError(f"need at least one slot, got {self.slots}")
        if self.drops < 1:
            raise ValueError(f"need at least one drop, got {self.drops}")
        if self.warmup is not None and not (0 <= self.warmup < self.slots):
            raise ValueError(
                f"warmup must satisfy 0 <= warmup < slots, got {self.warmup}"
            )

    @property
    def beta(self) -> float:
        return db_to_linear(self.beta_db)

    def resolve_warmup(self, policy: Policy) -> int:
        if self.warmup is not None:
            return self.warmup
        if policy.adaptive and policy.window:
            return min(_ADAPTIVE_WARMUP_WINDOWS * policy.window, self.slots - 1)
        return 0


@dataclass
class SlotTrace:
    """Full per-slot record; only kept on request, for small runs."""

    transmitted: np.ndarray   # (slots, n) bool
    success: np.ndarray       # (slots, n) bool
    sinr: np.ndarray          # (slots, n), NaN where silent


@dataclass
class DropResult:
    seed: int
    n_pairs: int
    slots: int
    counted_slots: int
    transmissions: int
    successes: int
    ase: float
    success_rate: float
    phi_windows: np.ndarray | None = None   # (windows+1, n), initial state first
    trace: SlotTrace | None = None
    success_counts: np.ndarray | None = None  # per-slot totals, on request


@dataclass
class RunMetrics:
    ase: float
    ase_stderr: float
    success_rate: float
    drops: int
    slots: int
    drop_seeds: list[int]
    drop_ase: np.ndarray
    mean_phi_windows: np.ndarray | None = None


def _block_outcomes(
    transmit: np.ndarray,
    recv_power: np.ndarray,
    noise: float,
    beta: float,
    fading: bool,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Success flags and measured SINR for a block of slots.

    ``recv_power[u, j]`` is the unfaded power of transmitter u at receiver j.
    Only active pairs get a SINR; silent entries are NaN.  For small networks
    the whole block is evaluated as one tensor; for large ones each slot only
    touches the active submatrix.
    """
    n_slots, n = transmit.shape
    sinr = np.full((n_slots, n), np.nan)
    if n == 0:
        return np.zeros((n_slots, n), dtype=bool), sinr

    if not fading:
        x = transmit.astype(float)
        total = x @ recv_power
        own = x * np.diag(recv_power)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = own / (total - own + noise)
        sinr[transmit] = vals[transmit]
    elif n <= _DENSE_FADING_LIMIT:
        h = rng.standard_exponential((n_slots, n, n))
        contrib = transmit[:, :, None] * h * recv_power[None, :, :]
        total = contrib.sum(axis=1)
        own = np.einsum("sjj->sj", contrib)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = own / (total - own + noise)
        sinr[transmit] = vals[transmit]
    else:
        for s in range(n_slots):
            active = np.flatnonzero(transmit[s])
            if len(active) == 0:
                continue
            h = rng.standard_exponential((len(active), len(active)))
            contrib = h * recv_power[np.ix_(active, active)]
            total = contrib.sum(axis=0)
            own = np.diag(contrib).copy()
            with np.errstate(divide="ignore"):
                sinr[s, active] = own / (total - own + noise)

    success = transmit & (sinr >= beta)
    return success, sinr


def run_drop(cfg: RunConfig, drop_seed, topology: Topology | None = None) -> DropResult:
    """One independent realisation: topology, channel, policy, metrics.

    Deterministic given ``drop_seed``.  An empty topology returns zero
    metrics, which is a valid outcome.
    """
    ss = (
        drop_seed
        if isinstance(drop_seed, np.random.SeedSequence)
        else np.random.SeedSequence(int(drop_seed))
    )
    seed_id = int(ss.entropy if np.ndim(ss.entropy) == 0 else ss.entropy[0])
    topo_ss, sim_ss = ss.spawn(2)
    topo = topology or cfg.topology
    if topo is None:
        topo = generate_topology(
            cfg.lam, cfg.region, cfg.r_t,
            seed=np.random.default_rng(topo_ss), n_pairs=cfg.n_pairs,
        )
    rng = np.random.default_rng(sim_ss)
    n = topo.n_pairs
    beta = cfg.beta
    area = topo.region.area

    if n == 0:
        return DropResult(
            seed=seed_id, n_pairs=0, slots=cfg.slots, counted_slots=cfg.slots,
            transmissions=0, successes=0, ase=0.0, success_rate=0.0,
        )

    policy = make_policy(cfg.policy, topo, cfg.channel, beta, cfg.lam)
    warmup = cfg.resolve_warmup(policy)
    recv_power = pathloss_matrix(topo, cfg.channel) * cfg.channel.tx_power
    fading = cfg.channel.fading == "rayleigh"
    block = policy.window if policy.window else min(_STATIC_BLOCK, cfg.slots)

    phi_trace = [policy.phi.copy()]
    transmissions = 0
    successes = 0
    trace_tx = trace_ok = trace_sinr = None
    if cfg.record_trace:
        trace_tx = np.zeros((cfg.slots, n), dtype=bool)
        trace_ok = np.zeros((cfg.slots, n), dtype=bool)
        trace_sinr = np.full((cfg.slots, n), np.nan)
    counts = np.zeros(cfg.slots, dtype=np.int32) if cfg.record_success_counts else None

    s0 = 0
    while s0 < cfg.slots:
        b = min(block, cfg.slots - s0)
        transmit = policy.decide_block(b, rng)
        success, sinr = _block_outcomes(
            transmit, recv_power, cfg.channel.noise_power, beta, fading, rng
        )
        policy.observe_block(transmit, success, sinr)
        if policy.window and b == policy.window:
            policy.end_window()
            phi_trace.append(policy.phi.copy())

        counted = max(0, s0 + b - max(s0, warmup))
        if counted:
            sel = slice(b - counted, b)
            transmissions += int(transmit[sel].sum())
            successes += int(success[sel].sum())
        if cfg.record_trace:
            trace_tx[s0 : s0 + b] = transmit
            trace_ok[s0 : s0 + b] = success
            trace_sinr[s0 : s0 + b] = sinr
        if counts is not None:
            counts[s0 : s0 + b] = success.sum(axis=1)
        s0 += b

    counted_slots = cfg.slots - warmup
    ase = math.log2(1.0 + beta) * successes / (counted_slots * area)
    rate = successes / transmissions if transmissions else 0.0
    return DropResult(
        seed=seed_id, n_pairs=n, slots=cfg.slots, counted_slots=counted_slots,
        transmissions=transmissions, successes=successes, ase=ase, success_rate=rate,
        phi_windows=np.asarray(phi_trace),
        trace=SlotTrace(trace_tx, trace_ok, trace_sinr) if cfg.record_trace else None,
        success_counts=counts,
    )


def _drop_seeds(master_seed: int, drops: int) -> list[int]:
    """Per-drop integer seeds derived from the master seed; recorded for replay."""
    state = np.random.SeedSequence(master_seed).generate_state(drops, np.uint64)
    return [int(s) for s in state]


def run(cfg: RunConfig, topology: Topology | None = None) -> tuple[RunMetrics, list[DropResult]]:
    """``cfg.drops`` independent drops aggregated into mean/stderr statistics."""
    results = [run_drop(cfg, s, topology) for s in _drop_seeds(cfg.seed, cfg.drops)]
    drop_ase = np.array([r.ase for r in results])
    stderr = (
        float(drop_ase.std(ddof=1) / math.sqrt(len(drop_ase)))
        if len(drop_ase) > 1
        else 0.0
    )
    tx_total = sum(r.transmissions for r in results)
    ok_total = sum(r.successes for r in results)
    mean_phi = None
    traces = [r.phi_windows for r in results if r.phi_windows is not None]
    if traces and len({t.shape[0] for t in traces}) == 1:
        mean_phi = np.array([t.mean(axis=1) for t in traces]).mean(axis=0)
    return (
        RunMetrics(
            ase=float(drop_ase.mean()),
            ase_stderr=stderr,
            success_rate=ok_total / tx_total if tx_total else 0.0,
            drops=cfg.drops,
            slots=cfg.slots,
            drop_seeds=[r.seed for r in results],
            drop_ase=drop_ase,
            mean_phi_windows=mean_phi,
        ),
        results,
    )


@dataclass(frozen=True)
class SweepCell:
    lam: float
    beta_db: float
    policy: PolicySpec


@dataclass
class SweepRow:
    scheme: str
    lam: float
    beta_db: float
    ase_mean: float
    ase_stderr: float
    success_rate: float
    drops: int
    slots: int
    seed: int


def run_experiment(base_cfg: RunConfig, cells: list[SweepCell]) -> list[SweepRow]:
    """Run every sweep cell with ``drops`` fresh topologies; rows keep sweep order."""
    if not cells:
        raise ValueError("sweep needs at least one cell")
    cell_seeds = _drop_seeds(base_cfg.seed, len(cells))
    rows = []
    for cell, cell_seed in zip(cells, cell_seeds):
        cfg = replace(
            base_cfg,
            lam=cell.lam,
            beta_db=cell.beta_db,
            policy=cell.policy,
            seed=cell_seed,
        )
        drops = [run_drop(cfg, s) for s in _drop_seeds(cfg.seed, cfg.drops)]
        ase = np.array([d.ase for d in drops])
        tx_total = sum(d.transmissions for d in drops)
        ok_total = sum(d.successes for d in drops)
        rows.append(
            SweepRow(
                scheme=cell.policy.kind,
                lam=cell.lam,
                beta_db=cell.beta_db,
                ase_mean=float(ase.mean()),
                ase_stderr=(
                    float(ase.std(ddof=1) / math.sqrt(len(ase))) if len(ase) > 1 else 0.0
                ),
                success_rate=ok_total / tx_total if tx_total else 0.0,
                drops=cfg.drops,
                slots=cfg.slots,
                seed=base_cfg.seed,
            )
        )
    return rows


@dataclass
class TwoPhiSurface:
    phi1_grid: np.ndarray
    phi2_grid: np.ndarray
    ase: np.ndarray          # (len(phi1_grid), len(phi2_grid)) ensemble means
    stderr: np.ndarray
    argmax: tuple[int, int]

    def best_diagonal(self) -> tuple[int, float]:
        """Best cell with equal probabilities; grids must share values."""
        if len(self.phi1_grid) != len(self.phi2_grid) or not np.allclose(
            self.phi1_grid, self.phi2_grid
        ):
            raise ValueError("diagonal comparison needs identical grids")
        diag = np.diagonal(self.ase)
        k = int(np.argmax(diag))
        return k, float(diag[k])


def two_phi_surface(
    topologies: list[Topology],
    groups: list[np.ndarray],
    phi1_grid,
    phi2_grid,
    channel: ChannelParams,
    beta_db: float,
    slots: int,
    seed: int = 1,
) -> TwoPhiSurface:
    """Monte Carlo ASE over a grid of two group-wise transmit probabilities.

    Every pair belongs to group 0 (uses phi1) or group 1 (uses phi2).  The
    same per-topology random stream is replayed for every grid cell (common
    random numbers), so cell-to-cell comparisons are low-variance and the
    whole surface is deterministic given ``seed``.
    """
    if len(topologies) != len(groups):
        raise ValueError("need one group assignment per topology")
    phi1_grid = np.asarray(phi1_grid, dtype=float)
    phi2_grid = np.asarray(phi2_grid, dtype=float)
    beta = db_to_linear(beta_db)
    topo_seeds = np.random.SeedSequence(seed).spawn(len(topologies))
    samples = np.zeros((len(phi1_grid), len(phi2_grid), len(topologies)))

    for t, (topo, group, tss) in enumerate(zip(topologies, groups, topo_seeds)):
        group = np.asarray(group)
        if group.shape != (topo.n_pairs,) or not np.isin(group, [0, 1]).all():
            raise ValueError("group assignment must mark every pair as 0 or 1")
        recv_power = pathloss_matrix(topo, channel) * channel.tx_power
        area = topo.region.area
        fading = channel.fading == "rayleigh"
        for i1, v1 in enumerate(phi1_grid):
            for i2, v2 in enumerate(phi2_grid):
                rng = np.random.default_rng(tss)
                phi = np.where(group == 0, v1, v2)
                transmit = rng.random((slots, topo.n_pairs)) < phi
                success, _ = _block_outcomes(
                    transmit, recv_power, channel.noise_power, beta, fading, rng
                )
                samples[i1, i2, t] = (
                    math.log2(1.0 + beta) * success.sum() / (slots * area)
                )

    ase = samples.mean(axis=2)
    stderr = (
        samples.std(axis=2, ddof=1) / math.sqrt(len(topologies))
        if len(topologies) > 1
        else np.zeros_like(ase)
    )
    argmax = np.unravel_index(np.argmax(ase), ase.shape)
    return TwoPhiSurface(
        phi1_grid=phi1_grid, phi2_grid=phi2_grid, ase=ase, stderr=stderr,
        argmax=(int(argmax[0]), int(argmax[1])),
    )
