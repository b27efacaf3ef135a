"""Executable acceptance suite: every headline claim as a pass/fail check.

Each criterion is a self-contained function with pinned tolerances and seeds,
returning a result object with one-line details suitable for console output.
The CLI ``validate`` subcommand and the pytest acceptance module both run
these functions, so there is a single source of truth for what "working"
means.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import aloha
from .channel import ChannelParams
from .engine import RunConfig, run, run_drop, two_phi_surface
from .geometry import Region, Topology, generate_topology
from .oracle import (
    AxiomReport,
    ProbVector,
    SubsetSinrTable,
    check_axioms,
    expected_success_count,
    fixed_point_iterate,
)
from .policies import PolicySpec

__all__ = ["CriterionResult", "CRITERIA", "run_criterion", "run_all", "validation_layout"]


@dataclass
class CriterionResult:
    name: str
    passed: bool
    runtime_s: float = 0.0
    details: list[str] = field(default_factory=list)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}  ({self.runtime_s:.1f}s)"


def validation_layout() -> Topology:
    """The 11-pair validation scene on a 30 m square.

    Ten pairs sit on a ring with receivers pointing outward, spaced so that
    every ring link tolerates all interferers at once; the eleventh pair's
    receiver sits 1.3 m from the bottom ring transmitter, which pins its
    probability to the lower bound.  The update map has a unique fixed point
    here and the iteration converges from any start.
    """
    center = np.array([15.0, 15.0])
    tx, rx = [], []
    for k in range(10):
        a = 2.0 * np.pi * k / 10.0 - np.pi / 2.0
        u = np.array([np.cos(a), np.sin(a)])
        tx.append(center + 13.0 * u)
        rx.append(center + 18.0 * u)
    rx_v = np.array([15.0, 3.3])
    tx.append(rx_v + [0.0, 5.0])
    rx.append(rx_v)
    return Topology(
        tx=np.array(tx), rx=np.array(rx), r_t=5.0, region=Region(30.0, 30.0)
    )


BETA_DB_DEFAULT = 3.0


def _beta() -> float:
    return 10.0 ** (BETA_DB_DEFAULT / 10.0)


def criterion_density_independence() -> CriterionResult:
    """Maximum ALOHA ASE is density-free analytically and under simulation.

    The closed-form maximum must be bit-identical across densities wherever
    the optimal probability is unclamped; at 5 m links the lowest density
    clamps, where the maximum must instead equal the curve at probability
    one.  Simulated optimal ALOHA on a torus must land within 10% of the
    closed form at every unclamped density.
    """
    t0 = time.time()
    details = []
    ok = True
    beta = _beta()
    lams_all = [0.005, 0.01, 0.02, 0.04, 0.06]

    # identity across all five densities with 10 m links (all unclamped)
    vals10 = [aloha.max_ase(aloha.AlohaParams(l, 10.0, beta, 4.0)) for l in lams_all]
    ident10 = len(set(vals10)) == 1
    ok &= ident10
    details.append(f"r_t=10m identity across {lams_all}: {'exact' if ident10 else vals10}")

    # default 5 m links: identity over the unclamped subset, clamp rule at 0.005
    unclamped = [l for l in lams_all if aloha.optimal_phi(aloha.AlohaParams(l, 5.0, beta, 4.0)) < 1.0]
    vals5 = [aloha.max_ase(aloha.AlohaParams(l, 5.0, beta, 4.0)) for l in unclamped]
    ident5 = len(set(vals5)) == 1
    ok &= ident5
    details.append(f"r_t=5m identity across unclamped {unclamped}: {'exact' if ident5 else vals5}")
    p005 = aloha.AlohaParams(0.005, 5.0, beta, 4.0)
    clamp_ok = aloha.optimal_phi(p005) == 1.0 and aloha.max_ase(p005) == aloha.ase_curve(p005, 1.0)
    ok &= clamp_ok
    details.append(f"lam=0.005 clamped maximum equals curve at phi=1: {clamp_ok}")

    eta_star = vals5[0]
    for lam in unclamped:
        cfg = RunConfig(
            lam=lam, region=Region(100.0, 100.0, wrap=True),
            policy=PolicySpec("optimal_aloha"), slots=4000, drops=6, warmup=0, seed=321,
        )
        metrics, _ = run(cfg)
        rel = abs(metrics.ase / eta_star - 1.0)
        ok &= rel <= 0.10
        details.append(f"torus sim lam={lam}: ase={metrics.ase:.6f} rel.err={100*rel:.1f}% (<=10%)")
    return CriterionResult("density-independent maximum ASE", ok, time.time() - t0, details)


def criterion_optimum_derivation() -> CriterionResult:
    """The closed-form optimum matches an independent numeric argmax to 1e-6
    over 100 random parameter sets, with first/second-order conditions holding
    at interior optima."""
    t0 = time.time()
    rng = np.random.default_rng(7)
    worst_gap = 0.0
    deriv_checked = 0
    ok = True
    details = []
    for _ in range(100):
        p = aloha.AlohaParams(
            lam=rng.uniform(0.003, 0.08),
            r_t=rng.uniform(1.0, 10.0),
            beta=10.0 ** (rng.uniform(0.0, 10.0) / 10.0),
            alpha=rng.uniform(2.2, 6.0),
        )
        closed = aloha.optimal_phi(p)
        numeric = aloha.argmax_phi_numeric(p)
        worst_gap = max(worst_gap, abs(closed - numeric))
        if closed < 1.0:
            h = 1e-5 * max(closed, 1e-3)
            d1 = (aloha.ase_curve(p, closed + h) - aloha.ase_curve(p, closed - h)) / (2 * h)
            d2 = (
                aloha.ase_curve(p, closed + h)
                - 2 * aloha.ase_curve(p, closed)
                + aloha.ase_curve(p, closed - h)
            ) / h**2
            normalized = abs(d1) * closed / aloha.ase_curve(p, closed)
            ok &= normalized < 1e-6 and d2 < 0
            deriv_checked += 1
    ok &= worst_gap < 1e-6 and deriv_checked >= 50
    details.append(f"worst |closed - numeric| = {worst_gap:.2e} (<1e-6)")
    details.append(f"stationarity + concavity verified at {deriv_checked} interior optima")
    return CriterionResult("closed-form optimum vs numeric argmax", ok, time.time() - t0, details)


def criterion_oracle_equivalence() -> CriterionResult:
    """Exact enumeration matches Monte Carlo success counts.

    Twenty random topologies (3..8 pairs, fading off, random per-pair
    probabilities), one million slots each; the simulated mean success count
    must land within three standard errors of the enumerated expectation in
    at least 19 of 20 cases."""
    t0 = time.time()
    rng = np.random.default_rng(99)
    beta = _beta()
    channel = ChannelParams(fading="off")
    hits = 0
    worst_z = 0.0
    for _ in range(20):
        n = int(rng.integers(3, 9))
        topo = generate_topology(0.02, Region(100.0, 100.0), 5.0, seed=rng, n_pairs=n)
        phi = rng.uniform(0.05, 0.95, n)
        exact = expected_success_count(topo, channel, ProbVector(phi), beta)
        cfg = RunConfig(
            channel=channel, policy=PolicySpec("fixed_aloha", phi=phi),
            slots=1_000_000, drops=1, warmup=0, topology=topo,
            record_success_counts=True,
        )
        r = run_drop(cfg, rng.integers(2**63))
        mc = r.success_counts.mean()
        se = r.success_counts.std(ddof=1) / math.sqrt(len(r.success_counts))
        z = abs(mc - exact) / se if se > 0 else 0.0
        worst_z = max(worst_z, z)
        hits += z <= 3.0
    ok = hits >= 19
    details = [f"{hits}/20 within 3 standard errors (worst z={worst_z:.2f})"]
    return CriterionResult("enumeration vs Monte Carlo success count", ok, time.time() - t0, details)


def criterion_interference_axioms() -> CriterionResult:
    """Positivity and two-sided scalability of the probability-update map.

    1000 randomized trials over random 5-pair scenes.  The ratio bound is
    asserted for the clamped update map, the function the adaptation actually
    iterates; the raw weighted-average map provably violates the bound near
    the box edges and its violation count is reported as data."""
    t0 = time.time()
    rng = np.random.default_rng(1000)
    beta = _beta()
    channel = ChannelParams(fading="off")
    report = AxiomReport()
    for _ in range(100):
        topo = generate_topology(0.02, Region(100.0, 100.0), 5.0, seed=rng, n_pairs=5)
        table = SubsetSinrTable.build(topo, channel)
        report = report.merge(
            check_axioms(table, beta, trials=10, seed=rng.integers(2**63))
        )
    ok = report.positivity_failures == 0 and report.two_sided_failures_update_map == 0
    details = [
        f"{report.trials} trials: positivity failures {report.positivity_failures}, "
        f"update-map two-sided failures {report.two_sided_failures_update_map}",
        f"raw-map two-sided failures {report.two_sided_failures_raw_map} "
        f"(informational; the unclamped map is not two-sided scalable)",
        f"classic-monotonicity counterexamples {report.monotonicity_failures} "
        f"(informational; the axiom does not apply to this map)",
    ]
    return CriterionResult("interference-function axioms", ok, time.time() - t0, details)


def criterion_fixed_point_convergence() -> CriterionResult:
    """Synchronous iteration on 50 random topologies (n <= 12), 10 random
    starts each: residual < 1e-6 within 1e4 iterations and all starts within
    1e-4 per coordinate.

    Known to fail on a few percent of topologies: the clamped update map is
    not a contraction, and tightly coupled pairs either lock into period-two
    cycles under synchronous updates or admit two symmetric fixed points.
    The failures are reported with their modes."""
    t0 = time.time()
    rng = np.random.default_rng(42)
    beta = _beta()
    channel = ChannelParams(fading="off")
    failures = []
    for t in range(50):
        n = int(rng.integers(3, 13))
        topo = generate_topology(0.02, Region(100.0, 100.0), 5.0, seed=rng, n_pairs=n)
        table = SubsetSinrTable.build(topo, channel)
        endpoints = []
        for _ in range(10):
            fp = fixed_point_iterate(table, beta, ProbVector(rng.uniform(0.01, 1.0, n)))
            if not fp.converged:
                failures.append(f"topology {t} (n={n}): no convergence, residual {fp.residual:.2g}")
                break
            endpoints.append(fp.phi)
        else:
            spread = float(np.max(np.ptp(np.array(endpoints), axis=0)))
            if spread > 1e-4:
                failures.append(f"topology {t} (n={n}): starts disagree by {spread:.3g}")
    ok = not failures
    details = [f"{50 - len(failures)}/50 topologies converged uniquely from all starts"]
    details.extend(failures)
    return CriterionResult("fixed-point convergence and uniqueness", ok, time.time() - t0, details)


def criterion_time_vs_ensemble() -> CriterionResult:
    """On the 11-pair validation layout, adaptive probabilities driven by the
    fading time average (window 1000) settle within 0.05 per pair of the
    fading-off fixed point, with per-window change below 1e-3 by window 50."""
    t0 = time.time()
    topo = validation_layout()
    beta = _beta()
    table = SubsetSinrTable.build(topo, ChannelParams(fading="off"))
    rng = np.random.default_rng(0)
    endpoints = []
    converged = True
    for _ in range(10):
        fp = fixed_point_iterate(table, beta, ProbVector(rng.uniform(0.01, 1.0, 11)))
        converged &= fp.converged
        endpoints.append(fp.phi)
    spread = float(np.max(np.ptp(np.array(endpoints), axis=0)))
    oracle_phi = endpoints[0]

    cfg = RunConfig(
        policy=PolicySpec("sara", window=1000), slots=80_000, drops=1,
        warmup=60_000, seed=5, topology=topo,
    )
    r = run_drop(cfg, 2024)
    trace = r.phi_windows
    dev = float(np.max(np.abs(trace[-1] - oracle_phi)))
    late_change = float(np.abs(np.diff(trace[50:], axis=0)).max()) if len(trace) > 51 else 0.0
    ok = converged and spread < 1e-4 and dev <= 0.05 and late_change < 1e-3
    details = [
        f"oracle fixed point unique (start spread {spread:.2g}), converged={converged}",
        f"max |simulated - oracle| per pair = {dev:.4f} (<=0.05)",
        f"max per-window change after window 50 = {late_change:.5f} (<1e-3)",
    ]
    return CriterionResult("time average matches ensemble fixed point", ok, time.time() - t0, details)


def _scheme_cell(lam: float, spec: PolicySpec, drops: int, seed: int) -> tuple[float, float]:
    cfg = RunConfig(lam=lam, policy=spec, slots=15_000, drops=drops, seed=seed)
    metrics, _ = run(cfg)
    return metrics.ase, metrics.ase_stderr


def criterion_scheme_ordering() -> CriterionResult:
    """Scheme ordering at 3 dB across densities 0.02/0.04/0.06, 30 drops per
    cell: the adaptive scheme must beat optimal ALOHA and neighbour-count
    ALOHA and at least match fixed-range carrier sensing, all with
    non-overlapping 95% confidence intervals (adaptive carrier sensing may
    exceed it)."""
    t0 = time.time()
    drops = 30
    schemes = {
        "sara": PolicySpec("sara"),
        "optimal_aloha": PolicySpec("optimal_aloha"),
        "neighbor_aloha": PolicySpec("neighbor_aloha"),
        "csma_fixed": PolicySpec("csma_fixed"),
        "csma_adaptive": PolicySpec("csma_adaptive"),
    }
    ok = True
    details = []
    for lam in (0.02, 0.04, 0.06):
        stats = {
            name: _scheme_cell(lam, spec, drops, seed=7000 + int(lam * 1000))
            for name, spec in schemes.items()
        }
        details.append(
            "lam=%.2f  " % lam
            + "  ".join(f"{k}={v[0]:.5f}±{v[1]:.5f}" for k, v in stats.items())
        )
        s_mean, s_se = stats["sara"]
        for rival, direction in (
            ("optimal_aloha", ">"),
            ("neighbor_aloha", ">"),
            ("csma_fixed", ">="),
        ):
            r_mean, r_se = stats[rival]
            separated = (s_mean - 1.96 * s_se) > (r_mean + 1.96 * r_se)
            ok &= separated
            details.append(
                f"  lam={lam}: sara {direction} {rival}: "
                f"{'separated' if separated else 'NOT separated'} "
                f"(gap={(s_mean - r_mean):+.5f})"
            )
    return CriterionResult("scheme ASE ordering across densities", ok, time.time() - t0, details)


def criterion_bound_compliance() -> CriterionResult:
    """Every adaptive probability sample stays inside [phi_min, phi_max] and
    the adaptation starts exactly at phi_max, over full traces of several
    simulations."""
    t0 = time.time()
    ok = True
    details = []
    runs = [
        ("validation layout", RunConfig(
            policy=PolicySpec("sara", window=200), slots=20_000, drops=1,
            warmup=10_000, seed=5, topology=validation_layout())),
        ("random lam=0.02", RunConfig(
            lam=0.02, policy=PolicySpec("sara"), slots=12_000, drops=1,
            warmup=10_000, seed=8)),
        ("torus lam=0.04", RunConfig(
            lam=0.04, region=Region(100.0, 100.0, wrap=True),
            policy=PolicySpec("sara"), slots=12_000, drops=1, warmup=10_000, seed=9)),
    ]
    for name, cfg in runs:
        r = run_drop(cfg, cfg.seed)
        trace = r.phi_windows
        lo, hi = cfg.policy.phi_min, cfg.policy.phi_max
        in_bounds = bool((trace >= lo).all() and (trace <= hi).all())
        starts_at_max = bool((trace[0] == hi).all())
        ok &= in_bounds and starts_at_max
        details.append(
            f"{name}: {trace.shape[0]} windows x {trace.shape[1]} pairs, "
            f"bounds={'ok' if in_bounds else 'VIOLATED'}, "
            f"init==phi_max={'ok' if starts_at_max else 'VIOLATED'}"
        )
    return CriterionResult("adaptive probability bound compliance", ok, time.time() - t0, details)


def _clustered_ensemble(count: int, seed: int) -> tuple[list[Topology], list[np.ndarray]]:
    """Realisations with one tight 6-pair cluster and six isolated pairs."""
    rng = np.random.default_rng(seed)
    region = Region(100.0, 100.0)
    topologies, groups = [], []
    anchors = np.array(
        [[15.0, 80.0], [50.0, 85.0], [85.0, 80.0], [15.0, 45.0], [85.0, 45.0], [50.0, 15.0]]
    )
    for _ in range(count):
        tx, rx = [], []
        center = rng.uniform(25.0, 40.0, 2)
        for _ in range(6):
            t = center + rng.uniform(-3.0, 3.0, 2)
            a = rng.uniform(0, 2 * np.pi)
            tx.append(t)
            rx.append(t + 5.0 * np.array([np.cos(a), np.sin(a)]))
        for anchor in anchors:
            t = anchor + rng.uniform(-4.0, 4.0, 2)
            a = rng.uniform(0, 2 * np.pi)
            tx.append(t)
            rx.append(t + 5.0 * np.array([np.cos(a), np.sin(a)]))
        topologies.append(Topology(tx=np.array(tx), rx=np.array(rx), r_t=5.0, region=region))
        groups.append(np.array([0] * 6 + [1] * 6))
    return topologies, groups


def criterion_two_phi_surface() -> CriterionResult:
    """With one crowded and one sparse group, the best pair of group-wise
    probabilities beats the best common probability by more than one
    standard error, and it lies off the diagonal."""
    t0 = time.time()
    topologies, groups = _clustered_ensemble(12, seed=77)
    grid = np.round(np.arange(0.1, 1.01, 0.1), 10)
    surface = two_phi_surface(
        topologies, groups, grid, grid, ChannelParams(), BETA_DB_DEFAULT,
        slots=3000, seed=13,
    )
    i, j = surface.argmax
    k, best_diag = surface.best_diagonal()
    gap = surface.ase[i, j] - best_diag
    se = math.hypot(surface.stderr[i, j], surface.stderr[k, k])
    ok = (i != j) and gap > se
    details = [
        f"argmax at (phi1={grid[i]:.1f}, phi2={grid[j]:.1f}) ase={surface.ase[i, j]:.6f}",
        f"best diagonal at phi={grid[k]:.1f} ase={best_diag:.6f}",
        f"gap={gap:.6f} vs one stderr={se:.6f}",
    ]
    return CriterionResult("two-probability optimum off the diagonal", ok, time.time() - t0, details)


CRITERIA = {
    "density-independence": criterion_density_independence,
    "optimum-derivation": criterion_optimum_derivation,
    "oracle-equivalence": criterion_oracle_equivalence,
    "interference-axioms": criterion_interference_axioms,
    "fixed-point-convergence": criterion_fixed_point_convergence,
    "time-vs-ensemble": criterion_time_vs_ensemble,
    "scheme-ordering": criterion_scheme_ordering,
    "bound-compliance": criterion_bound_compliance,
    "two-phi-surface": criterion_two_phi_surface,
}


def run_criterion(name: str) -> CriterionResult:
    if name not in CRITERIA:
        raise ValueError(f"unknown criterion {name!r}; choose from {sorted(CRITERIA)}")
    return CRITERIA[name]()


def run_all(names: list[str] | None = None) -> list[CriterionResult]:
    selected = names or list(CRITERIA)
    return [run_criterion(name) for name in selected]
