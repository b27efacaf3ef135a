"""Random network topologies on a rectangular region.

Transmitters are dropped by a homogeneous Poisson point process (realised as a
Poisson count plus i.i.d. uniform placement, which is the exact conditional
law on a finite window).  Each receiver sits at a fixed link distance from its
transmitter at an independent uniform angle, so the receiver set is again a
homogeneous process by displacement.  An optional toroidal metric removes edge
bias when comparing against infinite-plane analytics.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Region",
    "Topology",
    "generate_topology",
    "pair_distance",
    "cross_distances",
    "save_topology",
    "load_topology",
]

# Absolute slack when validating link distances of ingested layouts; generated
# topologies are exact to machine precision but serialised files carry six
# decimal places.
_LINK_DISTANCE_ATOL = 1e-5


@dataclass(frozen=True)
class Region:
    """Rectangular deployment region, optionally with wrap-around distance."""

    width: float
    height: float
    wrap: bool = False

    def __post_init__(self) -> None:
        if not (self.width > 0 and self.height > 0):
            raise ValueError(
                f"region sides must be positive, got {self.width} x {self.height}"
            )

    @property
    def area(self) -> float:
        return self.width * self.height

    def deltas(self, a, b) -> np.ndarray:
        """Coordinate differences a - b, minimum-image when wrapping."""
        d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        if self.wrap:
            size = np.array([self.width, self.height])
            d = np.remainder(d, size)
            d = np.where(d > size / 2.0, d - size, d)
        return d

    def distance(self, a, b):
        d = self.deltas(a, b)
        return np.sqrt((d * d).sum(axis=-1))

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return (
            (p[:, 0] >= 0)
            & (p[:, 0] <= self.width)
            & (p[:, 1] >= 0)
            & (p[:, 1] <= self.height)
        )


@dataclass
class Topology:
    """Fixed snapshot of n transmitter/receiver pairs.

    Every link has the same length ``r_t`` under the region's metric.  With
    wrapping disabled receivers may legitimately fall outside the region;
    rejecting them would distort the displacement law, so they are kept.
    """

    tx: np.ndarray
    rx: np.ndarray
    r_t: float
    region: Region

    def __post_init__(self) -> None:
        self.tx = np.asarray(self.tx, dtype=float).reshape(-1, 2).copy()
        self.rx = np.asarray(self.rx, dtype=float).reshape(-1, 2).copy()
        if self.tx.shape != self.rx.shape:
            raise ValueError(
                f"transmitter/receiver counts differ: {len(self.tx)} vs {len(self.rx)}"
            )
        if self.r_t <= 0:
            raise ValueError(f"link distance must be positive, got {self.r_t}")
        if len(self.tx) and not self.region.contains(self.tx).all():
            raise ValueError("transmitter positions must lie inside the region")
        d = self.link_distances()
        if len(d) and np.max(np.abs(d - self.r_t)) > _LINK_DISTANCE_ATOL:
            worst = float(np.max(np.abs(d - self.r_t)))
            raise ValueError(
                f"all links must have length r_t={self.r_t}; worst deviation {worst:g} m"
            )

    @property
    def n_pairs(self) -> int:
        return len(self.tx)

    def link_distances(self) -> np.ndarray:
        return self.region.distance(self.tx, self.rx)


def generate_topology(
    lam: float,
    region: Region,
    r_t: float,
    seed=None,
    n_pairs: int | None = None,
) -> Topology:
    """Draw a Poisson(lam * area) number of pairs, uniform transmitters,
    displaced receivers.

    ``n_pairs`` conditions on the pair count instead of drawing it (the count
    conditional of a Poisson process is exactly this uniform placement).
    Deterministic given ``seed``; an ``n = 0`` draw yields a valid empty
    topology.
    """
    if r_t <= 0:
        raise ValueError(f"link distance must be positive, got {r_t}")
    if r_t >= min(region.width, region.height) / 2.0:
        raise ValueError(
            f"link distance {r_t} must be below half the smaller region side"
        )
    rng = np.random.default_rng(seed)
    if n_pairs is None:
        if lam <= 0:
            raise ValueError(f"density must be positive, got {lam}")
        n = int(rng.poisson(lam * region.area))
    else:
        if n_pairs < 0:
            raise ValueError(f"pair count must be non-negative, got {n_pairs}")
        n = int(n_pairs)
    tx = np.column_stack(
        [rng.uniform(0, region.width, n), rng.uniform(0, region.height, n)]
    )
    angles = rng.uniform(0.0, 2.0 * np.pi, n)
    rx = tx + r_t * np.column_stack([np.cos(angles), np.sin(angles)])
    if region.wrap:
        rx = np.remainder(rx, [region.width, region.height])
    return Topology(tx=tx, rx=rx, r_t=r_t, region=region)


def pair_distance(topology: Topology, a, b) -> float:
    """Distance between two points under the topology's region metric."""
    return float(topology.region.distance(a, b))


def cross_distances(region: Region, pts_a: np.ndarray, pts_b: np.ndarray) -> np.ndarray:
    """(len_a, len_b) distance matrix under the region metric."""
    a = np.asarray(pts_a, dtype=float).reshape(-1, 2)
    b = np.asarray(pts_b, dtype=float).reshape(-1, 2)
    d = region.deltas(a[:, None, :], b[None, :, :])
    return np.sqrt((d * d).sum(axis=-1))


def save_topology(topology: Topology, path) -> None:
    """Write one record per pair: index, tx_x, tx_y, rx_x, rx_y (metres, 6 dp)."""
    r = topology.region
    with open(path, "w") as fh:
        fh.write(
            f"# width={r.width:.6f} height={r.height:.6f} "
            f"wrap={int(r.wrap)} r_t={topology.r_t:.6f}\n"
        )
        fh.write("# index,tx_x,tx_y,rx_x,rx_y\n")
        for i in range(topology.n_pairs):
            tx, rx = topology.tx[i], topology.rx[i]
            fh.write(f"{i},{tx[0]:.6f},{tx[1]:.6f},{rx[0]:.6f},{rx[1]:.6f}\n")


def load_topology(path) -> Topology:
    header: dict[str, float] = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line.lstrip("# ").split():
                    if "=" in token:
                        key, _, val = token.partition("=")
                        header[key] = float(val)
                continue
            rows.append([float(v) for v in line.split(",")])
    for key in ("width", "height", "wrap", "r_t"):
        if key not in header:
            raise ValueError(f"topology file {path} is missing header field {key!r}")
    region = Region(header["width"], header["height"], wrap=bool(header["wrap"]))
    data = np.asarray(rows, dtype=float).reshape(-1, 5)
    order = np.argsort(data[:, 0])
    data = data[order]
    return Topology(tx=data[:, 1:3], rx=data[:, 3:5], r_t=header["r_t"], region=region)
