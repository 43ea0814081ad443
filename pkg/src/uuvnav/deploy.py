"""Volume-balanced beacon placement and routing over the constellation.

Placement runs a capacity-constrained Lloyd relaxation: cells are assigned
by power distance (squared Euclidean minus a per-site weight), weights are
nudged each iteration so every site's water volume approaches V_tot/N, and
sites move to the volume-weighted centroids of their regions. Routing is
plain A* over the beacon graph with the straight-line heuristic.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InputError
from .geo import BathymetryGrid, MissionPolygon, Point2D, cells_in_polygon

ETA = 0.5  # weight-update step size


@dataclass(frozen=True)
class DeploymentProblem:
    grid: BathymetryGrid
    poly: MissionPolygon
    n_beacons: int
    max_iterations: int = 100
    volume_tolerance: float = 0.05  # fraction of V_tot / N
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_beacons < 1:
            raise ValueError(f"n_beacons must be >= 1, got {self.n_beacons}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if not (0 < self.volume_tolerance < 1):
            raise ValueError(
                f"volume_tolerance must be in (0, 1), got {self.volume_tolerance}"
            )


@dataclass(frozen=True)
class CellAssignment:
    """Partition of the in-polygon water cells among sites.

    cell_rows/cell_cols index into the grid; site_of[i] is the owning site
    of cell i. Arrays are parallel and read-only.
    """

    cell_rows: np.ndarray
    cell_cols: np.ndarray
    site_of: np.ndarray
    n_sites: int

    def __post_init__(self):
        for name in ("cell_rows", "cell_cols", "site_of"):
            arr = np.asarray(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if not (len(self.cell_rows) == len(self.cell_cols) == len(self.site_of)):
            raise ValueError("assignment arrays must have equal length")


@dataclass(frozen=True)
class DeploymentResult:
    beacon_positions: tuple[Point2D, ...]
    beacon_depths: tuple[float, ...]  # local water depth at each beacon (m)
    cell_volumes: tuple[float, ...]  # V_n per beacon (m^3)
    v_tot: float
    objective: float  # mean absolute deviation of V_n from V_tot/N (m^3)
    iterations_used: int
    converged: bool
    site_weights: tuple[float, ...]  # final power weights, for recounting


@dataclass(frozen=True)
class BeaconGraph:
    """Undirected beacon graph; an edge joins every pair within link range."""

    positions: tuple[Point2D, ...]
    coverage_link_distance: float
    adjacency: tuple[tuple[tuple[int, float], ...], ...] = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.coverage_link_distance <= 0:
            raise ValueError(
                f"coverage_link_distance must be > 0, got {self.coverage_link_distance}"
            )
        adj: list[list[tuple[int, float]]] = [[] for _ in self.positions]
        for i in range(len(self.positions)):
            for j in range(i + 1, len(self.positions)):
                d = self.positions[i].distance_to(self.positions[j])
                if d <= self.coverage_link_distance:
                    adj[i].append((j, d))
                    adj[j].append((i, d))
        object.__setattr__(self, "adjacency", tuple(tuple(n) for n in adj))

    @property
    def edges(self) -> tuple[tuple[int, int, float], ...]:
        out = []
        for i, nbrs in enumerate(self.adjacency):
            for j, d in nbrs:
                if i < j:
                    out.append((i, j, d))
        return tuple(out)


def objective(volumes: Sequence[float], v_tot: float) -> float:
    """Mean absolute deviation of the per-site volumes from v_tot / N."""
    if len(volumes) == 0:
        raise ValueError("volume list is empty")
    target = v_tot / len(volumes)
    return float(sum(abs(v - target) for v in volumes) / len(volumes))


def _candidate_cells(grid: BathymetryGrid, poly: MissionPolygon):
    """Arrays (rows, cols, xs, ys, vols) of the in-polygon water cells."""
    mask = cells_in_polygon(grid, poly) & grid.valid_mask
    rows, cols = np.nonzero(mask)
    xs = grid.origin_x + (cols + 0.5) * grid.cell_size
    ys = grid.origin_y + (grid.n_rows - rows - 0.5) * grid.cell_size
    vols = grid.depth[rows, cols] * grid.cell_size**2
    return rows, cols, xs, ys, vols


def _power_assign(xs, ys, sx, sy, weights) -> np.ndarray:
    # power distance ||c - s||^2 - w; ties go to the lowest site index
    d2 = (xs[:, None] - sx[None, :]) ** 2 + (ys[:, None] - sy[None, :]) ** 2
    return np.argmin(d2 - weights[None, :], axis=1)


def assign_cells(
    sites: Sequence[Point2D],
    weights: Sequence[float],
    grid: BathymetryGrid,
    poly: MissionPolygon,
) -> CellAssignment:
    """Assign every in-polygon water cell to the site with the smallest
    power distance (squared distance minus the site's weight)."""
    if len(sites) == 0:
        raise ValueError("sites list is empty")
    if len(weights) != len(sites):
        raise ValueError(f"{len(weights)} weights for {len(sites)} sites")
    rows, cols, xs, ys, _ = _candidate_cells(grid, poly)
    sx = np.array([s.x for s in sites])
    sy = np.array([s.y for s in sites])
    site_of = _power_assign(xs, ys, sx, sy, np.asarray(weights, dtype=float))
    return CellAssignment(rows, cols, site_of, len(sites))


def region_volumes(assignment: CellAssignment, grid: BathymetryGrid) -> np.ndarray:
    """Water volume (m^3) owned by each site under the assignment."""
    vols = grid.depth[assignment.cell_rows, assignment.cell_cols] * grid.cell_size**2
    return np.bincount(assignment.site_of, weights=vols, minlength=assignment.n_sites)


def _farthest_point_seed(xs, ys, n, rng) -> np.ndarray:
    """Pick n candidate-cell indices: random first, then repeatedly the cell
    farthest from all picks so far (ties to the lowest index)."""
    first = int(rng.integers(len(xs)))
    picked = [first]
    min_d2 = (xs - xs[first]) ** 2 + (ys - ys[first]) ** 2
    for _ in range(1, n):
        nxt = int(np.argmax(min_d2))
        picked.append(nxt)
        d2 = (xs - xs[nxt]) ** 2 + (ys - ys[nxt]) ** 2
        np.minimum(min_d2, d2, out=min_d2)
    return np.array(picked)


def _mean_site_spacing(sx, sy) -> float:
    # mean nearest-neighbor distance between sites
    d2 = (sx[:, None] - sx[None, :]) ** 2 + (sy[:, None] - sy[None, :]) ** 2
    np.fill_diagonal(d2, np.inf)
    return float(np.mean(np.sqrt(d2.min(axis=1))))


def lloyd_deploy(problem: DeploymentProblem) -> DeploymentResult:
    """Place n_beacons sites so their water volumes balance toward V_tot/N.

    Each iteration updates the power weights from the current volume
    imbalance, moves every site to the volume-weighted centroid of its
    region (snapped to the nearest in-polygon water cell center), then
    reassigns and checks the balance objective against the tolerance.
    Deterministic for a fixed rng_seed.
    """
    grid, poly, n = problem.grid, problem.poly, problem.n_beacons
    rows, cols, xs, ys, vols = _candidate_cells(grid, poly)
    if len(xs) < n:
        raise InputError(
            f"{n} beacons requested but only {len(xs)} water cells lie in the polygon"
        )

    rng = np.random.default_rng(problem.rng_seed)
    seed_idx = _farthest_point_seed(xs, ys, n, rng)
    sx = xs[seed_idx].copy()
    sy = ys[seed_idx].copy()
    weights = np.zeros(n)

    site_of = _power_assign(xs, ys, sx, sy, weights)
    volumes = np.bincount(site_of, weights=vols, minlength=n)
    converged = False
    iterations_used = 0
    for it in range(1, problem.max_iterations + 1):
        iterations_used = it
        target = float(np.sum(volumes)) / n
        if n > 1:
            spacing = _mean_site_spacing(sx, sy)
            weights = weights + ETA * (target - volumes) / target * spacing**2
        for i in range(n):
            in_region = site_of == i
            w = vols[in_region]
            if w.sum() > 0:
                cx = float(np.sum(w * xs[in_region]) / w.sum())
                cy = float(np.sum(w * ys[in_region]) / w.sum())
                # snap to the nearest deployable water cell center
                nearest = int(np.argmin((xs - cx) ** 2 + (ys - cy) ** 2))
                sx[i] = xs[nearest]
                sy[i] = ys[nearest]
        site_of = _power_assign(xs, ys, sx, sy, weights)
        volumes = np.bincount(site_of, weights=vols, minlength=n)
        obj = objective(volumes.tolist(), float(np.sum(volumes)))
        if obj <= problem.volume_tolerance * (float(np.sum(volumes)) / n):
            converged = True
            break

    volume_list = volumes.tolist()
    v_tot = float(np.sum(volumes))
    depths = []
    for i in range(n):
        cell = int(np.argmin((xs - sx[i]) ** 2 + (ys - sy[i]) ** 2))
        depths.append(float(grid.depth[rows[cell], cols[cell]]))
    return DeploymentResult(
        beacon_positions=tuple(Point2D(float(x), float(y)) for x, y in zip(sx, sy)),
        beacon_depths=tuple(depths),
        cell_volumes=tuple(volume_list),
        v_tot=v_tot,
        objective=objective(volume_list, v_tot),
        iterations_used=iterations_used,
        converged=converged,
        site_weights=tuple(float(w) for w in weights),
    )


# ---------------------------------------------------------------------------
# Beacon graph and routing
# ---------------------------------------------------------------------------

def build_beacon_graph(
    result: DeploymentResult, coverage_link_distance: float
) -> BeaconGraph:
    return BeaconGraph(result.beacon_positions, coverage_link_distance)


def astar_route(graph: BeaconGraph, start: int, goal: int) -> list[int]:
    """Minimum-total-length beacon sequence from start to goal.

    Straight-line distance to the goal is the heuristic. Returns [] when
    the goal is unreachable.
    """
    n = len(graph.positions)
    for node, label in ((start, "start"), (goal, "goal")):
        if not (0 <= node < n):
            raise InputError(f"{label} index {node} outside graph of {n} nodes")
    if start == goal:
        return [start]
    gp = graph.positions[goal]

    def h(i: int) -> float:
        return graph.positions[i].distance_to(gp)

    best_g = {start: 0.0}
    parent: dict[int, int] = {}
    counter = 0
    frontier: list[tuple[float, float, int, int]] = [(h(start), 0.0, counter, start)]
    done: set[int] = set()
    while frontier:
        _, g, _, node = heapq.heappop(frontier)
        if node in done:
            continue
        if node == goal:
            route = [node]
            while route[-1] != start:
                route.append(parent[route[-1]])
            return route[::-1]
        done.add(node)
        for nbr, d in graph.adjacency[node]:
            ng = g + d
            if nbr not in best_g or ng < best_g[nbr]:
                best_g[nbr] = ng
                parent[nbr] = node
                counter += 1
                heapq.heappush(frontier, (ng + h(nbr), ng, counter, nbr))
    return []


def route_length(graph: BeaconGraph, route: Sequence[int]) -> float:
    total = 0.0
    for a, b in zip(route, route[1:]):
        total += graph.positions[a].distance_to(graph.positions[b])
    return total


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def deployment_to_geojson(
    result: DeploymentResult, graph: BeaconGraph
) -> dict:
    """FeatureCollection of beacon Points (id, volume, depth) plus one
    MultiLineString carrying the beacon-graph links."""
    features = []
    for i, (p, v, depth) in enumerate(
        zip(result.beacon_positions, result.cell_volumes, result.beacon_depths)
    ):
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [p.x, p.y]},
                "properties": {
                    "id": f"b{i + 1}",
                    "volume_m3": v,
                    "depth_m": depth,
                    "depth_mode": "seafloor",
                },
            }
        )
    lines = [
        [
            [graph.positions[i].x, graph.positions[i].y],
            [graph.positions[j].x, graph.positions[j].y],
        ]
        for i, j, _ in graph.edges
    ]
    features.append(
        {
            "type": "Feature",
            "geometry": {"type": "MultiLineString", "coordinates": lines},
            "properties": {
                "role": "beacon-links",
                "coverage_link_distance_m": graph.coverage_link_distance,
            },
        }
    )
    return {"type": "FeatureCollection", "features": features}
