"""Bathymetry rasters, mission polygons, and water-volume integration.

Coordinates are planar projected meters; inputs must be pre-projected
(no geodetic handling here). Depths are positive downward, in meters of
water below the datum; land and invalid cells carry the grid's nodata
sentinel. All objects are immutable after construction and the module's
operations are pure functions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import GeoJsonError, GridFormatError

_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")


@dataclass(frozen=True)
class Point2D:
    """A planar point in meters."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite coordinates ({self.x}, {self.y})")

    def distance_to(self, other: "Point2D") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class BathymetryGrid:
    """Raster of water depths; row 0 is the top (northernmost) row.

    origin_x / origin_y are the lower-left corner of the raster, matching
    the ESRI ASCII convention.
    """

    origin_x: float
    origin_y: float
    cell_size: float
    n_rows: int
    n_cols: int
    depth: np.ndarray  # shape (n_rows, n_cols), read-only
    nodata_value: float

    def __post_init__(self):
        if self.cell_size <= 0:
            raise ValueError(f"cell_size must be > 0, got {self.cell_size}")
        arr = np.asarray(self.depth, dtype=float)
        if arr.size != self.n_rows * self.n_cols:
            raise ValueError(
                f"depth array has {arr.size} values, expected "
                f"{self.n_rows}x{self.n_cols}={self.n_rows * self.n_cols}"
            )
        arr = arr.reshape(self.n_rows, self.n_cols).copy()
        valid = arr != self.nodata_value
        if np.any(arr[valid] < 0):
            raise ValueError("negative depth in a non-nodata cell")
        arr.flags.writeable = False
        object.__setattr__(self, "depth", arr)

    @property
    def valid_mask(self) -> np.ndarray:
        return self.depth != self.nodata_value

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Center coordinates of every cell as (xs, ys), shape (n_rows, n_cols)."""
        cols = np.arange(self.n_cols)
        rows = np.arange(self.n_rows)
        xs = self.origin_x + (cols + 0.5) * self.cell_size
        ys = self.origin_y + (self.n_rows - rows - 0.5) * self.cell_size
        return np.broadcast_to(xs, (self.n_rows, self.n_cols)), np.broadcast_to(
            ys[:, None], (self.n_rows, self.n_cols)
        )


@dataclass(frozen=True)
class MissionPolygon:
    """Simple (non-self-intersecting) polygon, implicitly closed."""

    vertices: tuple[Point2D, ...]

    def __post_init__(self):
        verts = tuple(self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 3:
            raise ValueError(f"polygon needs at least 3 vertices, got {len(verts)}")
        n = len(verts)
        for i in range(n):
            a, b = verts[i], verts[(i + 1) % n]
            if a.x == b.x and a.y == b.y:
                raise ValueError(f"consecutive duplicate vertex at index {i}")
        for i in range(n):
            for j in range(i + 1, n):
                # skip edges sharing a vertex
                if j == i or (j + 1) % n == i or (i + 1) % n == j:
                    continue
                if _segments_cross(verts[i], verts[(i + 1) % n], verts[j], verts[(j + 1) % n]):
                    raise ValueError(f"edges {i} and {j} intersect")


def _segments_cross(p1: Point2D, p2: Point2D, q1: Point2D, q2: Point2D) -> bool:
    def orient(a, b, c):
        v = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
        return 0 if v == 0 else (1 if v > 0 else -1)

    o1 = orient(p1, p2, q1)
    o2 = orient(p1, p2, q2)
    o3 = orient(q1, q2, p1)
    o4 = orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True

    def on_seg(a, b, c):
        return (
            orient(a, b, c) == 0
            and min(a.x, b.x) <= c.x <= max(a.x, b.x)
            and min(a.y, b.y) <= c.y <= max(a.y, b.y)
        )

    return on_seg(p1, p2, q1) or on_seg(p1, p2, q2) or on_seg(q1, q2, p1) or on_seg(q1, q2, p2)


def point_in_polygon(p: Point2D, poly: MissionPolygon) -> bool:
    """Even-odd ray-casting membership test; boundary points count as inside."""
    verts = poly.vertices
    n = len(verts)
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
        if (
            cross == 0
            and min(a.x, b.x) <= p.x <= max(a.x, b.x)
            and min(a.y, b.y) <= p.y <= max(a.y, b.y)
        ):
            return True
    inside = False
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        if (a.y > p.y) != (b.y > p.y):
            x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y)
            if p.x < x_cross:
                inside = not inside
    return inside


def cells_in_polygon(grid: BathymetryGrid, poly: MissionPolygon) -> np.ndarray:
    """Boolean mask over grid cells whose centers lie inside poly.

    Vectorized twin of point_in_polygon with the identical boundary rule.
    """
    xs, ys = grid.cell_centers()
    xs = xs.ravel()
    ys = ys.ravel()
    inside = np.zeros(xs.shape, dtype=bool)
    boundary = np.zeros(xs.shape, dtype=bool)
    verts = poly.vertices
    n = len(verts)
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        cross = (b.x - a.x) * (ys - a.y) - (b.y - a.y) * (xs - a.x)
        on = (
            (cross == 0)
            & (xs >= min(a.x, b.x))
            & (xs <= max(a.x, b.x))
            & (ys >= min(a.y, b.y))
            & (ys <= max(a.y, b.y))
        )
        boundary |= on
        straddles = (a.y > ys) != (b.y > ys)
        if a.y != b.y:
            x_cross = a.x + (ys - a.y) * (b.x - a.x) / (b.y - a.y)
            inside ^= straddles & (xs < x_cross)
    return (inside | boundary).reshape(grid.n_rows, grid.n_cols)


def volume_under_polygon(grid: BathymetryGrid, poly: MissionPolygon) -> float:
    """Total water volume (m^3) of non-nodata cells whose centers lie in poly."""
    mask = cells_in_polygon(grid, poly) & grid.valid_mask
    if not mask.any():
        return 0.0
    return float(np.sum(grid.depth[mask]) * grid.cell_size**2)


# ---------------------------------------------------------------------------
# ESRI ASCII grid I/O
# ---------------------------------------------------------------------------

def load_ascii_grid(text: str) -> BathymetryGrid:
    """Parse an ESRI ASCII grid (ncols/nrows/xllcorner/yllcorner/cellsize/
    NODATA_value header, then row-major values, top row first)."""
    header: dict[str, float] = {}
    values: list[float] = []
    lines = text.splitlines()
    line_no = 0
    for line_no, raw in enumerate(lines, start=1):
        tokens = raw.split()
        if not tokens:
            continue
        if len(header) < len(_HEADER_KEYS):
            key = tokens[0].lower()
            if key not in _HEADER_KEYS:
                raise GridFormatError(
                    f"unexpected header key {tokens[0]!r} (expected one of "
                    f"{', '.join(_HEADER_KEYS)})",
                    line_no,
                )
            if len(tokens) != 2:
                raise GridFormatError(f"header line needs exactly one value, got {tokens[1:]}", line_no)
            try:
                header[key] = float(tokens[1])
            except ValueError:
                raise GridFormatError(f"non-numeric header value {tokens[1]!r}", line_no) from None
        else:
            for tok in tokens:
                try:
                    values.append(float(tok))
                except ValueError:
                    raise GridFormatError(f"non-numeric grid value {tok!r}", line_no) from None
    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise GridFormatError(f"missing header keys: {', '.join(missing)}", line_no or 1)
    n_cols = int(header["ncols"])
    n_rows = int(header["nrows"])
    if n_cols <= 0 or n_rows <= 0:
        raise GridFormatError(f"ncols/nrows must be positive, got {n_cols}x{n_rows}", 1)
    expected = n_rows * n_cols
    if len(values) != expected:
        raise GridFormatError(
            f"expected {expected} grid values ({n_rows}x{n_cols}), got {len(values)}",
            line_no or 1,
        )
    try:
        return BathymetryGrid(
            origin_x=header["xllcorner"],
            origin_y=header["yllcorner"],
            cell_size=header["cellsize"],
            n_rows=n_rows,
            n_cols=n_cols,
            depth=np.array(values, dtype=float),
            nodata_value=header["nodata_value"],
        )
    except ValueError as exc:
        raise GridFormatError(str(exc), 1) from None


def write_ascii_grid(grid: BathymetryGrid) -> str:
    """Serialize back to ESRI ASCII; load_ascii_grid round-trips exactly."""
    out = [
        f"ncols {grid.n_cols}",
        f"nrows {grid.n_rows}",
        f"xllcorner {grid.origin_x!r}",
        f"yllcorner {grid.origin_y!r}",
        f"cellsize {grid.cell_size!r}",
        f"NODATA_value {grid.nodata_value!r}",
    ]
    for row in grid.depth:
        out.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# GeoJSON polygon input
# ---------------------------------------------------------------------------

def polygon_from_geojson(text: str) -> MissionPolygon:
    """Read a GeoJSON Polygon (bare geometry, Feature, or single-feature
    FeatureCollection). Only the exterior ring is accepted; holes are an error."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GeoJsonError(f"not valid JSON: {exc}") from None
    geom = obj
    if geom.get("type") == "FeatureCollection":
        feats = geom.get("features", [])
        if len(feats) != 1:
            raise GeoJsonError(f"expected exactly one feature, got {len(feats)}")
        geom = feats[0]
    if geom.get("type") == "Feature":
        geom = geom.get("geometry") or {}
    if geom.get("type") != "Polygon":
        raise GeoJsonError(f"expected a Polygon geometry, got {geom.get('type')!r}")
    rings = geom.get("coordinates", [])
    if not rings:
        raise GeoJsonError("polygon has no rings")
    if len(rings) > 1:
        raise GeoJsonError(f"polygon has {len(rings) - 1} hole(s); holes are not supported")
    ring = rings[0]
    if ring and ring[0] == ring[-1]:
        ring = ring[:-1]
    try:
        verts = tuple(Point2D(float(x), float(y)) for x, y in ring)
    except (TypeError, ValueError) as exc:
        raise GeoJsonError(f"bad ring coordinates: {exc}") from None
    try:
        return MissionPolygon(verts)
    except ValueError as exc:
        raise GeoJsonError(str(exc)) from None
