"""Scenario configuration loading and validation.

A scenario is a YAML file naming the input fixtures (bathymetry grid,
mission polygon, beacon chart, planning domain), the fleet roster with
one plan problem per vehicle, the world constants, and the seed.  All
relative paths are resolved against the YAML file's own directory so a
scenario can be run from anywhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml

from .errors import GeoJsonError, InputError
from .geo import Point2D
from .sim.world import BeaconState, WorldParams


@dataclass(frozen=True)
class DeployParams:
    n_beacons: int = 5
    max_iterations: int = 100
    volume_tolerance: float = 0.05


@dataclass(frozen=True)
class UuvSpec:
    id: str
    start: Point2D
    problem: Path


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int
    output_dir: Path
    bathymetry: Path
    mission_area: Path
    beacons: Path
    domain: Path
    deployment: DeployParams
    world: WorldParams
    uuvs: tuple[UuvSpec, ...]
    inactive_beacons: tuple[str, ...] = ()


def _require(mapping: dict, key: str, context: str) -> Any:
    if key not in mapping:
        raise InputError(f"{context}: missing required field {key!r}")
    return mapping[key]


def _as_point(value: Any, context: str) -> Point2D:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(c, (int, float)) for c in value)
    ):
        raise InputError(f"{context}: expected [x, y], got {value!r}")
    return Point2D(float(value[0]), float(value[1]))


def _resolve(base: Path, value: Any, context: str, must_exist: bool = True) -> Path:
    if not isinstance(value, str) or not value:
        raise InputError(f"{context}: expected a path string, got {value!r}")
    path = (base / value).resolve() if not Path(value).is_absolute() else Path(value)
    if must_exist and not path.exists():
        raise InputError(f"{context}: path does not exist: {path}")
    return path


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Load and validate a scenario file.

    Every referenced input path must exist at load time, and the seed
    must be stated explicitly so reruns are reproducible.
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"scenario file does not exist: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise InputError(f"{path}: not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise InputError(f"{path}: scenario must be a mapping")
    base = path.parent

    seed = _require(raw, "seed", str(path))
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise InputError(f"{path}: seed must be an integer, got {seed!r}")

    out_value = _require(raw, "output_dir", str(path))
    if not isinstance(out_value, str) or not out_value:
        raise InputError(f"{path}: output_dir must be a path string")
    output_dir = (base / out_value).resolve() if not Path(out_value).is_absolute() else Path(out_value)

    paths = _require(raw, "paths", str(path))
    if not isinstance(paths, dict):
        raise InputError(f"{path}: paths must be a mapping")
    bathymetry = _resolve(base, _require(paths, "bathymetry", "paths"), "paths.bathymetry")
    mission_area = _resolve(base, _require(paths, "mission_area", "paths"), "paths.mission_area")
    beacons = _resolve(base, _require(paths, "beacons", "paths"), "paths.beacons")
    domain = _resolve(base, _require(paths, "domain", "paths"), "paths.domain")

    deployment = DeployParams()
    if "deployment" in raw:
        dep = raw["deployment"]
        if not isinstance(dep, dict):
            raise InputError(f"{path}: deployment must be a mapping")
        deployment = DeployParams(
            n_beacons=int(dep.get("n_beacons", deployment.n_beacons)),
            max_iterations=int(dep.get("max_iterations", deployment.max_iterations)),
            volume_tolerance=float(dep.get("volume_tolerance", deployment.volume_tolerance)),
        )
        if deployment.n_beacons < 1:
            raise InputError(f"{path}: deployment.n_beacons must be at least 1")

    world_raw = raw.get("world", {})
    if not isinstance(world_raw, dict):
        raise InputError(f"{path}: world must be a mapping")
    defaults = WorldParams()
    known = set(defaults.__dataclass_fields__)
    unknown = set(world_raw) - known
    if unknown:
        raise InputError(
            f"{path}: unknown world parameter(s): {', '.join(sorted(unknown))}"
        )
    current = world_raw.get("current", list(defaults.current))
    current_pt = _as_point(current, f"{path}: world.current")
    world = WorldParams(
        **{
            name: type(getattr(defaults, name))(world_raw[name])
            for name in known - {"current"}
            if name in world_raw
        },
        current=(current_pt.x, current_pt.y),
    )

    uuvs_raw = _require(raw, "uuvs", str(path))
    if not isinstance(uuvs_raw, list) or not uuvs_raw:
        raise InputError(f"{path}: uuvs must be a non-empty list")
    uuvs: list[UuvSpec] = []
    seen_ids: set[str] = set()
    for i, entry in enumerate(uuvs_raw):
        if not isinstance(entry, dict):
            raise InputError(f"{path}: uuvs[{i}] must be a mapping")
        uuv_id = _require(entry, "id", f"uuvs[{i}]")
        if not isinstance(uuv_id, str) or not uuv_id:
            raise InputError(f"{path}: uuvs[{i}].id must be a non-empty string")
        if uuv_id in seen_ids:
            raise InputError(f"{path}: duplicate vehicle id {uuv_id!r}")
        seen_ids.add(uuv_id)
        start = _as_point(_require(entry, "start", f"uuvs[{i}]"), f"uuvs[{i}].start")
        problem = _resolve(base, _require(entry, "problem", f"uuvs[{i}]"), f"uuvs[{i}].problem")
        uuvs.append(UuvSpec(id=uuv_id, start=start, problem=problem))

    inactive = raw.get("inactive_beacons", [])
    if not isinstance(inactive, list) or not all(isinstance(b, str) for b in inactive):
        raise InputError(f"{path}: inactive_beacons must be a list of beacon ids")

    return ScenarioConfig(
        seed=seed,
        output_dir=output_dir,
        bathymetry=bathymetry,
        mission_area=mission_area,
        beacons=beacons,
        domain=domain,
        deployment=deployment,
        world=world,
        uuvs=tuple(uuvs),
        inactive_beacons=tuple(inactive),
    )


def load_beacons(path: str | Path, params: Optional[WorldParams] = None) -> list[BeaconState]:
    """Read a beacon chart from a GeoJSON FeatureCollection of points.

    Each feature needs an ``id`` property; ``active``, ``acoustic_range``
    and ``pulse_period`` are optional overrides, defaulting to the world
    parameters.
    """
    params = params or WorldParams()
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise GeoJsonError(f"{path}: {exc}") from exc
    if not isinstance(data, dict) or data.get("type") != "FeatureCollection":
        raise GeoJsonError(f"{path}: expected a FeatureCollection")
    beacons: list[BeaconState] = []
    seen: set[str] = set()
    for i, feature in enumerate(data.get("features", [])):
        geom = feature.get("geometry") or {}
        if geom.get("type") != "Point":
            raise GeoJsonError(f"{path}: feature {i} is not a Point")
        coords = geom.get("coordinates")
        if not isinstance(coords, list) or len(coords) < 2:
            raise GeoJsonError(f"{path}: feature {i} has malformed coordinates")
        props = feature.get("properties") or {}
        beacon_id = props.get("id")
        if not isinstance(beacon_id, str) or not beacon_id:
            raise GeoJsonError(f"{path}: feature {i} is missing an 'id' property")
        if beacon_id in seen:
            raise GeoJsonError(f"{path}: duplicate beacon id {beacon_id!r}")
        seen.add(beacon_id)
        beacons.append(
            BeaconState(
                id=beacon_id,
                position=Point2D(float(coords[0]), float(coords[1])),
                active=bool(props.get("active", True)),
                acoustic_range=float(props.get("acoustic_range", params.acoustic_range)),
                pulse_period=float(props.get("pulse_period", params.pulse_period)),
            )
        )
    if not beacons:
        raise GeoJsonError(f"{path}: no beacon features found")
    return beacons
