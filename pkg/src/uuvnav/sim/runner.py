"""Closed-loop scenario execution.

Wires the pieces together: parse the domain and one problem per
vehicle, plan each mission, build the initial world, then tick the
simulator while the monitor watches detection windows and triggers
replanning episodes.  The run produces an ordered event log, per-tick
position tracks, and a summary suitable for serialization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .. import monitor
from ..config import ScenarioConfig, load_beacons
from ..errors import InputError
from ..hddl.ground import ground
from ..hddl.parser import parse_domain, parse_problem
from ..htn.planner import plan
from .world import Event, UUVState, WorldState, step

EVENT_SCHEMA_VERSION = 1


@dataclass
class SimulationReport:
    world: WorldState
    events: list[Event]
    tracks: dict[str, dict[str, list[list[float]]]]
    summary: dict


def run_scenario(config: ScenarioConfig) -> SimulationReport:
    """Execute a scenario to completion (or to the step cap)."""
    domain = parse_domain(config.domain.read_text())
    beacons = load_beacons(config.beacons, config.world)
    beacon_ids = {b.id for b in beacons}
    for silenced in config.inactive_beacons:
        if silenced not in beacon_ids:
            raise InputError(f"inactive_beacons names unknown beacon {silenced!r}")
    for beacon in beacons:
        if beacon.id in config.inactive_beacons:
            beacon.active = False

    uuvs: list[UUVState] = []
    setups: dict[str, monitor.PlanningSetup] = {}
    initial_plans: dict[str, int] = {}
    for spec in sorted(config.uuvs, key=lambda s: s.id):
        problem = parse_problem(spec.problem.read_text(), domain)
        tables = ground(domain, problem)
        setups[spec.id] = monitor.PlanningSetup(
            tables=tables, network=problem.htn, goal=problem.goal
        )
        mission_plan = plan(tables, frozenset(problem.init), problem.htn, problem.goal)
        initial_plans[spec.id] = len(mission_plan.steps)
        uuvs.append(
            UUVState(
                id=spec.id,
                true_position=spec.start,
                estimated_position=spec.start,
                position_uncertainty=config.world.initial_uncertainty,
                heading=0.0,
                speed=config.world.uuv_speed,
                queue=list(mission_plan.steps),
                belief=set(problem.init),
            )
        )

    world = WorldState(
        sim_time=0.0,
        uuvs=uuvs,
        beacons=beacons,
        params=config.world,
        rng_seed=config.seed,
    )

    expectations: dict[str, list[monitor.Expectation]] = {
        uuv.id: monitor.derive_expectations_for_world(uuv.queue, uuv, world, 0.0)
        for uuv in world.uuvs
    }

    tracks: dict[str, dict[str, list[list[float]]]] = {
        uuv.id: {
            "true": [[uuv.true_position.x, uuv.true_position.y]],
            "estimated": [[uuv.estimated_position.x, uuv.estimated_position.y]],
        }
        for uuv in world.uuvs
    }

    events: list[Event] = []
    while any(u.status == "active" for u in world.uuvs):
        if world.ticks_run >= config.world.step_cap:
            break
        world, batch = step(world)
        for event in batch:
            if event.kind == "detection":
                monitor.note_detection(
                    expectations.get(event.subject, ()),
                    event.subject,
                    event.payload["beacon"],
                    event.time,
                )
        all_expectations = [e for exps in expectations.values() for e in exps]
        for record in monitor.check(all_expectations, world.sim_time):
            episode_events, new_expectations = monitor.replan_episode(
                record, world, setups
            )
            batch.extend(episode_events)
            expectations.update(new_expectations)
        batch.sort(key=Event.sort_key)
        events.extend(batch)
        for uuv in world.uuvs:
            tracks[uuv.id]["true"].append([uuv.true_position.x, uuv.true_position.y])
            tracks[uuv.id]["estimated"].append(
                [uuv.estimated_position.x, uuv.estimated_position.y]
            )

    kind_counts: dict[str, int] = {}
    for event in events:
        kind_counts[event.kind] = kind_counts.get(event.kind, 0) + 1
    summary = {
        "seed": config.seed,
        "sim_time": world.sim_time,
        "ticks": world.ticks_run,
        "all_missions_completed": all(u.status == "completed" for u in world.uuvs),
        "event_counts": dict(sorted(kind_counts.items())),
        "uuvs": {
            uuv.id: {
                "status": uuv.status,
                "replans": uuv.replan_count,
                "initial_plan_length": initial_plans[uuv.id],
                "final_estimated_position": [
                    uuv.estimated_position.x,
                    uuv.estimated_position.y,
                ],
                "final_true_position": [uuv.true_position.x, uuv.true_position.y],
                "position_uncertainty": uuv.position_uncertainty,
            }
            for uuv in world.uuvs
        },
    }
    return SimulationReport(world=world, events=events, tracks=tracks, summary=summary)


def event_to_json_line(event: Event) -> str:
    """One event as a compact JSON line with a schema version tag."""
    record = {
        "v": EVENT_SCHEMA_VERSION,
        "t": event.time,
        "kind": event.kind,
        "subject": event.subject,
    }
    record.update(event.payload)
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def tracks_to_geojson(report: SimulationReport) -> dict:
    """Per-vehicle true and estimated tracks as LineString features."""
    features = []
    for uuv_id in sorted(report.tracks):
        for role in ("true", "estimated"):
            features.append(
                {
                    "type": "Feature",
                    "properties": {"id": uuv_id, "role": role},
                    "geometry": {
                        "type": "LineString",
                        "coordinates": report.tracks[uuv_id][role],
                    },
                }
            )
    return {"type": "FeatureCollection", "features": features}
