"""Execution monitoring and in-mission replanning.

Every leg of a plan that approaches a beacon carries an expectation:
a time window in which a detection of that beacon should appear in the
event stream.  The window is projected from leg distance, vehicle speed,
and a margin that widens with dead-reckoning uncertainty, plus one pulse
period of slack at the tail.  A window that closes without a matching
detection is a divergence: the affected vehicle marks the beacon
unreachable, shares that fact with every fleet mate in comm range, and
each of them replans from its current belief against its original task
network.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .errors import PlanNotFound, SimulationError
from .geo import Point2D
from .hddl.ast import Literal, TaskNetwork
from .hddl.ground import GroundAction, GroundTables
from .htn.planner import plan
from .sim.world import Event, UUVState, WorldParams, WorldState

# Actions whose projected duration cannot be known ahead of time.
# Expectation projection stops at the first one.
_UNPREDICTABLE = ("await-broadcast", "navigate-to-broadcast")
_MOVE_ACTIONS = ("navigate-to-beacon", "transit-leg")


@dataclass
class Expectation:
    """A detection window for one beacon-approach leg of a plan."""

    uuv_id: str
    beacon_id: str
    step_index: int
    earliest: float
    latest: float
    met: bool = False
    fired: bool = False


@dataclass(frozen=True)
class DivergenceRecord:
    time: float
    uuv_id: str
    beacon_id: str
    step_index: int
    window_close: float


@dataclass
class PlanningSetup:
    """What a vehicle needs to replan: ground tables, its original
    task network, and the optional goal formula."""

    tables: GroundTables
    network: TaskNetwork
    goal: Optional[Sequence[Literal]] = None


def derive_expectations(
    steps: Sequence[GroundAction],
    uuv: UUVState,
    params: WorldParams,
    start_time: float,
    beacon_positions: Mapping[str, Point2D],
) -> list[Expectation]:
    """Project detection windows for every beacon-approach leg.

    Position, uncertainty, and elapsed time are chained through the
    plan: each leg starts where the previous one nominally ends.  Legs
    after an action of unknown duration get no expectation.
    """
    expectations: list[Expectation] = []
    cursor = uuv.estimated_position
    uncertainty = uuv.position_uncertainty
    anchor = start_time
    circle_ticks = max(
        1,
        math.ceil(
            2.0 * math.pi * params.standoff_radius
            / max(uuv.speed * params.tick, 1e-12)
        ),
    )
    for index, action in enumerate(steps):
        if action.name in _UNPREDICTABLE:
            break
        if action.name in _MOVE_ACTIONS:
            target = beacon_positions.get(action.args[1])
            if target is None:
                raise SimulationError(f"no position known for beacon {action.args[1]!r}")
            distance = cursor.distance_to(target)
            if distance > 0 and uuv.speed <= 0:
                raise SimulationError(
                    f"{uuv.id}: leg of {distance:.1f} m is inexecutable at zero speed"
                )
            nominal = distance / uuv.speed if distance > 0 else 0.0
            if action.name == "navigate-to-beacon":
                if distance > 0:
                    margin = params.margin_base * (1.0 + uncertainty / distance)
                    earliest = anchor + nominal * (1.0 - margin)
                    latest = anchor + nominal * (1.0 + margin) + params.pulse_period
                else:
                    # Already on top of the beacon: a pulse is due within
                    # one period.
                    earliest = anchor
                    latest = anchor + params.pulse_period
                expectations.append(
                    Expectation(
                        uuv_id=uuv.id,
                        beacon_id=action.args[1],
                        step_index=index,
                        earliest=earliest,
                        latest=latest,
                    )
                )
            anchor += nominal
            uncertainty += params.drift_rate * distance
            cursor = target
        elif action.name == "sense-beacon":
            anchor += params.pulse_period
        elif action.name == "circle-localize":
            anchor += circle_ticks * params.tick
            uncertainty = params.localization_floor
        else:
            anchor += params.tick
    return expectations


def derive_expectations_for_world(
    steps: Sequence[GroundAction],
    uuv: UUVState,
    world: WorldState,
    start_time: float,
) -> list[Expectation]:
    """derive_expectations with beacon positions taken from the world."""
    positions = {b.id: b.position for b in world.beacons}
    return derive_expectations(steps, uuv, world.params, start_time, positions)


def note_detection(
    expectations: Iterable[Expectation], uuv_id: str, beacon_id: str, time: float
) -> None:
    """Mark every open expectation satisfied by this detection."""
    for exp in expectations:
        if exp.uuv_id == uuv_id and exp.beacon_id == beacon_id and not exp.fired:
            if time <= exp.latest:
                exp.met = True


def check(expectations: Iterable[Expectation], sim_time: float) -> list[DivergenceRecord]:
    """Return a record for every window that closed without a detection."""
    records: list[DivergenceRecord] = []
    for exp in expectations:
        if exp.met or exp.fired:
            continue
        if sim_time > exp.latest:
            exp.fired = True
            records.append(
                DivergenceRecord(
                    time=sim_time,
                    uuv_id=exp.uuv_id,
                    beacon_id=exp.beacon_id,
                    step_index=exp.step_index,
                    window_close=exp.latest,
                )
            )
    return records


def replan_episode(
    record: DivergenceRecord,
    world: WorldState,
    setups: Mapping[str, PlanningSetup],
) -> tuple[list[Event], dict[str, list[Expectation]]]:
    """Handle one divergence: share the bad news and replan the fleet.

    The unreachable fact is merged into the belief of the divergent
    vehicle and of every active vehicle within comm range of it, and
    each of those vehicles replans from its updated belief against its
    original task network.  Vehicles that cannot find a plan fail their
    mission; the rest of the fleet is unaffected.

    Returns the events produced and fresh expectations for every
    vehicle whose plan changed.
    """
    events: list[Event] = []
    new_expectations: dict[str, list[Expectation]] = {}
    divergent = world.uuv(record.uuv_id)
    unreachable = ("beacon-unreachable", record.beacon_id)

    if divergent.status == "active" and not divergent.queue:
        events.append(
            Event(
                time=world.sim_time,
                kind="warning",
                subject=divergent.id,
                payload={
                    "message": f"divergence on {record.beacon_id} with no plan left to revise"
                },
            )
        )
        return events, new_expectations

    affected: list[UUVState] = []
    for uuv in world.uuvs:
        if uuv.status != "active":
            continue
        if uuv.id == divergent.id:
            affected.append(uuv)
            continue
        if uuv.true_position.distance_to(divergent.true_position) <= world.params.comm_range:
            affected.append(uuv)
    affected.sort(key=lambda u: u.id)

    for uuv in affected:
        uuv.belief.add(unreachable)
        setup = setups.get(uuv.id)
        if setup is None:
            raise SimulationError(f"no planning setup for vehicle {uuv.id!r}")
        uuv.queue.clear()
        uuv.action_started = False
        uuv.circle = None
        try:
            new_plan = plan(
                setup.tables, frozenset(uuv.belief), setup.network, setup.goal
            )
        except PlanNotFound as exc:
            uuv.status = "failed"
            events.append(
                Event(
                    time=world.sim_time,
                    kind="mission-failed",
                    subject=uuv.id,
                    payload={
                        "reason": f"no recovery plan without {record.beacon_id}: {exc}"
                    },
                )
            )
            new_expectations[uuv.id] = []
            continue
        uuv.queue = list(new_plan.steps)
        uuv.replan_count += 1
        events.append(
            Event(
                time=world.sim_time,
                kind="replan-triggered",
                subject=uuv.id,
                payload={
                    "beacon": record.beacon_id,
                    "plan_length": len(new_plan.steps),
                },
            )
        )
        new_expectations[uuv.id] = derive_expectations_for_world(
            new_plan.steps, uuv, world, world.sim_time
        )
    return events, new_expectations
