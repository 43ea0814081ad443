"""World state and tick dynamics for the fleet simulator.

The world advances in fixed time steps.  Each step moves every vehicle
along its current plan action, scans for acoustic detections at pulse
instants, and emits a deterministic event stream.  There is no hidden
randomness: identical inputs produce identical event logs.

Vehicles navigate by dead reckoning.  The true position integrates the
commanded velocity plus the ambient current; the estimated position
integrates the commanded velocity only, so a nonzero current opens a gap
between the two.  Position uncertainty grows with distance travelled and
collapses to a small floor when a beacon fix completes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from ..errors import SimulationError
from ..geo import Point2D
from ..hddl.ground import GroundAction

# Action names with dedicated executor behaviour.  Anything else in a
# plan is treated as an instant action: it completes on its first tick.
_MOVE_TO_BEACON = ("navigate-to-beacon", "transit-leg")
_NAV_BROADCAST = "navigate-to-broadcast"
_SENSE = "sense-beacon"
_CIRCLE = "circle-localize"
_BROADCAST = "broadcast"
_AWAIT = "await-broadcast"


@dataclass
class WorldParams:
    """Physical and scheduling constants shared by every vehicle."""

    tick: float = 1.0
    step_cap: int = 5000
    uuv_speed: float = 2.0
    acoustic_range: float = 2000.0
    comm_range: float = 2000.0
    pulse_period: float = 10.0
    drift_rate: float = 0.02
    arrival_tolerance: float = 25.0
    standoff_radius: float = 50.0
    localization_floor: float = 5.0
    initial_uncertainty: float = 100.0
    margin_base: float = 0.5
    current: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if self.tick <= 0:
            raise SimulationError("tick must be positive")
        if self.uuv_speed < 0:
            raise SimulationError("uuv_speed must be non-negative")
        if self.pulse_period <= 0:
            raise SimulationError("pulse_period must be positive")
        if self.standoff_radius <= 0:
            raise SimulationError("standoff_radius must be positive")


@dataclass
class BeaconState:
    id: str
    position: Point2D
    active: bool = True
    acoustic_range: float = 2000.0
    pulse_period: float = 10.0


@dataclass
class UUVState:
    id: str
    true_position: Point2D
    estimated_position: Point2D
    position_uncertainty: float
    heading: float
    speed: float
    queue: list[GroundAction] = field(default_factory=list)
    belief: set[tuple[str, ...]] = field(default_factory=set)
    status: str = "active"
    action_started: bool = False
    action_start_time: float = 0.0
    broadcast_target: Optional[Point2D] = None
    replan_count: int = 0
    # Circle fix in progress: (beacon_id, theta0, ticks_done, ticks_total).
    circle: Optional[tuple[str, float, int, int]] = None
    last_detection: dict[str, float] = field(default_factory=dict)

    @property
    def current_action(self) -> Optional[GroundAction]:
        return self.queue[0] if self.queue else None


@dataclass
class Event:
    """One timestamped occurrence in the simulation log."""

    time: float
    kind: str
    subject: str
    payload: dict

    def sort_key(self) -> tuple[float, str]:
        return (self.time, self.subject)


@dataclass
class WorldState:
    sim_time: float
    uuvs: list[UUVState]
    beacons: list[BeaconState]
    params: WorldParams
    rng_seed: int = 0
    ticks_run: int = 0

    def uuv(self, uuv_id: str) -> UUVState:
        for u in self.uuvs:
            if u.id == uuv_id:
                return u
        raise SimulationError(f"unknown vehicle id {uuv_id!r}")

    def beacon(self, beacon_id: str) -> BeaconState:
        for b in self.beacons:
            if b.id == beacon_id:
                return b
        raise SimulationError(f"unknown beacon id {beacon_id!r}")


def sense_beacon(uuv: UUVState, beacon: BeaconState, sim_time: float) -> bool:
    """True when the vehicle hears this beacon's pulse at sim_time.

    A pulse is heard only at whole pulse instants, only from an active
    beacon, and only when the true (not estimated) position lies within
    the beacon's acoustic range.
    """
    if not beacon.active:
        return False
    period = beacon.pulse_period
    # Pulses fire at integer multiples of the period.
    k = round(sim_time / period)
    if abs(sim_time - k * period) > 1e-9:
        return False
    return uuv.true_position.distance_to(beacon.position) <= beacon.acoustic_range


def circle_localize(uuv: UUVState, beacon: BeaconState, params: WorldParams) -> UUVState:
    """Apply the state update for a completed standoff circle.

    The vehicle holds the standoff radius around the beacon under
    continuous acoustic feedback, so on completion its estimate is pinned
    to the exit point of the circle and the uncertainty collapses to the
    localization floor.
    """
    if uuv.circle is None:
        raise SimulationError(f"{uuv.id}: no circle fix in progress")
    _, theta0, ticks_done, ticks_total = uuv.circle
    omega = uuv.speed / params.standoff_radius
    theta = theta0 + omega * ticks_total * params.tick
    exit_point = Point2D(
        beacon.position.x + params.standoff_radius * math.cos(theta),
        beacon.position.y + params.standoff_radius * math.sin(theta),
    )
    uuv.true_position = exit_point
    uuv.estimated_position = exit_point
    uuv.position_uncertainty = params.localization_floor
    uuv.circle = None
    return uuv


def broadcast(sender: UUVState, world: WorldState) -> list[Event]:
    """Deliver a one-shot acoustic message to every vehicle in comm range.

    Receivers gain the sender's reported add effects plus a fact that
    they heard the message, and record the sender's estimated position as
    the rendezvous target.  Range is evaluated on true positions.
    """
    events: list[Event] = []
    action = sender.current_action
    message_atoms: set[tuple[str, ...]] = set(action.add_eff) if action is not None else set()
    pos = sender.estimated_position
    events.append(
        Event(
            time=world.sim_time,
            kind="broadcast-sent",
            subject=sender.id,
            payload={"position": [pos.x, pos.y]},
        )
    )
    for receiver in world.uuvs:
        if receiver.id == sender.id:
            continue
        dist = receiver.true_position.distance_to(sender.true_position)
        if dist > world.params.comm_range:
            continue
        receiver.belief |= message_atoms
        receiver.belief.add(("heard-broadcast", receiver.id))
        receiver.broadcast_target = pos
        events.append(
            Event(
                time=world.sim_time,
                kind="broadcast-received",
                subject=receiver.id,
                payload={"from": sender.id, "position": [pos.x, pos.y]},
            )
        )
    return events


def _start_action(uuv: UUVState, world: WorldState, events: list[Event]) -> GroundAction:
    action = uuv.queue[0]
    if not uuv.action_started:
        uuv.action_started = True
        uuv.action_start_time = world.sim_time
        events.append(
            Event(
                time=world.sim_time,
                kind="action-started",
                subject=uuv.id,
                payload={"action": action.name, "args": list(action.args)},
            )
        )
    return action


def _complete_action(uuv: UUVState, world: WorldState, events: list[Event]) -> None:
    action = uuv.queue.pop(0)
    uuv.action_started = False
    uuv.belief -= set(action.del_eff)
    uuv.belief |= set(action.add_eff)
    events.append(
        Event(
            time=world.sim_time,
            kind="action-completed",
            subject=uuv.id,
            payload={"action": action.name, "args": list(action.args)},
        )
    )
    if not uuv.queue:
        uuv.status = "completed"
        events.append(
            Event(
                time=world.sim_time,
                kind="mission-completed",
                subject=uuv.id,
                payload={},
            )
        )


def _fail_mission(uuv: UUVState, world: WorldState, events: list[Event], reason: str) -> None:
    action = uuv.current_action
    events.append(
        Event(
            time=world.sim_time,
            kind="action-failed",
            subject=uuv.id,
            payload={
                "action": action.name if action else None,
                "args": list(action.args) if action else [],
                "reason": reason,
            },
        )
    )
    uuv.queue.clear()
    uuv.action_started = False
    uuv.circle = None
    uuv.status = "failed"
    events.append(
        Event(
            time=world.sim_time,
            kind="mission-failed",
            subject=uuv.id,
            payload={"reason": reason},
        )
    )


def _move_towards(uuv: UUVState, target: Point2D, world: WorldState, events: list[Event]) -> None:
    params = world.params
    est = uuv.estimated_position
    dx = target.x - est.x
    dy = target.y - est.y
    remaining = math.hypot(dx, dy)
    step_len = uuv.speed * params.tick
    if remaining <= 1e-12:
        vx, vy = 0.0, 0.0
        moved = 0.0
    elif remaining <= step_len:
        # Final partial step lands exactly on the target.
        vx, vy = dx, dy
        moved = remaining
    else:
        vx = dx / remaining * step_len
        vy = dy / remaining * step_len
        moved = step_len
    if moved > 0:
        uuv.heading = math.atan2(vy, vx)
    cx, cy = params.current
    uuv.true_position = Point2D(
        uuv.true_position.x + vx + cx * params.tick,
        uuv.true_position.y + vy + cy * params.tick,
    )
    uuv.estimated_position = Point2D(est.x + vx, est.y + vy)
    uuv.position_uncertainty += params.drift_rate * moved
    if uuv.estimated_position.distance_to(target) <= params.arrival_tolerance:
        pos = uuv.estimated_position
        events.append(
            Event(
                time=world.sim_time,
                kind="waypoint-reached",
                subject=uuv.id,
                payload={"position": [pos.x, pos.y]},
            )
        )
        _complete_action(uuv, world, events)


def _tick_uuv(uuv: UUVState, world: WorldState, events: list[Event]) -> None:
    params = world.params
    if uuv.status != "active" or not uuv.queue:
        return
    action = _start_action(uuv, world, events)
    name = action.name

    if name in _MOVE_TO_BEACON:
        beacon = world.beacon(action.args[1])
        _move_towards(uuv, beacon.position, world, events)
    elif name == _NAV_BROADCAST:
        if uuv.broadcast_target is None:
            _fail_mission(uuv, world, events, "no broadcast position known")
            return
        _move_towards(uuv, uuv.broadcast_target, world, events)
    elif name == _SENSE:
        # Completion is handled in the detection phase of this tick.
        pass
    elif name == _CIRCLE:
        beacon = world.beacon(action.args[1])
        if not beacon.active:
            _fail_mission(uuv, world, events, f"beacon {beacon.id} went silent during fix")
            return
        if uuv.circle is None:
            est = uuv.estimated_position
            off_x = est.x - beacon.position.x
            off_y = est.y - beacon.position.y
            if math.hypot(off_x, off_y) > 1e-9:
                theta0 = math.atan2(off_y, off_x)
            else:
                theta0 = uuv.heading + math.pi
            if uuv.speed <= 0:
                raise SimulationError(f"{uuv.id}: cannot circle with zero speed")
            circumference = 2.0 * math.pi * params.standoff_radius
            ticks_total = max(1, math.ceil(circumference / (uuv.speed * params.tick)))
            uuv.circle = (beacon.id, theta0, 0, ticks_total)
        beacon_id, theta0, ticks_done, ticks_total = uuv.circle
        ticks_done += 1
        omega = uuv.speed / params.standoff_radius
        theta = theta0 + omega * ticks_done * params.tick
        on_circle = Point2D(
            beacon.position.x + params.standoff_radius * math.cos(theta),
            beacon.position.y + params.standoff_radius * math.sin(theta),
        )
        uuv.true_position = on_circle
        uuv.estimated_position = on_circle
        uuv.heading = theta + math.pi / 2.0
        uuv.circle = (beacon_id, theta0, ticks_done, ticks_total)
        if ticks_done >= ticks_total:
            circle_localize(uuv, beacon, params)
            _complete_action(uuv, world, events)
    elif name == _BROADCAST:
        events.extend(broadcast(uuv, world))
        _complete_action(uuv, world, events)
    elif name == _AWAIT:
        if ("heard-broadcast", uuv.id) in uuv.belief:
            _complete_action(uuv, world, events)
    else:
        # Unknown actions are instantaneous bookkeeping steps.
        _complete_action(uuv, world, events)


def _detection_phase(world: WorldState, events: list[Event]) -> None:
    for uuv in world.uuvs:
        if uuv.status == "failed":
            continue
        for beacon in world.beacons:
            if sense_beacon(uuv, beacon, world.sim_time):
                uuv.last_detection[beacon.id] = world.sim_time
                events.append(
                    Event(
                        time=world.sim_time,
                        kind="detection",
                        subject=uuv.id,
                        payload={
                            "beacon": beacon.id,
                            "range": uuv.true_position.distance_to(beacon.position),
                        },
                    )
                )


def _sense_completion_phase(world: WorldState, events: list[Event]) -> None:
    for uuv in world.uuvs:
        action = uuv.current_action
        if uuv.status != "active" or action is None or action.name != _SENSE:
            continue
        if not uuv.action_started:
            continue
        beacon_id = action.args[1]
        if uuv.last_detection.get(beacon_id) == world.sim_time:
            _complete_action(uuv, world, events)


def step(world: WorldState) -> tuple[WorldState, list[Event]]:
    """Advance the world by one tick and return the events it produced.

    Phases within a tick: vehicles execute their current actions in id
    order, then the acoustic detection scan runs at the new positions,
    then pending sense actions that just heard their beacon complete.
    Events are stably ordered by (time, subject) so each vehicle's
    events keep their causal order.
    """
    world.sim_time += world.params.tick
    world.ticks_run += 1
    events: list[Event] = []
    for uuv in world.uuvs:
        _tick_uuv(uuv, world, events)
    _detection_phase(world, events)
    _sense_completion_phase(world, events)
    events.sort(key=Event.sort_key)
    return world, events
