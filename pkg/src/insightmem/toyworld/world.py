"""A small deterministic household world.

State is immutable; ``step_world`` is a pure transition function. Illegal
steps leave the state untouched and report why in the feedback text.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

ACTIONS = {"goto": 1, "pick": 1, "place": 2, "open": 1, "close": 1, "slice": 1, "clean": 1, "heat": 1}


@dataclass(frozen=True)
class Fixture:
    name: str
    room: str
    kind: str  # surface | container | heater | sink
    openable: bool = False
    # heaters only: whether the door must be "open" or "closed" while heating
    heat_door: Optional[str] = None


@dataclass(frozen=True)
class ObjectState:
    name: str
    location: Optional[str]  # fixture name; None while held
    states: frozenset = frozenset()
    attrs: frozenset = frozenset()  # static traits: blade, produce, waxy


@dataclass(frozen=True)
class PlanStep:
    action: str
    args: tuple

    def __post_init__(self):
        if self.action not in ACTIONS:
            raise ValueError(f"unknown action {self.action!r}")
        if len(self.args) != ACTIONS[self.action]:
            raise ValueError(f"{self.action} takes {ACTIONS[self.action]} argument(s), got {len(self.args)}")

    @classmethod
    def parse(cls, text: str) -> "PlanStep":
        parts = text.strip().rstrip(".").split()
        if not parts:
            raise ValueError("empty plan step")
        return cls(parts[0].lower(), tuple(p.lower() for p in parts[1:]))

    def __str__(self):
        return " ".join((self.action, *self.args))


@dataclass(frozen=True)
class WorldState:
    rooms: tuple
    fixtures: tuple  # of Fixture
    objects: tuple  # of ObjectState, sorted by name
    agent_location: str
    held: Optional[str] = None
    open_fixtures: frozenset = frozenset()

    def fixture(self, name: str) -> Optional[Fixture]:
        for f in self.fixtures:
            if f.name == name:
                return f
        return None

    def obj(self, name: str) -> Optional[ObjectState]:
        for o in self.objects:
            if o.name == name:
                return o
        return None

    def room_of(self, obj: ObjectState) -> Optional[str]:
        if obj.location is None:
            return self.agent_location
        f = self.fixture(obj.location)
        return f.room if f else None

    def fixtures_in(self, room: str, kind: Optional[str] = None) -> list:
        return [f for f in self.fixtures if f.room == room and (kind is None or f.kind == kind)]

    def with_object(self, new: ObjectState) -> "WorldState":
        objs = tuple(new if o.name == new.name else o for o in self.objects)
        return replace(self, objects=objs)

    def describe(self) -> str:
        parts = [f"Rooms: {', '.join(self.rooms)}."]
        for room in self.rooms:
            fx = self.fixtures_in(room)
            if fx:
                parts.append(f"{room}: {', '.join(f.name for f in fx)}.")
        where = [f"{o.name} on {o.location}" if o.location else f"{o.name} held" for o in self.objects]
        parts.append(f"Objects: {', '.join(where)}.")
        parts.append(f"Closed: {', '.join(sorted(f.name for f in self.fixtures if f.openable and f.name not in self.open_fixtures)) or 'nothing'}.")
        parts.append(f"You are in the {self.agent_location}.")
        return " ".join(parts)


def _fail(state, msg):
    return state, msg, False


def step_world(state: WorldState, step: PlanStep) -> tuple[WorldState, str, bool]:
    a, args = step.action, step.args
    here = state.agent_location

    if a == "goto":
        room = args[0]
        if room not in state.rooms:
            return _fail(state, f"There is no room called {room}.")
        return replace(state, agent_location=room), f"You walk to the {room}.", True

    if a in ("open", "close"):
        f = state.fixture(args[0])
        if f is None or f.room != here:
            return _fail(state, f"You do not see a {args[0]} here.")
        if not f.openable:
            return _fail(state, f"The {f.name} cannot be opened or closed.")
        is_open = f.name in state.open_fixtures
        if a == "open":
            if is_open:
                return _fail(state, f"The {f.name} is already open.")
            return replace(state, open_fixtures=state.open_fixtures | {f.name}), f"You open the {f.name}.", True
        if not is_open:
            return _fail(state, f"The {f.name} is already closed.")
        return replace(state, open_fixtures=state.open_fixtures - {f.name}), f"You close the {f.name}.", True

    if a == "place":
        name, target = args
        if state.held != name:
            return _fail(state, f"You are not holding the {name}.")
        f = state.fixture(target)
        if f is None or f.room != here:
            return _fail(state, f"You do not see a {target} here.")
        if f.openable and f.kind == "container" and f.name not in state.open_fixtures:
            return _fail(state, f"The {f.name} is closed.")
        o = state.obj(name)
        new = state.with_object(replace(o, location=f.name))
        return replace(new, held=None), f"You put the {name} on the {f.name}.", True

    o = state.obj(args[0])
    if o is None or state.room_of(o) != here:
        return _fail(state, f"You do not see a {args[0]} here.")

    if a == "pick":
        if state.held is not None:
            return _fail(state, f"You are already holding the {state.held}; put it down first.")
        f = state.fixture(o.location)
        if f is not None and f.openable and f.kind == "container" and f.name not in state.open_fixtures:
            return _fail(state, f"The {o.name} is inside the closed {f.name}.")
        new = state.with_object(replace(o, location=None))
        return replace(new, held=o.name), f"You pick up the {o.name}.", True

    if a == "slice":
        blade = state.obj(state.held) if state.held else None
        if blade is None or "blade" not in blade.attrs:
            return _fail(state, "You need to hold a knife or scissors to slice.")
        if o.location is None:
            return _fail(state, f"Put the {o.name} down before slicing it.")
        if not ({"produce", "waxy"} & o.attrs):
            return _fail(state, f"The {o.name} cannot be sliced.")
        if "sliced" in o.states:
            return _fail(state, f"The {o.name} is already sliced.")
        return state.with_object(replace(o, states=o.states | {"sliced"})), f"You slice the {o.name}.", True

    if a == "clean":
        if state.held != o.name:
            return _fail(state, f"Pick up the {o.name} before cleaning it.")
        if not state.fixtures_in(here, "sink"):
            return _fail(state, "There is nowhere to wash things here.")
        if "produce" in o.attrs and "sliced" in o.states:
            return _fail(state, f"The sliced {o.name} falls apart under the water.")
        if "waxy" in o.attrs and "sliced" not in o.states:
            return _fail(state, f"Water beads off the wax coating of the {o.name}; trim it first.")
        states = (o.states - {"dirty"}) | {"clean"}
        return state.with_object(replace(o, states=states)), f"You wash the {o.name}.", True

    if a == "heat":
        if state.held != o.name:
            return _fail(state, f"Pick up the {o.name} before heating it.")
        heaters = state.fixtures_in(here, "heater")
        if not heaters:
            return _fail(state, "There is nothing to heat things with here.")
        h = heaters[0]
        is_open = h.name in state.open_fixtures
        if h.heat_door == "open" and not is_open:
            return _fail(state, f"The {h.name} door is closed.")
        if h.heat_door == "closed" and is_open:
            return _fail(state, f"Sparks fly out of the open {h.name}; nothing gets warm.")
        return state.with_object(replace(o, states=o.states | {"heated"})), f"You heat the {o.name} with the {h.name}.", True

    raise AssertionError(f"unhandled action {a}")  # pragma: no cover


@dataclass(frozen=True)
class GoalCondition:
    kind: str  # "in" | "state"
    obj: str
    value: str

    def satisfied(self, state: WorldState) -> bool:
        o = state.obj(self.obj)
        if o is None:
            return False
        if self.kind == "in":
            return o.location == self.value
        return self.value in o.states

    def __str__(self):
        return f"{self.obj} in {self.value}" if self.kind == "in" else f"{self.obj} is {self.value}"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "obj": self.obj, "value": self.value}


def count_satisfied(goals, state: WorldState) -> int:
    return sum(g.satisfied(state) for g in goals)
