"""Task families, house layouts and the seeded task generator.

Each family carries a hazard: an ordering or preparation step an
uninformed planner gets wrong. The fix is expressed as a directive
(see ``DIRECTIVES``) that a learned insight can carry. Two pairs of
directives contradict each other across families on purpose, so
injecting every insight unfiltered can hurt.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from .world import Fixture, GoalCondition, ObjectState, PlanStep, WorldState

ROOMS = ("hallway", "kitchen", "living_room", "bedroom")
ENVIRONMENTS = ("kitchen", "living_room", "bedroom")
SPLITS = ("train", "valid_seen", "valid_unseen")

FIXTURES = (
    Fixture("shelf", "hallway", "surface"),
    Fixture("countertop", "kitchen", "surface"),
    Fixture("diningtable", "kitchen", "surface"),
    Fixture("dishrack", "kitchen", "surface"),
    Fixture("sink", "kitchen", "sink"),
    Fixture("microwave", "kitchen", "heater", openable=True, heat_door="open"),
    Fixture("fridge", "kitchen", "container", openable=True),
    Fixture("sofa", "living_room", "surface"),
    Fixture("coffeetable", "living_room", "surface"),
    Fixture("drawer", "living_room", "container", openable=True),
    Fixture("fireplace", "living_room", "heater", openable=True, heat_door="closed"),
    Fixture("bed", "bedroom", "surface"),
    Fixture("dresser", "bedroom", "surface"),
    Fixture("nightstand", "bedroom", "surface"),
    Fixture("basin", "bedroom", "sink"),
)
INITIALLY_OPEN = frozenset({"fireplace"})

# directive id -> canonical rule sentence
DIRECTIVES = {
    "open_heater": "Open the heating appliance before heating an item.",
    "close_heater": "Close the heating appliance before heating an item.",
    "wash_first": "Wash an item before slicing it.",
    "slice_first": "Slice an item before washing it.",
    "open_container": "Open a closed container before placing an item inside.",
}
CONFLICTS = {"open_heater": "heater", "close_heater": "heater", "wash_first": "order", "slice_first": "order"}

DISPLAY = {"remotecontrol": "remote control", "creditcard": "credit card", "keychain": "key chain"}
DISTRACTORS = ("book", "cup", "vase", "newspaper", "watch", "cd")


@dataclass(frozen=True)
class Policy:
    """Choices a planner makes where the world has a hazard."""

    heater: Optional[str] = None  # None | "open" | "close"
    order: str = "slice_first"  # "slice_first" | "wash_first"
    open_container: bool = False


NAIVE = Policy()


def _heat_plan(room, goal_surface):
    def plan(obj, p: Policy):
        steps = [("goto", room), ("pick", obj)]
        heater = "microwave" if room == "kitchen" else "fireplace"
        if p.heater:
            steps.append((p.heater, heater))
        steps += [("heat", obj), ("place", obj, goal_surface)]
        return steps
    return plan


def _slice_wash_plan(room, blade, blade_home, goal_surface):
    def plan(obj, p: Policy):
        steps = [("goto", room)]
        if p.order == "wash_first":
            steps += [("pick", obj), ("clean", obj), ("place", obj, goal_surface), ("pick", blade), ("slice", obj)]
        else:
            steps += [("pick", blade), ("slice", obj), ("place", blade, blade_home),
                      ("pick", obj), ("clean", obj), ("place", obj, goal_surface)]
        return steps
    return plan


def _wash_plan(obj, p: Policy):
    return [("goto", "kitchen"), ("pick", obj), ("clean", obj), ("place", obj, "dishrack")]


def _store_plan(obj, p: Policy):
    steps = [("goto", "living_room"), ("pick", obj)]
    if p.open_container:
        steps.append(("open", "drawer"))
    return steps + [("place", obj, "drawer")]


def _bed_plan(obj, p: Policy):
    return [("goto", "bedroom"), ("pick", obj), ("place", obj, "bed")]


@dataclass(frozen=True)
class TaskFamily:
    name: str  # subtask name, <= 20 chars
    env: str
    objects: tuple
    start_surfaces: tuple
    goals: Callable  # obj -> list[GoalCondition]
    plan: Callable  # (obj, Policy) -> list of step tuples
    correct: Policy
    directive: Optional[str]  # id in DIRECTIVES, or None when there is no hazard
    rule: str  # insight text a generation script writes for this family
    queries: tuple
    initial_states: frozenset = frozenset()
    attrs: frozenset = frozenset()


FAMILIES = (
    TaskFamily(
        "Heat Food", "kitchen", ("potato", "bread", "egg", "apple"), ("countertop", "dishrack"),
        lambda o: [GoalCondition("state", o, "heated"), GoalCondition("in", o, "diningtable")],
        _heat_plan("kitchen", "diningtable"), Policy(heater="open"), "open_heater",
        DIRECTIVES["open_heater"],
        ("<Commander> Please heat the {obj} and put it on the dining table. <Driver> On it.",
         "<Commander> I would like a hot {obj}. Heat it up and leave it on the dining table.",
         "<Driver> What should I do today? <Commander> Heat up the {obj}, then set it on the dining table."),
    ),
    TaskFamily(
        "Prepare Salad", "kitchen", ("lettuce", "tomato"), ("countertop", "diningtable", "dishrack"),
        lambda o: [GoalCondition("state", o, "clean"), GoalCondition("state", o, "sliced"),
                   GoalCondition("in", o, "countertop")],
        _slice_wash_plan("kitchen", "knife", "countertop", "countertop"), Policy(order="wash_first"), "wash_first",
        DIRECTIVES["wash_first"],
        ("<Commander> Let's make a salad. Rinse the {obj} and cut it into slices on the countertop. <Driver> Sure.",
         "<Driver> Hello, task? <Commander> Salad time: the {obj} needs washing and slicing, leave it on the countertop.",
         "<Commander> Prepare a salad with the {obj}: wash it, slice it, keep it on the countertop."),
        attrs=frozenset({"produce"}),
    ),
    TaskFamily(
        "Wash Dishes", "kitchen", ("mug", "bowl", "plate"), ("countertop", "diningtable"),
        lambda o: [GoalCondition("state", o, "clean"), GoalCondition("in", o, "dishrack")],
        _wash_plan, NAIVE, None,
        "Carry dirty dishes to the sink, wash them, then leave them on the dish rack.",
        ("<Commander> The {obj} is dirty. Wash it and put it on the dish rack. <Driver> Okay.",
         "<Driver> How can I help? <Commander> Please clean the {obj} and leave it on the dish rack.",
         "<Commander> Could you do the dishes? Just the {obj}, then put it on the dish rack."),
        initial_states=frozenset({"dirty"}),
    ),
    TaskFamily(
        "Warm Blanket", "living_room", ("blanket", "quilt"), ("sofa", "coffeetable"),
        lambda o: [GoalCondition("state", o, "heated"), GoalCondition("in", o, "sofa")],
        _heat_plan("living_room", "sofa"), Policy(heater="close"), "close_heater",
        DIRECTIVES["close_heater"],
        ("<Commander> It is chilly. Warm the {obj} by the fireplace and lay it on the sofa. <Driver> Will do.",
         "<Driver> What now? <Commander> Please warm up the {obj} at the fireplace, then put it on the sofa.",
         "<Commander> Warm the {obj} and leave it on the sofa for me."),
    ),
    TaskFamily(
        "Store Small Items", "living_room", ("remotecontrol", "keychain", "creditcard"), ("sofa", "coffeetable"),
        lambda o: [GoalCondition("in", o, "drawer")],
        _store_plan, Policy(open_container=True), "open_container",
        DIRECTIVES["open_container"],
        ("<Commander> Put the {obj} away in the drawer, please. <Driver> Sure thing.",
         "<Driver> Any task? <Commander> Tidy up: the {obj} goes in the living room drawer.",
         "<Commander> Store the {obj} in the drawer."),
    ),
    TaskFamily(
        "Trim Candle", "bedroom", ("candle",), ("dresser", "bed"),
        lambda o: [GoalCondition("state", o, "sliced"), GoalCondition("state", o, "clean"),
                   GoalCondition("in", o, "nightstand")],
        _slice_wash_plan("bedroom", "scissors", "dresser", "nightstand"), Policy(order="slice_first"), "slice_first",
        DIRECTIVES["slice_first"],
        ("<Commander> Trim the {obj} and wash it, then set it on the nightstand. <Driver> Okay.",
         "<Driver> Hi. <Commander> The {obj} needs trimming and a rinse; leave it on the nightstand.",
         "<Commander> Please trim and clean the {obj} and put it on the nightstand."),
        attrs=frozenset({"waxy"}),
    ),
    TaskFamily(
        "Make Bed", "bedroom", ("pillow",), ("dresser", "nightstand"),
        lambda o: [GoalCondition("in", o, "bed")],
        _bed_plan, NAIVE, None,
        "Put pillows straight onto the bed; no other preparation is needed.",
        ("<Commander> Make the bed: put the {obj} on it. <Driver> Done soon.",
         "<Driver> What should I do? <Commander> Place the {obj} on the bed.",
         "<Commander> Please put the {obj} back on the bed."),
    ),
)
FAMILY_BY_NAME = {f.name: f for f in FAMILIES}

ENV_RULES = {
    "kitchen": "The kitchen knife is kept on the countertop.",
    "living_room": "Small living room items belong in the drawer.",
    "bedroom": "The bedroom basin can be used for washing.",
}
GENERAL_RULE = "Go to the room where the task takes place before handling any object."


def display_name(obj: str) -> str:
    return DISPLAY.get(obj, obj)


def identify(query: str) -> Optional[tuple[TaskFamily, str]]:
    """Recover (family, object) from a query by the object it mentions."""
    q = query.lower()
    for fam in FAMILIES:
        for obj in fam.objects:
            if display_name(obj) in q:
                return fam, obj
    return None


@dataclass(frozen=True)
class Layout:
    id: str
    start_room: str
    surface_choice: int
    distractors: tuple  # ((object, fixture), ...)


def make_layouts(seed: int, n: int = 10) -> list[Layout]:
    rng = random.Random(f"layouts|{seed}")
    surfaces = [f.name for f in FIXTURES if f.kind == "surface"]
    out = []
    for i in range(n):
        k = rng.randrange(1, 4)
        objs = rng.sample(DISTRACTORS, k)
        out.append(Layout(f"house-{i:02d}", rng.choice(ROOMS), rng.randrange(6),
                          tuple((o, rng.choice(surfaces)) for o in objs)))
    return out


def steps_from_tuples(steps) -> list[PlanStep]:
    return [PlanStep(s[0], tuple(s[1:])) for s in steps]


@dataclass
class TaskSpec:
    id: str
    family: str
    obj: str
    layout: Layout
    template: int
    split: str = "train"
    env_category: str = field(init=False)
    user_query: str = field(init=False)

    def __post_init__(self):
        fam = FAMILY_BY_NAME[self.family]
        self.env_category = fam.env
        self.user_query = fam.queries[self.template % len(fam.queries)].format(obj=display_name(self.obj))

    @property
    def spec(self) -> TaskFamily:
        return FAMILY_BY_NAME[self.family]

    @property
    def goal_conditions(self) -> list[GoalCondition]:
        return self.spec.goals(self.obj)

    @property
    def optimal_plan(self) -> list[PlanStep]:
        return steps_from_tuples(self.spec.plan(self.obj, self.spec.correct))

    @property
    def l_ref(self) -> int:
        return len(self.optimal_plan)

    def initial_state(self) -> WorldState:
        fam = self.spec
        start = fam.start_surfaces[self.layout.surface_choice % len(fam.start_surfaces)]
        objs = {
            "knife": ObjectState("knife", "countertop", attrs=frozenset({"blade"})),
            "scissors": ObjectState("scissors", "dresser", attrs=frozenset({"blade"})),
        }
        for name, where in self.layout.distractors:
            objs[name] = ObjectState(name, where)
        objs[self.obj] = ObjectState(self.obj, start, fam.initial_states, fam.attrs)
        return WorldState(ROOMS, FIXTURES, tuple(objs[k] for k in sorted(objs)), self.layout.start_room,
                          None, INITIALLY_OPEN)

    def background(self) -> str:
        return f"Household layout {self.layout.id}. " + self.initial_state().describe()

    def to_dict(self) -> dict:
        return {
            "id": self.id, "split": self.split, "family": self.family, "obj": self.obj,
            "template": self.template, "env_category": self.env_category, "user_query": self.user_query,
            "layout": {"id": self.layout.id, "start_room": self.layout.start_room,
                       "surface_choice": self.layout.surface_choice,
                       "distractors": [list(d) for d in self.layout.distractors]},
            "goal_conditions": [g.to_dict() for g in self.goal_conditions],
            "l_ref": self.l_ref,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TaskSpec":
        lay = d["layout"]
        layout = Layout(lay["id"], lay["start_room"], lay["surface_choice"],
                        tuple(tuple(x) for x in lay["distractors"]))
        return cls(d["id"], d["family"], d["obj"], layout, d["template"], d.get("split", "train"))


DEFAULT_COUNTS = {"train": 70, "valid_seen": 21, "valid_unseen": 42}
HELD_OUT_LAYOUTS = 3


def generate_tasks(seed: int, counts: Optional[dict] = None, envs=None, n_layouts: int = 10) -> dict:
    """Deterministic train / valid_seen / valid_unseen task lists.

    valid_seen reuses layouts that appear in train; valid_unseen only uses
    held-out layouts. Families are visited round-robin so splits stay balanced.
    """
    counts = dict(DEFAULT_COUNTS if counts is None else counts)
    for split, n in counts.items():
        if split not in SPLITS:
            raise ValueError(f"unknown split {split!r}")
        if n < 0:
            raise ValueError("task counts must be non-negative")
    fams = [f for f in FAMILIES if envs is None or f.env in envs]
    if not fams:
        raise ValueError("no task family matches the requested environments")
    layouts = make_layouts(seed, n_layouts)
    seen_pool, unseen_pool = layouts[:-HELD_OUT_LAYOUTS], layouts[-HELD_OUT_LAYOUTS:]

    out: dict = {}
    used_in_train: list[Layout] = []
    for split in SPLITS:
        n = counts.get(split, 0)
        rng = random.Random(f"tasks|{seed}|{split}")
        if split == "train":
            pool = seen_pool
        elif split == "valid_seen":
            pool = used_in_train or seen_pool
        else:
            pool = unseen_pool
        offset = rng.randrange(len(fams))
        tasks = []
        for i in range(n):
            fam = fams[(offset + i) % len(fams)]
            layout = rng.choice(pool)
            task = TaskSpec(f"{split}-{i:04d}", fam.name, rng.choice(fam.objects), layout,
                            rng.randrange(len(fam.queries)), split)
            tasks.append(task)
            if split == "train" and layout not in used_in_train:
                used_in_train.append(layout)
        out[split] = tasks
    return out
