"""Typed AST for the totally ordered HDDL subset.

Source positions ride along on every named node but are excluded from
equality so printed-and-reparsed trees compare structurally identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

# a task reference: (task-or-action name, argument symbols)
TaskRef = tuple[str, tuple[str, ...]]
# a ground atom: (predicate, object, ...)
Atom = tuple[str, ...]


@dataclass(frozen=True)
class Literal:
    predicate: str
    args: tuple[str, ...]
    negated: bool = False


@dataclass(frozen=True)
class PredicateDecl:
    name: str
    param_types: tuple[str, ...]
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class TaskDecl:
    """An abstract (compound) task symbol with its parameter signature."""

    name: str
    parameters: tuple[tuple[str, str], ...]  # (?var, type)
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class ActionAst:
    name: str
    parameters: tuple[tuple[str, str], ...]
    precondition: tuple[Literal, ...]  # conjunction
    effect: tuple[Literal, ...]  # negated literals are deletes
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class MethodAst:
    name: str
    parameters: tuple[tuple[str, str], ...]
    task: TaskRef  # the abstract task this method decomposes
    precondition: tuple[Literal, ...]
    subtasks: tuple[TaskRef, ...]  # totally ordered
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class DomainAst:
    name: str
    requirements: tuple[str, ...]
    types: tuple[tuple[str, str], ...]  # (type, parent)
    predicates: tuple[PredicateDecl, ...]
    tasks: tuple[TaskDecl, ...]
    actions: tuple[ActionAst, ...]
    methods: tuple[MethodAst, ...]
    pos: tuple[int, int] = field(default=(0, 0), compare=False)

    def type_names(self) -> set[str]:
        names = {"object"}
        for t, parent in self.types:
            names.add(t)
            names.add(parent)
        return names

    def is_subtype(self, t: str, ancestor: str) -> bool:
        if ancestor == "object":
            return True
        parents = dict(self.types)
        seen = set()
        while t not in seen:
            if t == ancestor:
                return True
            seen.add(t)
            t = parents.get(t, "object")
        return False


@dataclass(frozen=True)
class TaskNetwork:
    """Ordered task identifiers with their task mapping (list position is
    the total order)."""

    identifiers: tuple[str, ...]
    tasks: tuple[TaskRef, ...]

    def __post_init__(self):
        if len(self.identifiers) != len(self.tasks):
            raise ValueError("identifier and task lists differ in length")
        if len(set(self.identifiers)) != len(self.identifiers):
            raise ValueError("task identifiers must be unique")

    def alpha(self, identifier: str) -> TaskRef:
        return self.tasks[self.identifiers.index(identifier)]


@dataclass(frozen=True)
class ProblemAst:
    name: str
    domain_name: str
    objects: tuple[tuple[str, str], ...]  # (object, type)
    init: tuple[Atom, ...]
    htn: TaskNetwork
    goal: tuple[Literal, ...] | None
    pos: tuple[int, int] = field(default=(0, 0), compare=False)
