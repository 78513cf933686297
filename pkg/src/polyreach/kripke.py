"""Finite preorder and poset models with reachability-aware evaluation.

A model is a finite set of worlds, a reflexive-transitive order built as the
closure of generator edges, and a valuation.  The box quantifies over the
up-set of a world.  The reachability operator gamma(a, b) holds at w when an
up-down path starts at w, ends at a b-world, and every intermediate world
satisfies a.

Two interchangeable engines compute reachability: a connected-component
shortcut on the comparability graph of the a-extension (the default), and a
least-fixpoint relation oracle kept available for cross-checking.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .formulas import (
    And,
    Atom,
    Box,
    Formula,
    Not,
    Reach,
    RESERVED_ATOM,
    KEYWORDS,
)

__all__ = [
    "ModelError",
    "ModelFormatError",
    "PreorderModel",
    "PosetModel",
    "build_model",
    "evaluate",
    "reach_relation",
    "reach_targets",
    "witness_path",
    "check_updown_path",
    "is_valid",
    "parse_model",
    "serialize_model",
    "nonempty_chains",
]

_WORLD_RE = re.compile(r"[A-Za-z][A-Za-z0-9_+]*\Z")


class ModelError(ValueError):
    pass


class ModelFormatError(ModelError):
    def __init__(self, message: str, line: int | None = None) -> None:
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True, eq=False)
class PreorderModel:
    """Reflexive-transitive Kripke frame with a valuation.

    ``up[w]`` is the set of worlds v with w <= v, ``down[w]`` the converse.
    Instances are immutable; all derived data is precomputed by build_model.
    """

    worlds: tuple[str, ...]
    base_edges: tuple[tuple[str, str], ...]
    order: frozenset[tuple[str, str]]
    valuation: Mapping[str, frozenset[str]]
    up: Mapping[str, frozenset[str]] = field(repr=False)
    down: Mapping[str, frozenset[str]] = field(repr=False)

    @property
    def world_set(self) -> frozenset[str]:
        return frozenset(self.worlds)

    def leq(self, a: str, b: str) -> bool:
        return b in self.up[a]

    def lt(self, a: str, b: str) -> bool:
        return b in self.up[a] and a not in self.up[b]

    def atom_extension(self, name: str) -> frozenset[str]:
        return self.valuation.get(name, frozenset())


class PosetModel(PreorderModel):
    """A preorder model whose order is antisymmetric."""


def _validate_atom_name(name: str) -> None:
    if name == RESERVED_ATOM:
        raise ModelError(f"atom name {name!r} is reserved")
    if not re.match(r"[A-Za-z][A-Za-z0-9_]*\Z", name) or name in KEYWORDS:
        raise ModelError(f"invalid atom name: {name!r}")


def build_model(
    worlds: Iterable[str],
    edges: Iterable[tuple[str, str]] = (),
    valuation: Mapping[str, Iterable[str]] | None = None,
) -> PreorderModel:
    """Close the generator edges and classify the result.

    Returns a PosetModel when the closed order is antisymmetric, otherwise a
    PreorderModel.  Duplicate worlds, unknown edge endpoints, and valuation
    entries naming unknown worlds are errors.
    """
    world_list: list[str] = []
    seen: set[str] = set()
    for w in worlds:
        if not isinstance(w, str) or not _WORLD_RE.match(w):
            raise ModelError(f"invalid world id: {w!r}")
        if w in seen:
            raise ModelError(f"duplicate world id: {w!r}")
        seen.add(w)
        world_list.append(w)
    if not world_list:
        raise ModelError("a model needs at least one world")
    world_list.sort()

    adjacency: dict[str, set[str]] = {w: set() for w in world_list}
    base: list[tuple[str, str]] = []
    for a, b in edges:
        if a not in seen or b not in seen:
            raise ModelError(f"edge ({a!r}, {b!r}) mentions an unknown world")
        adjacency[a].add(b)
        base.append((a, b))

    up: dict[str, frozenset[str]] = {}
    for w in world_list:
        reached = {w}
        queue = deque([w])
        while queue:
            x = queue.popleft()
            for y in adjacency[x]:
                if y not in reached:
                    reached.add(y)
                    queue.append(y)
        up[w] = frozenset(reached)
    down: dict[str, set[str]] = {w: set() for w in world_list}
    for w in world_list:
        for v in up[w]:
            down[v].add(w)

    val: dict[str, frozenset[str]] = {}
    if valuation:
        for name in sorted(valuation):
            _validate_atom_name(name)
            members = frozenset(valuation[name])
            unknown = members - seen
            if unknown:
                raise ModelError(
                    f"valuation for {name!r} names unknown worlds: {sorted(unknown)}"
                )
            val[name] = members

    antisymmetric = all(
        not (v in up[w] and w in up[v]) for w in world_list for v in up[w] if v != w
    )
    cls = PosetModel if antisymmetric else PreorderModel
    return cls(
        worlds=tuple(world_list),
        base_edges=tuple(base),
        order=frozenset((w, v) for w in world_list for v in up[w]),
        valuation=val,
        up=up,
        down={w: frozenset(vs) for w, vs in down.items()},
    )


def _check_world_subset(model: PreorderModel, worlds: Iterable[str]) -> frozenset[str]:
    ws = frozenset(worlds)
    unknown = ws - model.world_set
    if unknown:
        raise ModelError(f"unknown worlds: {sorted(unknown)}")
    return ws


def _comparability_components(
    model: PreorderModel, area: frozenset[str]
) -> list[frozenset[str]]:
    """Connected components of the comparability graph restricted to area."""
    remaining = set(area)
    components: list[frozenset[str]] = []
    while remaining:
        start = remaining.pop()
        component = {start}
        queue = deque([start])
        while queue:
            x = queue.popleft()
            linked = {y for y in remaining if y in model.up[x] or x in model.up[y]}
            remaining -= linked
            component |= linked
            queue.extend(linked)
        components.append(frozenset(component))
    return components


def _reach_components(
    model: PreorderModel, area: frozenset[str], goal: frozenset[str]
) -> frozenset[str]:
    """Extension of gamma via comparability components of the area.

    A world satisfies the operator exactly when some component of the
    comparability graph on the area both lies above it somewhere and lies
    above a goal world somewhere.
    """
    if not area:
        return frozenset()
    above_goal: set[str] = set()
    for v in goal:
        above_goal |= model.up[v]
    result: set[str] = set()
    for component in _comparability_components(model, area):
        if component & above_goal:
            result.update(w for w in model.worlds if model.up[w] & component)
    return frozenset(result)


def reach_relation(
    model: PreorderModel, area: Iterable[str]
) -> frozenset[tuple[str, str]]:
    """Least relation R with: w R v if some a in area has w <= a >= v, and
    w R v if some a in area has w R a R v.  Reference oracle; quadratic in
    the number of worlds per iteration, meant for desk-scale cross-checks.
    """
    a_set = _check_world_subset(model, area)
    relation: set[tuple[str, str]] = set()
    for u in a_set:
        below = model.down[u]
        relation.update((w, v) for w in below for v in below)
    changed = True
    while changed:
        changed = False
        for u in a_set:
            sources = [w for (w, x) in relation if x == u]
            targets = [v for (x, v) in relation if x == u]
            for w in sources:
                for v in targets:
                    if (w, v) not in relation:
                        relation.add((w, v))
                        changed = True
    return frozenset(relation)


def reach_targets(
    model: PreorderModel, start: str, area: Iterable[str]
) -> frozenset[str]:
    """Worlds reachable from start along up-down paths with middles in area."""
    a_set = _check_world_subset(model, area)
    if start not in model.world_set:
        raise ModelError(f"unknown world: {start!r}")
    result: set[str] = set()
    for component in _comparability_components(model, a_set):
        if model.up[start] & component:
            for u in component:
                result |= model.down[u]
    return frozenset(result)


def witness_path(
    model: PreorderModel,
    start: str,
    area: Iterable[str],
    goal: Iterable[str],
) -> tuple[str, ...] | None:
    """Search for an up-down path from start to a goal world through area.

    The path alternates upper and lower elements: start <= u1, strict
    descents and ascents between consecutive uppers, and u_last >= end.
    Deterministic: breadth-first over uppers with sorted tie-breaking.
    Returns None when no witness exists.
    """
    a_set = _check_world_subset(model, area)
    b_set = _check_world_subset(model, goal)
    if start not in model.world_set:
        raise ModelError(f"unknown world: {start!r}")

    def is_goal(u: str) -> bool:
        return bool(model.down[u] & b_set)

    parents: dict[str, tuple[str, str] | None] = {}
    queue: deque[str] = deque()
    for u in sorted(a_set & model.up[start]):
        parents[u] = None
        queue.append(u)
    final: str | None = None
    while queue:
        u = queue.popleft()
        if is_goal(u):
            final = u
            break
        for x in sorted(a_set & model.down[u]):
            if not model.lt(x, u):
                continue
            for u2 in sorted(a_set & model.up[x]):
                if u2 in parents or not model.lt(x, u2):
                    continue
                parents[u2] = (u, x)
                queue.append(u2)
    if final is None:
        return None

    uppers: list[str] = []
    lowers: list[str] = []
    node: str | None = final
    while node is not None:
        uppers.append(node)
        link = parents[node]
        if link is None:
            node = None
        else:
            node, x = link
            lowers.append(x)
    uppers.reverse()
    lowers.reverse()

    path: list[str] = [start]
    for i, u in enumerate(uppers):
        path.append(u)
        if i < len(lowers):
            path.append(lowers[i])
    end = min(sorted(model.down[final] & b_set))
    path.append(end)
    return tuple(path)


def check_updown_path(
    model: PreorderModel, path: Sequence[str], area: Iterable[str]
) -> bool:
    """Validate the up-down path shape and that middles lie in area.

    Shape: odd length of at least three, first step ascending, last step
    descending, and strict zigzag alternation on interior middle elements.
    """
    a_set = _check_world_subset(model, area)
    if any(w not in model.world_set for w in path):
        return False
    k = len(path) - 1
    if k < 2 or k % 2 != 0:
        return False
    if not model.leq(path[0], path[1]):
        return False
    if not model.leq(path[k], path[k - 1]):
        return False
    j = k // 2
    for i in range(1, j):
        if not model.lt(path[2 * i], path[2 * i - 1]):
            return False
        if not model.lt(path[2 * i], path[2 * i + 1]):
            return False
    return all(w in a_set for w in path[1:k])


def evaluate(
    model: PreorderModel, formula: Formula, *, reach_impl: str = "components"
) -> frozenset[str]:
    """Extension of a core formula.

    Atoms absent from the valuation denote the empty set, which also covers
    the reserved truth-constant atom.  reach_impl selects the reachability
    engine: "components" (default) or "fixpoint" (the reference oracle).
    """
    if reach_impl not in ("components", "fixpoint"):
        raise ValueError(f"unknown reach_impl: {reach_impl!r}")
    cache: dict[Formula, frozenset[str]] = {}

    def ext(f: Formula) -> frozenset[str]:
        hit = cache.get(f)
        if hit is not None:
            return hit
        match f:
            case Atom(name):
                result = model.atom_extension(name)
            case Not(child):
                result = model.world_set - ext(child)
            case And(left, right):
                result = ext(left) & ext(right)
            case Box(child):
                body = ext(child)
                result = frozenset(w for w in model.worlds if model.up[w] <= body)
            case Reach(left, right):
                area, goal = ext(left), ext(right)
                if reach_impl == "components":
                    result = _reach_components(model, area, goal)
                else:
                    relation = reach_relation(model, area)
                    result = frozenset(
                        w for (w, v) in relation if v in goal
                    )
            case _:
                raise TypeError(f"not a formula: {f!r}")
        cache[f] = result
        return result

    return ext(formula)


def is_valid(model: PreorderModel, formula: Formula, **kwargs) -> bool:
    return evaluate(model, formula, **kwargs) == model.world_set


def nonempty_chains(model: PosetModel) -> list[frozenset[str]]:
    """All non-empty chains of a poset, each discovered once in ascending order."""
    if not isinstance(model, PosetModel):
        raise ModelError("chains are only enumerated for posets")
    chains: list[frozenset[str]] = []

    def extend(chain: tuple[str, ...], top: str) -> None:
        chains.append(frozenset(chain))
        for v in sorted(model.up[top]):
            if v != top:
                extend(chain + (v,), v)

    for w in sorted(model.worlds):
        extend((w,), w)
    return chains


# ---------------------------------------------------------------------------
# Text format
#
#   worlds a b c        declare worlds
#   order a b           generator edge a <= b; closure is implicit
#   valuation p a c     worlds where atom p holds
#
# '#' starts a comment; blank lines are ignored; any other directive is an
# error.  World declarations are gathered in a first pass, so directive order
# does not matter.
# ---------------------------------------------------------------------------


def parse_model(text: str) -> PreorderModel:
    worlds: list[str] = []
    declared: set[str] = set()
    edges: list[tuple[str, str]] = []
    valuation: dict[str, set[str]] = {}

    lines = []
    for number, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if stripped:
            lines.append((number, stripped.split()))

    for number, parts in lines:
        if parts[0] == "worlds":
            if len(parts) < 2:
                raise ModelFormatError("worlds directive needs at least one id", number)
            for w in parts[1:]:
                if not _WORLD_RE.match(w):
                    raise ModelFormatError(f"invalid world id: {w!r}", number)
                if w in declared:
                    raise ModelFormatError(f"duplicate world id: {w!r}", number)
                declared.add(w)
                worlds.append(w)
        elif parts[0] not in ("order", "valuation"):
            raise ModelFormatError(f"unknown directive: {parts[0]!r}", number)

    for number, parts in lines:
        if parts[0] == "order":
            if len(parts) != 3:
                raise ModelFormatError("order directive needs exactly two ids", number)
            a, b = parts[1], parts[2]
            for w in (a, b):
                if w not in declared:
                    raise ModelFormatError(f"unknown world id: {w!r}", number)
            edges.append((a, b))
        elif parts[0] == "valuation":
            if len(parts) < 2:
                raise ModelFormatError("valuation directive needs an atom name", number)
            name = parts[1]
            unknown = [w for w in parts[2:] if w not in declared]
            if unknown:
                raise ModelFormatError(f"unknown world id: {unknown[0]!r}", number)
            valuation.setdefault(name, set()).update(parts[2:])

    if not worlds:
        raise ModelFormatError("no worlds declared")
    try:
        return build_model(worlds, edges, valuation)
    except ModelError as exc:
        raise ModelFormatError(str(exc)) from exc


def serialize_model(model: PreorderModel) -> str:
    """Canonical text for a model; parsing it back rebuilds an equal model."""
    lines = ["worlds " + " ".join(model.worlds)]
    for a, b in sorted(model.order):
        if a != b:
            lines.append(f"order {a} {b}")
    for name in sorted(model.valuation):
        members = " ".join(sorted(model.valuation[name]))
        lines.append(f"valuation {name} {members}".rstrip())
    return "\n".join(lines) + "\n"
