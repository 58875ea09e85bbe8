"""Directed-graph machinery: kin relations, colliders, d-separation and the
graphical admissibility checks behind single-door, back-door and front-door
identification.

Graphs may contain directed cycles. d-separation follows the path-blocking
definition, evaluated with the usual reachability (Bayes-ball) sweep over
(node, direction) states.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

from .errors import ArgumentError, StructuralError

Edge = tuple[int, int]


def _as_set(nodes) -> frozenset[int]:
    if nodes is None:
        return frozenset()
    if isinstance(nodes, int):
        return frozenset((nodes,))
    return frozenset(int(v) for v in nodes)


@dataclass(frozen=True)
class CausalGraph:
    """Directed graph on nodes ``0..n-1``; ``(u, v)`` in ``edges`` means u -> v."""

    n: int
    edges: frozenset[Edge] = field(default_factory=frozenset)

    def __post_init__(self):
        edges = frozenset((int(u), int(v)) for u, v in self.edges)
        for u, v in edges:
            if u == v:
                raise StructuralError(f"self-loop at node {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise StructuralError(f"edge {(u, v)} outside node range [0, {self.n})")
        object.__setattr__(self, "edges", edges)

    def parents(self, v: int) -> set[int]:
        return {a for a, b in self.edges if b == v}

    def children(self, v: int) -> set[int]:
        return {b for a, b in self.edges if a == v}

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self.edges

    def adjacent(self, u: int, v: int) -> bool:
        return (u, v) in self.edges or (v, u) in self.edges

    def without_edges(self, removed: Iterable[Edge]) -> "CausalGraph":
        return CausalGraph(self.n, self.edges - frozenset(removed))

    def without_outgoing(self, nodes) -> "CausalGraph":
        nodes = _as_set(nodes)
        return CausalGraph(self.n, frozenset(e for e in self.edges if e[0] not in nodes))

    def is_acyclic(self) -> bool:
        return all(v not in descendants(self, v) for v in range(self.n))

    def to_json(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in sorted(self.edges)]}

    @classmethod
    def from_json(cls, obj) -> "CausalGraph":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(int(obj["n"]), frozenset(tuple(e) for e in obj["edges"]))


@dataclass(frozen=True)
class Cpdag:
    """Partially directed graph: oriented edges plus unordered undirected pairs."""

    n: int
    directed: frozenset[Edge] = field(default_factory=frozenset)
    undirected: frozenset[frozenset[int]] = field(default_factory=frozenset)

    def __post_init__(self):
        directed = frozenset((int(u), int(v)) for u, v in self.directed)
        undirected = frozenset(frozenset(int(x) for x in p) for p in self.undirected)
        if any(len(p) != 2 for p in undirected):
            raise StructuralError("undirected pairs must have two distinct nodes")
        if {frozenset(e) for e in directed} & undirected:
            raise StructuralError("an edge is both directed and undirected")
        object.__setattr__(self, "directed", directed)
        object.__setattr__(self, "undirected", undirected)

    def skeleton(self) -> frozenset[frozenset[int]]:
        return frozenset(frozenset(e) for e in self.directed) | self.undirected

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "edges": [list(e) for e in sorted(self.directed)],
            "undirected": sorted(sorted(p) for p in self.undirected),
        }

    @classmethod
    def from_json(cls, obj) -> "Cpdag":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(
            int(obj["n"]),
            frozenset(tuple(e) for e in obj["edges"]),
            frozenset(frozenset(p) for p in obj.get("undirected", [])),
        )


def topology(g: CausalGraph) -> frozenset[frozenset[int]]:
    return frozenset(frozenset(e) for e in g.edges)


def kin_set(g: CausalGraph, v: int) -> set[int]:
    """Parents, children and co-parents of ``v``."""
    if not 0 <= v < g.n:
        raise ArgumentError(f"node {v} out of range")
    kids = g.children(v)
    spouses = set().union(*(g.parents(c) for c in kids)) if kids else set()
    return (g.parents(v) | kids | spouses) - {v}


def kin_graph(g: CausalGraph) -> frozenset[frozenset[int]]:
    """Moral graph of ``g`` as a set of unordered pairs."""
    return frozenset(frozenset((u, v)) for v in range(g.n) for u in kin_set(g, v))


def colliders(g: CausalGraph, unshielded: bool = False) -> set[tuple[int, int, int]]:
    """All ``(a, c, b)`` with ``a -> c <- b`` and ``a < b``.

    With ``unshielded=True`` only pairs ``a, b`` that are not adjacent are kept
    (the v-structures that fix a Markov equivalence class).
    """
    out = set()
    for c in range(g.n):
        for a, b in itertools.combinations(sorted(g.parents(c)), 2):
            if unshielded and g.adjacent(a, b):
                continue
            out.add((a, c, b))
    return out


def descendants(g: CausalGraph, v: int) -> set[int]:
    """Nodes reachable from ``v`` along directed edges.

    ``v`` itself is included only when it lies on a directed cycle.
    """
    seen: set[int] = set()
    queue = deque(g.children(v))
    while queue:
        u = queue.popleft()
        if u in seen:
            continue
        seen.add(u)
        queue.extend(g.children(u) - seen)
    return seen


def ancestors(g: CausalGraph, nodes) -> set[int]:
    """Nodes with a directed path into ``nodes`` (the nodes themselves included)."""
    nodes = _as_set(nodes)
    seen = set(nodes)
    queue = deque(nodes)
    while queue:
        u = queue.popleft()
        for p in g.parents(u):
            if p not in seen:
                seen.add(p)
                queue.append(p)
    return seen


def has_directed_path(g: CausalGraph, sources, targets, avoiding=()) -> bool:
    sources, targets, avoiding = _as_set(sources), _as_set(targets), _as_set(avoiding)
    queue = deque(s for s in sources)
    seen = set()
    while queue:
        u = queue.popleft()
        for c in g.children(u):
            if c in targets:
                return True
            if c in avoiding or c in seen:
                continue
            seen.add(c)
            queue.append(c)
    return False


def _check_disjoint(**sets):
    for (na, a), (nb, b) in itertools.combinations(sets.items(), 2):
        if a & b:
            raise ArgumentError(f"sets {na} and {nb} overlap: {sorted(a & b)}")


def _check_range(g: CausalGraph, *sets):
    for s in sets:
        for v in s:
            if not 0 <= v < g.n:
                raise ArgumentError(f"node {v} out of range [0, {g.n})")


def d_separated(g: CausalGraph, X, Z, Y) -> bool:
    """True iff ``Z`` blocks every path between ``X`` and ``Y`` in ``g``."""
    X, Y, Z = _as_set(X), _as_set(Y), _as_set(Z)
    _check_range(g, X, Y, Z)
    _check_disjoint(X=X, Z=Z, Y=Y)
    if not X or not Y:
        return True
    # A collider is open iff it is in Z or has a descendant in Z, i.e. it is an
    # ancestor of Z.
    open_colliders = ancestors(g, Z)
    # state (v, up): up=True means v was entered from a child (edge v -> prev).
    visited: set[tuple[int, bool]] = set()
    queue = deque((x, True) for x in X)
    while queue:
        v, up = queue.popleft()
        if (v, up) in visited:
            continue
        visited.add((v, up))
        if v in Y:
            return False
        if up:
            if v in Z:
                continue
            for p in g.parents(v):
                queue.append((p, True))
            for c in g.children(v):
                queue.append((c, False))
        else:
            if v not in Z:
                for c in g.children(v):
                    queue.append((c, False))
            if v in open_colliders:
                for p in g.parents(v):
                    queue.append((p, True))
    return True


def d_separated_bruteforce(g: CausalGraph, X, Z, Y) -> bool:
    """Literal path-enumeration d-separation; exponential, for cross-checks only.

    Every simple path is enumerated with the orientation of each traversed
    edge (pairs joined in both directions contribute both variants).
    """
    X, Y, Z = _as_set(X), _as_set(Y), _as_set(Z)
    _check_disjoint(X=X, Z=Z, Y=Y)
    desc_or_self = {w: descendants(g, w) | {w} for w in range(g.n)}

    def blocked(nodes, arrows):
        # arrows[k] is True when the k-th step points forward (nodes[k] -> nodes[k+1])
        for k in range(1, len(nodes) - 1):
            w = nodes[k]
            collider = arrows[k - 1] and not arrows[k]
            if collider:
                if not (desc_or_self[w] & Z):
                    return True
            elif w in Z:
                return True
        return False

    def walk(nodes, arrows):
        v = nodes[-1]
        if v in Y and len(nodes) > 1:
            return not blocked(nodes, arrows)
        for u in range(g.n):
            if u in nodes:
                continue
            for forward in (True, False):
                if (forward and g.has_edge(v, u)) or (not forward and g.has_edge(u, v)):
                    if walk(nodes + [u], arrows + [forward]):
                        return True
        return False

    return not any(walk([x], []) for x in X)


def single_door_violations(g: CausalGraph, u: int, y: int, Z) -> list[str]:
    """Names of the single-door conditions (C1, C2, C3) that fail."""
    Z = _as_set(Z)
    _check_range(g, {u, y}, Z)
    if not g.has_edge(u, y):
        raise ArgumentError(f"edge {u}->{y} is not in the graph")
    if u in Z or y in Z:
        raise ArgumentError("u and y must not be in the adjustment set")
    out = []
    desc_y = descendants(g, y)
    if Z & desc_y:
        out.append("C1")
    if not d_separated(g.without_edges([(u, y)]), {u}, Z, {y}):
        out.append("C2")
    if y in desc_y:
        out.append("C3")
    return out


def single_door_admissible(g: CausalGraph, u: int, y: int, Z) -> bool:
    return not single_door_violations(g, u, y, Z)


def back_door_violations(g: CausalGraph, W, Y, Z) -> list[str]:
    W, Y, Z = _as_set(W), _as_set(Y), _as_set(Z)
    _check_range(g, W, Y, Z)
    _check_disjoint(W=W, Y=Y, Z=Z)
    out = []
    desc_w = set().union(*(descendants(g, w) for w in W)) if W else set()
    if Z & desc_w:
        out.append("descendant")
    if not d_separated(g.without_outgoing(W), W, Z, Y):
        out.append("backdoor_path")
    return out


def back_door_admissible(g: CausalGraph, W, Y, Z) -> bool:
    return not back_door_violations(g, W, Y, Z)


def front_door_violations(g: CausalGraph, W, Y, Z) -> list[str]:
    W, Y, Z = _as_set(W), _as_set(Y), _as_set(Z)
    _check_range(g, W, Y, Z)
    _check_disjoint(W=W, Y=Y, Z=Z)
    out = []
    if has_directed_path(g, W, Y, avoiding=Z):
        out.append("intercept")
    if Z and not d_separated(g.without_outgoing(Z), Z, W, Y):
        out.append("mediator_backdoor")
    if Z and not d_separated(g.without_outgoing(W), W, set(), Z):
        out.append("treatment_backdoor")
    return out


def front_door_admissible(g: CausalGraph, W, Y, Z) -> bool:
    return not front_door_violations(g, W, Y, Z)
