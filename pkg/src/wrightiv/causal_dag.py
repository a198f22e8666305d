"""Causal DAGs for the demand/supply model and d-separation queries.

Graph text format: one ``parent -> child`` edge per line, ``latent: A, B``
lines marking latent nodes, a bare label declaring an isolated node, and
``#`` comments.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .exceptions import GraphError, GraphParseError

__all__ = [
    "Dag",
    "SeparationQuery",
    "Path",
    "ExclusionCheck",
    "build_wright_dag",
    "d_separated",
    "enumerate_paths",
    "path_blocked",
    "factorization",
    "render_factorization",
    "implied_exclusions",
    "parse_dag",
    "format_dag",
]


class Dag:
    """Directed acyclic graph with labelled nodes and latent marks.

    Parent lists keep edge insertion order, which fixes how factorisations are
    rendered.
    """

    def __init__(self, nodes: Iterable[str] = (), edges: Iterable[tuple[str, str]] = (),
                 latent: Iterable[str] = ()):
        self._order: list[str] = []
        self._parents: dict[str, list[str]] = {}
        self._children: dict[str, list[str]] = {}
        for v in nodes:
            self._add_node(v)
        edges = list(edges)
        for a, b in edges:
            self._add_node(a)
            self._add_node(b)
        latent = set(latent)
        unknown = latent - set(self._order)
        if unknown:
            raise GraphError(f"latent marks on unknown nodes: {sorted(unknown)}")
        self.latent = frozenset(latent)
        for a, b in edges:
            if a == b:
                raise GraphError(f"self loop on {a!r}")
            if b in self._children[a]:
                raise GraphError(f"duplicate edge {a} -> {b}")
            self._children[a].append(b)
            self._parents[b].append(a)
        cycle = self._find_cycle()
        if cycle:
            raise GraphError("graph has a directed cycle: " + " -> ".join(cycle))

    def _add_node(self, v):
        if not isinstance(v, str) or not v:
            raise GraphError(f"node labels must be nonempty strings, got {v!r}")
        if v not in self._parents:
            self._order.append(v)
            self._parents[v] = []
            self._children[v] = []

    def _find_cycle(self):
        state = {v: 0 for v in self._order}
        for root in self._order:
            if state[root]:
                continue
            stack = [(root, iter(self._children[root]))]
            trail = [root]
            state[root] = 1
            while stack:
                node, it = stack[-1]
                nxt = next(it, None)
                if nxt is None:
                    state[node] = 2
                    stack.pop()
                    trail.pop()
                elif state[nxt] == 1:
                    return trail[trail.index(nxt):] + [nxt]
                elif state[nxt] == 0:
                    state[nxt] = 1
                    stack.append((nxt, iter(self._children[nxt])))
                    trail.append(nxt)
        return None

    @property
    def nodes(self) -> tuple[str, ...]:
        return tuple(self._order)

    @property
    def edges(self) -> tuple[tuple[str, str], ...]:
        return tuple((a, b) for a in self._order for b in self._children[a])

    def parents(self, v) -> tuple[str, ...]:
        return tuple(self._parents[v])

    def children(self, v) -> tuple[str, ...]:
        return tuple(self._children[v])

    def is_latent(self, v) -> bool:
        return v in self.latent

    def __contains__(self, v):
        return v in self._parents

    def __repr__(self):
        return f"Dag(nodes={len(self._order)}, edges={len(self.edges)})"

    def is_acyclic(self) -> bool:
        return self._find_cycle() is None

    def descendants(self, v, include_self=True) -> set[str]:
        seen = {v} if include_self else set()
        todo = list(self._children[v])
        while todo:
            u = todo.pop()
            if u not in seen:
                seen.add(u)
                todo.extend(self._children[u])
        return seen

    def ancestors(self, nodes) -> set[str]:
        seen = set(nodes)
        todo = list(nodes)
        while todo:
            u = todo.pop()
            for p in self._parents[u]:
                if p not in seen:
                    seen.add(p)
                    todo.append(p)
        return seen

    def topological_order(self) -> list[str]:
        """Kahn's algorithm, breaking ties by node insertion order."""
        indeg = {v: len(self._parents[v]) for v in self._order}
        rank = {v: i for i, v in enumerate(self._order)}
        ready = [v for v in self._order if indeg[v] == 0]
        out = []
        while ready:
            ready.sort(key=rank.__getitem__)
            v = ready.pop(0)
            out.append(v)
            for c in self._children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        return out

    def with_edges(self, add=(), remove=()) -> "Dag":
        remove = set(remove)
        edges = [e for e in self.edges if e not in remove] + list(add)
        return Dag(self.nodes, edges, self.latent)

    def without_nodes(self, drop) -> "Dag":
        drop = set(drop)
        return Dag([v for v in self._order if v not in drop],
                   [(a, b) for a, b in self.edges if a not in drop and b not in drop],
                   self.latent - drop)


@dataclass(frozen=True)
class SeparationQuery:
    x: frozenset
    y: frozenset
    z: frozenset = frozenset()

    def __post_init__(self):
        for name in ("x", "y", "z"):
            val = getattr(self, name)
            object.__setattr__(self, name, frozenset([val] if isinstance(val, str) else val))
        if not self.x or not self.y:
            raise GraphError("x and y must be nonempty")
        if self.x & self.y or self.x & self.z or self.y & self.z:
            raise GraphError("x, y and z must be disjoint")

    def validate(self, dag: Dag):
        missing = sorted(v for v in self.x | self.y | self.z if v not in dag)
        if missing:
            raise GraphError(f"unknown node(s): {', '.join(missing)}")

    def __str__(self):
        def fmt(s):
            return ", ".join(sorted(s))
        cond = f" | {fmt(self.z)}" if self.z else ""
        return f"{fmt(self.x)} _||_ {fmt(self.y)}{cond}"


def d_separated(dag: Dag, q: SeparationQuery) -> bool:
    """True when every path between ``q.x`` and ``q.y`` is blocked by ``q.z``.

    Reachability over (node, direction) states: ``"up"`` means the walk
    arrived from a child, ``"down"`` from a parent. Linear in the graph size.
    """
    q.validate(dag)
    z = q.z
    anc_z = dag.ancestors(z)
    seen = set()
    todo = deque((v, "up") for v in q.x)
    while todo:
        v, direction = todo.popleft()
        if (v, direction) in seen:
            continue
        seen.add((v, direction))
        if v not in z and v in q.y:
            return False
        if direction == "up" and v not in z:
            for p in dag._parents[v]:
                todo.append((p, "up"))
            for c in dag._children[v]:
                todo.append((c, "down"))
        elif direction == "down":
            if v not in z:
                for c in dag._children[v]:
                    todo.append((c, "down"))
            if v in anc_z:
                for p in dag._parents[v]:
                    todo.append((p, "up"))
    return True


class Path(NamedTuple):
    """Undirected simple path; ``arrows[i]`` orients the edge nodes[i]-nodes[i+1]."""

    nodes: tuple[str, ...]
    arrows: tuple[str, ...]

    def colliders(self) -> tuple[str, ...]:
        return tuple(
            self.nodes[i]
            for i in range(1, len(self.nodes) - 1)
            if self.arrows[i - 1] == "->" and self.arrows[i] == "<-"
        )

    def __str__(self):
        out = [self.nodes[0]]
        for arrow, node in zip(self.arrows, self.nodes[1:]):
            out += [arrow, node]
        return " ".join(out)


def enumerate_paths(dag: Dag, x: str, y: str) -> list[Path]:
    """All simple paths between ``x`` and ``y`` ignoring edge direction.

    Exponential in general; intended for small graphs and cross-checks.
    """
    if x == y:
        raise GraphError("path endpoints must differ")
    for v in (x, y):
        if v not in dag:
            raise GraphError(f"unknown node: {v}")
    out = []

    def walk(node, nodes, arrows, visited):
        if node == y:
            out.append(Path(tuple(nodes), tuple(arrows)))
            return
        steps = [(c, "->") for c in dag._children[node]] + [(p, "<-") for p in dag._parents[node]]
        for nxt, arrow in steps:
            if nxt not in visited:
                visited.add(nxt)
                walk(nxt, nodes + [nxt], arrows + [arrow], visited)
                visited.discard(nxt)

    walk(x, [x], [], {x})
    return out


def path_blocked(dag: Dag, path: Path, z) -> bool:
    """Blocking rule for one path: a non-collider in ``z``, or a collider with
    no member of ``z`` among itself and its descendants."""
    z = set(z)
    for i in range(1, len(path.nodes) - 1):
        v = path.nodes[i]
        collider = path.arrows[i - 1] == "->" and path.arrows[i] == "<-"
        if collider:
            if not (dag.descendants(v) & z):
                return True
        elif v in z:
            return True
    return False


def factorization(dag: Dag) -> list[tuple[str, tuple[str, ...]]]:
    """(node, parents) pairs in topological order."""
    return [(v, dag.parents(v)) for v in dag.topological_order()]


_WRIGHT_SYMBOLS = {"Zd": "z^d", "Zs": "z^s", "K1": "k_1", "K2": "k_2"}


def _symbol(label):
    return _WRIGHT_SYMBOLS.get(label, label.lower())


def render_factorization(dag: Dag, symbol=_symbol) -> str:
    """E.g. ``f(a)f(b | a)f(c | b)`` for the chain a -> b -> c."""
    parts = []
    for v, pa in factorization(dag):
        if pa:
            parts.append(f"f({symbol(v)} | {','.join(symbol(p) for p in pa)})")
        else:
            parts.append(f"f({symbol(v)})")
    return "".join(parts)


def build_wright_dag(include_w: bool = False, include_k1: bool = True) -> Dag:
    """Demand/supply DAG with latent demand/supply curves D, S and factors K1, K2.

    With ``include_w`` the common shifter W is added with edges W -> D, W -> S
    and K1 -> W. ``include_k1=False`` gives the variant with uncorrelated
    shifters.
    """
    nodes = ["K1", "W", "Zd", "Zs", "K2", "D", "S", "P", "Y"]
    if not include_w:
        nodes.remove("W")
    if not include_k1:
        nodes.remove("K1")
    edges = []
    if include_k1:
        edges += [("K1", "Zd"), ("K1", "Zs")]
        if include_w:
            edges.append(("K1", "W"))
    edges.append(("Zd", "D"))
    if include_w:
        edges.append(("W", "D"))
    edges.append(("K2", "D"))
    edges.append(("Zs", "S"))
    if include_w:
        edges.append(("W", "S"))
    edges += [("K2", "S"), ("D", "P"), ("S", "P"), ("D", "Y"), ("S", "Y")]
    latent = {"K2", "D", "S"} | ({"K1"} if include_k1 else set())
    return Dag(nodes, edges, latent)


@dataclass(frozen=True)
class ExclusionCheck:
    name: str
    query: SeparationQuery
    holds: bool
    involves_latent: bool

    def __str__(self):
        return f"{self.name}: {self.query} -> {'holds' if self.holds else 'FAILS'}"


def implied_exclusions(dag: Dag) -> list[ExclusionCheck]:
    """Check the exclusion restrictions behind the instrument moments.

    * demand exclusion: D _||_ Zs | Zd (, W)
    * supply exclusion: S _||_ Zd | Zs (, W)
    * shifter independence: Zd _||_ Zs, only when the graph has no K1
    """
    needed = {"D", "S", "Zd", "Zs"}
    missing = sorted(needed - set(dag.nodes))
    if missing:
        raise GraphError(f"missing Wright node(s): {', '.join(missing)}")
    w = {"W"} if "W" in dag else set()
    queries = [
        ("demand exclusion", SeparationQuery({"D"}, {"Zs"}, {"Zd"} | w)),
        ("supply exclusion", SeparationQuery({"S"}, {"Zd"}, {"Zs"} | w)),
    ]
    if "K1" not in dag:
        queries.append(("shifter independence", SeparationQuery({"Zd"}, {"Zs"}, set())))
    out = []
    for name, q in queries:
        involved = q.x | q.y | q.z
        out.append(ExclusionCheck(name, q, d_separated(dag, q),
                                  any(dag.is_latent(v) for v in involved)))
    return out


def parse_dag(text: str) -> Dag:
    """Parse the edge-list text format; errors carry 1-based line numbers."""
    nodes, edges, latent = [], [], []
    seen_edges = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.lower().startswith("latent:"):
            labels = [s.strip() for s in line.split(":", 1)[1].split(",") if s.strip()]
            if not labels:
                raise GraphParseError("latent line lists no nodes", line=lineno)
            latent += labels
            nodes += labels
            continue
        if "->" in line:
            parts = [s.strip() for s in line.split("->")]
            if len(parts) != 2 or not all(parts) or any(" " in s for s in parts):
                raise GraphParseError(f"malformed edge {raw.strip()!r}", line=lineno)
            if parts[0] == parts[1]:
                raise GraphParseError(f"self loop on {parts[0]!r}", line=lineno)
            if tuple(parts) in seen_edges:
                raise GraphParseError(f"duplicate edge {parts[0]} -> {parts[1]}", line=lineno)
            seen_edges.add(tuple(parts))
            edges.append(tuple(parts))
            continue
        if " " in line or "-" in line or ">" in line or "<" in line:
            raise GraphParseError(f"malformed line {raw.strip()!r}", line=lineno)
        nodes.append(line)
    ordered = []
    for v in nodes + [v for e in edges for v in e]:
        if v not in ordered:
            ordered.append(v)
    return Dag(ordered, edges, latent)


def format_dag(dag: Dag) -> str:
    lines = []
    if dag.latent:
        lines.append("latent: " + ", ".join(v for v in dag.nodes if v in dag.latent))
    connected = {v for e in dag.edges for v in e}
    lines += [v for v in dag.nodes if v not in connected]
    lines += [f"{a} -> {b}" for a, b in dag.edges]
    return "\n".join(lines) + "\n"
