"""Primal, dual and incidence graphs of an instance; connection types; cut-rank."""

from __future__ import annotations

from dataclasses import dataclass

from .core import InputError, bits
from .kernels import gf2_rank

KINDS = ("primal", "dual", "incidence")


@dataclass(frozen=True, eq=False)
class RestrictionGraph:
    """Adjacency over integer vertices ``0..N-1``.

    ``items[v]`` is ``("j", job_id)`` or ``("m", machine_id)``; ``adj[v]`` is the
    neighbourhood as an int bitset.  Incidence graphs put jobs first.
    """

    kind: str
    items: tuple
    adj: tuple

    @property
    def order(self):
        return len(self.items)

    @property
    def labels(self):
        return [f"{t}:{x}" for t, x in self.items]

    def index(self, label):
        return self._label_index[label]

    @property
    def _label_index(self):
        cache = self.__dict__.get("_li")
        if cache is None:
            cache = {lab: v for v, lab in enumerate(self.labels)}
            self.__dict__["_li"] = cache
        return cache

    def vertex_of(self, item):
        """Vertex for a label ``"j:x"``, an item tuple, or an int vertex."""
        if isinstance(item, int):
            return item
        if isinstance(item, tuple):
            item = f"{item[0]}:{item[1]}"
        try:
            return self._label_index[item]
        except KeyError:
            raise InputError(f"unknown vertex {item!r}") from None

    def neighbors(self, v):
        return bits(self.adj[v])

    def degree(self, v):
        return bin(self.adj[v]).count("1")

    def edges(self):
        return [(u, v) for u in range(self.order) for v in bits(self.adj[u]) if u < v]

    @property
    def all_mask(self):
        return (1 << self.order) - 1

    def job_vertices(self):
        return [v for v, (t, _) in enumerate(self.items) if t == "j"]

    def machine_vertices(self):
        return [v for v, (t, _) in enumerate(self.items) if t == "m"]

    def side_mask(self, tag):
        return sum(1 << v for v, (t, _) in enumerate(self.items) if t == tag)

    def induced(self, vertices):
        keep = sorted(vertices)
        pos = {v: k for k, v in enumerate(keep)}
        adj = []
        for v in keep:
            adj.append(sum(1 << pos[u] for u in bits(self.adj[v]) if u in pos))
        return RestrictionGraph(self.kind, tuple(self.items[v] for v in keep), tuple(adj))

    def to_networkx(self):
        import networkx as nx

        g = nx.Graph()
        g.add_nodes_from(range(self.order))
        g.add_edges_from(self.edges())
        return g

    def to_dot(self):
        lines = [f"graph {self.kind} {{"]
        for v, lab in enumerate(self.labels):
            shape = "box" if self.items[v][0] == "m" else "ellipse"
            lines.append(f'  "{lab}" [shape={shape}];')
        for u, v in self.edges():
            lines.append(f'  "{self.labels[u]}" -- "{self.labels[v]}";')
        lines.append("}")
        return "\n".join(lines) + "\n"


def from_edges(n, edges, kind="plain", items=None):
    """Plain graph on ``0..n-1`` (vertices tagged as jobs unless ``items`` given)."""
    adj = [0] * n
    for u, v in edges:
        if u == v:
            continue
        adj[u] |= 1 << v
        adj[v] |= 1 << u
    items = tuple(items) if items is not None else tuple(("j", str(k)) for k in range(n))
    return RestrictionGraph(kind, items, tuple(adj))


def bipartite_from_edges(left, right, edges):
    """Bipartite graph with ``left`` as job side and ``right`` as machine side."""
    items = tuple(("j", str(x)) for x in left) + tuple(("m", str(y)) for y in right)
    lp = {x: k for k, x in enumerate(left)}
    rp = {y: len(left) + k for k, y in enumerate(right)}
    return from_edges(len(items), [(lp[a], rp[b]) for a, b in edges], "incidence", items)


def build_graph(inst, kind):
    if kind not in KINDS:
        raise InputError(f"unknown graph kind {kind!r}")
    n, m = inst.n, inst.m
    mm, jm = inst.machine_masks, inst.job_masks
    if kind == "primal":
        adj = []
        for j in range(n):
            nb = 0
            for i in bits(mm[j]):
                nb |= jm[i]
            adj.append(nb & ~(1 << j))
        items = tuple(("j", x) for x in inst.jobs)
    elif kind == "dual":
        adj = []
        for i in range(m):
            nb = 0
            for j in bits(jm[i]):
                nb |= mm[j]
            adj.append(nb & ~(1 << i))
        items = tuple(("m", x) for x in inst.machines)
    else:
        adj = [mm[j] << n for j in range(n)] + [jm[i] for i in range(m)]
        items = tuple(("j", x) for x in inst.jobs) + tuple(("m", x) for x in inst.machines)
    return RestrictionGraph(kind, items, tuple(adj))


def _mask_of(graph, X):
    if isinstance(X, int):
        return X
    mask = 0
    for x in X:
        mask |= 1 << graph.vertex_of(x)
    return mask


def cut_rank(graph, X):
    """GF(2) rank of the adjacency block between ``X`` and its complement."""
    xm = _mask_of(graph, X)
    ym = graph.all_mask & ~xm
    rows = [graph.adj[v] & ym for v in bits(xm)]
    return gf2_rank([r for r in rows if r], graph.order)


@dataclass(frozen=True)
class ConnectionTypePartition:
    """Groups of ``X`` with equal neighbourhood inside ``Y``.

    ``groups[k]`` is a tuple of vertices, ``neighborhoods[k]`` the shared
    neighbourhood bitset.  Groups are ordered by that bitset.
    """

    groups: tuple
    neighborhoods: tuple

    def __len__(self):
        return len(self.groups)

    def type_of(self):
        return {v: k for k, g in enumerate(self.groups) for v in g}


def connection_types_mask(graph, xmask, ymask):
    keyed = sorted((graph.adj[v] & ymask, v) for v in bits(xmask))
    groups, nbhds = [], []
    for nb, v in keyed:
        if nbhds and nbhds[-1] == nb:
            groups[-1].append(v)
        else:
            nbhds.append(nb)
            groups.append([v])
    return ConnectionTypePartition(tuple(tuple(g) for g in groups), tuple(nbhds))


def connection_types(graph, X, Y):
    """Partition ``X`` by ``N(u) ∩ Y``; ``X`` and ``Y`` are labels or vertices."""
    return connection_types_mask(graph, _mask_of(graph, X), _mask_of(graph, Y))


def components(graph, mask=None):
    mask = graph.all_mask if mask is None else mask
    seen = 0
    out = []
    for s in bits(mask):
        if seen >> s & 1:
            continue
        comp = 1 << s
        frontier = 1 << s
        while frontier:
            nxt = 0
            for v in bits(frontier):
                nxt |= graph.adj[v]
            nxt &= mask & ~comp
            comp |= nxt
            frontier = nxt
        seen |= comp
        out.append(comp)
    return out


def graph_stats(inst):
    report = {}
    for kind in KINDS:
        g = build_graph(inst, kind)
        degs = [g.degree(v) for v in range(g.order)]
        report[kind] = {
            "vertices": g.order,
            "edges": len(g.edges()),
            "max_degree": max(degs, default=0),
            "components": len(components(g)),
        }
    report["max_jobs_per_machine"] = max((bin(x).count("1") for x in inst.job_masks), default=0)
    report["max_machines_per_job"] = max((bin(x).count("1") for x in inst.machine_masks), default=0)
    return report
