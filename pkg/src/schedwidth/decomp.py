"""Tree and branch decompositions, simple-form normalisation, bi-cograph recognition."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

from .core import InputError, ResourceError, bits
from .graphs import components, cut_rank

# ------------------------------------------------------------ tree decompositions


@dataclass(frozen=True)
class TreeDecomposition:
    """Bags over graph vertex indices; ``edges`` must form a tree on the nodes."""

    bags: tuple
    edges: tuple
    root: int = 0

    def __post_init__(self):
        object.__setattr__(self, "bags", tuple(frozenset(b) for b in self.bags))
        object.__setattr__(self, "edges", tuple((int(a), int(b)) for a, b in self.edges))

    @property
    def width(self):
        return max((len(b) for b in self.bags), default=0) - 1

    def __len__(self):
        return len(self.bags)

    def adjacency(self):
        nb = [[] for _ in self.bags]
        for a, b in self.edges:
            nb[a].append(b)
            nb[b].append(a)
        return nb


@dataclass(frozen=True)
class Validation:
    ok: bool
    condition: str = ""
    witness: object = None
    message: str = ""
    width: int | None = None

    def __bool__(self):
        return self.ok


def _is_tree(count, edges):
    if count == 0:
        return False
    if len(edges) != count - 1:
        return False
    nb = [[] for _ in range(count)]
    for a, b in edges:
        if not (0 <= a < count and 0 <= b < count):
            return False
        nb[a].append(b)
        nb[b].append(a)
    seen = {0}
    stack = [0]
    while stack:
        x = stack.pop()
        for y in nb[x]:
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return len(seen) == count


def validate_tree_decomposition(G, td):
    """Check coverage (T1), edge containment (T2) and connectivity (T3)."""
    if not _is_tree(len(td.bags), td.edges):
        return Validation(False, "tree", None, "decomposition graph is not a tree")
    allv = set(range(G.order))
    covered = set().union(*td.bags) if td.bags else set()
    if not covered <= allv:
        return Validation(False, "vertices", sorted(covered - allv)[0], "bag holds unknown vertex")
    missing = allv - covered
    if missing:
        v = min(missing)
        return Validation(False, "T1", v, f"vertex {v} in no bag")
    for u, v in G.edges():
        if not any(u in b and v in b for b in td.bags):
            return Validation(False, "T2", (u, v), f"edge {u}-{v} in no bag")
    nb = td.adjacency()
    for v in range(G.order):
        nodes = [t for t, b in enumerate(td.bags) if v in b]
        seen = {nodes[0]}
        stack = [nodes[0]]
        while stack:
            x = stack.pop()
            for y in nb[x]:
                if y not in seen and v in td.bags[y]:
                    seen.add(y)
                    stack.append(y)
        if len(seen) != len(nodes):
            return Validation(False, "T3", v, f"bags containing vertex {v} are disconnected")
    return Validation(True, width=td.width)


def decomposition_from_ordering(G, order):
    """Tree decomposition induced by eliminating vertices in ``order``."""
    n = G.order
    if n == 0:
        return TreeDecomposition((frozenset(),), ())
    pos = {v: k for k, v in enumerate(order)}
    adj = list(G.adj)
    bags = []
    later = []
    for v in order:
        nb = adj[v]
        later_nb = [u for u in bits(nb) if pos[u] > pos[v]]
        bags.append(frozenset([v, *later_nb]))
        later.append(later_nb)
        clique = sum(1 << u for u in later_nb)
        for u in later_nb:
            adj[u] |= clique & ~(1 << u)
            adj[u] &= ~(1 << v)
    edges = []
    roots = []
    for k, v in enumerate(order):
        if later[k]:
            parent = min(pos[u] for u in later[k])
            edges.append((k, parent))
        else:
            roots.append(k)
    for r in roots[:-1]:
        edges.append((r, roots[-1]))
    return TreeDecomposition(tuple(bags), tuple(edges), roots[-1])


def elimination_ordering(G, heuristic="min_fill"):
    if heuristic not in ("min_degree", "min_fill"):
        raise InputError(f"unknown heuristic {heuristic!r}")
    adj = list(G.adj)
    alive = set(range(G.order))
    order = []
    while alive:
        best, best_key = None, None
        for v in sorted(alive):
            nb = bits(adj[v])
            if heuristic == "min_degree":
                key = len(nb)
            else:
                key = 0
                for a_i, a in enumerate(nb):
                    key += sum(1 for b in nb[a_i + 1:] if not adj[a] >> b & 1)
            if best_key is None or key < best_key:
                best, best_key = v, key
        nb = bits(adj[best])
        clique = sum(1 << u for u in nb)
        for u in nb:
            adj[u] = (adj[u] | clique) & ~(1 << u) & ~(1 << best)
        alive.remove(best)
        order.append(best)
    return order


def heuristic_tree_decomposition(G, heuristic="min_fill"):
    return decomposition_from_ordering(G, elimination_ordering(G, heuristic))


def _reach_through(G, S, v):
    """Vertices outside ``S ∪ {v}`` reachable from ``v`` via paths inside ``S``."""
    seen = 1 << v
    frontier = 1 << v
    out = 0
    while frontier:
        nxt = 0
        for x in bits(frontier):
            nxt |= G.adj[x]
        nxt &= ~seen
        seen |= nxt
        out |= nxt & ~S
        frontier = nxt & S
    return out & ~(1 << v)


def exact_treewidth(G, limit=12):
    """Optimal width by subset DP over elimination prefixes."""
    n = G.order
    if n > limit:
        raise ResourceError(f"exact treewidth limited to {limit} vertices, graph has {n}")
    if n == 0:
        return -1, TreeDecomposition((frozenset(),), ())
    full = (1 << n) - 1
    tw = {0: -1}
    arg = {}
    for S in range(1, full + 1):
        best, bv = None, None
        for v in bits(S):
            rest = S & ~(1 << v)
            q = bin(_reach_through(G, rest, v)).count("1")
            val = max(tw[rest], q)
            if best is None or val < best:
                best, bv = val, v
        tw[S] = best
        arg[S] = bv
    order = []
    S = full
    while S:
        v = arg[S]
        order.append(v)
        S &= ~(1 << v)
    order.reverse()
    td = decomposition_from_ordering(G, order)
    return td.width, td


# ------------------------------------------------------------ simple form


@dataclass(frozen=True)
class SimpleFormDecomposition:
    """Rooted binary tree decomposition with empty leaf bags.

    Node 0 is the root ``a``: an empty-bag leaf of the underlying tree whose
    only child is ``children[0][0]``.  Every other non-leaf has two children.
    """

    bags: tuple
    children: tuple
    parent: tuple

    @property
    def root(self):
        return 0

    @property
    def width(self):
        return max((len(b) for b in self.bags), default=0) - 1

    def __len__(self):
        return len(self.bags)

    def as_tree_decomposition(self):
        edges = tuple((t, c) for t, cs in enumerate(self.children) for c in cs)
        return TreeDecomposition(self.bags, edges, 0)

    def postorder(self):
        out = []
        stack = [(0, False)]
        while stack:
            t, done = stack.pop()
            if done:
                out.append(t)
                continue
            stack.append((t, True))
            for c in reversed(self.children[t]):
                stack.append((c, False))
        return out

    def is_leaf(self, t):
        return not self.children[t]


def normalize_simple_form(td, root_choice=None):
    """Binary, empty-leaf, rooted-at-empty-leaf copy of ``td`` with equal width."""
    r0 = td.root if root_choice is None else root_choice
    nb = td.adjacency()
    bags = [frozenset()]
    children = [[]]
    parent = [-1]

    def new(bag, par):
        bags.append(frozenset(bag))
        children.append([])
        parent.append(par)
        if par >= 0:
            children[par].append(len(bags) - 1)
        return len(bags) - 1

    stack = [(r0, -1, 0)]
    while stack:
        orig, orig_par, attach = stack.pop()
        node = new(td.bags[orig], attach)
        kids = [c for c in nb[orig] if c != orig_par]
        host = node
        # chain through dummy copies so every node ends with two children
        while len(kids) > 2:
            stack.append((kids.pop(0), orig, host))
            host = new(td.bags[orig], host)
        while len(kids) < 2:
            kids.append(None)
        for c in kids:
            if c is None:
                new((), host)
            else:
                stack.append((c, orig, host))
    # children were appended in creation order; stack order makes that deterministic
    return SimpleFormDecomposition(tuple(bags), tuple(tuple(c) for c in children), tuple(parent))


def check_simple_form(G, sfd):
    base = validate_tree_decomposition(G, sfd.as_tree_decomposition())
    if not base:
        return base
    if sfd.bags[0] or len(sfd.children[0]) != 1:
        return Validation(False, "root", 0, "root must be an empty-bag leaf with one child")
    for t in range(1, len(sfd)):
        k = len(sfd.children[t])
        if k == 0 and sfd.bags[t]:
            return Validation(False, "leaf", t, f"leaf {t} has nonempty bag")
        if k not in (0, 2):
            return Validation(False, "binary", t, f"node {t} has {k} children")
    return Validation(True, width=sfd.width)


# ------------------------------------------------------------ branch decompositions


@dataclass(frozen=True)
class BranchDecomposition:
    """Tree on ``count`` nodes; ``leaf`` maps each graph vertex to its leaf node."""

    count: int
    edges: tuple
    leaf: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(a), int(b)) for a, b in self.edges))
        object.__setattr__(self, "leaf", {int(k): int(v) for k, v in dict(self.leaf).items()})

    def adjacency(self):
        nb = [[] for _ in range(self.count)]
        for a, b in self.edges:
            nb[a].append(b)
            nb[b].append(a)
        return nb

    def vertex_at(self):
        return {t: v for v, t in self.leaf.items()}

    def side(self, a, b):
        """Graph vertices on ``b``'s side once edge ``{a, b}`` is removed, as a bitset."""
        nb = self.adjacency()
        at = self.vertex_at()
        seen = {a, b}
        stack = [b]
        mask = 0
        while stack:
            x = stack.pop()
            if x in at:
                mask |= 1 << at[x]
            for y in nb[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return mask


@dataclass(frozen=True)
class BranchValidation:
    ok: bool
    rankwidth: int | None = None
    edge_widths: dict = field(default_factory=dict)
    message: str = ""

    def __bool__(self):
        return self.ok


def validate_branch_decomposition(G, bd):
    if bd.count == 0 or not _is_tree(bd.count, bd.edges):
        raise InputError("branch decomposition edges do not form a tree")
    nb = bd.adjacency()
    leaves = [t for t in range(bd.count) if len(nb[t]) <= 1]
    if sorted(bd.leaf) != list(range(G.order)):
        return BranchValidation(False, message="leaf map must cover every vertex exactly once")
    if len(set(bd.leaf.values())) != G.order or sorted(bd.leaf.values()) != sorted(leaves):
        return BranchValidation(False, message="leaf map is not a bijection onto the tree leaves")
    for t in range(bd.count):
        if len(nb[t]) not in (0, 1, 3):
            return BranchValidation(False, message=f"internal node {t} has degree {len(nb[t])}")
    widths = {}
    for a, b in bd.edges:
        widths[(a, b)] = cut_rank(G, bd.side(a, b))
    return BranchValidation(True, max(widths.values(), default=0), widths)


def caterpillar_branch_decomposition(G, order=None):
    order = list(range(G.order)) if order is None else list(order)
    n = len(order)
    if n == 0:
        raise InputError("empty graph has no branch decomposition")
    if n == 1:
        return BranchDecomposition(1, (), {order[0]: 0})
    if n == 2:
        return BranchDecomposition(2, ((0, 1),), {order[0]: 0, order[1]: 1})
    # spine nodes 0..n-3, leaves n-2..2n-3
    spine = list(range(n - 2))
    edges = [(spine[k], spine[k + 1]) for k in range(len(spine) - 1)]
    leaf = {}
    nxt = n - 2
    for k, v in enumerate(order):
        s = spine[min(max(k - 1, 0), len(spine) - 1)]
        edges.append((s, nxt))
        leaf[v] = nxt
        nxt += 1
    return BranchDecomposition(nxt, tuple(edges), leaf)


# ------------------------------------------------------------ bi-cographs


@dataclass(frozen=True)
class BiCotreeNode:
    """``op`` is "leaf", "union" (components of the current graph) or
    "bicomplement" (components after bi-complementing a connected part).
    ``parity`` says whether the node's graph is the original (0) or its
    bi-complement (1) restricted to ``vertices``."""

    op: str
    parity: int
    vertices: int
    children: tuple


@dataclass(frozen=True)
class BiCotree:
    nodes: tuple
    root: int

    def __bool__(self):
        return True

    def leaves(self):
        return [bits(n.vertices)[0] for n in self.nodes if n.op == "leaf"]


@dataclass(frozen=True)
class NotBicograph:
    """A connected vertex set whose bi-complement is connected as well."""

    witness: int

    def __bool__(self):
        return False


def _sides(G):
    jm = G.side_mask("j")
    return jm, G.all_mask & ~jm


def _parity_adj(G, v, parity, mask, jm, mm):
    if not parity:
        return G.adj[v] & mask
    other = mm if jm >> v & 1 else jm
    return other & ~G.adj[v] & mask


def _components_parity(G, mask, parity, jm, mm):
    seen = 0
    out = []
    for s in bits(mask):
        if seen >> s & 1:
            continue
        comp = frontier = 1 << s
        while frontier:
            nxt = 0
            for v in bits(frontier):
                nxt |= _parity_adj(G, v, parity, mask, jm, mm)
            nxt &= ~comp
            comp |= nxt
            frontier = nxt
        seen |= comp
        out.append(comp)
    return out


def bicograph_recognize(G):
    """BiCotree of a bipartite graph (sides = job / machine tags), else ``NotBicograph``."""
    jm, mm = _sides(G)
    for v in bits(jm):
        if G.adj[v] & jm:
            raise InputError("graph is not bipartite with respect to its job/machine sides")
    if G.order == 0:
        raise InputError("empty graph")
    nodes = []
    # explicit stack of (mask, parity, slot in parent's child list)
    pending = [(G.all_mask, 0, None)]
    kids = {}
    while pending:
        mask, parity, parent_slot = pending.pop()
        idx = len(nodes)
        nodes.append(None)
        if parent_slot is not None:
            kids[parent_slot].append(idx)
        if mask & (mask - 1) == 0:
            nodes[idx] = BiCotreeNode("leaf", parity, mask, ())
            continue
        comps = _components_parity(G, mask, parity, jm, mm)
        if len(comps) > 1:
            op, child_parity = "union", parity
        else:
            comps = _components_parity(G, mask, 1 - parity, jm, mm)
            if len(comps) == 1:
                return NotBicograph(mask)
            op, child_parity = "bicomplement", 1 - parity
        nodes[idx] = (op, parity, mask)
        kids[idx] = []
        for c in reversed(comps):
            pending.append((c, child_parity, idx))
    final = []
    for idx, nd in enumerate(nodes):
        if isinstance(nd, BiCotreeNode):
            final.append(nd)
        else:
            op, parity, mask = nd
            final.append(BiCotreeNode(op, parity, mask, tuple(kids[idx])))
    return BiCotree(tuple(final), 0)


def replay_bicotree(G, bct):
    """Re-check a BiCotree: children partition each node into its components."""
    jm, mm = _sides(G)
    for nd in bct.nodes:
        if nd.op == "leaf":
            if bin(nd.vertices).count("1") != 1:
                return False
            continue
        child_masks = sorted(bct.nodes[c].vertices for c in nd.children)
        if nd.op == "union":
            comps = _components_parity(G, nd.vertices, nd.parity, jm, mm)
        else:
            if len(_components_parity(G, nd.vertices, nd.parity, jm, mm)) != 1:
                return False
            comps = _components_parity(G, nd.vertices, 1 - nd.parity, jm, mm)
        if sorted(comps) != child_masks or len(comps) < 2:
            return False
    return True


def bicotree_to_branch_decomposition(bct):
    """Binarise the cotree (caterpillar per node) and unroot it."""
    total = sum(1 for nd in bct.nodes if nd.op == "leaf")
    if total == 1:
        return BranchDecomposition(1, (), {bct.leaves()[0]: 0})
    edges = []
    leaf = {}
    counter = [0]

    def fresh():
        counter[0] += 1
        return counter[0] - 1

    # post-order: build a rooted binary tree, returning its top node per cotree node
    top = {}
    order = []
    stack = [(bct.root, False)]
    while stack:
        x, done = stack.pop()
        if done:
            order.append(x)
            continue
        stack.append((x, True))
        for c in bct.nodes[x].children:
            stack.append((c, False))
    for x in order:
        nd = bct.nodes[x]
        if nd.op == "leaf":
            t = fresh()
            leaf[bits(nd.vertices)[0]] = t
            top[x] = t
            continue
        cur = top[nd.children[0]]
        for c in nd.children[1:]:
            t = fresh()
            edges.append((t, cur))
            edges.append((t, top[c]))
            cur = t
        top[x] = cur
    root = top[bct.root]
    # the rooted root has degree 2: splice its two children together
    kids = [b for a, b in edges if a == root]
    edges = [e for e in edges if root not in e]
    edges.append((kids[0], kids[1]))
    remap = {}
    for t in sorted({x for e in edges for x in e} | set(leaf.values())):
        remap[t] = len(remap)
    return BranchDecomposition(
        len(remap), tuple((remap[a], remap[b]) for a, b in edges), {v: remap[t] for v, t in leaf.items()}
    )


# ------------------------------------------------------------ JSON


def td_to_dict(G, td):
    labels = G.labels
    out = {
        "nodes": [{"id": t, "bag": sorted(labels[v] for v in bag)} for t, bag in enumerate(td.bags)],
        "edges": [list(e) for e in td.edges],
        "root": td.root,
    }
    return out


def td_from_dict(G, data):
    try:
        ids = [nd["id"] for nd in data["nodes"]]
        pos = {x: k for k, x in enumerate(ids)}
        bags = [frozenset(G.vertex_of(lab) for lab in nd["bag"]) for nd in data["nodes"]]
        edges = [(pos[a], pos[b]) for a, b in data.get("edges", [])]
        root = pos[data["root"]] if data.get("root") is not None else 0
    except (KeyError, TypeError) as exc:
        raise InputError(f"bad tree decomposition: {exc}") from None
    return TreeDecomposition(tuple(bags), tuple(edges), root)


def bd_to_dict(G, bd):
    labels = G.labels
    return {"leaves": {labels[v]: t for v, t in bd.leaf.items()}, "edges": [list(e) for e in bd.edges]}


def bd_from_dict(G, data):
    try:
        raw_leaves = {G.vertex_of(lab): t for lab, t in data["leaves"].items()}
        raw_edges = [tuple(e) for e in data.get("edges", [])]
    except (KeyError, TypeError, AttributeError) as exc:
        raise InputError(f"bad branch decomposition: {exc}") from None
    ids = sorted({x for e in raw_edges for x in e} | set(raw_leaves.values()), key=str)
    pos = {x: k for k, x in enumerate(ids)}
    return BranchDecomposition(
        len(ids), tuple((pos[a], pos[b]) for a, b in raw_edges), {v: pos[t] for v, t in raw_leaves.items()}
    )


def load_decomposition(G, path):
    with open(path) as fh:
        data = json.load(fh)
    if "leaves" in data:
        return bd_from_dict(G, data)
    return td_from_dict(G, data)


def bfs_order(nb, start):
    seen = {start}
    out = []
    q = deque([start])
    while q:
        x = q.popleft()
        out.append(x)
        for y in nb[x]:
            if y not in seen:
                seen.add(y)
                q.append(y)
    return out
