"""Rankwidth PTAS for restricted assignment.

Jobs are rounded so that only a few distinct sizes remain; then a dynamic
program over a branch decomposition of the incidence graph tracks, per edge,
how many jobs of each (connection type, size) class cross the edge in either
direction.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

from .core import InfeasibleError, InputError, Instance, ResourceError, Schedule, as_view, makespan, subinstance
from .decomp import (
    BranchDecomposition,
    NotBicograph,
    bicograph_recognize,
    bicotree_to_branch_decomposition,
    validate_branch_decomposition,
)
from .dp_basic import exact_fraction
from .graphs import build_graph, connection_types_mask
from .rounding import round_fractional, two_approx

__all__ = [
    "SizeCatalog",
    "TypeList",
    "TranslationMap",
    "RoundedInstance",
    "EdgeDP",
    "round_instance",
    "expand_decomposition",
    "solve_edge_dp",
    "round_small_jobs_back",
    "ptas",
    "branch_decomposition_for",
    "class_representative_audit",
    "edge_split_check",
    "two_approx",
]


class SizeCatalog:
    """Distinct job sizes, ascending; ``of[v]`` is the size index of job vertex ``v``."""

    def __init__(self, inst, G):
        self.sizes = tuple(sorted({inst.size(j) for j in inst.jobs}))
        pos = {p: k for k, p in enumerate(self.sizes)}
        self.of = {v: pos[inst.size(G.items[v][1])] for v in G.job_vertices()}

    @property
    def d(self):
        return len(self.sizes)

    def p(self, lam):
        """Total size of a multiplicity vector (flat class vectors allowed)."""
        d = self.d
        return sum(c * self.sizes[k % d] for k, c in enumerate(lam))


@dataclass
class TypeList:
    """Connection types of a job set towards a machine set (empty types dropped).

    Class vectors over this list are flat tuples: entry ``t * d + s`` counts
    jobs of type ``t`` and size index ``s``.
    """

    masks: tuple
    job_type: dict
    full: tuple
    groups: dict = field(default_factory=dict)

    @property
    def kappa(self):
        return len(self.masks)

    def index(self, mask):
        return self._pos.get(mask, -1)

    def __post_init__(self):
        self._pos = {mk: t for t, mk in enumerate(self.masks)}


def _types(G, cat, jmask, mmask):
    part = connection_types_mask(G, jmask, mmask)
    masks, job_type = [], {}
    for grp, nb in zip(part.groups, part.neighborhoods):
        if not nb:
            continue
        t = len(masks)
        masks.append(nb)
        for v in grp:
            job_type[v] = t
    d = cat.d
    full = [0] * (len(masks) * d)
    groups = defaultdict(list)
    for v, t in job_type.items():
        full[t * d + cat.of[v]] += 1
        groups[t * d + cat.of[v]].append(v)
    for k in groups:
        groups[k].sort()
    return TypeList(tuple(masks), job_type, tuple(full), dict(groups))


def _below(v):
    return itertools.product(*(range(c + 1) for c in v))


def _sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def _add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _leq(a, b):
    return all(x <= y for x, y in zip(a, b))


class TranslationMap:
    """Translation of class vectors between two type lists (type-wise, sizes kept).

    ``map[t]`` is the target type whose machine set is the source type's
    machine set cut down to ``within``, or -1 when that cut is empty (such
    mass cannot be translated and the call returns None).
    """

    def __init__(self, src, dst, within, d):
        self.map = [dst.index(mk & within) if mk & within else -1 for mk in src.masks]
        self.k = dst.kappa
        self.d = d

    def __call__(self, vec):
        d = self.d
        out = [0] * (self.k * d)
        for t, tt in enumerate(self.map):
            base = t * d
            chunk = vec[base:base + d]
            if tt < 0:
                if any(chunk):
                    return None
                continue
            for s in range(d):
                out[tt * d + s] += chunk[s]
        return tuple(out)


class EdgeDP:
    """Class-vector DP over a branch decomposition of the incidence graph.

    The tree is rooted at the leaf of the first job.  Every other tree node
    ``x`` owns the edge to its parent; ``up[x]`` types the jobs below that
    edge by their machines above it, ``down[x]`` the jobs above by machines
    below.  ``table[x][(hat, check)]`` is the optimum of the subtree's
    machines processing the subtree jobs minus a ``hat`` class sent up plus a
    ``check`` class received from above (absent keys are infinite).  Entries
    above ``cap`` are dropped.
    """

    def __init__(self, inst, bd, cap=math.inf, max_entries=2_000_000):
        if not inst.is_restricted_identical():
            raise InputError("the rankwidth DP needs a restricted-assignment instance")
        if not inst.feasible:
            raise InfeasibleError(f"jobs without admissible machine: {inst.infeasible_jobs()[:5]}")
        self.inst = inst
        self.G = G = build_graph(inst, "incidence")
        if inst.n == 0:
            raise InputError("no jobs")
        val = validate_branch_decomposition(G, bd)
        if not val.ok:
            raise InputError(f"invalid branch decomposition: {val.message}")
        self.bd = bd
        self.cap = cap
        self.max_entries = max_entries
        self.cat = cat = SizeCatalog(inst, G)
        d = cat.d
        jm, mm = G.side_mask("j"), G.side_mask("m")
        nb = bd.adjacency()
        at = bd.vertex_at()
        self.root = root = bd.leaf[G.job_vertices()[0]]
        parent = {root: None}
        order = [root]
        for x in order:
            for y in nb[x]:
                if y not in parent:
                    parent[y] = x
                    order.append(y)
        self.parent = parent
        self.children = {x: [y for y in nb[x] if parent.get(y) == x] for x in order}
        self.vertex = at
        below = {}
        for x in reversed(order):
            mk = 1 << at[x] if x in at else 0
            for c in self.children[x]:
                mk |= below[c]
            below[x] = mk
        self.below = below
        self.up, self.down = {}, {}
        for x in order[1:]:
            B = below[x]
            A = G.all_mask & ~B
            self.up[x] = _types(G, cat, B & jm, A & mm)
            self.down[x] = _types(G, cat, A & jm, B & mm)
        self.order = order[1:]
        self.top = self.children[root][0]
        self.table = {}
        self.entries = 0
        for x in reversed(self.order):
            self._fill(x)

    # ---------------------------------------------------------------- tables

    def _fill(self, x):
        kids = self.children[x]
        if not kids:
            v = self.vertex[x]
            if self.G.items[v][0] == "j":
                tab = {(self.up[x].full, ()): (0, None)}
            else:
                tab = {}
                for chk in _below(self.down[x].full):
                    load = self.cat.p(chk)
                    if load <= self.cap:
                        tab[((), chk)] = (load, None)
        else:
            tab = self._combine(x, *kids)
        self.entries += len(tab)
        if self.entries > self.max_entries:
            raise ResourceError(f"edge DP exceeded {self.max_entries} table entries")
        self.table[x] = tab

    def _child_map(self, c, to_up, to_cross):
        out = {}
        for (hat, chk), (v, _) in self.table[c].items():
            for part in _below(hat):
                up_img = to_up(part)
                if up_img is None:
                    continue
                cross = _sub(hat, part)
                cr_img = to_cross(cross)
                if cr_img is None:
                    continue
                key = (chk, up_img, cr_img)
                old = out.get(key)
                if old is None or v < old[0]:
                    out[key] = (v, (hat, chk, part, cross))
        return out

    def _combine(self, x, l, r):
        d = self.cat.d
        up, down = self.up, self.down
        Ma = self.G.side_mask("m") & ~self.below[x]
        Ml = self.below[l] & self.G.side_mask("m")
        Mr = self.below[r] & self.G.side_mask("m")
        lmap = self._child_map(l, TranslationMap(up[l], up[x], Ma, d), TranslationMap(up[l], down[r], Mr, d))
        rmap = self._child_map(r, TranslationMap(up[r], up[x], Ma, d), TranslationMap(up[r], down[l], Ml, d))
        rindex = defaultdict(list)
        for (chk, up_img, cr_img), (v, back) in rmap.items():
            rindex[(chk, cr_img)].append((up_img, v, back))
        to_l = TranslationMap(down[x], down[l], Ml, d)
        to_r = TranslationMap(down[x], down[r], Mr, d)
        dmap = defaultdict(list)
        for chk in _below(down[x].full):
            for part in _below(chk):
                il = to_l(part)
                if il is None:
                    continue
                rest = _sub(chk, part)
                ir = to_r(rest)
                if ir is None:
                    continue
                dmap[il].append((ir, chk, part, rest))
        tab = {}
        cap = self.cap
        for (chk_l, up_l, cr_l), (vl, bl) in lmap.items():
            if vl > cap:
                continue
            for il, lst in dmap.items():
                if not _leq(il, chk_l):
                    continue
                need = _sub(chk_l, il)
                for ir, chk, pl, pr in lst:
                    hits = rindex.get((_add(ir, cr_l), need))
                    if not hits:
                        continue
                    for up_r, vr, br in hits:
                        val = max(vl, vr)
                        if val > cap:
                            continue
                        key = (_add(up_l, up_r), chk)
                        old = tab.get(key)
                        if old is None or val < old[0]:
                            tab[key] = (val, (bl, br, pl, pr))
        return tab

    # ---------------------------------------------------------------- answer

    def root_key(self):
        return ((), self.down[self.top].full)

    def value(self):
        got = self.table[self.top].get(self.root_key())
        return math.inf if got is None else got[0]

    def _split(self, jobs, types, vec):
        """Split concrete ``jobs`` into (taken, rest) with ``taken`` of class ``vec``."""
        d = self.cat.d
        bucket = defaultdict(list)
        for v in sorted(jobs):
            bucket[types.job_type[v] * d + self.cat.of[v]].append(v)
        taken, rest = [], []
        for k, lst in bucket.items():
            c = vec[k]
            if c > len(lst):
                raise RuntimeError("class vector exceeds available jobs")
            taken.extend(lst[:c])
            rest.extend(lst[c:])
        return taken, rest

    def _choose_up(self, x, key, memo):
        if (x, key) in memo:
            return memo[(x, key)]
        _, back = self.table[x][key]
        if back is None:
            v = self.vertex[x]
            res = ([v] if self.G.items[v][0] == "j" else [], None)
        else:
            l, r = self.children[x]
            bl, br, _, _ = back
            lhat, _ = self._choose_up(l, (bl[0], bl[1]), memo)
            rhat, _ = self._choose_up(r, (br[0], br[1]), memo)
            l_up, l_cross = self._split(lhat, self.up[l], bl[2])
            r_up, r_cross = self._split(rhat, self.up[r], br[2])
            res = (l_up + r_up, (l_cross, r_cross))
        memo[(x, key)] = res
        return res

    def schedule(self):
        """An optimal schedule as job id -> machine id, or None if infinite."""
        key = self.root_key()
        if key not in self.table[self.top]:
            return None
        memo = {}
        out = {}
        stack = [(self.top, key, [self.vertex[self.root]])]
        while stack:
            x, key, incoming = stack.pop()
            _, back = self.table[x][key]
            if back is None:
                v = self.vertex[x]
                if self.G.items[v][0] == "m":
                    for j in incoming:
                        out[self.G.items[j][1]] = self.G.items[v][1]
                elif incoming:
                    raise RuntimeError("jobs routed into a job leaf")
                continue
            l, r = self.children[x]
            bl, br, pl, _ = back
            _, (l_cross, r_cross) = self._choose_up(x, key, memo)
            to_l, to_r = self._split(incoming, self.down[x], pl)
            stack.append((l, (bl[0], bl[1]), to_l + r_cross))
            stack.append((r, (br[0], br[1]), to_r + l_cross))
        return Schedule(out)


def solve_edge_dp(inst, bd, cap=None, max_entries=2_000_000):
    """Exact optimum of a restricted-assignment instance over a branch decomposition.

    ``cap`` bounds table values; by default a 2-approximate makespan, which
    cannot cut off an optimal schedule.
    """
    if inst.n == 0:
        return 0, Schedule({})
    if cap is None:
        _, cap = two_approx(inst)
    dp = EdgeDP(inst, bd, cap=cap, max_entries=max_entries)
    val = dp.value()
    if val == math.inf:
        raise InfeasibleError("no schedule within the load cap")
    return val, dp.schedule()


# -------------------------------------------------------------- rounding


@dataclass
class RoundedInstance:
    """Rounded instance in integer units: every time is multiplied by ``scale``.

    ``origin`` maps each rounded job id to its original job; ``copies`` maps
    each small original job to its copy ids.
    """

    original: Instance
    eps: Fraction
    delta: Fraction
    B: int
    scale: int
    instance: Instance
    big: frozenset
    copies: dict
    origin: dict

    @property
    def small_size(self):
        return self.delta * self.B / self.original.n * self.scale


def _lcm(a, b):
    return a * b // math.gcd(a, b)


def round_instance(inst, eps, B):
    """Big jobs (p > δB) rounded up to multiples of δ²B; each small job replaced by
    ``ceil(n p / (δB))`` copies of size δB/n.  δ = min(1/3, eps/7)."""
    eps = exact_fraction(eps)
    if eps <= 0:
        raise InputError("eps must be positive")
    if not inst.is_restricted_identical():
        raise InputError("rounding needs a restricted-assignment instance")
    if B <= 0:
        raise InputError("B must be positive")
    n = inst.n
    delta = min(Fraction(1, 3), eps / 7)
    grain = delta * delta * B
    small = delta * B / n
    scale = _lcm(grain.denominator, small.denominator)
    gs, ss = int(grain * scale), int(small * scale)
    jobs, proc, big, copies, origin = [], {}, set(), {}, {}
    for j in inst.jobs:
        p = inst.size(j)
        ms = [i for i in inst.machines if (i, j) in inst.proc]
        if p > delta * B:
            size = gs * math.ceil(Fraction(p) / grain)
            jobs.append(j)
            origin[j] = j
            big.add(j)
            for i in ms:
                proc[(i, j)] = size
        else:
            k = math.ceil(Fraction(p) / (delta * B / n))
            ids = []
            for c in range(k):
                cid = (j, c) if not isinstance(j, str) else f"{j}#{c}"
                ids.append(cid)
                jobs.append(cid)
                origin[cid] = j
                for i in ms:
                    proc[(i, cid)] = ss
            copies[j] = ids
    rounded = Instance(jobs, inst.machines, proc, identical=True)
    return RoundedInstance(inst, eps, delta, B, scale, rounded, frozenset(big), copies, origin)


def expand_decomposition(inst, bd, rinst):
    """Branch decomposition of the rounded instance's incidence graph.

    Each small job's leaf becomes a binary caterpillar over its copies; copies
    are twins so no cut gains rank.
    """
    G = build_graph(inst, "incidence")
    H = build_graph(rinst.instance, "incidence")
    edges = list(bd.edges)
    leaf = {}
    count = bd.count
    for v, t in bd.leaf.items():
        tag, item = G.items[v]
        if tag == "m" or item in rinst.big:
            leaf[H.vertex_of((tag, item))] = t
            continue
        ids = [H.vertex_of(("j", c)) for c in rinst.copies[item]]
        cur = t
        for k, cv in enumerate(ids):
            if k == len(ids) - 1:
                leaf[cv] = cur
                break
            a, b = count, count + 1
            count += 2
            edges.append((cur, a))
            leaf[cv] = a
            edges.append((cur, b))
            cur = b
    if bd.count == 1 and len(leaf) > 1:
        # a lone leaf has no parent edge; the caterpillar root then has degree 2
        raise InputError("cannot expand a single-vertex decomposition")
    return BranchDecomposition(count, tuple(edges), leaf)


def round_small_jobs_back(inst, rinst, sched):
    """Schedule for the original instance from one for the rounded instance.

    Big jobs keep their machine.  Small jobs are spread fractionally in
    proportion to where their copies went and rounded via the support forest,
    which adds at most one small job (size <= δB) per machine.
    """
    out = {}
    count = defaultdict(int)
    for cid, i in sched.assignment.items():
        j = rinst.origin[cid]
        if j in rinst.big:
            out[j] = i
        else:
            count[(j, i)] += 1
    flow, sizes = {}, {}
    for (j, i), c in count.items():
        p = inst.size(j)
        flow[(j, i)] = Fraction(p * c, len(rinst.copies[j]))
        sizes[j] = p
    if flow:
        out.update(round_fractional(flow, sizes))
    return Schedule(out)


def branch_decomposition_for(inst):
    """Branch decomposition from the bi-cotree of the incidence graph."""
    G = build_graph(inst, "incidence")
    bct = bicograph_recognize(G)
    if isinstance(bct, NotBicograph):
        raise InputError(
            f"incidence graph is not a bi-cograph (witness set {bct.witness:#x}) and no decomposition was given"
        )
    return bicotree_to_branch_decomposition(bct)


def ptas(inst, eps, bd=None, stats=None):
    """(1+eps)-approximate makespan for restricted assignment.

    ``bd`` is a branch decomposition of the incidence graph; without one the
    graph must be a bi-cograph.  Returns ``(makespan, schedule)``.
    """
    eps = exact_fraction(eps)
    if eps <= 0:
        raise InputError("eps must be positive")
    inst = as_view(inst).materialize() if not isinstance(inst, Instance) else inst
    if not inst.is_restricted_identical():
        raise InputError("the PTAS needs a restricted-assignment instance")
    if inst.n == 0:
        return 0, Schedule({})
    if not inst.feasible:
        raise InfeasibleError(f"jobs without admissible machine: {inst.infeasible_jobs()[:5]}")
    seed, B = two_approx(inst)
    if bd is None:
        bd = branch_decomposition_for(inst)
    else:
        val = validate_branch_decomposition(build_graph(inst, "incidence"), bd)
        if not val.ok:
            raise InputError(f"invalid branch decomposition: {val.message}")
    rinst = round_instance(inst, eps, B)
    rbd = expand_decomposition(inst, bd, rinst)
    # the seed schedule transferred to the rounded instance bounds its optimum
    rsched = {cid: seed[j] for cid, j in rinst.origin.items()}
    cap = makespan(rinst.instance, Schedule(rsched))
    dp = EdgeDP(rinst.instance, rbd, cap=cap)
    rval = dp.value()
    if rval == math.inf:
        raise RuntimeError("rounded instance lost its seed schedule")
    sched = round_small_jobs_back(inst, rinst, dp.schedule())
    val = makespan(inst, sched)
    if stats is not None:
        stats.update(
            B=B, delta=rinst.delta, scale=rinst.scale, rounded_jobs=rinst.instance.n,
            rounded_opt=rval, sizes=len({rinst.instance.size(j) for j in rinst.instance.jobs}),
            entries=dp.entries,
        )
    return val, sched


# -------------------------------------------------------------- audits


@dataclass
class AuditResult:
    ok: bool
    table_value: float
    best_value: float
    values: dict
    message: str = ""

    def __bool__(self):
        return self.ok


def _representatives(types, vec, d, of):
    per = []
    for k, c in enumerate(vec):
        pool = types.groups.get(k, [])
        per.append(list(itertools.combinations(pool, c)))
    for combo in itertools.product(*per):
        yield frozenset(v for grp in combo for v in grp)


def _side_opt(G, inst, jobs, machines, budget):
    from .harness import brute_force

    jl = [G.items[v][1] for v in jobs]
    ml = [G.items[v][1] for v in machines]
    if not jl:
        return 0
    try:
        val, _ = brute_force(subinstance(inst, jl, ml), budget=budget)
    except InfeasibleError:
        return math.inf
    return val


def class_representative_audit(inst, bd, x, hat, check, budget=10**6, dp=None):
    """Compare one table entry with brute force over all concrete representatives.

    Every representative ``J^`` (sent up) and ``Jv`` (received) of the two
    classes is enumerated; the value of a fixed ``J^`` must not depend on
    the choice of ``Jv``, and the minimum over ``J^`` must equal the entry.
    """
    if dp is None:
        dp = EdgeDP(inst, bd, cap=math.inf)
    G, d = dp.G, dp.cat.d
    up, down = dp.up[x], dp.down[x]
    jm, mm = G.side_mask("j"), G.side_mask("m")
    Jb = {v for v in range(G.order) if dp.below[x] >> v & 1 and jm >> v & 1}
    Mb = [v for v in range(G.order) if dp.below[x] >> v & 1 and mm >> v & 1]
    got = dp.table[x].get((hat, check))
    table_value = math.inf if got is None else got[0]
    values = {}
    for H in _representatives(up, hat, d, dp.cat.of):
        seen = set()
        for C in _representatives(down, check, d, dp.cat.of):
            seen.add(_side_opt(G, inst, sorted((Jb - H) | C), Mb, budget))
        if len(seen) != 1:
            return AuditResult(False, table_value, math.inf, values,
                               f"value depends on the received representative: {sorted(seen)}")
        values[tuple(sorted(G.items[v][1] for v in H))] = seen.pop()
    best = min(values.values(), default=math.inf)
    ok = best == table_value
    msg = "" if ok else f"table {table_value} != brute force {best}"
    return AuditResult(ok, table_value, best, values, msg)


def edge_split_check(inst, bd, x, budget=10**6, dp=None):
    """OPT equals the best combination of the two sides of one edge.

    The lower side comes from the table, the upper side is brute forced over
    representatives.  Returns ``(ok, opt, combined)``.
    """
    from .harness import brute_force

    if dp is None:
        dp = EdgeDP(inst, bd, cap=math.inf)
    G, d = dp.G, dp.cat.d
    jm, mm = G.side_mask("j"), G.side_mask("m")
    A = G.all_mask & ~dp.below[x]
    Ja = {v for v in range(G.order) if A >> v & 1 and jm >> v & 1}
    Ma = [v for v in range(G.order) if A >> v & 1 and mm >> v & 1]
    opt, _ = brute_force(inst, budget=budget)
    best = math.inf
    for (hat, chk), (v, _) in dp.table[x].items():
        H = next(_representatives(dp.up[x], hat, d, dp.cat.of))
        above = min(
            (_side_opt(G, inst, sorted((Ja - C) | H), Ma, budget)
             for C in _representatives(dp.down[x], chk, d, dp.cat.of)),
            default=math.inf,
        )
        best = min(best, max(v, above))
    return best == opt, opt, best
