"""Exact DPs over simple-form tree decompositions of the primal, dual and incidence graphs.

Job and machine sets are int bitsets over instance indices.  Load vectors
are tuples ordered like the sorted machine indices of a node's active set.
Table entries map a key to ``(value, back)``; absent keys are infinite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Instance, InfeasibleError, InputError, ResourceError, Schedule, bits
from .decomp import (
    SimpleFormDecomposition,
    TreeDecomposition,
    exact_treewidth,
    heuristic_tree_decomposition,
    normalize_simple_form,
)
from .dp_basic import GridRounding, LoadSets, MachineDP, exact_fraction
from .graphs import build_graph

KINDS = ("primal", "dual", "incidence")


@dataclass(frozen=True)
class NodeSets:
    jact: int = 0
    jina: int = 0
    jnia: int = 0
    mact: int = 0
    mina: int = 0
    mnia: int = 0


@dataclass(frozen=True)
class Violation:
    node: int
    condition: str
    message: str


class ActivityLabeling:
    """Active / inactive / nearly inactive job and machine sets per node."""

    def __init__(self, sfd, inst, kind, nodes):
        self.sfd = sfd
        self.inst = inst
        self.kind = kind
        self.nodes = nodes

    def __getitem__(self, t):
        return self.nodes[t]

    def __len__(self):
        return len(self.nodes)

    def children(self, t):
        return self.sfd.children[t]

    def audit(self):
        return audit_labeling(self)


def _mach_of(inst, jobs):
    out = 0
    mm = inst.machine_masks
    for j in bits(jobs):
        out |= mm[j]
    return out


def _jobs_of(inst, machines):
    out = 0
    jm = inst.job_masks
    for i in bits(machines):
        out |= jm[i]
    return out


def _split_bag(kind, bag, n):
    jobs = machines = 0
    for v in bag:
        if kind == "primal":
            jobs |= 1 << v
        elif kind == "dual":
            machines |= 1 << v
        elif v < n:
            jobs |= 1 << v
        else:
            machines |= 1 << (v - n)
    return jobs, machines


def label_activity(sfd, inst, kind):
    if kind not in KINDS:
        raise InputError(f"unknown graph kind {kind!r}")
    order = {"primal": inst.n, "dual": inst.m, "incidence": inst.n + inst.m}[kind]
    for t, bag in enumerate(sfd.bags):
        if any(not 0 <= v < order for v in bag):
            raise InputError(f"bag of node {t} references vertices outside the {kind} graph")
    N = len(sfd)
    bj, bm = [0] * N, [0] * N
    for t, bag in enumerate(sfd.bags):
        bj[t], bm[t] = _split_bag(kind, bag, inst.n)
    below_j, below_m = [0] * N, [0] * N
    for t in sfd.postorder():
        below_j[t], below_m[t] = bj[t], bm[t]
        for c in sfd.children[t]:
            below_j[t] |= below_j[c]
            below_m[t] |= below_m[c]
    nodes = []
    for t in range(N):
        p = sfd.parent[t]
        if kind in ("primal", "incidence"):
            jact = bj[t]
            jina = below_j[t] & ~jact
            jnia = jact & ~bj[p] if p >= 0 else 0
        if kind in ("dual", "incidence"):
            mact = bm[t]
            mina = below_m[t] & ~mact
            mnia = mact & ~bm[p] if p >= 0 else 0
        if kind == "primal":
            mina = _mach_of(inst, jina)
            mact = _mach_of(inst, jact) & ~mina
            mnia = _mach_of(inst, jnia) & ~mina
        elif kind == "dual":
            jina = _jobs_of(inst, mina)
            jact = _jobs_of(inst, mact) & ~jina
            jnia = _jobs_of(inst, mnia) & ~jina
        nodes.append(NodeSets(jact, jina, jnia, mact, mina, mnia))
    return ActivityLabeling(sfd, inst, kind, nodes)


def audit_labeling(lab):
    """Re-check the structural conditions at every node; returns all violations."""
    inst, out = lab.inst, []
    empty = NodeSets()
    for t, s in enumerate(lab.nodes):
        def bad(cond, msg):
            out.append(Violation(t, cond, msg))

        if _mach_of(inst, s.jina | s.jnia) & ~(s.mact | s.mina):
            bad("(1)", "a (nearly) inactive job may run outside active/inactive machines")
        if _jobs_of(inst, s.mina | s.mnia) & ~(s.jact | s.jina):
            bad("(2)", "a (nearly) inactive machine may run jobs outside active/inactive jobs")
        kids = list(lab.children(t))
        if kids:
            while len(kids) < 2:
                kids.append(None)
            cs = [lab.nodes[c] if c is not None else empty for c in kids]
            parts_j = [c.jina for c in cs] + [c.jnia for c in cs]
            parts_m = [c.mina for c in cs] + [c.mnia for c in cs]
            for name, parts, whole in (("(3)", parts_j, s.jina), ("(4)", parts_m, s.mina)):
                acc = 0
                for x in parts:
                    if acc & x:
                        bad(name, "child parts overlap")
                    acc |= x
                if acc != whole:
                    bad(name, "child parts do not cover the inactive set")
        elif any((s.jact, s.jina, s.jnia, s.mact, s.mina, s.mnia)):
            bad("leaf", "leaf node has nonempty sets")
        if t == lab.sfd.root and (s.jnia or s.mnia):
            bad("root", "root has nearly inactive items")
        if lab.kind == "primal":
            if _jobs_of(inst, s.mnia) & ~s.jact:
                bad("(5)", "J(Mnia) not within active jobs")
            if _mach_of(inst, s.jina | s.jnia) != (s.mnia | s.mina):
                bad("(6)", "M(Jina ∪ Jnia) differs from Mnia ∪ Mina")
        elif lab.kind == "dual":
            if _mach_of(inst, s.jnia) & ~s.mact:
                bad("(5d)", "M(Jnia) not within active machines")
            if _jobs_of(inst, s.mina | s.mnia) != (s.jnia | s.jina):
                bad("(6d)", "J(Mina ∪ Mnia) differs from Jnia ∪ Jina")
    return out


def gamma(inst, jobs, machines):
    """Γ(J, M): all subsets of ``jobs`` whose members each have a machine in ``machines``."""
    ok = 0
    mm = inst.machine_masks
    for j in bits(jobs):
        if mm[j] & machines:
            ok |= 1 << j
    return [s for s in _submasks(ok)]


def _submasks(mask):
    s = mask
    while True:
        yield s
        if s == 0:
            return
        s = (s - 1) & mask


def simple_form_for(inst, kind, method="min_fill", exact_limit=10):
    """Simple-form decomposition of the ``kind`` graph (exact width on small graphs with ``method='exact'``)."""
    G = build_graph(inst, kind)
    if method == "exact" and G.order <= exact_limit:
        td = exact_treewidth(G, limit=exact_limit)[1]
    else:
        td = heuristic_tree_decomposition(G, "min_fill" if method == "exact" else method)
    return normalize_simple_form(td)


def _prepare(inst, sfd, kind):
    if not isinstance(inst, Instance):
        inst = inst.materialize()
    if sfd is None:
        sfd = simple_form_for(inst, kind)
    elif isinstance(sfd, TreeDecomposition):
        sfd = normalize_simple_form(sfd)
    elif not isinstance(sfd, SimpleFormDecomposition):
        raise InputError("expected a tree decomposition")
    if inst.n and not inst.feasible:
        raise InfeasibleError("some job has no admissible machine")
    return inst, sfd, label_activity(sfd, inst, kind)


def _cap_from(inst, hint):
    if hint is None:
        from .rounding import two_approx

        return two_approx(inst)[1]
    return hint


def _tau(src, dst):
    """Index pairs (src position, dst position) for machines shared by two ordered lists."""
    pos = {i: k for k, i in enumerate(dst)}
    return [(a, pos[i]) for a, i in enumerate(src) if i in pos]


def _add_into(acc, vec, tau):
    for a, b in tau:
        acc[b] += vec[a]


class _Budget:
    def __init__(self, limit):
        self.limit = limit
        self.used = 0

    def charge(self, k=1):
        self.used += k
        if self.used > self.limit:
            raise ResourceError(f"DP table budget of {self.limit} entries exceeded")


def _put(table, key, val, back):
    old = table.get(key)
    if old is None or val < old[0]:
        table[key] = (val, back)


# ---------------------------------------------------------------- primal


class PrimalDP:
    """Tables S(t, J) and S~(t, J') over the primal graph."""

    def __init__(self, inst, sfd, lab, max_entries=5_000_000):
        self.inst, self.sfd, self.lab = inst, sfd, lab
        self.S = [None] * len(sfd)
        self.St = [None] * len(sfd)
        self.mdp = [None] * len(sfd)
        budget = _Budget(max_entries)
        P = inst.P
        mm = inst.machine_masks
        for t in sfd.postorder():
            s = lab[t]
            kids = sfd.children[t]
            if not kids:
                self.S[t] = {0: (0, None)}
                self.St[t] = {0: (0, None)}
                continue
            left = self.St[kids[0]]
            right = self.St[kids[1]] if len(kids) > 1 else {0: (0, None)}
            S = {}
            for jl, (vl, _) in left.items():
                for jr, (vr, _) in right.items():
                    if jl & jr:
                        continue
                    _put(S, jl | jr, max(vl, vr), (jl, jr))
            budget.charge(len(S))
            self.S[t] = S
            ujobs = bits(s.jact)
            umach = bits(s.mnia)
            upos = {j: k for k, j in enumerate(ujobs)}
            sub = P[np.ix_(umach, ujobs)] if umach and ujobs else np.zeros((len(umach), len(ujobs)), dtype=np.int64)
            dp = MachineDP(sub, cap=max(20, len(ujobs)))
            self.mdp[t] = (dp, ujobs, umach, upos)
            St = {}
            rest = s.jact & ~s.jnia
            for X, (vx, _) in S.items():
                forced = s.jnia & ~X
                cand = 0
                for j in bits(rest & ~X):
                    if mm[j] & s.mnia:
                        cand |= 1 << j
                for E in _submasks(cand):
                    A = forced | E
                    ua = sum(1 << upos[j] for j in bits(A))
                    va = dp.value(ua)
                    if va == math.inf:
                        continue
                    _put(St, (X & ~s.jnia) | E, max(vx, va), (X, A))
            budget.charge(len(St))
            self.St[t] = St
        self.entries = budget.used

    def value(self):
        got = self.S[self.sfd.root].get(0)
        return math.inf if got is None else got[0]

    def schedule(self):
        out = {}
        stack = [("S", self.sfd.root, 0)]
        while stack:
            which, t, key = stack.pop()
            kids = self.sfd.children[t]
            if not kids:
                continue
            if which == "S":
                jl, jr = self.S[t][key][1]
                stack.append(("T", kids[0], jl))
                if len(kids) > 1:
                    stack.append(("T", kids[1], jr))
            else:
                X, A = self.St[t][key][1]
                dp, ujobs, umach, upos = self.mdp[t]
                amap = dp.assign(sum(1 << upos[j] for j in bits(A)))
                for b, a in amap.items():
                    out[ujobs[b]] = umach[a]
                stack.append(("S", t, X))
        return out


def _finish(inst, value, amap):
    if value == math.inf:
        raise InfeasibleError("no feasible schedule")
    sched = Schedule({inst.jobs[j]: inst.machines[i] for j, i in amap.items()})
    return value, sched


def solve_primal(inst, sfd=None, max_entries=5_000_000):
    """Exact optimum by the primal-graph DP."""
    inst, sfd, lab = _prepare(inst, sfd, "primal")
    if inst.n == 0:
        return 0, Schedule({})
    dp = PrimalDP(inst, sfd, lab, max_entries)
    v = dp.value()
    return _finish(inst, v, dp.schedule() if v != math.inf else {})


# ---------------------------------------------------------------- dual


class DualDP:
    """Tables S(t, λ) and S~(t, λ') over the dual graph, loads on the active machines.

    Entries of S include the active loads in their value, so every entry is
    the optimum of the schedules it describes.  Vectors with an entry above
    ``cap`` are dropped (``cap=math.inf`` keeps everything).
    """

    def __init__(self, inst, sfd, lab, cap, max_entries=5_000_000):
        self.inst, self.sfd, self.lab = inst, sfd, lab
        self.cap = cap
        N = len(sfd)
        self.S, self.St, self.loads = [None] * N, [None] * N, [None] * N
        self.mact = [bits(lab[t].mact) for t in range(N)]
        budget = _Budget(max_entries)
        P = inst.P
        for t in sfd.postorder():
            s = lab[t]
            kids = sfd.children[t]
            if not kids:
                self.S[t] = {(): (0, None)}
                self.St[t] = {(): (0, None)}
                continue
            macts = self.mact[t]
            k = len(macts)
            left = self.St[kids[0]]
            tl = _tau(self.mact[kids[0]], macts)
            if len(kids) > 1:
                right, tr = self.St[kids[1]], _tau(self.mact[kids[1]], macts)
            else:
                right, tr = {(): (0, None)}, []
            S = {}
            for ll, (vl, _) in left.items():
                base = [0] * k
                _add_into(base, ll, tl)
                for lr, (vr, _) in right.items():
                    acc = list(base)
                    _add_into(acc, lr, tr)
                    if acc and max(acc) > cap:
                        continue
                    lam = tuple(acc)
                    _put(S, lam, max(vl, vr, max(lam, default=0)), (ll, lr))
            budget.charge(len(S))
            self.S[t] = S
            nia = bits(s.jnia)
            sub = P[np.ix_(macts, nia)] if macts and nia else np.zeros((k, len(nia)), dtype=np.int64)
            ls = LoadSets(sub, cap=None if cap == math.inf else cap, max_states=max_entries)
            self.loads[t] = (ls, nia, macts)
            St = {}
            for xi, (vx, _) in S.items():
                for alpha in ls.vectors():
                    lam = tuple(x + y for x, y in zip(xi, alpha))
                    if lam and max(lam) > cap:
                        continue
                    _put(St, lam, max(vx, max(lam, default=0)), (xi, alpha))
            budget.charge(len(St))
            self.St[t] = St
        self.entries = budget.used

    def value(self):
        got = self.S[self.sfd.root].get(())
        return math.inf if got is None else got[0]

    def schedule(self):
        out = {}
        stack = [("S", self.sfd.root, ())]
        while stack:
            which, t, key = stack.pop()
            kids = self.sfd.children[t]
            if not kids:
                continue
            if which == "S":
                ll, lr = self.S[t][key][1]
                stack.append(("T", kids[0], ll))
                if len(kids) > 1:
                    stack.append(("T", kids[1], lr))
            else:
                xi, alpha = self.St[t][key][1]
                ls, nia, macts = self.loads[t]
                for b, a in ls.assignment(alpha).items():
                    out[nia[b]] = macts[a]
                stack.append(("S", t, xi))
        return out


def solve_dual(inst, sfd=None, load_bound_hint=None, max_entries=5_000_000):
    """Exact optimum by the dual-graph DP.

    ``load_bound_hint`` bounds every machine load considered; it must be at
    least OPT.  ``None`` takes the 2-approximation value, ``math.inf``
    disables pruning.
    """
    inst, sfd, lab = _prepare(inst, sfd, "dual")
    if inst.n == 0:
        return 0, Schedule({})
    dp = DualDP(inst, sfd, lab, _cap_from(inst, load_bound_hint), max_entries)
    v = dp.value()
    return _finish(inst, v, dp.schedule() if v != math.inf else {})


# ---------------------------------------------------------------- incidence


class IncidenceDP:
    """Tables S(t, J, λ) and S~(t, J', λ') over the incidence graph."""

    def __init__(self, inst, sfd, lab, cap, max_entries=5_000_000):
        self.inst, self.sfd, self.lab = inst, sfd, lab
        self.cap = cap
        N = len(sfd)
        self.S, self.St = [None] * N, [None] * N
        self.mact = [bits(lab[t].mact) for t in range(N)]
        self.memo = {}
        budget = _Budget(max_entries)
        self._budget = budget
        mm = inst.machine_masks
        for t in sfd.postorder():
            s = lab[t]
            kids = sfd.children[t]
            empty = {(0, ()): (0, None)}
            if not kids:
                self.S[t] = dict(empty)
                self.St[t] = dict(empty)
                continue
            macts = self.mact[t]
            k = len(macts)
            left, tl = self.St[kids[0]], _tau(self.mact[kids[0]], macts)
            if len(kids) > 1:
                right, tr = self.St[kids[1]], _tau(self.mact[kids[1]], macts)
            else:
                right, tr = empty, []
            S = {}
            for (jl, ll), (vl, _) in left.items():
                base = [0] * k
                _add_into(base, ll, tl)
                for (jr, lr), (vr, _) in right.items():
                    if jl & jr:
                        continue
                    acc = list(base)
                    _add_into(acc, lr, tr)
                    if acc and max(acc) > cap:
                        continue
                    lam = tuple(acc)
                    _put(S, (jl | jr, lam), max(vl, vr, max(lam, default=0)), ((jl, ll), (jr, lr)))
            budget.charge(len(S))
            self.S[t] = S
            mnia = bits(s.mnia)
            t_nia = _tau(mnia, macts)
            rest = s.jact & ~s.jnia
            St = {}
            for (X, xi), (vx, _) in S.items():
                beta_ls = self._loads(s.jnia & ~X, macts)
                cand = 0
                for j in bits(rest & ~X):
                    if mm[j] & s.mnia:
                        cand |= 1 << j
                for E in _submasks(cand):
                    alpha_ls = self._loads(E, mnia)
                    for alpha in alpha_ls.vectors():
                        base = list(xi)
                        _add_into(base, alpha, t_nia)
                        for beta in beta_ls.vectors():
                            lam = tuple(x + y for x, y in zip(base, beta))
                            if lam and max(lam) > cap:
                                continue
                            key = ((X & ~s.jnia) | E, lam)
                            _put(St, key, max(vx, max(lam, default=0)), ((X, xi), E, alpha, beta))
            budget.charge(len(St))
            self.St[t] = St
        self.entries = budget.used

    def _loads(self, jobs, machines):
        key = (jobs, tuple(machines))
        got = self.memo.get(key)
        if got is None:
            jl = bits(jobs)
            P = self.inst.P
            sub = P[np.ix_(machines, jl)] if machines and jl else np.zeros((len(machines), len(jl)), dtype=np.int64)
            cap = None if self.cap == math.inf else self.cap
            got = (LoadSets(sub, cap=cap, max_states=self._budget.limit), jl, list(machines))
            self.memo[key] = got
        return got[0]

    def value(self):
        got = self.S[self.sfd.root].get((0, ()))
        return math.inf if got is None else got[0]

    def schedule(self):
        out = {}
        stack = [("S", self.sfd.root, (0, ()))]
        while stack:
            which, t, key = stack.pop()
            kids = self.sfd.children[t]
            if not kids:
                continue
            if which == "S":
                kl, kr = self.S[t][key][1]
                stack.append(("T", kids[0], kl))
                if len(kids) > 1:
                    stack.append(("T", kids[1], kr))
            else:
                xkey, E, alpha, beta = self.St[t][key][1]
                s = self.lab[t]
                for jobs, machines, vec in ((E, bits(s.mnia), alpha), (s.jnia & ~xkey[0], self.mact[t], beta)):
                    ls, jl, ml = self.memo[(jobs, tuple(machines))]
                    for b, a in ls.assignment(vec).items():
                        out[jl[b]] = ml[a]
                stack.append(("S", t, xkey))
        return out


def solve_incidence(inst, sfd=None, load_bound_hint=None, max_entries=5_000_000):
    """Exact optimum by the incidence-graph DP (load bound as in ``solve_dual``)."""
    inst, sfd, lab = _prepare(inst, sfd, "incidence")
    if inst.n == 0:
        return 0, Schedule({})
    dp = IncidenceDP(inst, sfd, lab, _cap_from(inst, load_bound_hint), max_entries)
    v = dp.value()
    return _finish(inst, v, dp.schedule() if v != math.inf else {})


# ---------------------------------------------------------------- FPTAS


def rounded_instance(inst, P_units):
    proc = {}
    for a, i in enumerate(inst.machines):
        for b, j in enumerate(inst.jobs):
            if P_units[a, b] >= 0:
                proc[(i, j)] = int(P_units[a, b])
    return Instance(inst.jobs, inst.machines, proc, False)


def fptas_treewidth(inst, sfd, kind, eps, stats=None):
    """(1+eps)-approximation: grid rounding, then the dual or incidence DP with loads capped."""
    from .rounding import two_approx

    if kind not in ("dual", "incidence"):
        raise InputError("fptas_treewidth supports kind 'dual' or 'incidence'")
    if exact_fraction(eps) <= 0:
        raise InputError("eps must be positive")
    if not isinstance(inst, Instance):
        inst = inst.materialize()
    if inst.n == 0:
        return 0, Schedule({})
    if not inst.feasible:
        raise InfeasibleError("some job has no admissible machine")
    sched_b, B = two_approx(inst)
    grid = GridRounding(inst.P, eps, B, inst.n)
    rounded = rounded_instance(inst, grid.P)
    cap = max(sum(rounded.proc[(i, j)] for j in inst.jobs if sched_b[j] == i) for i in inst.machines)
    solver = solve_dual if kind == "dual" else solve_incidence
    units, sched = solver(rounded, sfd, load_bound_hint=cap)
    loads = sched.loads(inst)
    if stats is not None:
        stats.update(B=B, delta=grid.delta, cap_units=cap, rounded_opt_units=units)
    return max(loads.values()), sched
