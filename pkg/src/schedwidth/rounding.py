"""2-approximation via the assignment LP and support-forest rounding."""

from __future__ import annotations

from collections import defaultdict
from fractions import Fraction

import networkx as nx
import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .core import InfeasibleError, Schedule, as_view


def _find_cycle(adj):
    """Some cycle of an undirected simple graph given as dict of sets, or None."""
    seen = set()
    for start in sorted(adj, key=str):
        if start in seen:
            continue
        parent = {start: None}
        stack = [(start, iter(sorted(adj[start], key=str)))]
        seen.add(start)
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                stack.pop()
                continue
            if nxt == parent[node]:
                continue
            if nxt in parent:
                cyc = [nxt]
                x = node
                while x != nxt:
                    cyc.append(x)
                    x = parent[x]
                return cyc
            parent[nxt] = node
            seen.add(nxt)
            stack.append((nxt, iter(sorted(adj[nxt], key=str))))
    return None


def round_fractional(flow, sizes):
    """Integral assignment from a fractional one given in load units.

    ``flow[(job, machine)]`` is the processing time of ``job`` placed on
    ``machine`` (summing to ``sizes[job]`` per job).  Cycles in the support
    are cancelled without changing any job total or machine load; the
    remaining forest is rooted at machines and every split job goes to one of
    its child machines.  Each machine thus gains at most one split job, so its
    load grows by at most the largest split job size.
    """
    f = {k: Fraction(v) for k, v in flow.items() if v > 0}
    out = {}
    split = defaultdict(list)
    for (j, i), v in f.items():
        split[j].append(i)
    for j, ms in split.items():
        if len(ms) == 1:
            out[j] = ms[0]
    frac = {k: v for k, v in f.items() if k[0] not in out}

    def graph():
        adj = defaultdict(set)
        for (j, i) in frac:
            adj[("j", j)].add(("m", i))
            adj[("m", i)].add(("j", j))
        return adj

    while True:
        cyc = _find_cycle(graph())
        if cyc is None:
            break
        edges = []
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            j, i = (a[1], b[1]) if a[0] == "j" else (b[1], a[1])
            edges.append((j, i))
        minus = edges[1::2]
        plus = edges[0::2]
        theta = min(frac[e] for e in minus)
        for e in plus:
            frac[e] += theta
        for e in minus:
            frac[e] -= theta
        frac = {k: v for k, v in frac.items() if v > 0}
        by_job = defaultdict(list)
        for (j, i) in frac:
            by_job[j].append(i)
        for j, ms in by_job.items():
            if len(ms) == 1:
                out[j] = ms[0]
        frac = {k: v for k, v in frac.items() if k[0] not in out}

    adj = graph()
    done = set()
    for root in sorted((x for x in adj if x[0] == "m"), key=lambda x: str(x[1])):
        if root in done:
            continue
        done.add(root)
        stack = [root]
        while stack:
            x = stack.pop()
            kids = sorted((y for y in adj[x] if y not in done), key=lambda y: str(y[1]))
            for y in kids:
                done.add(y)
                stack.append(y)
            if x[0] == "j" and x[1] not in out:
                if not kids:
                    raise RuntimeError("split job without child machine in support forest")
                out[x[1]] = kids[0][1]
    missing = set(sizes) - set(out)
    if missing:
        raise RuntimeError(f"rounding lost jobs {sorted(map(str, missing))}")
    return out


def _greedy(jl, ml, P):
    assign = {}
    for b, j in enumerate(jl):
        col = P[:, b]
        allowed = np.flatnonzero(col >= 0)
        a = allowed[np.argmin(col[allowed])]
        assign[j] = ml[a]
    return assign


def _cmax(jl, ml, P, assign):
    pos = {i: a for a, i in enumerate(ml)}
    loads = np.zeros(len(ml), dtype=np.int64)
    for b, j in enumerate(jl):
        a = pos[assign[j]]
        loads[a] += P[a, b]
    return int(loads.max()) if len(ml) else 0


def _flow_feasible(jl, ml, P, T):
    """Fractional feasibility of restricted assignment at target ``T`` via max-flow."""
    g = nx.DiGraph()
    total = 0
    for b, j in enumerate(jl):
        col = P[:, b]
        p = int(col[col >= 0][0])
        if p > T:
            return None
        total += p
        g.add_edge("s", ("j", j), capacity=p)
        for a in np.flatnonzero(col >= 0):
            g.add_edge(("j", j), ("m", ml[a]), capacity=p)
    for i in ml:
        g.add_edge(("m", i), "t", capacity=T)
    value, fl = nx.maximum_flow(g, "s", "t")
    if value < total:
        return None
    return {(j, i[1]): v for j_node, row in fl.items() if j_node not in ("s", "t") and j_node[0] == "j"
            for i, v in row.items() if v > 0 for j in [j_node[1]]}


def _lp_feasible(jl, ml, P, T):
    pairs = [(a, b) for b in range(len(jl)) for a in range(len(ml)) if 0 <= P[a, b] <= T]
    if {b for _, b in pairs} != set(range(len(jl))):
        return None
    nv = len(pairs)
    rows_eq, cols_eq, rows_ub, cols_ub, vals_ub = [], [], [], [], []
    for k, (a, b) in enumerate(pairs):
        rows_eq.append(b)
        cols_eq.append(k)
        rows_ub.append(a)
        cols_ub.append(k)
        vals_ub.append(float(P[a, b]))
    A_eq = csr_matrix((np.ones(nv), (rows_eq, cols_eq)), shape=(len(jl), nv))
    A_ub = csr_matrix((vals_ub, (rows_ub, cols_ub)), shape=(len(ml), nv))
    res = linprog(
        np.zeros(nv), A_ub=A_ub, b_ub=np.full(len(ml), float(T)), A_eq=A_eq, b_eq=np.ones(len(jl)),
        bounds=(0, 1), method="highs-ds",
    )
    if res.status != 0:
        return None
    return pairs, res.x


def _round_lp(jl, ml, P, pairs, x):
    eps = 1e-9
    assign = {}
    frac_jobs = set()
    for k, (a, b) in enumerate(pairs):
        if x[k] > 1 - eps:
            assign[jl[b]] = ml[a]
    for k, (a, b) in enumerate(pairs):
        if eps < x[k] <= 1 - eps and jl[b] not in assign:
            frac_jobs.add(b)
    if frac_jobs:
        fj = sorted(frac_jobs)
        row = {b: r for r, b in enumerate(fj)}
        rr, cc = [], []
        for k, (a, b) in enumerate(pairs):
            if b in row and x[k] > eps:
                rr.append(row[b])
                cc.append(a)
        graph = csr_matrix((np.ones(len(rr)), (rr, cc)), shape=(len(fj), len(ml)))
        match = maximum_bipartite_matching(graph, perm_type="column")
        for r, b in enumerate(fj):
            if match[r] >= 0:
                assign[jl[b]] = ml[match[r]]
            else:
                col = P[:, b]
                allowed = np.flatnonzero(col >= 0)
                assign[jl[b]] = ml[allowed[np.argmin(col[allowed])]]
    return assign


def two_approx(inst):
    """``(schedule, B)`` with OPT <= B <= 2 OPT, by LP rounding."""
    view = as_view(inst)
    jl, ml, P = view.arrays()
    if not jl:
        return Schedule({}), 0
    if not ml or (P >= 0).sum(axis=0).min() == 0:
        raise InfeasibleError("some job has no admissible machine")
    greedy = _greedy(jl, ml, P)
    hi = _cmax(jl, ml, P, greedy)
    lo = int(max(P[:, b][P[:, b] >= 0].min() for b in range(len(jl))))
    identical = all(len(set(P[:, b][P[:, b] >= 0].tolist())) == 1 for b in range(len(jl)))
    feasible = _flow_feasible if identical else _lp_feasible
    best = None
    while lo < hi:
        mid = (lo + hi) // 2
        sol = feasible(jl, ml, P, mid)
        if sol is None:
            lo = mid + 1
        else:
            hi = mid
            best = sol
    if best is None:
        best = feasible(jl, ml, P, hi)
    if best is None:
        assign = greedy
    elif identical:
        sizes = {j: int(P[:, b][P[:, b] >= 0][0]) for b, j in enumerate(jl)}
        assign = round_fractional(best, sizes)
    else:
        assign = _round_lp(jl, ml, P, *best)
    B = _cmax(jl, ml, P, assign)
    g = _cmax(jl, ml, P, greedy)
    if g < B:
        assign, B = greedy, g
    return Schedule(assign), B
