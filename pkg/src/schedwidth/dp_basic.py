"""Machine-subset DP, load-vector DP and the fixed-m FPTAS."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .core import InfeasibleError, InputError, ResourceError, Schedule, as_view
from .kernels import BIG, machine_dp_tables


def _check_feasible(jl, ml, P):
    if jl and (not ml or (P >= 0).sum(axis=0).min() == 0):
        raise InfeasibleError("some job has no admissible machine in the subinstance")


class MachineDP:
    """OPT(i, J) over a job universe, J being the jobs still unscheduled.

    ``value(A)`` is OPT of the jobs ``A`` (bitset over the universe) on all
    machines, ``assign(A)`` an optimal job->machine position map.
    """

    def __init__(self, P, cap=20):
        P = np.ascontiguousarray(P, dtype=np.int64)
        m, n = P.shape
        if n > cap:
            raise ResourceError(f"machine DP limited to {cap} jobs, got {n}")
        self.P = P
        self.m, self.n = m, n
        self.full = (1 << n) - 1
        self.table, self.choice = machine_dp_tables(P)

    def opt(self, i, J):
        v = self.table[i, J]
        return math.inf if v >= BIG else int(v)

    def value(self, A):
        return self.opt(self.m, self.full ^ A)

    def assign(self, A):
        J = self.full ^ A
        if self.table[self.m, J] >= BIG:
            return None
        out = {}
        for i in range(self.m, 0, -1):
            S = int(self.choice[i, J])
            b = 0
            while S >> b:
                if S >> b & 1:
                    out[b] = i - 1
                b += 1
            J |= S
        return out


def solve_machine_dp(sub, cap=20):
    """Exact optimum by the machine-by-machine subset recurrence."""
    view = as_view(sub)
    jl, ml, P = view.arrays()
    if not jl:
        return 0, Schedule({})
    _check_feasible(jl, ml, P)
    dp = MachineDP(P, cap)
    full = dp.full
    val = dp.value(full)
    if val == math.inf:
        raise InfeasibleError("no feasible schedule")
    amap = dp.assign(full)
    return val, Schedule({jl[b]: ml[a] for b, a in amap.items()})


class LoadSets:
    """Forward load-vector sets Λ(j) with predecessor links.

    ``P`` is the (m, n) time matrix of the machines and jobs in question.
    Layer ``j`` maps each load vector reachable by the first ``j`` jobs to
    ``(previous vector, machine position)``.  With ``prune`` only Pareto
    minimal vectors survive each layer; without it the layers are exactly
    the images of all schedules (restricted to loads <= ``cap``).
    """

    def __init__(self, P, cap=None, prune=False, max_states=2_000_000, keep_layers=True):
        P = np.asarray(P, dtype=np.int64)
        self.m, self.n = P.shape
        self.cap = cap
        zero = (0,) * self.m
        layers = [{zero: None}]
        cur = layers[0]
        total = 1
        for b in range(self.n):
            col = P[:, b]
            allowed = [(a, int(col[a])) for a in range(self.m) if col[a] >= 0]
            nxt = {}
            for lam in cur:
                for a, p in allowed:
                    v = lam[a] + p
                    if cap is not None and v > cap:
                        continue
                    new = lam[:a] + (v,) + lam[a + 1:]
                    if new not in nxt:
                        nxt[new] = (lam, a)
            if prune:
                nxt = _pareto(nxt)
            total += len(nxt)
            if total > max_states:
                raise ResourceError(f"load DP exceeded {max_states} states")
            if keep_layers:
                layers.append(nxt)
            else:
                layers = [nxt]
            cur = nxt
        self.layers = layers
        self.final = cur

    def vectors(self):
        return self.final.keys()

    def assignment(self, lam):
        """Job position -> machine position for a schedule fulfilling ``lam``."""
        out = {}
        for b in range(self.n, 0, -1):
            lam, a = self.layers[b][lam]
            out[b - 1] = a
        return out


def _pareto(states):
    keys = sorted(states, key=lambda v: (sum(v), v))
    kept = []
    for v in keys:
        if not any(all(x <= y for x, y in zip(w, v)) for w in kept):
            kept.append(v)
    return {v: states[v] for v in kept}


def load_vector_layers(sub):
    """Exact Λ(0), ..., Λ(n) for the view's job order (no pruning, no cap)."""
    _, _, P = as_view(sub).arrays()
    ls = LoadSets(P)
    return [set(layer) for layer in ls.layers]


def _greedy_bound(P):
    m, n = P.shape
    loads = [0] * m
    for b in range(n):
        best = None
        for a in range(m):
            if P[a, b] >= 0:
                cand = loads[a] + int(P[a, b])
                if best is None or cand < best[0]:
                    best = (cand, a)
        loads[best[1]] = best[0]
    return max(loads)


def _lower_bound(P):
    m, n = P.shape
    lb = 0
    total = 0
    for b in range(n):
        col = P[:, b]
        mn = int(col[col >= 0].min())
        lb = max(lb, mn)
        total += mn
    return max(lb, -(-total // m))


def solve_load_dp(sub, load_cap=None, prune=True, max_states=2_000_000, stats=None):
    """Exact optimum by iterating over jobs and tracking machine load vectors.

    With ``load_cap`` the optimum is taken over schedules whose loads stay
    within the cap.  Without it the cap is binary searched between a lower
    bound and a greedy makespan, so the final table only holds loads up to
    OPT.  ``stats`` (a dict) receives the per-machine distinct load counts
    of the final run.
    """
    view = as_view(sub)
    jl, ml, P = view.arrays()
    if not jl:
        return 0, Schedule({})
    _check_feasible(jl, ml, P)

    def run(cap):
        ls = LoadSets(P, cap=cap, prune=prune, max_states=max_states)
        return ls if ls.final else None

    if load_cap is not None:
        ls = run(int(load_cap))
        if ls is None:
            raise InfeasibleError(f"no schedule keeps every load within {load_cap}")
    else:
        lo, hi = _lower_bound(P), _greedy_bound(P)
        ls = None
        while lo < hi:
            mid = (lo + hi) // 2
            got = run(mid)
            if got is None:
                lo = mid + 1
            else:
                hi, ls = mid, got
        if ls is None:
            ls = run(hi)
    best = min(ls.final, key=lambda v: (max(v), v))
    if stats is not None:
        seen = [set() for _ in ml]
        for layer in ls.layers:
            for v in layer:
                for a, x in enumerate(v):
                    seen[a].add(x)
        stats["distinct_loads"] = {ml[a]: len(s) for a, s in enumerate(seen)}
        stats["states"] = sum(len(layer) for layer in ls.layers)
    amap = ls.assignment(best)
    return max(best), Schedule({jl[b]: ml[a] for b, a in amap.items()})


def exact_fraction(eps):
    if isinstance(eps, Fraction):
        return eps
    if isinstance(eps, float):
        return Fraction(str(eps))
    return Fraction(eps)


class GridRounding:
    """Times rounded up to multiples of ``g = δB/n`` and expressed in units of ``g``."""

    def __init__(self, P, eps, B, n):
        eps = exact_fraction(eps)
        if eps <= 0:
            raise InputError("eps must be positive")
        self.delta = eps / 2
        self.B = B
        self.unit = self.delta * B / n
        scale = Fraction(n) / (self.delta * B)
        out = np.full(P.shape, -1, dtype=np.int64)
        for (a, b), p in np.ndenumerate(P):
            if p >= 0:
                out[a, b] = math.ceil(int(p) * scale)
        self.P = out


def _cmax_units(P, amap):
    loads = np.zeros(P.shape[0], dtype=np.int64)
    for b, a in amap.items():
        loads[a] += P[a, b]
    return int(loads.max()) if len(loads) else 0


def fptas_fixed_m(sub, eps, stats=None):
    """(1+eps)-approximation via grid rounding and a capped load DP."""
    from .rounding import two_approx

    if exact_fraction(eps) <= 0:
        raise InputError("eps must be positive")
    view = as_view(sub)
    jl, ml, P = view.arrays()
    if not jl:
        return 0, Schedule({})
    _check_feasible(jl, ml, P)
    sched_b, B = two_approx(view)
    grid = GridRounding(P, eps, B, len(jl))
    pos_m = {i: a for a, i in enumerate(ml)}
    seed = {b: pos_m[sched_b[j]] for b, j in enumerate(jl)}
    cap = _cmax_units(grid.P, seed)
    ls = LoadSets(grid.P, cap=cap, prune=True)
    best = min(ls.final, key=lambda v: (max(v), v))
    amap = ls.assignment(best)
    sched = Schedule({jl[b]: ml[a] for b, a in amap.items()})
    value = _cmax_units(P, amap)
    if stats is not None:
        stats.update(B=B, delta=grid.delta, cap_units=cap, rounded_opt_units=max(best))
    return value, sched
