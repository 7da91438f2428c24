"""Brute-force oracle, structured instance generators, class checks, diagnostics, cross-validation."""

from __future__ import annotations

import json
import math
import os
import random
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .core import (
    InfeasibleError,
    InputError,
    ResourceError,
    Schedule,
    as_view,
    instance_to_dict,
    make_instance,
    makespan,
)
from .kernels import branch_and_bound

CLASSES = (
    "random_unrelated",
    "random_restricted",
    "path_hierarchical",
    "tree_hierarchical",
    "nested",
    "graph_balancing",
    "graph_balancing_simple",
)

# ---------------------------------------------------------------- oracle


def _multiset_count(m, runs):
    total = 1
    for c in runs:
        total *= math.comb(m + c - 1, c)
    return total


def brute_force(sub, budget=10**7):
    """Exhaustive optimum over all job->machine maps (branch-and-bound DFS).

    Jobs with identical columns are enumerated as multisets, which keeps the
    search exhaustive up to relabelling interchangeable jobs.  ``budget``
    bounds the number of (grouped) assignments that may be visited.
    """
    view = as_view(sub)
    jl, ml, P = view.arrays()
    if not jl:
        return 0, Schedule({})
    if not ml or (P >= 0).sum(axis=0).min() == 0:
        raise InfeasibleError("some job has no admissible machine")
    m, n = P.shape
    big = np.where(P >= 0, P, np.iinfo(np.int64).max)
    key = [(-int(big[:, b].min()), tuple(P[:, b].tolist()), b) for b in range(n)]
    key.sort()
    order = [b for _, _, b in key]
    Q = np.ascontiguousarray(P[:, order])
    same = np.zeros(n, dtype=np.bool_)
    runs = [1]
    for k in range(1, n):
        if np.array_equal(Q[:, k], Q[:, k - 1]):
            same[k] = True
            runs[-1] += 1
        else:
            runs.append(1)
    if _multiset_count(m, runs) > budget:
        raise ResourceError(f"brute force space exceeds budget {budget}")
    loads = np.zeros(m, dtype=np.int64)
    for k in range(n):
        col = Q[:, k]
        allowed = np.flatnonzero(col >= 0)
        a = allowed[np.argmin(loads[allowed] + col[allowed])]
        loads[a] += col[a]
    upper = int(loads.max()) + 1
    best, assign, _ = branch_and_bound(Q, same, np.int64(upper))
    sched = Schedule({jl[order[k]]: ml[int(assign[k])] for k in range(n)})
    return int(best), sched


# ---------------------------------------------------------------- generators


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters of a seeded random instance.

    ``cls`` is one of ``CLASSES``.  ``density`` is the edge probability of
    the random classes.  ``identical`` defaults to restricted assignment for
    every class except ``random_unrelated``; setting it to False draws
    unrelated times on the same restriction structure.
    """

    cls: str
    n: int
    m: int
    pmin: int = 1
    pmax: int = 9
    seed: int = 0
    density: float = 0.5
    identical: Optional[bool] = None
    sizes: Optional[tuple] = None

    def validate(self):
        if self.cls not in CLASSES:
            raise InputError(f"unknown class {self.cls!r}")
        if self.n < 0 or self.m < 1:
            raise InputError("need n >= 0 and m >= 1")
        if not 1 <= self.pmin <= self.pmax:
            raise InputError("need 1 <= pmin <= pmax")
        if not 0 < self.density <= 1:
            raise InputError("density must lie in (0, 1]")
        if self.cls == "random_unrelated" and self.identical:
            raise InputError("random_unrelated cannot be restricted-identical")


def _laminar_family(rng, machines):
    out = [tuple(machines)]
    stack = [list(machines)]
    while stack:
        s = stack.pop()
        if len(s) < 2:
            continue
        rng.shuffle(s)
        parts = rng.randint(2, min(3, len(s)))
        cuts = sorted(rng.sample(range(1, len(s)), parts - 1))
        prev = 0
        for c in cuts + [len(s)]:
            part = sorted(s[prev:c])
            prev = c
            out.append(tuple(part))
            stack.append(part)
    return sorted(set(out))


def _allowed_sets(spec, rng):
    n, m = spec.n, spec.m
    ms = list(range(m))
    cls = spec.cls
    if cls in ("random_unrelated", "random_restricted"):
        out = []
        for _ in range(n):
            s = [i for i in ms if rng.random() < spec.density]
            if not s:
                s = [rng.randrange(m)]
            out.append(s)
        return out
    if cls == "path_hierarchical":
        return [list(range(rng.randint(1, m))) for _ in range(n)]
    if cls == "tree_hierarchical":
        parent = [None] + [rng.randrange(i) for i in range(1, m)]
        out = []
        for _ in range(n):
            v = rng.randrange(m)
            path = []
            while v is not None:
                path.append(v)
                v = parent[v]
            out.append(sorted(path))
        return out
    if cls == "nested":
        fam = _laminar_family(rng, ms)
        return [list(rng.choice(fam)) for _ in range(n)]
    if cls == "graph_balancing":
        out = []
        for _ in range(n):
            k = 1 if m == 1 or rng.random() < 0.25 else 2
            out.append(sorted(rng.sample(ms, k)))
        return out
    # graph_balancing_simple: no two jobs share the same machine pair
    pairs = [(a, b) for a in range(m) for b in range(a + 1, m)]
    rng.shuffle(pairs)
    out = []
    for _ in range(n):
        if pairs and rng.random() >= 0.25:
            out.append(list(pairs.pop()))
        else:
            out.append([rng.randrange(m)])
    return out


def generate(spec):
    """Deterministic instance of ``spec.cls`` (stdlib Mersenne Twister seeded by ``spec.seed``)."""
    spec.validate()
    rng = random.Random(spec.seed)
    allowed = _allowed_sets(spec, rng)
    identical = spec.identical
    if identical is None:
        identical = spec.cls != "random_unrelated"
    pool = list(spec.sizes) if spec.sizes else None
    rows = [[None] * spec.n for _ in range(spec.m)]
    for b, s in enumerate(allowed):
        size = rng.choice(pool) if pool else rng.randint(spec.pmin, spec.pmax)
        for i in s:
            rows[i][b] = size if identical else rng.randint(spec.pmin, spec.pmax)
    return make_instance(rows, identical=identical)


# ---------------------------------------------------------------- class checks


@dataclass
class Verdict:
    ok: bool
    cls: str
    witness: tuple = ()
    message: str = ""

    def __bool__(self):
        return self.ok


def _sets(inst):
    return {j: frozenset(i for i in inst.machines if (i, j) in inst.proc) for j in inst.jobs}


def verify_class(inst, cls):
    """Independent re-check of a restriction class; failures carry a witness."""
    if cls not in CLASSES:
        raise InputError(f"unknown class {cls!r}")
    sets = _sets(inst)
    jobs = list(inst.jobs)
    if cls == "random_unrelated":
        return Verdict(True, cls)
    if cls == "random_restricted":
        bad = [j for j in jobs if len({inst.proc[(i, j)] for i in sets[j]}) > 1]
        if bad:
            return Verdict(False, cls, (bad[0],), "job has differing finite times")
        return Verdict(True, cls)
    if cls in ("graph_balancing", "graph_balancing_simple"):
        for j in jobs:
            if len(sets[j]) > 2:
                return Verdict(False, cls, (j,), "job has more than two machines")
        if cls == "graph_balancing_simple":
            seen = {}
            for j in jobs:
                if len(sets[j]) == 2:
                    if sets[j] in seen:
                        return Verdict(False, cls, (seen[sets[j]], j), "parallel edges")
                    seen[sets[j]] = j
        return Verdict(True, cls)
    if cls == "nested":
        for a in range(len(jobs)):
            for b in range(a + 1, len(jobs)):
                x, y = sets[jobs[a]], sets[jobs[b]]
                if not (x <= y or y <= x or not (x & y)):
                    return Verdict(False, cls, (jobs[a], jobs[b]), "sets overlap without nesting")
        return Verdict(True, cls)
    if cls == "path_hierarchical":
        for a in range(len(jobs)):
            for b in range(a + 1, len(jobs)):
                x, y = sets[jobs[a]], sets[jobs[b]]
                if not (x <= y or y <= x):
                    return Verdict(False, cls, (jobs[a], jobs[b]), "sets are not a chain")
        return Verdict(True, cls)
    # tree_hierarchical: order every set by decreasing job coverage and read off parents
    cover = {}
    for j, s in sets.items():
        for i in s:
            cover[i] = cover.get(i, 0) + 1
    pos = {i: k for k, i in enumerate(inst.machines)}
    parent = {}
    owner = {}
    root = None
    for j in jobs:
        chain = sorted(sets[j], key=lambda i: (-cover[i], pos[i]))
        if not chain:
            continue
        if root is None:
            root = (chain[0], j)
        elif chain[0] != root[0]:
            return Verdict(False, cls, (root[1], j), "sets have no common root")
        for up, down in zip(chain, chain[1:]):
            if parent.get(down, up) != up:
                return Verdict(False, cls, (owner[down], j), "sets are not root paths of one tree")
            parent[down] = up
            owner[down] = j
    return Verdict(True, cls)


# ---------------------------------------------------------------- diagnostics


def diagnostics(inst, exact_limit=12):
    """Widths of the three graphs with their inequality checks, plus bi-cograph status."""
    from .decomp import bicograph_recognize, exact_treewidth, heuristic_tree_decomposition
    from .graphs import KINDS, build_graph, graph_stats

    report = {"n": inst.n, "m": inst.m, "stats": graph_stats(inst)}
    widths = {}
    exact = True
    for kind in KINDS:
        g = build_graph(inst, kind)
        if g.order <= exact_limit:
            widths[kind] = exact_treewidth(g, limit=exact_limit)[0]
        else:
            widths[kind] = heuristic_tree_decomposition(g).width
            exact = False
    report["treewidth"] = widths
    report["exact_widths"] = exact
    max_j = max((bin(x).count("1") for x in inst.job_masks), default=0)
    max_m = max((bin(x).count("1") for x in inst.machine_masks), default=0)
    checks = {
        "tw_p >= max|J(i)| - 1": widths["primal"] >= max_j - 1,
        "tw_d >= max|M(j)| - 1": widths["dual"] >= max_m - 1,
    }
    if exact:
        checks["tw_i <= tw_p + 1"] = widths["incidence"] <= widths["primal"] + 1
        checks["tw_i <= tw_d + 1"] = widths["incidence"] <= widths["dual"] + 1
    report["checks"] = checks
    bct = bicograph_recognize(build_graph(inst, "incidence"))
    report["bicograph"] = bool(bct)
    cost = {
        "tw-primal": 2 ** (widths["primal"] + 1),
        "tw-dual": (inst.n + 1) ** (widths["dual"] + 1),
        "tw-incidence": 2 ** (widths["incidence"] + 1) * (inst.n + 1) ** (widths["incidence"] + 1),
    }
    report["cheapest"] = min(cost, key=cost.get)
    return report


# ---------------------------------------------------------------- cross validation


@dataclass
class BenchRecord:
    instance: str
    algorithm: str
    value: Optional[float]
    seconds: float
    width: Optional[int] = None
    reference: Optional[int] = None
    ratio: Optional[float] = None
    bound: Optional[float] = None
    ok: bool = True
    error: str = ""


@dataclass
class BenchReport:
    records: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.failures

    def to_jsonl(self):
        return "".join(json.dumps(asdict(r)) + "\n" for r in self.records)


def _exact_solvers():
    from .dp_basic import solve_load_dp, solve_machine_dp
    from .dp_treewidth import solve_dual, solve_incidence, solve_primal

    return {
        "machine-dp": solve_machine_dp,
        "load-dp": solve_load_dp,
        "tw-primal": solve_primal,
        "tw-dual": solve_dual,
        "tw-incidence": solve_incidence,
    }


def _run(name, inst, algo, fn, ref, bound=None):
    t0 = time.perf_counter()
    rec = BenchRecord(name, algo, None, 0.0, reference=ref, bound=bound)
    try:
        val, sched = fn()
        rec.value = val
        if makespan(inst, sched) != val:
            rec.ok, rec.error = False, "reported value differs from schedule makespan"
        elif bound is None and val != ref:
            rec.ok, rec.error = False, f"value {val} != oracle {ref}"
        elif bound is not None and not (ref <= val <= bound):
            rec.ok, rec.error = False, f"value {val} outside [{ref}, {bound}]"
        if ref:
            rec.ratio = val / ref
    except (ResourceError, InfeasibleError) as exc:
        rec.ok, rec.error = False, f"{type(exc).__name__}: {exc}"
    rec.seconds = time.perf_counter() - t0
    return rec


def _validate_one(name, inst, eps_values, ptas_eps, budget):
    """Every applicable solver on one instance; sequential by design."""
    from .dp_basic import exact_fraction, fptas_fixed_m
    from .dp_treewidth import fptas_treewidth
    from .ptas import ptas

    ref, _ = brute_force(inst, budget=budget)
    out = [_run(name, inst, algo, lambda fn=fn: fn(inst), ref) for algo, fn in _exact_solvers().items()]
    for eps in eps_values:
        bound = math.floor((1 + exact_fraction(eps)) * ref)
        out.append(_run(name, inst, f"fptas-m[{eps}]", lambda: fptas_fixed_m(inst, eps), ref, bound))
        for kind in ("dual", "incidence"):
            out.append(_run(
                name, inst, f"fptas-tw-{kind}[{eps}]",
                lambda kind=kind: fptas_treewidth(inst, None, kind, eps), ref, bound,
            ))
    if inst.is_restricted_identical():
        for eps in ptas_eps:
            bound = math.floor((1 + exact_fraction(eps)) * ref)
            out.append(_run(name, inst, f"ptas-rw[{eps}]", lambda: ptas(inst, eps), ref, bound))
    return out


def cross_validate(corpus, eps_values=(), ptas_eps=(), out_path=None, dump_dir=None, budget=10**7, workers=1):
    """Run every applicable solver and the oracle on ``(name, instance)`` pairs.

    Exact solvers must hit the oracle value; each FPTAS entry of
    ``eps_values`` and the PTAS (restricted-identical instances only) for
    each ``ptas_eps`` entry must land in ``[OPT, floor((1+eps) OPT)]``.
    Failing instances are written to ``dump_dir`` for replay.  With
    ``workers > 1`` instances run in a process pool; the report is
    assembled in corpus order.  JSON lines go to ``out_path``.
    """
    corpus = list(corpus)
    args = [(name, inst, tuple(eps_values), tuple(ptas_eps), budget) for name, inst in corpus]
    if workers > 1 and len(corpus) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(_validate_one, *zip(*args)))
    else:
        batches = [_validate_one(*a) for a in args]
    report = BenchReport()
    for (name, inst), recs in zip(corpus, batches):
        for rec in recs:
            report.records.append(rec)
            if rec.ok:
                continue
            report.failures.append(rec)
            if dump_dir:
                os.makedirs(dump_dir, exist_ok=True)
                path = os.path.join(dump_dir, f"{name}.json")
                with open(path, "w") as fh:
                    json.dump(instance_to_dict(inst), fh, indent=1)
                rec.error += f" (dumped to {path})"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(report.to_jsonl())
    return report


def default_corpus(count=100, n_max=6, m_max=3, seed0=1):
    """Seeded tiny instances cycling through every generator class."""
    out = []
    for k in range(count):
        seed = seed0 + k
        rng = random.Random(seed * 7919)
        cls = CLASSES[k % len(CLASSES)]
        spec = GeneratorSpec(cls, n=rng.randint(1, n_max), m=rng.randint(1, m_max), seed=seed)
        out.append((f"{cls}-s{seed}", generate(spec)))
    return out
