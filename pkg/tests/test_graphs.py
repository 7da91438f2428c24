import itertools
import random

from hypothesis import given, settings
from hypothesis import strategies as st

from schedwidth.core import make_instance
from schedwidth.graphs import (
    bipartite_from_edges,
    build_graph,
    connection_types,
    connection_types_mask,
    cut_rank,
    from_edges,
    graph_stats,
)
from schedwidth.harness import GeneratorSpec, generate


def _random_instance(seed, n=5, m=3):
    rng = random.Random(seed)
    rows = [[rng.choice([None, rng.randint(1, 9)]) for _ in range(n)] for _ in range(m)]
    return make_instance(rows)


def test_one_job_many_machines():
    inst = make_instance([[1], [2], [3], [4]])
    assert build_graph(inst, "primal").edges() == []
    dual = build_graph(inst, "dual")
    assert len(dual.edges()) == 6
    inc = build_graph(inst, "incidence")
    assert inc.degree(0) == 4 and len(inc.edges()) == 4


def test_many_jobs_one_machine():
    inst = make_instance([[1, 2, 3, 4]])
    assert len(build_graph(inst, "primal").edges()) == 6
    assert build_graph(inst, "dual").order == 1
    inc = build_graph(inst, "incidence")
    assert inc.degree(4) == 4


def test_edges_match_pairwise_rescan():
    for seed in range(20):
        inst = _random_instance(seed)
        M = [set(i for i in inst.machines if (i, j) in inst.proc) for j in inst.jobs]
        J = [set(j for j in inst.jobs if (i, j) in inst.proc) for i in inst.machines]
        primal = {(a, b) for a, b in itertools.combinations(range(inst.n), 2) if M[a] & M[b]}
        dual = {(a, b) for a, b in itertools.combinations(range(inst.m), 2) if J[a] & J[b]}
        inc = {(b, inst.n + a) for a in range(inst.m) for b in range(inst.n) if (inst.machines[a], inst.jobs[b]) in inst.proc}
        assert set(build_graph(inst, "primal").edges()) == primal
        assert set(build_graph(inst, "dual").edges()) == dual
        assert set(build_graph(inst, "incidence").edges()) == inc


def test_cliques_in_primal_and_dual():
    for seed in range(20):
        inst = _random_instance(seed, 6, 3)
        P, D = build_graph(inst, "primal"), build_graph(inst, "dual")
        for a in range(inst.m):
            js = [b for b in range(inst.n) if inst.P[a, b] >= 0]
            assert all(P.adj[x] >> y & 1 for x, y in itertools.combinations(js, 2))
        for b in range(inst.n):
            ms = [a for a in range(inst.m) if inst.P[a, b] >= 0]
            assert all(D.adj[x] >> y & 1 for x, y in itertools.combinations(ms, 2))


def test_cut_rank_examples():
    kab = bipartite_from_edges([0, 1, 2], [0, 1], [(a, b) for a in range(3) for b in range(2)])
    assert cut_rank(kab, {0, 1, 2}) == 1
    empty = from_edges(4, [])
    assert cut_rank(empty, {0, 1}) == 0
    matching = from_edges(4, [(0, 2), (1, 3)])
    assert cut_rank(matching, {0, 1}) == 2


def test_connection_types_examples():
    g = bipartite_from_edges(["a", "b", "c"], ["x", "y"], [("a", "x"), ("b", "x"), ("c", "y")])
    part = connection_types(g, {0, 1, 2}, set())
    assert len(part) == 1
    part = connection_types(g, {0, 1, 2}, {3, 4})
    assert sorted(map(sorted, part.groups)) == [[0, 1], [2]]
    full = bipartite_from_edges(["a", "b"], ["x"], [("a", "x"), ("b", "x")])
    assert len(connection_types(full, {0, 1}, {2})) == 1


@st.composite
def bipartite(draw):
    n = draw(st.integers(1, 6))
    m = draw(st.integers(1, 5))
    edges = draw(st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, m - 1))))
    return bipartite_from_edges(list(range(n)), list(range(m)), sorted(edges)), n, m


@settings(max_examples=80, deadline=None)
@given(bipartite(), st.data())
def test_types_match_hashing_and_rank_bound(gnm, data):
    g, n, m = gnm
    X = data.draw(st.sets(st.integers(0, n + m - 1)))
    Xmask = sum(1 << v for v in X)
    jobs = Xmask & g.side_mask("j")
    mach = ~Xmask & g.all_mask & g.side_mask("m")
    part = connection_types_mask(g, jobs, mach)
    buckets = {}
    for v in range(n):
        if jobs >> v & 1:
            buckets.setdefault(g.adj[v] & mach, set()).add(v)
    assert sorted(map(sorted, buckets.values())) == sorted(map(sorted, part.groups))
    assert len(part) <= 2 ** cut_rank(g, Xmask)


@settings(max_examples=80, deadline=None)
@given(bipartite(), st.data())
def test_cut_rank_symmetric_and_lipschitz(gnm, data):
    g, n, m = gnm
    X = data.draw(st.sets(st.integers(0, n + m - 1)))
    Xmask = sum(1 << v for v in X)
    r = cut_rank(g, Xmask)
    assert r == cut_rank(g, g.all_mask & ~Xmask)
    u = data.draw(st.integers(0, n - 1))
    w = data.draw(st.integers(0, m - 1))
    h = bipartite_from_edges(list(range(n)), list(range(m)), sorted(set(
        [(a, b - n) for a, b in g.edges()] + [(u, w)]
    )))
    assert r <= cut_rank(h, Xmask) + 1 and cut_rank(h, Xmask) <= r + 1


def test_stats():
    star = graph_stats(make_instance([[1, 2, 3]]))
    assert star["primal"]["max_degree"] == 2
    assert star["incidence"]["max_degree"] == 3
    inst = generate(GeneratorSpec("random_restricted", 6, 3, seed=4))
    rep = graph_stats(inst)
    assert rep["max_machines_per_job"] == max(bin(x).count("1") for x in inst.machine_masks)
    assert rep["incidence"]["edges"] == len(inst.proc)


def test_dot_export():
    text = build_graph(make_instance([[1, 2]]), "incidence").to_dot()
    assert text.startswith("graph incidence") and '"j:j0" -- "m:m0"' in text
