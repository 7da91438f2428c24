import random

import pytest

from schedwidth.core import InputError, ResourceError
from schedwidth.decomp import (
    BranchDecomposition,
    NotBicograph,
    TreeDecomposition,
    bd_from_dict,
    bd_to_dict,
    bicograph_recognize,
    bicotree_to_branch_decomposition,
    caterpillar_branch_decomposition,
    check_simple_form,
    exact_treewidth,
    heuristic_tree_decomposition,
    normalize_simple_form,
    replay_bicotree,
    td_from_dict,
    td_to_dict,
    validate_branch_decomposition,
    validate_tree_decomposition,
)
from schedwidth.graphs import bipartite_from_edges, build_graph, connection_types_mask, cut_rank, from_edges
from schedwidth.harness import GeneratorSpec, generate


def path(k):
    return from_edges(k, [(a, a + 1) for a in range(k - 1)])


def clique(k):
    return from_edges(k, [(a, b) for a in range(k) for b in range(a + 1, k)])


def grid3():
    idx = lambda r, c: 3 * r + c
    edges = [(idx(r, c), idx(r, c + 1)) for r in range(3) for c in range(2)]
    edges += [(idx(r, c), idx(r + 1, c)) for r in range(2) for c in range(3)]
    return from_edges(9, edges)


def random_graph(seed, n, p):
    rng = random.Random(seed)
    return from_edges(n, [(a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < p])


def test_single_bag_ok():
    g = clique(4)
    td = TreeDecomposition([set(range(4))], [])
    res = validate_tree_decomposition(g, td)
    assert res.ok and td.width == 3


def test_missing_vertex_is_t1():
    g = path(3)
    td = TreeDecomposition([{0, 1}], [])
    res = validate_tree_decomposition(g, td)
    assert not res.ok and res.condition == "T1"


def test_missing_edge_is_t2():
    g = path(3)
    td = TreeDecomposition([{0, 1}, {2}], [(0, 1)])
    res = validate_tree_decomposition(g, td)
    assert not res.ok and res.condition == "T2"


def test_split_occurrence_is_t3_with_witness():
    g = path(3)
    td = TreeDecomposition([{0, 1}, {1, 2}, {0}], [(0, 1), (1, 2)])
    res = validate_tree_decomposition(g, td)
    assert not res.ok and res.condition == "T3" and res.witness == 0


def test_heuristics_on_trees_and_cliques():
    tree = from_edges(7, [(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6)])
    for h in ("min_fill", "min_degree"):
        assert heuristic_tree_decomposition(tree, h).width == 1
        assert heuristic_tree_decomposition(clique(5), h).width == 4


@pytest.mark.parametrize("seed", range(15))
def test_heuristic_valid_and_above_exact(seed):
    g = random_graph(seed, 8, 0.35)
    w, td = exact_treewidth(g)
    assert validate_tree_decomposition(g, td).ok and td.width == w
    for h in ("min_fill", "min_degree"):
        htd = heuristic_tree_decomposition(g, h)
        assert validate_tree_decomposition(g, htd).ok
        assert htd.width >= w


def test_exact_widths():
    assert exact_treewidth(path(4))[0] == 1
    assert exact_treewidth(clique(4))[0] == 3
    # 3x3 grid: exhaustive search over elimination orderings gives 3
    assert exact_treewidth(grid3())[0] == 3
    with pytest.raises(ResourceError):
        exact_treewidth(path(13))


def test_simple_form_of_single_node():
    g = clique(3)
    sfd = normalize_simple_form(TreeDecomposition([set(range(3))], []))
    assert check_simple_form(g, sfd).ok
    assert sfd.width == 2
    # empty root leaf, the original bag, two empty leaves below it
    assert [sorted(b) for b in sfd.bags] == [[], [0, 1, 2], [], []]


@pytest.mark.parametrize("seed", range(15))
def test_simple_form_preserves_width(seed):
    g = random_graph(seed, 9, 0.3)
    td = heuristic_tree_decomposition(g)
    sfd = normalize_simple_form(td)
    assert check_simple_form(g, sfd).ok
    assert sfd.width == td.width
    assert len(sfd) <= 4 * len(td) + 2
    # every nonempty bag is an original bag
    assert {b for b in sfd.bags if b} <= set(td.bags)


def test_branch_examples():
    g = clique(5)
    bd = caterpillar_branch_decomposition(g)
    assert validate_branch_decomposition(g, bd).rankwidth == 1
    e = from_edges(5, [])
    assert validate_branch_decomposition(e, caterpillar_branch_decomposition(e)).rankwidth == 0


@pytest.mark.parametrize("seed", range(10))
def test_branch_width_matches_recompute(seed):
    g = random_graph(seed, 8, 0.4)
    bd = caterpillar_branch_decomposition(g)
    res = validate_branch_decomposition(g, bd)
    assert res.rankwidth == max(cut_rank(g, bd.side(a, b)) for a, b in bd.edges)


def test_branch_malformed():
    g = path(3)
    bad_leaf = BranchDecomposition(4, [(0, 1), (0, 2), (0, 3)], {0: 1, 1: 2, 2: 2})
    assert not validate_branch_decomposition(g, bad_leaf).ok
    with pytest.raises(InputError):
        validate_branch_decomposition(g, BranchDecomposition(4, [(0, 1), (1, 0), (2, 3)], {0: 1, 1: 2, 2: 3}))


def test_bicograph_examples():
    kab = bipartite_from_edges([0, 1, 2], [0, 1, 2, 3], [(a, b) for a in range(3) for b in range(4)])
    bct = bicograph_recognize(kab)
    assert not isinstance(bct, NotBicograph) and replay_bicotree(kab, bct)
    bd = bicotree_to_branch_decomposition(bct)
    assert validate_branch_decomposition(kab, bd).rankwidth <= 1
    # P_7 with alternating sides: no split survives bi-complementation
    p7 = bipartite_from_edges([0, 2, 4, 6], [1, 3, 5], [(0, 1), (2, 1), (2, 3), (4, 3), (4, 5), (6, 5)])
    res = bicograph_recognize(p7)
    assert isinstance(res, NotBicograph) and not res


def test_bicograph_rejects_nonbipartite():
    g = from_edges(3, [(0, 1)])
    with pytest.raises(InputError):
        bicograph_recognize(g)


@pytest.mark.parametrize("cls", ["nested", "path_hierarchical", "tree_hierarchical"])
def test_structured_instances_are_bicographs(cls):
    for seed in range(25):
        inst = generate(GeneratorSpec(cls, 7, 4, seed=seed))
        g = build_graph(inst, "incidence")
        bct = bicograph_recognize(g)
        assert not isinstance(bct, NotBicograph)
        assert replay_bicotree(g, bct)
        bd = bicotree_to_branch_decomposition(bct)
        res = validate_branch_decomposition(g, bd)
        assert res.ok and res.rankwidth <= 4
        jm, mm = g.side_mask("j"), g.side_mask("m")
        for a, b in bd.edges:
            for x, y in ((a, b), (b, a)):
                X = bd.side(x, y)
                assert len(connection_types_mask(g, X & jm, ~X & mm & g.all_mask)) <= 2


def test_json_roundtrip():
    inst = generate(GeneratorSpec("nested", 5, 3, seed=2))
    g = build_graph(inst, "incidence")
    td = heuristic_tree_decomposition(g)
    back = td_from_dict(g, td_to_dict(g, td))
    assert validate_tree_decomposition(g, back).ok and back.width == td.width
    bd = caterpillar_branch_decomposition(g)
    bd2 = bd_from_dict(g, bd_to_dict(g, bd))
    assert validate_branch_decomposition(g, bd2).rankwidth == validate_branch_decomposition(g, bd).rankwidth
    with pytest.raises(InputError):
        td_from_dict(g, {"nodes": [{"bag": []}]})
