import itertools
import json
import random
from fractions import Fraction

import pytest

from schedwidth.core import InfeasibleError, InputError, ResourceError, load_instance, make_instance, makespan, restricted_instance
from schedwidth.harness import (
    CLASSES,
    GeneratorSpec,
    brute_force,
    cross_validate,
    default_corpus,
    diagnostics,
    generate,
    verify_class,
)


def enumerate_opt(inst):
    """Plain product over all maps; no pruning, no grouping."""
    jobs, machines = list(inst.jobs), list(inst.machines)
    best = None
    for choice in itertools.product(machines, repeat=len(jobs)):
        if any((i, j) not in inst.proc for i, j in zip(choice, jobs)):
            continue
        loads = {}
        for i, j in zip(choice, jobs):
            loads[i] = loads.get(i, 0) + inst.proc[(i, j)]
        v = max(loads.values(), default=0)
        best = v if best is None else min(best, v)
    return best


# ------------------------------------------------------------ oracle


def test_brute_force_identical_example():
    # 3+3 versus 2+2+2
    inst = restricted_instance([3, 3, 2, 2, 2], [[0, 1]] * 5)
    val, sched = brute_force(inst)
    assert val == 6 == makespan(inst, sched)


def test_brute_force_unrelated_example():
    inst = make_instance([[1, 5], [5, 1]])
    assert brute_force(inst)[0] == 1


def test_brute_force_empty_and_infeasible():
    assert brute_force(make_instance([[]]))[0] == 0
    with pytest.raises(InfeasibleError):
        brute_force(make_instance([[1, None], [2, None]]))


def test_brute_force_budget():
    inst = make_instance([[k + 1 for k in range(12)]] * 4)
    with pytest.raises(ResourceError):
        brute_force(inst, budget=100)


@pytest.mark.parametrize("seed", range(60))
def test_brute_force_matches_enumeration(seed):
    rng = random.Random(seed)
    cls = CLASSES[seed % len(CLASSES)]
    inst = generate(GeneratorSpec(cls, rng.randint(0, 6), rng.randint(1, 3), seed=seed, pmax=rng.choice([2, 9])))
    val, sched = brute_force(inst)
    assert val == enumerate_opt(inst) == makespan(inst, sched)


def test_relabeling_symmetry():
    for seed in range(30):
        inst = generate(GeneratorSpec("random_unrelated", 5, 3, seed=seed, density=0.7))
        P = [[inst.proc.get((i, j)) for j in inst.jobs] for i in inst.machines]
        rng = random.Random(seed)
        rp, cp = list(range(len(P))), list(range(len(P[0])))
        rng.shuffle(rp)
        rng.shuffle(cp)
        Q = [[P[a][b] for b in cp] for a in rp]
        assert brute_force(inst)[0] == brute_force(make_instance(Q))[0]


# ------------------------------------------------------------ generators


@pytest.mark.parametrize("cls", CLASSES)
def test_generated_instances_satisfy_class(cls):
    for seed in range(40):
        rng = random.Random(seed)
        inst = generate(GeneratorSpec(cls, rng.randint(0, 8), rng.randint(1, 5), seed=seed))
        assert verify_class(inst, cls).ok
        assert inst.feasible
        if cls != "random_unrelated":
            assert inst.is_restricted_identical()


def test_generator_determinism():
    for cls in CLASSES:
        spec = GeneratorSpec(cls, 6, 4, seed=17)
        assert generate(spec) == generate(spec)
    assert default_corpus(20) == default_corpus(20)


def test_generator_sizes_pool():
    inst = generate(GeneratorSpec("nested", 10, 3, seed=2, sizes=(4, 7)))
    assert {inst.size(j) for j in inst.jobs} <= {4, 7}


def test_graph_balancing_simple_pairs():
    inst = generate(GeneratorSpec("graph_balancing_simple", 12, 4, seed=3))
    pairs = [frozenset(i for i in inst.machines if (i, j) in inst.proc) for j in inst.jobs]
    two = [p for p in pairs if len(p) == 2]
    assert len(two) == len(set(two))


@pytest.mark.parametrize("spec", [
    GeneratorSpec("bogus", 1, 1),
    GeneratorSpec("nested", -1, 1),
    GeneratorSpec("nested", 1, 0),
    GeneratorSpec("nested", 1, 1, pmin=3, pmax=2),
    GeneratorSpec("random_restricted", 1, 1, density=0),
    GeneratorSpec("random_unrelated", 1, 1, identical=True),
])
def test_generator_rejects_bad_specs(spec):
    with pytest.raises(InputError):
        generate(spec)


@pytest.mark.parametrize("cls, allowed, witness", [
    ("path_hierarchical", [[0, 1], [1, 2]], ("j0", "j1")),
    ("nested", [[0, 1], [1, 2], [0]], ("j0", "j1")),
    ("graph_balancing", [[0, 1, 2]], ("j0",)),
    ("graph_balancing_simple", [[0, 1], [1], [0, 1]], ("j0", "j2")),
    ("tree_hierarchical", [[0, 1], [0, 2], [1, 2]], None),
])
def test_verify_class_counterexamples(cls, allowed, witness):
    inst = restricted_instance([1] * len(allowed), allowed)
    v = verify_class(inst, cls)
    assert not v.ok
    assert v.witness
    if witness is not None:
        assert v.witness == witness


def test_verify_class_mutated_instance():
    inst = generate(GeneratorSpec("path_hierarchical", 4, 3, seed=0))
    rows = [[inst.proc.get((i, j)) for j in inst.jobs] for i in inst.machines]
    assert verify_class(inst, "path_hierarchical").ok
    # add a job on {m1, m2} and one on {m0}: neither contains the other
    rows = [r + [None, None] for r in rows]
    rows[1][-2] = rows[2][-2] = 1
    rows[0][-1] = 1
    bad = make_instance(rows, identical=True)
    assert not verify_class(bad, "path_hierarchical").ok


def test_verify_random_restricted_rejects_unrelated():
    assert not verify_class(make_instance([[1], [2]]), "random_restricted").ok
    with pytest.raises(InputError):
        verify_class(make_instance([[1]]), "nope")


# ------------------------------------------------------------ diagnostics


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_diagnostics_single_job_all_machines(m):
    inst = restricted_instance([3], [list(range(m))])
    rep = diagnostics(inst)
    assert rep["treewidth"] == {"primal": 0, "dual": m - 1, "incidence": 1}
    assert all(rep["checks"].values())
    assert rep["exact_widths"]


def test_diagnostics_checks_hold_on_corpus():
    for _, inst in default_corpus(40):
        rep = diagnostics(inst)
        assert all(rep["checks"].values()), rep
        assert rep["cheapest"] in ("tw-primal", "tw-dual", "tw-incidence")


# ------------------------------------------------------------ cross validation


def test_cross_validate_default_corpus(tiny_corpus):
    report = cross_validate(tiny_corpus)
    assert report.ok, [r.error for r in report.failures]
    assert len(report.records) == 5 * len(tiny_corpus)


def test_cross_validate_fptas_ratios():
    corpus = default_corpus(30, seed0=400)
    report = cross_validate(corpus, eps_values=[Fraction(1, 10)], ptas_eps=[Fraction(1, 2)])
    assert report.ok, [r.error for r in report.failures]
    for r in report.records:
        if r.algorithm.startswith("fptas") and r.ratio is not None:
            assert r.ratio <= 1.1
        if r.algorithm.startswith("ptas") and r.ratio is not None:
            assert r.ratio <= 1.5
    assert any(r.algorithm.startswith("ptas") for r in report.records)


def test_cross_validate_empty_corpus(tmp_path):
    out = tmp_path / "o.jsonl"
    report = cross_validate([], out_path=str(out))
    assert report.ok and report.records == []
    assert out.read_text() == ""


def test_cross_validate_jsonl_and_workers(tmp_path):
    corpus = default_corpus(8, seed0=77)
    out = tmp_path / "o.jsonl"
    serial = cross_validate(corpus, out_path=str(out))
    parallel = cross_validate(corpus, workers=2)
    lines = [json.loads(x) for x in out.read_text().splitlines()]
    assert len(lines) == len(serial.records)
    assert [(r.instance, r.algorithm, r.value) for r in serial.records] == \
        [(r.instance, r.algorithm, r.value) for r in parallel.records]


def test_cross_validate_dumps_failures(tmp_path, monkeypatch):
    import schedwidth.harness as H

    real = H._exact_solvers

    def broken():
        d = dict(real())

        def off_by_one(inst):
            val, sched = d["machine-dp"](inst)
            return val + 1, sched

        d["bad"] = off_by_one
        return d

    monkeypatch.setattr(H, "_exact_solvers", broken)
    corpus = default_corpus(3, seed0=5)
    report = cross_validate(corpus, dump_dir=str(tmp_path))
    assert not report.ok
    assert {r.algorithm for r in report.failures} == {"bad"}
    name, inst = corpus[0]
    replay = load_instance(str(tmp_path / f"{name}.json"))
    assert brute_force(replay)[0] == brute_force(inst)[0]
