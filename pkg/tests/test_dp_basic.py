import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest

from schedwidth.core import InfeasibleError, InputError, ResourceError, make_instance, makespan, subinstance
from schedwidth.dp_basic import (
    LoadSets,
    MachineDP,
    fptas_fixed_m,
    load_vector_layers,
    solve_load_dp,
    solve_machine_dp,
)
from schedwidth.harness import brute_force


def random_rows(seed, n, m, forbid=0.3, pmax=9):
    rng = random.Random(seed)
    rows = [[None if rng.random() < forbid else rng.randint(1, pmax) for _ in range(n)] for _ in range(m)]
    for b in range(n):
        if all(rows[a][b] is None for a in range(m)):
            rows[rng.randrange(m)][b] = rng.randint(1, pmax)
    return rows


def enumerate_loads(P):
    """All load vectors of all schedules, by plain product enumeration."""
    m, n = P.shape
    out = set()
    choices = [[a for a in range(m) if P[a, b] >= 0] for b in range(n)]
    for assign in itertools.product(*choices):
        lam = [0] * m
        for b, a in enumerate(assign):
            lam[a] += int(P[a, b])
        out.add(tuple(lam))
    return out


def test_trivial_examples():
    assert solve_machine_dp(make_instance([[5]]))[0] == 5
    assert solve_machine_dp(make_instance([[3, 3], [3, 3]]))[0] == 3
    assert solve_load_dp(make_instance([[3, 3], [3, 3]]))[0] == 3
    assert solve_load_dp(make_instance([[2, 3, 4]]))[0] == 9
    empty = make_instance([[]])
    assert solve_load_dp(empty)[0] == 0 and solve_machine_dp(empty)[0] == 0
    assert load_vector_layers(make_instance([[2, 3, 4]]))[-1] == {(9,)}


@pytest.mark.parametrize("seed", range(60))
def test_exact_dps_match_oracle(seed):
    rng = random.Random(seed)
    inst = make_instance(random_rows(seed, rng.randint(1, 6), rng.randint(1, 3)))
    ref, _ = brute_force(inst)
    for solver in (solve_machine_dp, solve_load_dp):
        val, sched = solver(inst)
        assert val == ref
        assert makespan(inst, sched) == val


@pytest.mark.parametrize("seed", range(20))
def test_machine_table_entries(seed):
    rng = random.Random(100 + seed)
    n, m = rng.randint(1, 5), rng.randint(1, 3)
    inst = make_instance(random_rows(seed, n, m, forbid=0.4))
    dp = MachineDP(inst.P)
    for i in range(m + 1):
        for J in range(1 << n):
            jobs = [inst.jobs[b] for b in range(n) if not J >> b & 1]
            sub = subinstance(inst, jobs, inst.machines[:i])
            try:
                ref = brute_force(sub)[0]
            except InfeasibleError:
                ref = math.inf
            assert dp.opt(i, J) == ref


@pytest.mark.parametrize("seed", range(20))
def test_layers_equal_schedule_images(seed):
    rng = random.Random(200 + seed)
    inst = make_instance(random_rows(seed, rng.randint(1, 5), rng.randint(1, 3)))
    layers = load_vector_layers(inst)
    assert layers[0] == {(0,) * inst.m}
    for j in range(inst.n + 1):
        assert layers[j] == enumerate_loads(inst.P[:, :j])


@pytest.mark.parametrize("seed", range(20))
def test_distinct_load_bound(seed):
    rng = random.Random(300 + seed)
    inst = make_instance(random_rows(seed, rng.randint(1, 6), rng.randint(1, 3)))
    stats = {}
    opt, _ = solve_load_dp(inst, stats=stats)
    for a, i in enumerate(inst.machines):
        k = bin(inst.job_masks[a]).count("1")
        assert stats["distinct_loads"][i] <= min(opt + 1, 2 ** k)


def test_load_cap_semantics():
    inst = make_instance([[4, 4, 2], [4, 4, 2]])
    assert solve_load_dp(inst, load_cap=6)[0] == 6
    with pytest.raises(InfeasibleError):
        solve_load_dp(inst, load_cap=5)
    ls = LoadSets(inst.P, cap=6)
    assert all(max(v) <= 6 for v in ls.final)


def test_errors():
    with pytest.raises(ResourceError):
        MachineDP(np.ones((1, 21), dtype=np.int64))
    with pytest.raises(InfeasibleError):
        solve_machine_dp(make_instance([[None, 1]]))
    with pytest.raises(ResourceError):
        solve_load_dp(make_instance([[1, 2, 4, 8, 16, 32]] * 3), prune=False, max_states=10)
    with pytest.raises(InputError):
        fptas_fixed_m(make_instance([[1]]), 0)


def test_fptas_grid_aligned_is_exact():
    # every time is a multiple of the grid delta*B/n, so rounding is the identity
    inst = make_instance([[4, 4, 4, 4], [4, 4, 4, 4]])
    val, sched = fptas_fixed_m(inst, 1)
    assert val == 8 and makespan(inst, sched) == 8


def test_fptas_small_example():
    inst = make_instance([[3, 4], [3, 4]])
    val, _ = fptas_fixed_m(inst, 1)
    assert 4 <= val <= 8


@pytest.mark.parametrize("eps", [Fraction(1, 2), Fraction(1, 5), Fraction(1, 10)])
def test_fptas_ratio(eps):
    for seed in range(40):
        rng = random.Random(400 + seed)
        inst = make_instance(random_rows(seed, rng.randint(1, 6), rng.randint(1, 3)))
        ref, _ = brute_force(inst)
        val, sched = fptas_fixed_m(inst, eps)
        assert makespan(inst, sched) == val
        assert ref <= val <= (1 + eps) * ref
