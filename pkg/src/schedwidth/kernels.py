"""Hot inner loops: subset sums, machine-subset DP, branch-and-bound oracle, GF(2) rank.

Every kernel works on plain numpy arrays so it can be compiled by numba.  With
``SCHEDWIDTH_DISABLE_NUMBA=1`` the same functions run interpreted (loop
kernels) or through a vectorised numpy path (``subset_sums``).

Processing-time matrices are ``(m, n)`` int64 arrays with ``-1`` marking a
forbidden pair.  Infinite table entries use ``BIG``; callers convert to
``math.inf`` before anything leaves the package.
"""

import numpy as np

from ._accel import HAS_NUMBA, maybe_njit

BIG = np.int64(2**62)


@maybe_njit
def _subset_sums_loop(row):
    n = row.shape[0]
    out = np.zeros(1 << n, dtype=np.int64)
    for mask in range(1, 1 << n):
        low = mask & (-mask)
        k = 0
        while (low >> k) != 1:
            k += 1
        prev = out[mask ^ low]
        if prev >= BIG or row[k] < 0:
            out[mask] = BIG
        else:
            out[mask] = prev + row[k]
    return out


def _subset_sums_numpy(row):
    out = np.zeros(1, dtype=np.int64)
    for p in row:
        step = out + p if p >= 0 else np.full_like(out, BIG)
        step[out >= BIG] = BIG
        out = np.concatenate([out, step])
    return out


def subset_sums(row):
    """``out[mask]`` = total time of the jobs in ``mask``; ``BIG`` if any is forbidden."""
    row = np.ascontiguousarray(row, dtype=np.int64)
    if HAS_NUMBA:
        return _subset_sums_loop(row)
    return _subset_sums_numpy(row)


@maybe_njit
def machine_dp_tables(P):
    """Fill OPT(i, J) for the machine-by-machine recurrence.

    ``J`` is the set of jobs still unscheduled after machines ``0..i-1``;
    ``choice[i, J]`` is the job set machine ``i-1`` receives in an optimal
    completion, which makes backtracking a table walk.
    """
    m, n = P.shape
    full = (1 << n) - 1
    size = 1 << n
    table = np.full((m + 1, size), BIG, dtype=np.int64)
    choice = np.zeros((m + 1, size), dtype=np.int64)
    table[0, full] = 0
    for i in range(1, m + 1):
        sums = _subset_sums_loop(P[i - 1])
        prev = table[i - 1]
        for J in range(size):
            comp = full ^ J
            best = BIG
            best_s = 0
            # submasks of comp in decreasing order, then the empty set
            s = comp
            while True:
                sv = sums[s]
                pv = prev[J | s]
                if sv < BIG and pv < BIG:
                    v = sv if sv > pv else pv
                    if v < best or (v == best and s < best_s):
                        best = v
                        best_s = s
                if s == 0:
                    break
                s = (s - 1) & comp
            table[i, J] = best
            choice[i, J] = best_s
    return table, choice


@maybe_njit
def branch_and_bound(P, same_as_prev, upper):
    """Exhaustive DFS over job->machine maps with incumbent pruning.

    Jobs are taken in the given column order.  ``same_as_prev[k]`` marks a
    job identical to job ``k-1``; such runs are enumerated as multisets
    (non-decreasing machine index), which is still exhaustive up to swapping
    identical jobs.  Only strictly better makespans than ``upper`` are
    searched for.  Returns ``(best, assignment, nodes)``.
    """
    m, n = P.shape
    best = upper
    best_assign = np.full(n, -1, dtype=np.int64)
    assign = np.full(n, -1, dtype=np.int64)
    loads = np.zeros(m, dtype=np.int64)
    nodes = 0
    k = 0
    while k >= 0:
        cur = assign[k]
        if cur >= 0:
            loads[cur] -= P[cur, k]
        start = cur + 1
        if cur < 0 and k > 0 and same_as_prev[k]:
            start = assign[k - 1]
        nxt = -1
        for i in range(start, m):
            p = P[i, k]
            if p >= 0 and loads[i] + p < best:
                nxt = i
                break
        if nxt < 0:
            assign[k] = -1
            k -= 1
            continue
        nodes += 1
        assign[k] = nxt
        loads[nxt] += P[nxt, k]
        if k == n - 1:
            mx = 0
            for i in range(m):
                if loads[i] > mx:
                    mx = loads[i]
            if mx < best:
                best = mx
                for q in range(n):
                    best_assign[q] = assign[q]
        else:
            k += 1
            assign[k] = -1
    return best, best_assign, nodes


@maybe_njit
def gf2_rank_words(rows):
    """Rank over GF(2) of a bit matrix packed as ``(r, words)`` uint64."""
    work = rows.copy()
    r, w = work.shape
    rank = 0
    one = np.uint64(1)
    for c in range(w * 64):
        if rank == r:
            break
        word = c // 64
        bit = np.uint64(c % 64)
        piv = -1
        for q in range(rank, r):
            if (work[q, word] >> bit) & one:
                piv = q
                break
        if piv < 0:
            continue
        if piv != rank:
            for x in range(w):
                tmp = work[rank, x]
                work[rank, x] = work[piv, x]
                work[piv, x] = tmp
        for q in range(rank + 1, r):
            if (work[q, word] >> bit) & one:
                for x in range(w):
                    work[q, x] ^= work[rank, x]
        rank += 1
    return rank


def gf2_rank_int(rows):
    """Rank over GF(2) of rows given as Python int bitsets."""
    work = [x for x in rows if x]
    rank = 0
    while work:
        pivot = work.pop()
        if not pivot:
            continue
        rank += 1
        low = pivot & -pivot
        work = [x ^ pivot if x & low else x for x in work]
        work = [x for x in work if x]
    return rank


def pack_rows(rows, ncols):
    words = max(1, (ncols + 63) // 64)
    out = np.zeros((len(rows), words), dtype=np.uint64)
    mask = (1 << 64) - 1
    for q, x in enumerate(rows):
        for wd in range(words):
            out[q, wd] = (x >> (64 * wd)) & mask
    return out


def gf2_rank(rows, ncols):
    if not rows:
        return 0
    if HAS_NUMBA:
        return int(gf2_rank_words(pack_rows(rows, ncols)))
    return gf2_rank_int(rows)
