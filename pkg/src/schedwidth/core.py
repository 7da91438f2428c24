"""Instances, schedules, subinstances and the JSON instance format."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from typing import Iterable, Mapping

import numpy as np

INF = math.inf


class _Forbidden:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "FORBIDDEN"

    def __reduce__(self):
        return (_Forbidden, ())


FORBIDDEN = _Forbidden()


class SchedError(Exception):
    """Base class for solver errors."""


class InputError(SchedError, ValueError):
    pass


class InfeasibleError(SchedError):
    """No feasible schedule exists (some job has no admissible machine)."""


class ResourceError(SchedError):
    """Table or enumeration budget exceeded."""


@dataclass(frozen=True, eq=False)
class Instance:
    """An R||Cmax instance; omitted (machine, job) pairs are forbidden.

    ``proc`` maps ``(machine, job)`` to a positive integer.  ``identical``
    marks restricted assignment (every finite entry in a job's row equal).
    ``scale`` records the factor applied to rational input times.
    """

    jobs: tuple
    machines: tuple
    proc: Mapping
    identical: bool = False
    scale: int = 1

    def __post_init__(self):
        object.__setattr__(self, "jobs", tuple(self.jobs))
        object.__setattr__(self, "machines", tuple(self.machines))
        if len(set(self.jobs)) != len(self.jobs):
            raise InputError("duplicate job id")
        if len(set(self.machines)) != len(self.machines):
            raise InputError("duplicate machine id")
        jobs, machines = set(self.jobs), set(self.machines)
        clean = {}
        for (i, j), p in dict(self.proc).items():
            if p is FORBIDDEN or p is None:
                continue
            if i not in machines or j not in jobs:
                raise InputError(f"unknown pair ({i!r}, {j!r})")
            if isinstance(p, bool) or int(p) != p or p < 1:
                raise InputError(f"processing time of ({i!r}, {j!r}) must be a positive integer, got {p!r}")
            clean[(i, j)] = int(p)
        object.__setattr__(self, "proc", clean)
        if self.identical:
            for j in self.jobs:
                vals = {clean[(i, j)] for i in self.machines if (i, j) in clean}
                if len(vals) > 1:
                    raise InputError(f"job {j!r} has differing times but instance is marked identical")

    @property
    def n(self):
        return len(self.jobs)

    @property
    def m(self):
        return len(self.machines)

    @cached_property
    def job_index(self):
        return {j: k for k, j in enumerate(self.jobs)}

    @cached_property
    def machine_index(self):
        return {i: k for k, i in enumerate(self.machines)}

    @cached_property
    def P(self):
        """``(m, n)`` int64 matrix, ``-1`` where forbidden."""
        out = np.full((self.m, self.n), -1, dtype=np.int64)
        for (i, j), p in self.proc.items():
            out[self.machine_index[i], self.job_index[j]] = p
        out.setflags(write=False)
        return out

    @cached_property
    def machine_masks(self):
        """Per job index: bitset of admissible machine indices."""
        out = [0] * self.n
        for (i, j) in self.proc:
            out[self.job_index[j]] |= 1 << self.machine_index[i]
        return tuple(out)

    @cached_property
    def job_masks(self):
        """Per machine index: bitset of job indices it can process."""
        out = [0] * self.m
        for (i, j) in self.proc:
            out[self.machine_index[i]] |= 1 << self.job_index[j]
        return tuple(out)

    def p(self, machine, job):
        return self.proc.get((machine, job), FORBIDDEN)

    def size(self, job):
        """Job size ``p_j`` of a restricted-assignment instance."""
        vals = {self.proc[(i, job)] for i in self.machines if (i, job) in self.proc}
        if len(vals) != 1:
            raise InputError(f"job {job!r} has no single size")
        return vals.pop()

    @property
    def feasible(self):
        return all(self.machine_masks)

    def infeasible_jobs(self):
        return [self.jobs[k] for k, mk in enumerate(self.machine_masks) if not mk]

    def is_restricted_identical(self):
        for j in self.jobs:
            vals = {self.proc[(i, j)] for i in self.machines if (i, j) in self.proc}
            if len(vals) > 1:
                return False
        return True

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            set(self.jobs) == set(other.jobs)
            and set(self.machines) == set(other.machines)
            and self.proc == other.proc
            and self.identical == other.identical
        )

    def __hash__(self):
        return hash((frozenset(self.jobs), frozenset(self.machines), frozenset(self.proc.items())))

    def __repr__(self):
        return f"Instance(n={self.n}, m={self.m}, identical={self.identical})"

    def whole(self):
        return SubinstanceRef(self, frozenset(self.jobs), frozenset(self.machines))

    def canonical(self):
        return Instance(
            sorted(self.jobs, key=_id_key), sorted(self.machines, key=_id_key), self.proc, self.identical, self.scale
        )


def _id_key(x):
    return (str(type(x).__name__), str(x))


@dataclass(frozen=True)
class Schedule:
    """A total map job -> machine."""

    assignment: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "assignment", dict(self.assignment))

    def __getitem__(self, job):
        return self.assignment[job]

    def __len__(self):
        return len(self.assignment)

    def loads(self, inst):
        out = {i: 0 for i in inst.machines}
        for j, i in self.assignment.items():
            p = inst.p(i, j)
            if p is FORBIDDEN:
                raise InfeasibleError(f"job {j!r} assigned to forbidden machine {i!r}")
            out[i] += p
        return out

    def is_feasible(self, inst):
        if set(self.assignment) != set(inst.jobs):
            return False
        return all(inst.p(i, j) is not FORBIDDEN for j, i in self.assignment.items())


@dataclass(frozen=True)
class SubinstanceRef:
    """The subinstance I[J', M'] as a view on its parent."""

    parent: Instance
    jobs: frozenset
    machines: frozenset

    def __post_init__(self):
        object.__setattr__(self, "jobs", frozenset(self.jobs))
        object.__setattr__(self, "machines", frozenset(self.machines))
        if not self.jobs <= set(self.parent.jobs):
            raise InputError("job subset not contained in instance")
        if not self.machines <= set(self.parent.machines):
            raise InputError("machine subset not contained in instance")

    @property
    def job_list(self):
        return [j for j in self.parent.jobs if j in self.jobs]

    @property
    def machine_list(self):
        return [i for i in self.parent.machines if i in self.machines]

    def valid_machines(self, job):
        return valid_machines(self.parent, job) & self.machines

    def valid_jobs(self, machine):
        return valid_jobs(self.parent, machine) & self.jobs

    @property
    def feasible(self):
        return all(self.valid_machines(j) for j in self.jobs)

    def subinstance(self, jobs, machines):
        return SubinstanceRef(self.parent, self.jobs & frozenset(jobs), self.machines & frozenset(machines))

    def arrays(self):
        """``(job ids, machine ids, P)`` restricted to the view, parent order."""
        jl, ml = self.job_list, self.machine_list
        P = self.parent.P
        if jl and ml:
            sub = P[np.ix_([self.parent.machine_index[i] for i in ml], [self.parent.job_index[j] for j in jl])]
        else:
            sub = np.zeros((len(ml), len(jl)), dtype=np.int64)
        return jl, ml, np.ascontiguousarray(sub)

    def materialize(self):
        jl, ml = self.job_list, self.machine_list
        js, ms = set(jl), set(ml)
        proc = {(i, j): p for (i, j), p in self.parent.proc.items() if i in ms and j in js}
        return Instance(jl, ml, proc, self.parent.identical, self.parent.scale)


def as_view(x):
    if isinstance(x, SubinstanceRef):
        return x
    if isinstance(x, Instance):
        return x.whole()
    raise TypeError(f"expected Instance or SubinstanceRef, got {type(x).__name__}")


def subinstance(inst, jobs, machines):
    if isinstance(inst, SubinstanceRef):
        return inst.subinstance(jobs, machines)
    return SubinstanceRef(inst, frozenset(jobs), frozenset(machines))


def valid_machines(inst, job):
    """M(j), or the union over an iterable of jobs."""
    if isinstance(job, (set, frozenset, list, tuple)) and not _is_id(inst.job_index, job):
        return frozenset().union(*(valid_machines(inst, j) for j in job))
    if job not in inst.job_index:
        raise InputError(f"unknown job {job!r}")
    mask = inst.machine_masks[inst.job_index[job]]
    return frozenset(inst.machines[k] for k in _bits(mask))


def valid_jobs(inst, machine):
    """J(i), or the union over an iterable of machines."""
    if isinstance(machine, (set, frozenset, list, tuple)) and not _is_id(inst.machine_index, machine):
        return frozenset().union(*(valid_jobs(inst, i) for i in machine))
    if machine not in inst.machine_index:
        raise InputError(f"unknown machine {machine!r}")
    mask = inst.job_masks[inst.machine_index[machine]]
    return frozenset(inst.jobs[k] for k in _bits(mask))


def _is_id(index, x):
    try:
        return x in index
    except TypeError:
        return False


def _bits(mask):
    k = 0
    while mask:
        if mask & 1:
            yield k
        mask >>= 1
        k += 1


def bits(mask):
    return list(_bits(mask))


def makespan(inst, sched):
    """C_max of ``sched``; 0 for an empty job set."""
    view = as_view(inst)
    missing = view.jobs - set(sched.assignment)
    if missing:
        raise InputError(f"schedule misses jobs {sorted(map(str, missing))}")
    loads = {}
    for j in view.jobs:
        i = sched.assignment[j]
        if i not in view.machines or view.parent.p(i, j) is FORBIDDEN:
            raise InfeasibleError(f"job {j!r} assigned to machine {i!r} outside M(j)")
        loads[i] = loads.get(i, 0) + view.parent.p(i, j)
    return max(loads.values(), default=0)


# ---------------------------------------------------------------- JSON I/O


def _as_time(x):
    if isinstance(x, bool):
        raise InputError(f"bad processing time {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            return None
        return Fraction(str(x))
    if isinstance(x, str):
        if x.lower() in ("inf", "infinity", "forbidden"):
            return None
        try:
            return Fraction(x)
        except ValueError:
            raise InputError(f"bad processing time {x!r}") from None
    if x is None:
        return None
    raise InputError(f"bad processing time {x!r}")


def instance_from_dict(data):
    try:
        jobs = list(data["jobs"])
        machines = list(data["machines"])
        raw = data.get("proc", {})
    except (KeyError, TypeError) as exc:
        raise InputError(f"instance needs 'jobs' and 'machines': {exc}") from None
    jobs = [str(j) for j in jobs]
    machines = [str(i) for i in machines]
    if len(set(jobs)) != len(jobs):
        raise InputError("duplicate job id")
    if len(set(machines)) != len(machines):
        raise InputError("duplicate machine id")
    times = {}
    for i, row in raw.items():
        if not isinstance(row, Mapping):
            raise InputError(f"proc[{i!r}] must be an object")
        for j, v in row.items():
            t = _as_time(v)
            if t is None:
                continue
            if t <= 0:
                raise InputError(f"nonpositive processing time for ({i!r}, {j!r})")
            times[(str(i), str(j))] = t
    scale = reduce(math.lcm, (t.denominator for t in times.values()), 1)
    proc = {k: int(t * scale) for k, t in times.items()}
    return Instance(jobs, machines, proc, bool(data.get("identical", False)), scale)


def instance_to_dict(inst):
    c = inst.canonical()
    proc = {}
    for i in c.machines:
        row = {j: c.proc[(i, j)] for j in c.jobs if (i, j) in c.proc}
        if row:
            proc[i] = row
    out = {"jobs": list(c.jobs), "machines": list(c.machines), "proc": proc, "identical": bool(c.identical)}
    return out


def load_instance(path, format="json"):
    if format != "json":
        raise InputError(f"unsupported format {format!r}")
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: {exc}") from None
    return instance_from_dict(data)


def write_instance(inst, path):
    with open(path, "w") as fh:
        json.dump(instance_to_dict(inst), fh, indent=1, sort_keys=False)
        fh.write("\n")


def schedule_to_dict(sched):
    return {str(j): str(i) for j, i in sorted(sched.assignment.items(), key=lambda kv: str(kv[0]))}


def make_instance(times: Iterable, identical=False):
    """Build from rows ``times[i][j]`` (None = forbidden) with ids ``"m<i>"``/``"j<j>"``."""
    rows = [list(r) for r in times]
    m = len(rows)
    n = len(rows[0]) if rows else 0
    jobs = [f"j{k}" for k in range(n)]
    machines = [f"m{k}" for k in range(m)]
    proc = {(machines[a], jobs[b]): rows[a][b] for a in range(m) for b in range(n) if rows[a][b] is not None}
    return Instance(jobs, machines, proc, identical)


def restricted_instance(sizes, allowed, machines=None):
    """Restricted assignment from job sizes and per-job machine index sets."""
    m = machines if machines is not None else 1 + max((max(a) for a in allowed if a), default=-1)
    rows = [[None] * len(sizes) for _ in range(m)]
    for b, (p, a) in enumerate(zip(sizes, allowed)):
        for i in a:
            rows[i][b] = p
    return make_instance(rows, identical=True)
