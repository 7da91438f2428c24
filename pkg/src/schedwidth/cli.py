"""Command line entry point.

Exit codes: 0 success, 1 infeasible, 2 resource limit, 3 input error,
4 cross-validation mismatch (``bench``).
"""

from __future__ import annotations

import json
import sys
from fractions import Fraction

import click

from .core import (
    InfeasibleError,
    InputError,
    ResourceError,
    Schedule,
    load_instance,
    instance_to_dict,
    makespan,
    schedule_to_dict,
)

ALGOS = (
    "brute", "machine-dp", "load-dp", "tw-primal", "tw-dual", "tw-incidence", "fptas-m", "fptas-tw", "ptas-rw",
)
EXIT_INFEASIBLE, EXIT_RESOURCE, EXIT_INPUT, EXIT_MISMATCH = 1, 2, 3, 4


def _time(x, scale):
    v = Fraction(x) / scale
    return int(v) if v.denominator == 1 else str(v)


def _emit(obj, out):
    text = json.dumps(obj, indent=1)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        click.echo(text)


def _decomp(inst, kind, path):
    from .decomp import load_decomposition
    from .graphs import build_graph

    if path is None:
        return None
    return load_decomposition(build_graph(inst, kind), path)


def run_algorithm(inst, algo, eps=None, decomp=None, kind="dual", budget=10**7):
    """``(value, schedule)`` of one named algorithm; ``decomp`` is a file path or None."""
    from . import dp_basic, dp_treewidth, harness
    from .ptas import ptas

    needs_eps = algo in ("fptas-m", "fptas-tw", "ptas-rw")
    if needs_eps and eps is None:
        raise InputError(f"{algo} needs --eps")
    if algo == "brute":
        return harness.brute_force(inst, budget=budget)
    if algo == "machine-dp":
        return dp_basic.solve_machine_dp(inst)
    if algo == "load-dp":
        return dp_basic.solve_load_dp(inst)
    if algo == "tw-primal":
        return dp_treewidth.solve_primal(inst, _decomp(inst, "primal", decomp))
    if algo == "tw-dual":
        return dp_treewidth.solve_dual(inst, _decomp(inst, "dual", decomp))
    if algo == "tw-incidence":
        return dp_treewidth.solve_incidence(inst, _decomp(inst, "incidence", decomp))
    if algo == "fptas-m":
        return dp_basic.fptas_fixed_m(inst, eps)
    if algo == "fptas-tw":
        return dp_treewidth.fptas_treewidth(inst, _decomp(inst, kind, decomp), kind, eps)
    if algo == "ptas-rw":
        return ptas(inst, eps, _decomp(inst, "incidence", decomp))
    raise InputError(f"unknown algorithm {algo!r}")


@click.group()
def cli():
    """Makespan solvers parameterised by restriction-graph width."""


@cli.command()
@click.argument("instance", type=click.Path(dir_okay=False))
@click.option("--algo", type=click.Choice(ALGOS), default="brute", show_default=True)
@click.option("--eps", type=str, default=None, help="Accuracy for fptas-m, fptas-tw and ptas-rw.")
@click.option("--decomp", "decomp", type=click.Path(dir_okay=False), default=None,
              help="Tree (tw-*, fptas-tw) or branch (ptas-rw) decomposition JSON.")
@click.option("--kind", type=click.Choice(["dual", "incidence"]), default="dual", show_default=True,
              help="Graph used by fptas-tw.")
@click.option("--budget", type=int, default=10**7, show_default=True, help="Brute-force assignment budget.")
@click.option("-o", "--out", type=click.Path(dir_okay=False), default=None)
def solve(instance, algo, eps, decomp, kind, budget, out):
    """Solve INSTANCE (JSON) and print the makespan and schedule."""
    inst = load_instance(instance)
    e = Fraction(eps) if eps is not None else None
    if e is not None and e <= 0:
        raise InputError("eps must be positive")
    val, sched = run_algorithm(inst, algo, e, decomp, kind, budget)
    if makespan(inst, sched) != val:
        raise RuntimeError("schedule does not realise the reported value")
    _emit({"algorithm": algo, "value": _time(val, inst.scale), "schedule": schedule_to_dict(sched)}, out)


@cli.command()
@click.option("--class", "cls", required=True)
@click.option("-n", "--jobs", "n", type=int, default=6, show_default=True)
@click.option("-m", "--machines", "m", type=int, default=3, show_default=True)
@click.option("--pmin", type=int, default=1, show_default=True)
@click.option("--pmax", type=int, default=9, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--density", type=float, default=0.5, show_default=True)
@click.option("--identical/--unrelated", default=None, help="Restricted assignment or unrelated times.")
@click.option("--sizes", default=None, help="Comma separated pool of job sizes.")
@click.option("-o", "--out", type=click.Path(dir_okay=False), default=None)
def gen(cls, n, m, pmin, pmax, seed, density, identical, sizes, out):
    """Generate a seeded instance of a structured class."""
    from .harness import GeneratorSpec, generate

    pool = None
    if sizes:
        try:
            pool = tuple(int(x) for x in sizes.split(","))
        except ValueError:
            raise InputError(f"bad --sizes {sizes!r}") from None
    spec = GeneratorSpec(cls, n, m, pmin, pmax, seed, density, identical, pool)
    _emit(instance_to_dict(generate(spec)), out)


@cli.command()
@click.argument("instance", type=click.Path(dir_okay=False))
@click.option("--kind", type=click.Choice(["primal", "dual", "incidence"]), default="incidence", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["stats", "json", "dot"]), default="stats", show_default=True)
@click.option("-o", "--out", type=click.Path(dir_okay=False), default=None)
def graph(instance, kind, fmt, out):
    """Export a restriction graph or print its statistics."""
    from .graphs import build_graph, graph_stats

    inst = load_instance(instance)
    if fmt == "stats":
        _emit(graph_stats(inst), out)
        return
    G = build_graph(inst, kind)
    if fmt == "dot":
        text = G.to_dot()
        if out:
            with open(out, "w") as fh:
                fh.write(text)
        else:
            click.echo(text, nl=False)
        return
    _emit({"kind": kind, "vertices": G.labels, "edges": [[G.labels[u], G.labels[v]] for u, v in G.edges()]}, out)


@cli.group()
def decomp():
    """Build or validate decompositions."""


@decomp.command("build")
@click.argument("instance", type=click.Path(dir_okay=False))
@click.option("--kind", type=click.Choice(["primal", "dual", "incidence"]), default="incidence", show_default=True)
@click.option("--method", type=click.Choice(["min_fill", "min_degree", "exact", "bicograph", "caterpillar"]),
              default="min_fill", show_default=True,
              help="Tree decomposition heuristics/exact, or branch decompositions (incidence graph).")
@click.option("-o", "--out", type=click.Path(dir_okay=False), default=None)
def decomp_build(instance, kind, method, out):
    from . import decomp as D
    from .graphs import build_graph

    inst = load_instance(instance)
    if method in ("bicograph", "caterpillar"):
        G = build_graph(inst, "incidence")
        if method == "caterpillar":
            bd = D.caterpillar_branch_decomposition(G)
        else:
            from .ptas import branch_decomposition_for

            bd = branch_decomposition_for(inst)
        data = D.bd_to_dict(G, bd)
        data["rankwidth"] = D.validate_branch_decomposition(G, bd).rankwidth
        _emit(data, out)
        return
    G = build_graph(inst, kind)
    if method == "exact":
        _, td = D.exact_treewidth(G)
    else:
        td = D.heuristic_tree_decomposition(G, method)
    data = D.td_to_dict(G, td)
    data["width"] = td.width
    _emit(data, out)


@decomp.command("validate")
@click.argument("instance", type=click.Path(dir_okay=False))
@click.argument("decomposition", type=click.Path(dir_okay=False))
@click.option("--kind", type=click.Choice(["primal", "dual", "incidence"]), default="incidence", show_default=True)
def decomp_validate(instance, decomposition, kind):
    """Check a tree or branch decomposition against the instance's graph."""
    from . import decomp as D
    from .graphs import build_graph

    inst = load_instance(instance)
    G = build_graph(inst, kind)
    dec = D.load_decomposition(G, decomposition)
    if isinstance(dec, D.BranchDecomposition):
        res = D.validate_branch_decomposition(G, dec)
        _emit({"ok": res.ok, "rankwidth": res.rankwidth, "message": res.message}, None)
    else:
        res = D.validate_tree_decomposition(G, dec)
        _emit({"ok": res.ok, "width": dec.width if res.ok else None, "condition": res.condition,
               "witness": res.witness, "message": res.message}, None)
    if not res.ok:
        raise InputError("decomposition is invalid")


@cli.command()
@click.option("--count", type=int, default=100, show_default=True)
@click.option("--n-max", type=int, default=6, show_default=True)
@click.option("--m-max", type=int, default=3, show_default=True)
@click.option("--seed", type=int, default=1, show_default=True, help="First corpus seed.")
@click.option("--eps", "eps", multiple=True, help="FPTAS accuracy (repeatable).")
@click.option("--ptas-eps", "ptas_eps", multiple=True, help="PTAS accuracy (repeatable).")
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--dump-dir", type=click.Path(file_okay=False), default=None)
@click.option("-o", "--out", type=click.Path(dir_okay=False), default=None, help="JSON lines report.")
def bench(count, n_max, m_max, seed, eps, ptas_eps, workers, dump_dir, out):
    """Cross-validate every solver against the oracle on a seeded corpus."""
    from .harness import cross_validate, default_corpus

    corpus = default_corpus(count, n_max, m_max, seed)
    report = cross_validate(
        corpus, [Fraction(e) for e in eps], [Fraction(e) for e in ptas_eps], out, dump_dir, workers=workers,
    )
    worst = max((r.ratio for r in report.records if r.ratio is not None and r.bound is not None), default=None)
    click.echo(json.dumps({
        "instances": len(corpus), "records": len(report.records), "failures": len(report.failures),
        "worst_ratio": worst, "seconds": round(sum(r.seconds for r in report.records), 3),
    }))
    for rec in report.failures:
        click.echo(f"FAIL {rec.instance} {rec.algorithm}: {rec.error}", err=True)
    return 0 if report.ok else EXIT_MISMATCH


@cli.command()
@click.argument("instance", type=click.Path(dir_okay=False))
@click.option("--schedule", "schedule", type=click.Path(dir_okay=False), default=None,
              help="Schedule JSON (job -> machine) to check.")
@click.option("--class", "cls", default=None, help="Restriction class to verify.")
def validate(instance, schedule, cls):
    """Check an instance (diagnostics), optionally a schedule and a class membership."""
    from .harness import diagnostics, verify_class

    inst = load_instance(instance)
    out = {"n": inst.n, "m": inst.m, "feasible": inst.feasible, "restricted": inst.is_restricted_identical()}
    ok = inst.feasible
    if inst.n + inst.m <= 24:
        diag = diagnostics(inst)
        out["diagnostics"] = diag
        ok = ok and all(diag["checks"].values())
    if cls:
        v = verify_class(inst, cls)
        out["class"] = {"ok": v.ok, "witness": v.witness, "message": v.message}
        ok = ok and v.ok
    if schedule:
        with open(schedule) as fh:
            raw = json.load(fh)
        raw = raw.get("schedule", raw)
        sched = Schedule({str(j): str(i) for j, i in raw.items()})
        good = sched.is_feasible(inst)
        out["schedule"] = {"feasible": good, "makespan": _time(makespan(inst, sched), inst.scale) if good else None}
        ok = ok and good
    out["ok"] = bool(ok)
    click.echo(json.dumps(out, indent=1, default=str))
    if not ok:
        raise InputError("validation failed")


def main(argv=None):
    try:
        rv = cli.main(args=argv, prog_name="schedwidth", standalone_mode=False)
    except InfeasibleError as exc:
        click.echo(f"infeasible: {exc}", err=True)
        return _exit(EXIT_INFEASIBLE)
    except ResourceError as exc:
        click.echo(f"resource limit: {exc}", err=True)
        return _exit(EXIT_RESOURCE)
    except (InputError, click.UsageError, click.BadParameter, OSError, json.JSONDecodeError) as exc:
        msg = exc.format_message() if isinstance(exc, click.ClickException) else str(exc)
        click.echo(f"input error: {msg}", err=True)
        return _exit(EXIT_INPUT)
    except click.exceptions.Abort:
        return _exit(EXIT_INPUT)
    return _exit(rv if isinstance(rv, int) else 0)


def _exit(code):
    sys.exit(code)


if __name__ == "__main__":
    main()
