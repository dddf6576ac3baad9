"""Command-line entry point tying generators, solvers, conversions and traces together.

Exit codes: 0 success (solve: target met), 1 target not met / verification
failed, 2 usage or data errors. All subcommands are deterministic for
identical arguments including --seed.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import core, gen, latin, oracle, proofkit, solver


class DataError(click.ClickException):
    exit_code = 2


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc


def _load_instance(path: str) -> core.Instance:
    inst = _instance_from_text(_read_text(path), path)
    violations = core.validate_instance(inst)
    if violations:
        raise DataError(
            f"invalid instance in {path}: " + "; ".join(str(v) for v in violations)
        )
    return inst


def _instance_from_text(text: str, label: str) -> core.Instance:
    try:
        return core.instance_from_json(text)
    except ValueError as exc:
        raise DataError(f"{label}: {exc}") from exc


@click.group()
def main() -> None:
    """Rainbow matching workbench for edge-coloured bipartite multigraphs."""


# --- gen -------------------------------------------------------------------------


@main.group("gen")
def gen_group() -> None:
    """Emit generated instances as Instance JSON."""


@gen_group.command("drisko")
@click.option("--n", "n", type=int, required=True, help="Matching size n (needs n >= 2).")
@click.option("-o", "--out", "out", default=None, help="Output file (default stdout).")
def gen_drisko_cmd(n: int, out: str | None) -> None:
    """Two bundles of n-1 size-n matchings on a 2n-cycle; optimum n-1."""
    try:
        inst = gen.gen_drisko(n)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    _write_text(out, core.instance_to_json(inst))


@gen_group.command("cyclic")
@click.option("--n", "n", type=int, required=True, help="Order of the cyclic square.")
@click.option("-o", "--out", "out", default=None, help="Output file (default stdout).")
def gen_cyclic_cmd(n: int, out: str | None) -> None:
    """Coloured-graph form of the cyclic Latin square of order n."""
    try:
        inst = latin.latin_to_instance(latin.gen_cyclic(n))
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    _write_text(out, core.instance_to_json(inst))


@gen_group.command("random")
@click.option("--n", "n", type=int, required=True, help="Number of colour classes.")
@click.option("--m", "m", type=int, required=True, help="Size of every class.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--a-size", type=int, default=None, help="A-universe size (default n + m).")
@click.option("--b-size", type=int, default=None, help="B-universe size (default n + m).")
@click.option("-o", "--out", "out", default=None, help="Output file (default stdout).")
def gen_random_cmd(
    n: int, m: int, seed: int, a_size: int | None, b_size: int | None, out: str | None
) -> None:
    """n independent uniform random matchings of size m."""
    try:
        inst = gen.gen_random_instance(n, m, a_size, b_size, seed)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    _write_text(out, core.instance_to_json(inst))


# --- solve -----------------------------------------------------------------------


@main.command("solve")
@click.option("--in", "in_path", required=True, help="Instance JSON file (- for stdin).")
@click.option("--target", type=int, required=True, help="Rainbow matching size to reach.")
@click.option("--budget-nodes", type=int, default=100000, show_default=True)
@click.option("--budget-seconds", type=float, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--oracle-fallback/--no-oracle-fallback", default=False, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True, help="Oracle workers.")
@click.pass_context
def solve_cmd(
    ctx: click.Context,
    in_path: str,
    target: int,
    budget_nodes: int,
    budget_seconds: float | None,
    seed: int,
    oracle_fallback: bool,
    workers: int,
) -> None:
    """Greedy + augmentation (+ optional exact oracle); exit 0 iff target met."""
    inst = _load_instance(in_path)
    if target > inst.n_colours:
        raise DataError(f"target {target} exceeds n_colours {inst.n_colours}")
    budget = oracle.SearchBudget(budget_nodes, budget_seconds)
    result = solver.solve(
        inst, target, budget, seed=seed, oracle_fallback=oracle_fallback, workers=workers
    )
    payload = {
        "size": len(result.matching),
        "method": result.method,
        "augment_steps": result.augment_steps,
        "certified_optimal": result.certified_optimal,
        "matching": [list(ce.triple) for ce in result.matching.sorted_edges()],
    }
    click.echo(json.dumps(payload, indent=2))
    ctx.exit(0 if len(result.matching) >= target else 1)


# --- experiment ------------------------------------------------------------------


def _emit_experiment(report: oracle.SweepReport, fmt: str, out: str | None, witness_dir: str) -> None:
    if report.counterexample is not None:
        name = (
            f"counterexample_n{report.n}_m{report.m}_ell{report.ell}"
            f"_{report.mode}_seed{report.seed}.json"
        )
        path = Path(witness_dir) / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(core.instance_to_json(report.counterexample))
        click.echo(f"counterexample written to {path}", err=True)
    if fmt == "csv":
        _write_text(out, oracle.reports_to_csv([report]))
    else:
        payload = {
            "n": report.n,
            "m": report.m,
            "ell": report.ell,
            "mode": report.mode,
            "trials": report.trials,
            "seed": report.seed,
            "counterexample_found": report.counterexample_found,
            "instances_checked": report.instances_checked,
            "elapsed_ms": report.elapsed_ms,
        }
        _write_text(out, json.dumps(payload, indent=2) + "\n")


@main.group("experiment")
def experiment_group() -> None:
    """Empirical threshold sweeps; exit 0 on any completed run."""


@experiment_group.command("f")
@click.option("--n", "n", type=int, required=True)
@click.option("--m", "m", type=int, required=True)
@click.option("--mode", type=click.Choice(["exhaustive", "randomized"]), required=True)
@click.option("--trials", type=int, default=0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("-o", "--out", "out", default=None, help="Output file (default stdout).")
@click.option("--witness-dir", default=".", show_default=True, help="Where counterexamples are dumped.")
def experiment_f_cmd(n, m, mode, trials, seed, fmt, out, witness_dir) -> None:
    """Probe whether n classes of size m force a rainbow matching of size n."""
    try:
        report = oracle.estimate_f(n, m, mode, trials, seed)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    _emit_experiment(report, fmt, out, witness_dir)


@experiment_group.command("mu")
@click.option("--n", "n", type=int, required=True)
@click.option("--ell", type=int, required=True)
@click.option("--m", "m", type=int, required=True)
@click.option("--mode", type=click.Choice(["exhaustive", "randomized"]), required=True)
@click.option("--trials", type=int, default=0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("-o", "--out", "out", default=None, help="Output file (default stdout).")
@click.option("--witness-dir", default=".", show_default=True, help="Where counterexamples are dumped.")
def experiment_mu_cmd(n, ell, m, mode, trials, seed, fmt, out, witness_dir) -> None:
    """Probe whether n classes of size m force a rainbow matching of size n - ell."""
    try:
        report = oracle.estimate_mu(n, ell, m, mode, trials, seed)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    _emit_experiment(report, fmt, out, witness_dir)


# --- verify-trace ----------------------------------------------------------------


@main.command("verify-trace")
@click.option("--in", "in_path", required=True, help="Trace JSON file (- for stdin).")
@click.pass_context
def verify_trace_cmd(ctx: click.Context, in_path: str) -> None:
    """Re-check every state snapshot and augmented matching of a recorded trace."""
    text = _read_text(in_path)
    try:
        failures = proofkit.verify_trace_json(text)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    if failures:
        for line in failures:
            click.echo(line, err=True)
        ctx.exit(1)
    click.echo("trace ok")


# --- convert ---------------------------------------------------------------------


@main.group("convert")
def convert_group() -> None:
    """Conversions between Latin square text, Instance JSON and matchings."""


def _load_square(path: str) -> latin.LatinSquare:
    try:
        ls = latin.parse_latin_text(_read_text(path))
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    violations = latin.validate_latin(ls)
    if violations:
        raise DataError(f"invalid Latin square in {path}: " + "; ".join(str(v) for v in violations))
    return ls


@convert_group.command("latin-to-instance")
@click.option("--in", "in_path", required=True, help="Latin square text file (- for stdin).")
@click.option("-o", "--out", "out", default=None, help="Output file (default stdout).")
def latin_to_instance_cmd(in_path: str, out: str | None) -> None:
    ls = _load_square(in_path)
    _write_text(out, core.instance_to_json(latin.latin_to_instance(ls)))


@convert_group.command("instance-to-latin")
@click.option("--in", "in_path", required=True, help="Instance JSON file (- for stdin).")
@click.option("-o", "--out", "out", default=None, help="Output file (default stdout).")
def instance_to_latin_cmd(in_path: str, out: str | None) -> None:
    inst = _load_instance(in_path)
    try:
        ls = latin.instance_to_latin(inst)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    _write_text(out, latin.format_latin_text(ls))


@convert_group.command("rainbow-to-transversal")
@click.option("--square", "square_path", required=True, help="Latin square text file.")
@click.option("--in", "in_path", required=True, help="Rainbow matching JSON (- for stdin).")
@click.option("-o", "--out", "out", default=None, help="Output file (default stdout).")
def rainbow_to_transversal_cmd(square_path: str, in_path: str, out: str | None) -> None:
    ls = _load_square(square_path)
    try:
        matching = core.matching_from_json(_read_text(in_path))
        t = latin.rainbow_to_transversal(ls, matching)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    _write_text(out, json.dumps([list(e) for e in t.sorted_entries()]) + "\n")


@convert_group.command("transversal-to-rainbow")
@click.option("--square", "square_path", required=True, help="Latin square text file.")
@click.option("--in", "in_path", required=True, help="Transversal JSON (- for stdin).")
@click.option("-o", "--out", "out", default=None, help="Output file (default stdout).")
def transversal_to_rainbow_cmd(square_path: str, in_path: str, out: str | None) -> None:
    ls = _load_square(square_path)
    try:
        entries = json.loads(_read_text(in_path))
        t = latin.PartialTransversal(frozenset((int(r), int(c)) for r, c in entries))
        matching = latin.transversal_to_rainbow(ls, t)
    except (ValueError, TypeError) as exc:
        raise DataError(str(exc)) from exc
    _write_text(out, core.matching_to_json(matching))


if __name__ == "__main__":
    main()
