"""Command line interface.

Exit codes: 0 success (or pass), 1 bounded-pass from ``verify``, 2 parse
error, 3 degenerate input, 4 budget exhausted, 5 torsion, 6 failed check.
"""

from __future__ import annotations

import json
import os
import sys

import click

from . import cylinders as C
from . import formats as F
from . import gog as G
from . import lattices as lat
from . import oracle as O

EXIT_PARSE, EXIT_DEGENERATE, EXIT_BUDGET, EXIT_TORSION, EXIT_FAIL = 2, 3, 4, 5, 6


def _fail(code: int, msg: str):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load(path: str, parser):
    try:
        return parser(_read(path))
    except F.FormatError as exc:
        _fail(EXIT_PARSE, f"{path}:{exc}")


def _write(path, text: str):
    if path in (None, "-"):
        click.echo(text, nl=False)
    else:
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _matrix(text: str):
    """Rows separated by ';' or newlines; a path to a file is also accepted."""
    if os.path.exists(text):
        text = _read(text)
    rows = [r.replace(",", " ").split() for r in text.replace(";", "\n").splitlines()]
    rows = [r for r in rows if r]
    try:
        out = [[int(x) for x in r] for r in rows]
    except ValueError:
        raise F.FormatError(f"not an integer matrix: {text!r}") from None
    if not out or len({len(r) for r in out}) != 1:
        raise F.FormatError("matrix rows must be nonempty and of equal length")
    return lat.LatticeMap.of(out)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def main():
    """Decompositions, expansions and effective pairs over free groups."""


@main.command()
@click.option("--i1", required=True, help="Matrix of C -> A1 (rows split by ';', or a file).")
@click.option("--i2", required=True, help="Matrix of C -> A2 (rows split by ';', or a file).")
def pushout(i1, i2):
    """Pushout of two injections of a free abelian group."""
    try:
        m1, m2 = _matrix(i1), _matrix(i2)
    except F.FormatError as exc:
        _fail(EXIT_PARSE, str(exc))
    try:
        m, j1, j2 = lat.pushout_free_abelian(m1, m2)
    except ValueError as exc:
        _fail(EXIT_DEGENERATE, str(exc))
    click.echo(_dump({"rank": m.rank, "legs": {"j1": j1.as_list(), "j2": j2.as_list()}}), nl=False)


@main.command()
@click.argument("gog_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("pres_file", required=False, type=click.Path(exists=True, dir_okay=False))
@click.option("--budget", default=1000, show_default=True, help="Search budget per local query.")
@click.option("--out", default="-", show_default=True, help="Where to write the collapsed decomposition.")
@click.option("--partition", default=None, help="Where to write the partition JSON (default: stdout, or stderr when the .gog goes to stdout).")
def cylinders(gog_file, pres_file, budget, out, partition):
    """Collapsed tree of cylinders of a decomposition."""
    lam = _load(gog_file, F.parse_gog)
    o = _load(pres_file, F.parse_pres) if pres_file else None
    try:
        res, part = C.tree_of_cylinders(lam, o, budget)
    except O.BudgetExhausted as exc:
        _fail(EXIT_BUDGET, str(exc))
    except (O.UnsupportedQuery, G.GogError, C.CylinderError) as exc:
        _fail(EXIT_DEGENERATE, str(exc))
    _write(out, F.emit_gog(res))
    text = _dump(part.to_json(lam.alphabet()))
    if partition is None and out not in (None, "-"):
        click.echo(text, nl=False)
    elif partition is not None:
        _write(partition, text)
    else:
        click.echo(text, nl=False, err=True)


@main.command()
@click.argument("gog_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("pres_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("map_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--budget", default=2000, show_default=True, help="Budget for enclosure and conjugacy searches.")
@click.option("--radius", default=4, show_default=True, help="Ball radius for the bounded embedding check.")
@click.option("--out", default="-", show_default=True, help="Where to write the expanded decomposition.")
@click.option("--sidecar", default=None, help="Where to write the JSON sidecar (default: stderr).")
def expand(gog_file, pres_file, map_file, budget, radius, out, sidecar):
    """Expand a decomposition along a strict map to a free group."""
    from . import expansion as X

    d = _load(gog_file, F.parse_gog)
    m = _load(pres_file, F.parse_pres)
    try:
        rho = F.load_map(_read(map_file), d, m)
    except F.FormatError as exc:
        _fail(EXIT_PARSE, f"{map_file}:{exc}")
    except G.GogError as exc:
        _fail(EXIT_FAIL, f"{map_file}: {exc}")
    try:
        x = X.expand(d, rho, budget=budget)
    except lat.TorsionError as exc:
        _fail(EXIT_TORSION, f"torsion, elementary divisors {list(exc.divisors)}")
    except O.BudgetExhausted as exc:
        _fail(EXIT_BUDGET, str(exc))
    except (O.UnsupportedQuery, X.ExpansionError, G.GogError) as exc:
        _fail(EXIT_FAIL, str(exc))
    v = X.verify_embedding(x, radius)
    report = x.to_json()
    report["verify_embedding"] = v.to_json()
    _write(out, F.emit_gog(x.result))
    if sidecar:
        _write(sidecar, _dump(report))
    else:
        click.echo(_dump(report), nl=False, err=True)
    if v.verdict == "fail":
        sys.exit(EXIT_FAIL)


@main.command("enumerate")
@click.argument("pres_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--budget", default=10_000, show_default=True, help="Work units to spend (on top of a resumed state).")
@click.option("--radius", default=4, show_default=True, help="Verification radius for every emitted pair.")
@click.option("--resume", "resume", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Checkpoint file to continue from.")
@click.option("--checkpoint", default=None, help="Where to keep the engine state (default: the --resume file).")
def enumerate_cmd(pres_file, budget, radius, resume, checkpoint):
    """Stream effective pairs as NDJSON on stdout."""
    from . import resolve as R

    gamma = _load(pres_file, F.parse_pres)
    state = json.loads(_read(resume)) if resume else None
    checkpoint = checkpoint or resume
    eng = R.Enumerator(gamma, radius)
    skip, total = 0, budget
    if state:
        skip = int(state.get("emitted", 0))
        total = int(state.get("budget_consumed", 0)) + budget

    def save():
        if checkpoint:
            _write(checkpoint, _dump(eng.state()))

    try:
        for pair in eng.run(total, skip):
            sys.stdout.write(pair.dumps() + "\n")
            sys.stdout.flush()
            save()
    except KeyboardInterrupt:
        save()
        click.echo("interrupted; state saved" if checkpoint else "interrupted", err=True)
        sys.exit(130)
    except O.UnsupportedQuery as exc:
        _fail(EXIT_DEGENERATE, str(exc))
    save()


@main.command()
@click.argument("pair_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--radius", default=4, show_default=True, help="Ball radius for bounded checks.")
def verify(pair_file, radius):
    """Check an effective pair (one JSON document, or the first line of a stream)."""
    from . import resolve as R

    text = _read(pair_file).strip()
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        try:
            data = json.loads(text.splitlines()[0])
        except (json.JSONDecodeError, IndexError) as exc:
            _fail(EXIT_PARSE, f"{pair_file}: {exc}")
    try:
        pair = R.EffectivePair.from_json(data)
    except (KeyError, ValueError, F.FormatError) as exc:
        _fail(EXIT_PARSE, f"{pair_file}: {exc}")
    rep = R.verify_pair(pair, radius)
    click.echo(_dump(rep.to_json()), nl=False)
    sys.exit({"pass": 0, "bounded-pass": 1}.get(rep.verdict, EXIT_FAIL))


if __name__ == "__main__":
    main()
