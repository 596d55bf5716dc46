"""Command line entry point: ``lpcns run|verify|resume|inspect``.

Config keys can be overridden with ``--section.key=value`` (or
``--section.key value``) after the verb.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

from .config import ConfigError, build_config, parse_config, resolve_key
from .harness import (
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_OK,
    EXIT_PROPERTY,
    checkpoint_manifest,
    resume_simulation,
    run_simulation,
)
from .littlewood_paley import get_bank, shell_norms, shell_spectrum_csv
from .snapshot import SnapshotError, read_header, read_snapshot
from .spectral import to_spectral
from .verify import report_json, verify_suite

log = logging.getLogger("lpcns")


def split_overrides(extra: list[str]) -> dict[str, str]:
    """``["--grid.dim=3", "--dt", "0.01"]`` -> ``{"grid.dim": "3", "dt": "0.01"}``."""
    out: dict[str, str] = {}
    i = 0
    while i < len(extra):
        arg = extra[i]
        if not arg.startswith("--"):
            raise ConfigError(f"unexpected argument {arg!r}")
        body = arg[2:]
        if "=" in body:
            key, value = body.split("=", 1)
        else:
            if i + 1 >= len(extra):
                raise ConfigError(f"missing value for {arg}")
            key, value = body, extra[i + 1]
            i += 1
        out[resolve_key(key)] = value
        i += 1
    return out


def _extract_overrides(argv: list[str], parser: argparse.ArgumentParser) -> tuple[list[str], list[str]]:
    """Separate ``--key[=value]`` config overrides from the verb's own options.

    Done before argparse sees the list, so ``--output.dir out`` does not hand
    ``out`` to a positional argument.
    """
    verbs = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction)).choices
    verb = next((a for a in argv if a in verbs), None)
    own = set(parser._option_string_actions)
    if verb is not None:
        own |= set(verbs[verb]._option_string_actions)
    keep: list[str] = []
    extra: list[str] = []
    i = 0
    while i < len(argv):
        arg = argv[i]
        if arg.startswith("--") and arg.split("=", 1)[0] not in own:
            extra.append(arg)
            if "=" not in arg and i + 1 < len(argv):
                extra.append(argv[i + 1])
                i += 1
        else:
            keep.append(arg)
        i += 1
    return keep, extra


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lpcns", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="verb", required=True)

    r = sub.add_parser("run", help="integrate a configured run")
    r.add_argument("config", nargs="?", help="config file (defaults apply when omitted)")

    v = sub.add_parser("verify", help="run the property suite and print a JSON report")
    v.add_argument("--n", type=int, default=32, help="grid points per axis (default 32)")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--break-dealias", action="store_true",
                   help="debug: disable dealiasing in the integrator")
    v.add_argument("--report", help="also write the report to this file")

    rs = sub.add_parser("resume", help="continue a run from a checkpoint directory")
    rs.add_argument("checkpoint")
    rs.add_argument("config", nargs="?", help="config file; otherwise rebuilt from the manifest")

    i = sub.add_parser("inspect", help="print snapshot metadata and shell spectrum")
    i.add_argument("path", help="a .snap file or a checkpoint directory")
    i.add_argument("--r", type=float, default=3.2, help="exponent for the lr_norm column")
    return ap


def _load_config(path: str | None, overrides: dict[str, str]):
    if path is None:
        return build_config(overrides)
    return parse_config(path, overrides)


def _report_run(rep) -> int:
    print(f"status = {rep.status}")
    print(f"steps = {rep.steps}")
    print(f"t_final = {rep.t_final!r}")
    print(f"diagnostics = {rep.csv_path}")
    print(f"summary = {rep.summary_path}")
    if rep.message:
        print(f"message = {rep.message}", file=sys.stderr)
    return rep.exit_code


def cmd_run(args, overrides) -> int:
    cfg = _load_config(args.config, overrides)
    return _report_run(run_simulation(cfg))


def cmd_resume(args, overrides) -> int:
    if args.config is None:
        man = checkpoint_manifest(args.checkpoint)
        base = {"grid.dim": man["dim"], "grid.n_per_axis": man["n_per_axis"],
                "model.chi": man["chi"], "model.grav": man["grav"]}
        if man.get("dt", "none") != "none":
            base["integrator.dt"] = man["dt"]
        base.update(overrides)
        cfg = build_config(base)
    else:
        cfg = parse_config(args.config, overrides)
    return _report_run(resume_simulation(cfg, args.checkpoint))


def cmd_verify(args, overrides) -> int:
    if overrides:
        raise ConfigError("verify takes no config overrides")
    report = verify_suite(args.n, args.seed, args.break_dealias)
    text = report_json(report)
    sys.stdout.write(text)
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    return EXIT_OK if report["passed"] else EXIT_PROPERTY


def _inspect_snapshot(path: Path, r: float) -> None:
    head = read_header(path)
    for k, v in head.items():
        print(f"# {k} = {v}")
    field, _ = read_snapshot(path)
    F = to_spectral(field)
    print(shell_spectrum_csv(shell_norms(F, get_bank(F.grid), r=r)), end="")


def cmd_inspect(args, overrides) -> int:
    if overrides:
        raise ConfigError("inspect takes no config overrides")
    p = Path(args.path)
    if p.is_dir():
        for k, v in checkpoint_manifest(p).items():
            print(f"{k} = {v}")
        for name in ("n", "c", "u"):
            print(f"\n[{name}]")
            _inspect_snapshot(p / f"{name}.snap", args.r)
    else:
        _inspect_snapshot(p, args.r)
    return EXIT_OK


_COMMANDS = {"run": cmd_run, "resume": cmd_resume, "verify": cmd_verify, "inspect": cmd_inspect}


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    keep, extra = _extract_overrides(argv, parser)
    args = parser.parse_args(keep)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    warnings.simplefilter("default")
    try:
        overrides = split_overrides(extra)
        return _COMMANDS[args.verb](args, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SnapshotError as exc:
        print(f"snapshot error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

