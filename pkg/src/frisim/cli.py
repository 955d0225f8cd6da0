"""Command-line entry point: ``frisim run | sweep | fit | sop | selftest``."""

from __future__ import annotations

import argparse
import csv
import io
import sys
import warnings
from pathlib import Path

import numpy as np

from . import harness, secrecy, selftest
from .errors import ConfigError, DomainError, FeasibilityError, NumericError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_FEASIBILITY = 4


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_run(args) -> int:
    overrides = {"mc.seed": str(args.seed)} if args.seed is not None else {}
    cfg = harness.load_config(args.config, overrides)
    res = harness.run_scenario(cfg)
    _emit(res.to_csv(extended=args.extended), args.out)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("--values is empty")
    base = harness.parse_text(Path(args.config).read_text()) if Path(args.config).exists() else None
    if base is None:
        raise ConfigError(f"cannot read config {args.config}")
    if args.seed is not None:
        base["mc.seed"] = str(args.seed)
    header = None
    buf = io.StringIO()
    for v in values:
        cfg = harness.with_override(base, args.param, v)
        lines = harness.run_scenario(cfg).to_csv(extended=args.extended).splitlines()
        if header is None:
            header = f"{args.param},{lines[0]}"
            buf.write(header + "\n")
        for line in lines[1:]:
            buf.write(f"{v},{line}\n")
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _read_samples(path: str) -> dict[str, np.ndarray]:
    """Columns of magnitudes; the first row is a header unless it is numeric."""
    try:
        rows = [r for r in csv.reader(Path(path).read_text().splitlines()) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise ConfigError(f"cannot read samples {path}: {exc}") from exc
    if not rows:
        raise ConfigError("samples file is empty")
    try:
        [float(c) for c in rows[0]]
        names = [f"col{i}" for i in range(len(rows[0]))]
    except ValueError:
        names, rows = [c.strip() for c in rows[0]], rows[1:]
    cols: dict[str, list[float]] = {n: [] for n in names}
    for lineno, r in enumerate(rows, 2):
        if len(r) != len(names):
            raise ConfigError(f"samples row {lineno} has {len(r)} fields, expected {len(names)}")
        for n, c in zip(names, r):
            if c.strip():
                try:
                    cols[n].append(float(c))
                except ValueError:
                    raise ConfigError(f"samples row {lineno}: not a number {c!r}") from None
    return {n: np.array(v) for n, v in cols.items()}


def _cmd_fit(args) -> int:
    cols = _read_samples(args.samples)
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["link", "m", "omega", "k", "theta"])
    for name, x in cols.items():
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            fit = secrecy.fit_mle(x)
        g = fit.gamma_params()
        wr.writerow([name, repr(fit.m), repr(fit.omega), repr(g.k), repr(g.theta)])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _cmd_sop(args) -> int:
    params = secrecy.SecrecyParams(args.rs, args.rho)
    closed = secrecy.sop_closed_form(args.kb, params)
    lines = [f"sop_closed = {closed!r}"]
    if args.ke is not None:
        # rho is the ratio of the Gamma scales: Bob 1, Eve rho
        pb = secrecy.GammaParams(args.kb, 1.0)
        pe = secrecy.GammaParams(args.ke, args.rho)
        lines.append(f"sop_numeric = {secrecy.sop_numeric(pb, pe, args.rs)!r}")
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_selftest(args) -> int:
    ok = selftest.run(verbose=not args.quiet)
    return EXIT_OK if ok else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="frisim", description="FRIS secrecy-outage simulator")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario and write the SOP sweep as CSV")
    r.add_argument("config")
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--extended", action="store_true", help="append sop_mc_lower and discrepancy columns")
    r.set_defaults(func=_cmd_run)

    s = sub.add_parser("sweep", help="re-run a scenario for several values of one key")
    s.add_argument("config")
    s.add_argument("--param", required=True, help="dotted config key, e.g. geometry.d_h")
    s.add_argument("--values", required=True, help="comma-separated values")
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.add_argument("--extended", action="store_true")
    s.set_defaults(func=_cmd_sweep)

    f = sub.add_parser("fit", help="Nakagami MLE fit of magnitude samples (one column per link)")
    f.add_argument("samples")
    f.add_argument("--out")
    f.set_defaults(func=_cmd_fit)

    o = sub.add_parser("sop", help="closed-form SOP (and quadrature when --ke is given)")
    o.add_argument("--kb", type=float, required=True)
    o.add_argument("--rho", type=float, required=True)
    o.add_argument("--rs", type=float, required=True)
    o.add_argument("--ke", type=float)
    o.set_defaults(func=_cmd_sop)

    t = sub.add_parser("selftest", help="check special functions and SOP identities against references")
    t.add_argument("--quiet", action="store_true")
    t.set_defaults(func=_cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FeasibilityError as exc:
        print(f"feasibility error: {exc}", file=sys.stderr)
        return EXIT_FEASIBILITY
    except (NumericError, FloatingPointError, OverflowError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DomainError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
