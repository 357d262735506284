"""Command-line front end: a thin client over the service layer.

Scenarios run in-process by default; pass --server URL to delegate to a
running convspec service instead.

Exit codes: 0 success; 2 config error; 3 sizing error; 4 solver
non-convergence; 5 certificate failed while --expect-pass was set.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .errors import (ConfigError, ConvergenceError, ConvspecError, SizingError)
from .scenarios import (default_threads, emit_report, load_config)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SIZING = 3
EXIT_SOLVER = 4
EXIT_CERT_FAIL = 5

RUN_COMMANDS = ("essential", "eigs", "weyl", "certify", "gap", "sweep")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="convspec",
        description="Spectral laboratory for nonlocal convolution operators "
                    "with potential: essential spectrum, gap eigenvalues, Weyl "
                    "sequences and variational eigenvalue certificates.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, metavar="PATH",
                       help="scenario config (JSON or YAML)")
        p.add_argument("--out", default=None, metavar="DIR",
                       help="directory for report files (default: stdout)")
        p.add_argument("--format", default="json",
                       help="comma-separated: json,csv,plotdata")
        p.add_argument("--seed", type=int, default=None, help="override the seed")
        p.add_argument("--expect-pass", action="store_true",
                       help="treat a failed certificate as an error (exit 5)")
        p.add_argument("--threads", type=int, default=None,
                       help="sweep worker count (default: CONVSPEC_THREADS or 1)")
        p.add_argument("--server", default=None, metavar="URL",
                       help="delegate to a running convspec service")
        return p

    add_run("essential", "essential spectrum and spectral gaps")
    add_run("eigs", "discrete eigenvalues above a threshold or in a window")
    add_run("weyl", "Weyl-sequence residual decay")
    add_run("certify", "variational eigenvalue-count certificates")
    add_run("gap", "gap-eigenvalue perturbation certificate")
    add_run("sweep", "parameter/box-size sweeps")

    emit = sub.add_parser("emit", help="re-emit a stored JSON report")
    emit.add_argument("--report", required=True, metavar="PATH")
    emit.add_argument("--out", required=True, metavar="DIR")
    emit.add_argument("--format", default="csv")

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8420)
    return parser


_COMMAND_TASKS = {
    "essential": {"essential"},
    "eigs": {"eigs"},
    "weyl": {"weyl"},
    "certify": {"certify_t2", "certify_heavy", "certify_t5"},
    "gap": {"gap"},
    "sweep": {"sweep"},
}


def _run_command(args) -> int:
    config = load_config(args.config)
    task = config.get("task")
    if task not in _COMMAND_TASKS[args.command]:
        raise ConfigError(
            f"config task {task!r} does not match the {args.command!r} command "
            f"(expected one of {sorted(_COMMAND_TASKS[args.command])})")
    if args.seed is not None:
        config["seed"] = args.seed
    if args.threads is not None:
        os.environ["CONVSPEC_THREADS"] = str(args.threads)

    if args.server:
        import httpx

        resp = httpx.post(f"{args.server.rstrip('/')}/scenario/run",
                          json={"config": config,
                                "expect_pass": args.expect_pass},
                          timeout=600.0)
        if resp.status_code != 200:
            detail = resp.json().get("detail", {})
            kind = detail.get("kind", "ConvspecError")
            message = detail.get("message", resp.text)
            raise {"ConfigError": ConfigError, "SizingError": SizingError,
                   "ConvergenceError": ConvergenceError}.get(
                kind, ConvspecError)(message)
        body = resp.json()
        report, cert_failed = body["report"], body["certificate_failed"]
    else:
        from .service import execute_scenario

        out = execute_scenario(config, args.expect_pass)
        report, cert_failed = out.report, out.certificate_failed

    formats = [f.strip() for f in args.format.split(",") if f.strip()]
    if args.out:
        for path in emit_report(report, args.out, formats):
            print(path)
    else:
        from .scenarios import _json_default

        print(json.dumps(report, indent=2, sort_keys=True, default=_json_default))
    if args.expect_pass and cert_failed:
        print("certificate FAILED (requested --expect-pass)", file=sys.stderr)
        return EXIT_CERT_FAIL
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command in RUN_COMMANDS:
            return _run_command(args)
        if args.command == "emit":
            report = json.loads(open(args.report, encoding="utf-8").read())
            formats = [f.strip() for f in args.format.split(",") if f.strip()]
            for path in emit_report(report, args.out, formats):
                print(path)
            return EXIT_OK
        if args.command == "serve":
            import uvicorn

            from .service import app

            uvicorn.run(app, host=args.host, port=args.port)
            return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SizingError as exc:
        print(f"sizing error: {exc}", file=sys.stderr)
        return EXIT_SIZING
    except ConvergenceError as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
