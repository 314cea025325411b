"""Command-line client for the solvability service.

Each subcommand builds a request model, runs it through the service layer
(in process by default, over HTTP when --server is given), and prints the
result envelope.  Exit code 0 on success, 2 on any precondition or usage
problem, with a one-line JSON error on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys

from .errors import SmalleigError
from .service.handlers import dispatch
from .service.models import REQUEST_TYPES

CACHE_ENV = "SMALLEIG_CACHE"


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        # let values like "-8,0" or "-1,2,0.5" pass as arguments, not options
        self._negative_number_matcher = re.compile(
            r"^-\d+(\.\d*)?([eE][-+]?\d+)?(,-?\d.*)?$")

    def error(self, message):  # one-line machine-parsable usage errors
        print(json.dumps({"error": {"code": "usage", "message": message}}),
              file=sys.stderr)
        raise SystemExit(2)


def _parse_floats(text: str) -> list[float]:
    if not text.strip():
        return []
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}: {exc}")


def _parse_window(text: str) -> tuple[float, float]:
    vals = _parse_floats(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError("window needs exactly two numbers lo,hi")
    return (vals[0], vals[1])


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="smalleig",
                     description="solvability analysis of the planar model operators")
    parser.add_argument("--server", default=None,
                        help="base URL of a running service; default runs in process")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_branch=True, with_a0=True, with_taylor=True,
               with_order=True, with_exact=False):
        p.add_argument("--m", type=int, required=True)
        if with_branch:
            p.add_argument("--branch", choices=["+", "-"], default="+")
        if with_a0:
            p.add_argument("--a0", type=float, required=True)
        if with_taylor:
            p.add_argument("--taylor", type=_parse_floats, default=[],
                           help="derivative values a'(0),a''(0),... comma separated")
        if with_order:
            p.add_argument("--order", type=int, default=4)
        if with_exact:
            p.add_argument("--exact", action="store_true",
                           help="exact rational pipeline (m = 2 only)")
        p.add_argument("--scale", type=float, default=None,
                       help="basis length scale override")
        p.add_argument("--format", choices=["json", "csv", "text"], default="json")
        p.add_argument("--out", default=None, help="also write the output to FILE")
        p.add_argument("--cache", default=os.environ.get(CACHE_ENV),
                       help=f"cache directory (default ${CACHE_ENV})")

    p = sub.add_parser("sigma", help="threshold constants in a window")
    p.add_argument("--window", type=_parse_window, required=True)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--step", type=float, default=0.05)
    common(p, with_a0=False, with_taylor=False, with_order=False)

    p = sub.add_parser("moments", help="kernel moments and their recurrence")
    p.add_argument("--jmax", type=int, default=12)
    common(p, with_taylor=False, with_order=False, with_exact=True)

    p = sub.add_parser("lambda", help="small-eigenvalue expansion orders")
    common(p, with_exact=True)
    p.add_argument("--taylor-exact", type=str, default=None,
                   help="comma-separated rationals for --exact, e.g. 1,1/2")

    p = sub.add_parser("polys", help="expansion orders as polynomials in a_1..a_N")
    common(p, with_taylor=False, with_exact=True)

    p = sub.add_parser("forced", help="derivative values forced by vanishing orders")
    common(p, with_branch=False)

    p = sub.add_parser("decide", help="solvability verdict")
    common(p, with_branch=False)
    p.add_argument("--tol-sigma", type=float, default=1e-6)
    p.add_argument("--tol-lambda", type=float, default=1e-7)
    p.add_argument("--c-floor", type=float, default=1e-6)

    p = sub.add_parser("sweep", help="fit the measured small eigenvalue in eps")
    common(p, with_order=False)
    p.add_argument("--eps-grid", type=_parse_floats, default=None)
    p.add_argument("--fit-order", type=int, default=3)
    p.add_argument("--theta", type=float, default=None)

    p = sub.add_parser("witness", help="solvability-inequality ratio over a packet sweep")
    common(p, with_branch=False, with_order=False)
    p.add_argument("--lambdas", type=_parse_floats, default=[128.0, 256.0, 512.0, 1024.0])
    p.add_argument("--A", type=int, default=8)
    p.add_argument("--B", type=int, default=2)
    p.add_argument("--grid-csv", default=None,
                   help="dump the localized packet at the first frequency "
                        "as a CSV matrix (local mode only)")

    return parser


def _request_payload(args) -> dict:
    common_drop = {"command", "server", "format", "out", "cache", "grid_csv"}
    payload = {}
    for key, value in vars(args).items():
        if key in common_drop or value is None:
            continue
        payload[key] = value
    payload["cache_dir"] = args.cache
    renames = {"jmax": "j_max", "tol_sigma": "tol_sigma",
               "c_floor": "c_floor_rel", "taylor_exact": "taylor_exact"}
    for old, new in renames.items():
        if old in payload:
            payload[new] = payload.pop(old)
    if payload.get("taylor_exact") is not None:
        payload["taylor_exact"] = [s.strip() for s in payload["taylor_exact"].split(",")]
    if "window" in payload:
        payload["window"] = list(payload["window"])
    return payload


def _run_remote(server: str, command: str, payload: dict) -> dict:
    import httpx

    with httpx.Client(base_url=server, timeout=600.0) as client:
        resp = client.post(f"/v1/{command}", json=payload)
    if resp.status_code == 400:
        detail = resp.json().get("detail", {})
        raise SmalleigError(detail.get("message", "precondition violation"))
    resp.raise_for_status()
    return resp.json()


def _run_local(command: str, payload: dict) -> dict:
    req = REQUEST_TYPES[command](**payload)
    return dispatch(command, req).model_dump()


def _csv_rows(envelope: dict) -> list[list]:
    command, out = envelope["command"], envelope["outputs"]
    if command == "sigma":
        return [["element"]] + [[e] for e in out["elements"]]
    if command == "moments":
        return [["j", "mu"]] + [[j, v] for j, v in enumerate(out["mu"])]
    if command in ("lambda",):
        return [["order", "lambda"]] + [[n + 1, v] for n, v in enumerate(out["lambdas"])]
    if command == "sweep":
        return ([["eps", "lambda"]]
                + [[e, v] for e, v in zip(out["eps_grid"], out["lambda_values"])])
    if command == "witness":
        cols = ["lam", "ratio", "numerator", "h_norm", "lg_norm", "lg_sup",
                "g_sup", "support_radius_x"]
        return [cols] + [[row[c] for c in cols] for row in out["points"]]
    return [["key", "value"]] + [[k, json.dumps(v)] for k, v in out.items()]


def render(envelope: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(envelope, indent=2)
    if fmt == "csv":
        lines = [",".join(str(c) for c in row) for row in _csv_rows(envelope)]
        return "\n".join(lines)
    lines = [f"command: {envelope['command']}"]
    for key, value in envelope["outputs"].items():
        lines.append(f"{key}: {json.dumps(value)}")
    return "\n".join(lines)


def _dump_witness_grid(args, payload) -> None:
    from .perturbation import lambda_series
    from .spectrum import ModelParams
    from .witness import WitnessConfig, packet_fields, write_grid_csv

    params = ModelParams(payload["m"], "+", payload["a0"],
                         tuple(payload.get("taylor", ())), payload.get("scale"))
    lam = payload["lambdas"][0]
    cfg = WitnessConfig.for_lambdas(payload["m"], [lam],
                                    A=payload.get("A", 8), B=payload.get("B", 2))
    fields = packet_fields(lam, cfg, params,
                           lambda_series(params, cfg.A))
    write_grid_csv(fields, args.grid_csv)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    payload = _request_payload(args)
    try:
        if args.server:
            if getattr(args, "grid_csv", None):
                raise SmalleigError("--grid-csv is only available in local mode")
            envelope = _run_remote(args.server, args.command, payload)
        else:
            envelope = _run_local(args.command, payload)
            if getattr(args, "grid_csv", None):
                _dump_witness_grid(args, payload)
    except SmalleigError as exc:
        print(json.dumps({"error": {"code": exc.code, "message": str(exc)}}),
              file=sys.stderr)
        return 2
    except (ValueError, TypeError) as exc:
        print(json.dumps({"error": {"code": "invalid_input", "message": str(exc)}}),
              file=sys.stderr)
        return 2
    text = render(envelope, args.format)
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
