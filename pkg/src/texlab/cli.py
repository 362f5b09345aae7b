"""Command-line client for the codec lab.

Each subcommand builds the same request model the HTTP service consumes and
either invokes the service layer in process (default) or posts it to a
running server (--server URL). Exit codes are stable API: 0 ok, 2 input
error, 3 codec error, 4 comparison error, 5 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, load_run_config
from .service import models as m
from .service import ops

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CODEC = 3
EXIT_COMPARE = 4
EXIT_VERIFY = 5

_FAULT_EXIT = {
    ops.InputFault: EXIT_INPUT,
    ops.CodecFault: EXIT_CODEC,
    ops.ComparisonFault: EXIT_COMPARE,
    ops.VerificationFault: EXIT_VERIFY,
}

_HTTP_EXIT = {400: EXIT_INPUT, 422: EXIT_COMPARE, 500: EXIT_CODEC}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="texlab",
                                description="Texture-mode video codec laboratory")
    p.add_argument("--server", help="URL of a running texlab service; default runs in process")
    sub = p.add_subparsers(dest="command", required=True)

    def add_io(sp, weights_required):
        sp.add_argument("--input", required=True, help="png directory or raw yuv420 file")
        sp.add_argument("--format", choices=["png-dir", "yuv420"], default="png-dir")
        sp.add_argument("--size", help="WxH, required for yuv420 input")
        sp.add_argument("--weights", required=weights_required, help="TEXW1 weights file")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--run-config", help="JSON run config; flags override its values")
        for name, typ in (("threshold", float), ("tau-split", float), ("k-max", int),
                          ("min-blocks", int), ("fast-threshold", int),
                          ("ransac-iters", int), ("ransac-tol", float)):
            sp.add_argument(f"--{name}", type=typ, default=None)

    sp = sub.add_parser("analyze", help="segment + refine masks, write PGM/overlays")
    add_io(sp, weights_required=True)
    sp.add_argument("--no-overlays", action="store_true")

    sp = sub.add_parser("encode", help="encode one clip at one or more QPs")
    add_io(sp, weights_required=False)
    sp.add_argument("--config", choices=["baseline", "tex-all", "tex-sp", "tex-cp"],
                    default=None)
    sp.add_argument("--qp", type=int, action="append", default=None,
                    help="repeatable; defaults to 16 24 32 40")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--video-id", default=None)

    sp = sub.add_parser("compare", help="rate-saving table from encode reports")
    sp.add_argument("--baseline", action="append", default=[], help="baseline report JSON")
    sp.add_argument("--texture", action="append", default=[], help="texture report JSON")
    sp.add_argument("--out", help="directory for CSV/table/plot data")

    sp = sub.add_parser("roundtrip", help="decode a stream and verify frame CRCs")
    sp.add_argument("--bitstream", required=True)

    sp = sub.add_parser("serve", help="run the HTTP service")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8095)
    return p


def _merged(args, key, default=None):
    """Flag value if given, else run-config value, else default."""
    flag = getattr(args, key.replace("-", "_"), None)
    if flag is not None:
        return flag
    cfg = getattr(args, "_run_cfg", {})
    return cfg.get(key.replace("-", "_"), cfg.get(key, default))


def _options(args) -> m.PipelineOptions:
    fields = ["threshold", "tau_split", "k_max", "min_blocks",
              "fast_threshold", "ransac_iters", "ransac_tol"]
    values = {f: _merged(args, f) for f in fields}
    return m.PipelineOptions(**{k: v for k, v in values.items() if v is not None})


def _dispatch(args, path: str, request, runner):
    if args.server:
        import httpx
        resp = httpx.post(args.server.rstrip("/") + path,
                          json=request.model_dump(), timeout=3600.0)
        if resp.status_code != 200:
            detail = resp.json().get("detail", resp.text)
            print(f"error: {detail}", file=sys.stderr)
            sys.exit(_HTTP_EXIT.get(resp.status_code, EXIT_CODEC))
        return resp.json()
    try:
        return runner(request).model_dump()
    except tuple(_FAULT_EXIT) as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(_FAULT_EXIT[type(exc)])


def cmd_analyze(args) -> int:
    req = m.AnalyzeRequest(
        input=_merged(args, "input"), format=_merged(args, "format", "png-dir"),
        size=_merged(args, "size"), weights=_merged(args, "weights"),
        out=_merged(args, "out"), options=_options(args),
        overlays=not args.no_overlays)
    result = _dispatch(args, "/analyze", req, ops.run_analyze)
    print(json.dumps({"n_frames": result["n_frames"],
                      "coverage_mean": result["coverage_mean"],
                      "summary_file": result["summary_file"]}, indent=2))
    return EXIT_OK


def cmd_encode(args) -> int:
    req = m.EncodeRequest(
        input=_merged(args, "input"), format=_merged(args, "format", "png-dir"),
        size=_merged(args, "size"), config=_merged(args, "config", "tex-cp"),
        qps=_merged(args, "qp", None) or _merged(args, "qps", [16, 24, 32, 40]),
        weights=_merged(args, "weights"), seed=_merged(args, "seed", 0),
        out=_merged(args, "out"), video_id=_merged(args, "video_id", "clip"),
        options=_options(args))
    result = _dispatch(args, "/encode", req, ops.run_encode)
    for s in result["streams"]:
        print(f"qp={s['qp']:2d}  {s['bits_per_frame']:9.1f} bits/frame  "
              f"coverage {s['coverage_percent']:5.1f}%  -> {s['bitstream_file']}")
    return EXIT_OK


def cmd_compare(args) -> int:
    req = m.CompareRequest(baseline_reports=args.baseline,
                           texture_reports=args.texture, out=args.out)
    result = _dispatch(args, "/compare", req, ops.run_compare)
    print(result["table"])
    for line in result["trend_lines"]:
        print(line)
    return EXIT_OK


def cmd_roundtrip(args) -> int:
    req = m.RoundtripRequest(bitstream=args.bitstream)
    result = _dispatch(args, "/roundtrip", req, ops.run_roundtrip)
    verdict = "PASS" if result["ok"] else "FAIL"
    bad = [f["display_index"] for f in result["frames"] if not f["crc_ok"]]
    print(f"{verdict}  ({result['n_frames']} frames"
          + (f", crc mismatch on {bad}" if bad else "") + ")")
    return EXIT_OK if result["ok"] else EXIT_VERIFY


def cmd_serve(args) -> int:
    import uvicorn
    from .service.app import create_app
    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    run_cfg_path = getattr(args, "run_config", None)
    try:
        args._run_cfg = load_run_config(run_cfg_path) if run_cfg_path else {}
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    handlers = {"analyze": cmd_analyze, "encode": cmd_encode,
                "compare": cmd_compare, "roundtrip": cmd_roundtrip,
                "serve": cmd_serve}
    try:
        return handlers[args.command](args)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    except ValueError as exc:  # pydantic validation of flag values
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
