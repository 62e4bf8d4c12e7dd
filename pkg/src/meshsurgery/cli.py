"""Command-line entry point.

Exit codes: 0 success, 1 script or usage error, 2 geometry/consistency/
parameter error, 3 I/O or file-format error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import _parallel
from . import generate as gen
from .bench import MIN_REPEATS, scaling_suite
from .errors import MeshSurgeryError, ScriptError
from .io import load_mesh, save_mesh
from .mesh import mesh_stats
from .script import OperationScript, run_script


class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Usage(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="meshsurgery", description="Cut, tear and drill skinned triangle meshes.")
    p.add_argument("--threads", type=int, default=1, help="worker threads for parallel kernels")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="execute an operation script")
    r.add_argument("script")
    r.add_argument("--out", default=".", help="directory for saved meshes and the report")
    r.add_argument("--seed", type=int, default=42)
    r.add_argument("--threads", type=int, default=None)
    r.add_argument("--report", help="JSON-lines report path (default: <out>/report.jsonl)")
    r.add_argument("--repeats", type=int, default=MIN_REPEATS)

    b = sub.add_parser("bench", help="run scaling suites")
    b.add_argument("suite", choices=["cut", "tear", "drill", "step", "all"])
    b.add_argument("--repeats", type=int, default=MIN_REPEATS)
    b.add_argument("--threads", type=int, default=None)
    b.add_argument("--report", help="write JSON lines here")

    g = sub.add_parser("generate", help="write a procedural test mesh")
    g.add_argument("kind", choices=sorted(gen.GENERATORS))
    g.add_argument("params", nargs="*", type=int)
    g.add_argument("-o", "--output", required=True)

    s = sub.add_parser("stats", help="print mesh statistics as JSON")
    s.add_argument("path")
    s.add_argument("--weights")
    return p


def _run(args) -> int:
    script = OperationScript.load(args.script)
    out = Path(args.out)
    report = run_script(script, out_dir=out, seed=args.seed, repeats=args.repeats,
                        base_dir=Path(args.script).resolve().parent)
    report_path = Path(args.report) if args.report else out / "report.jsonl"
    report_path.parent.mkdir(parents=True, exist_ok=True)
    report_path.write_text(report.json_lines())
    sys.stdout.write(report.table())
    return 0


def _bench(args) -> int:
    names = ["cut", "tear", "drill", "step"] if args.suite == "all" else [args.suite]
    lines = []
    for name in names:
        res = scaling_suite(name, repeats=args.repeats)
        rec = res.as_dict()
        lines.append(json.dumps(rec, sort_keys=True))
        r2 = "undefined" if rec["r2"] is None else f"{rec['r2']:.4f}"
        print(f"{name}: slope {rec['slope_ms']:.5f} ms/count, R^2 {r2}, {rec['elapsed_s']:.1f} s")
        for p in res.points:
            print(f"  size {p.size:>5}  count {p.count:>6}  median {p.median_ms:9.3f} ms"
                  f"  [{p.min_ms:.3f}, {p.max_ms:.3f}]")
    if args.report:
        Path(args.report).write_text("\n".join(lines) + "\n")
    return 0


def _generate(args) -> int:
    save_mesh(gen.generate_test_mesh(args.kind, *args.params), args.output)
    return 0


def _stats(args) -> int:
    mesh = load_mesh(args.path, args.weights)
    d = mesh_stats(mesh).as_dict()
    d["euler_characteristic"] = mesh_stats(mesh).euler_characteristic
    print(json.dumps(d, sort_keys=True))
    return 0


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _Usage as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    n = getattr(args, "threads", None) or 1
    try:
        with _parallel.threads(n):
            return {"run": _run, "bench": _bench, "generate": _generate, "stats": _stats}[args.command](args)
    except ScriptError as exc:
        print(f"script error: {exc}", file=sys.stderr)
        return 1
    except MeshSurgeryError as exc:
        where = f"command #{exc.ordinal}: " if getattr(exc, "ordinal", None) else ""
        print(f"error: {where}{exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        where = f"command #{exc.ordinal}: " if getattr(exc, "ordinal", None) else ""
        print(f"I/O error: {where}{exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
