"""Operation scripts: parse, check ordering, run, and report timings.

A script is plain text, one command per line, ``#`` starts a comment::

    load model.obj                  # or: generate plate 8
    optimize
    adjacency
    cluster --range 0.8
    cut --plane 0,0,1,0.5
    tear --start x0,y0,z0,x1,y1,z1 --end x0,y0,z0,x1,y1,z1 --open 0.02
    drill --axis x0,y0,z0,x1,y1,z1 --radius 0.1 --min-contour 10
    impulse --at x,y,z --force fx,fy,fz --radius r
    step --n 100 --k 40 --c 4 --dt 0.0111
    save out.obj --submeshes
    stats

``optimize`` must precede ``adjacency`` and ``cluster``; ``adjacency`` must
precede any surgery.  Stages the script omits are run implicitly where
they are needed and marked so in the report; running them explicitly out
of order is an error.
"""

from __future__ import annotations

import argparse
import json
import shlex
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import generate as gen
from .adjacency import build_adjacency
from .bench import MIN_REPEATS
from .errors import MeshSurgeryError, ScriptError
from .io import load_mesh, save_mesh
from .mesh import SkinnedMesh, compact, mesh_stats, remove_duplicates
from .predicates import DrillCylinder, Plane
from .skinning import load_pose
from .softbody import SoftBodyParams, apply_impulse, cluster, step, update_clustering
from .surgery import ScalpelStroke, cut, drill, tear

SURGERY = ("cut", "tear", "drill")
TIMED = ("optimize", "adjacency", "cluster", "cut", "tear", "drill", "impulse", "step")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ScriptError(f"{self.prog}: {message}")


def _floats(n):
    def parse(text):
        try:
            vals = [float(x) for x in text.split(",")]
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers, got {text!r}") from None
        if len(vals) != n:
            raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers, got {text!r}")
        return vals
    return parse


def _parsers():
    p = {}

    def make(name):
        p[name] = _Parser(prog=name, add_help=False)
        return p[name]

    a = make("load")
    a.add_argument("path")
    a.add_argument("--weights")
    a = make("generate")
    a.add_argument("kind", choices=sorted(gen.GENERATORS))
    a.add_argument("params", nargs="*", type=int)
    a.add_argument("--jitter", type=float, default=0.0)
    a = make("optimize")
    a.add_argument("--tol", type=float)
    make("adjacency")
    a = make("cluster")
    a.add_argument("--range", type=float, default=0.8)
    a = make("cut")
    a.add_argument("--plane", type=_floats(4), required=True)
    a = make("tear")
    a.add_argument("--start", type=_floats(6), required=True)
    a.add_argument("--end", type=_floats(6), required=True)
    a.add_argument("--open", type=float)
    a = make("drill")
    a.add_argument("--axis", type=_floats(6), required=True)
    a.add_argument("--radius", type=float, required=True)
    a.add_argument("--min-contour", type=int, default=10)
    a = make("impulse")
    a.add_argument("--at", type=_floats(3), required=True)
    a.add_argument("--force", type=_floats(3), required=True)
    a.add_argument("--radius", type=float, required=True)
    a = make("step")
    a.add_argument("--n", type=int, default=1)
    a.add_argument("--k", type=float, default=SoftBodyParams.k)
    a.add_argument("--c", type=float, default=SoftBodyParams.c)
    a.add_argument("--dt", type=float, default=SoftBodyParams.dt)
    a.add_argument("--pose")
    a = make("save")
    a.add_argument("path")
    a.add_argument("--submeshes", action="store_true")
    a.add_argument("--deformed", action="store_true")
    make("stats")
    return p


PARSERS = _parsers()


@dataclass
class Command:
    ordinal: int
    name: str
    args: argparse.Namespace
    text: str


@dataclass
class OperationScript:
    commands: list = field(default_factory=list)

    @classmethod
    def parse(cls, text: str) -> "OperationScript":
        cmds = []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            ordinal = len(cmds) + 1
            try:
                tokens = shlex.split(line)
            except ValueError as exc:
                raise ScriptError(str(exc), ordinal) from None
            name = tokens[0]
            if name not in PARSERS:
                raise ScriptError(f"unknown command {name!r}", ordinal)
            try:
                args = PARSERS[name].parse_args(tokens[1:])
            except ScriptError as exc:
                raise ScriptError(str(exc), ordinal) from None
            cmds.append(Command(ordinal, name, args, line))
        script = cls(cmds)
        script.check_order()
        return script

    @classmethod
    def load(cls, path) -> "OperationScript":
        return cls.parse(Path(path).read_text())

    def check_order(self) -> None:
        have_mesh = adjacency = clustered = False
        for c in self.commands:
            if c.name in ("load", "generate"):
                have_mesh, adjacency, clustered = True, False, False
                continue
            if not have_mesh:
                raise ScriptError(f"{c.name} before any load", c.ordinal)
            if c.name == "optimize":
                if adjacency or clustered:
                    raise ScriptError("optimize must come before adjacency and cluster", c.ordinal)
            elif c.name == "adjacency":
                adjacency = True
            elif c.name == "cluster":
                clustered = True
            elif c.name in SURGERY:
                adjacency = True
            elif c.name in ("impulse", "step") and not clustered:
                raise ScriptError(f"{c.name} needs a clustering; add a cluster command first", c.ordinal)


@dataclass
class _State:
    mesh: Optional[SkinnedMesh] = None
    maps: object = None
    clustering: object = None
    optimized: bool = False
    last_cut: object = None
    deformed: Optional[np.ndarray] = None

    def clone(self) -> "_State":
        return _State(self.mesh, self.maps.copy() if self.maps is not None else None,
                      self.clustering.copy() if self.clustering is not None else None,
                      self.optimized, self.last_cut, self.deformed)


@dataclass
class TimingReport:
    records: list = field(default_factory=list)
    outputs: list = field(default_factory=list)

    def json_lines(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)

    def table(self) -> str:
        head = f"{'#':>3}  {'command':<10} {'count':>8} {'median ms':>11} {'min ms':>10} {'max ms':>10}"
        rows = [head, "-" * len(head)]
        for r in self.records:
            count = r.get("intersection_count", r.get("particle_count", ""))
            rows.append(f"{r['ordinal']:>3}  {r['command']:<10} {str(count):>8} {r['ms']:>11.3f} "
                        f"{r['ms_min']:>10.3f} {r['ms_max']:>10.3f}")
        return "\n".join(rows) + "\n"


def _plane(vals):
    return Plane.from_normal(vals[:3], vals[3])


def _execute(cmd: Command, st: _State, ctx) -> dict:
    a = cmd.args
    name = cmd.name
    if name == "load":
        path = ctx.resolve(a.path)
        st.mesh = load_mesh(path, ctx.resolve(a.weights) if a.weights else None)
        st.maps = st.clustering = st.last_cut = st.deformed = None
        st.optimized = False
        return {"vertex_count": st.mesh.vertex_count, "face_count": st.mesh.face_count}
    if name == "generate":
        mesh = gen.generate_test_mesh(a.kind, *a.params)
        if a.jitter:
            rng = np.random.default_rng(ctx.seed)
            mesh = SkinnedMesh(mesh.positions + rng.uniform(-a.jitter, a.jitter, mesh.positions.shape),
                               mesh.faces, mesh.uvs, mesh.weights, mesh.bone_count)
        st.mesh = mesh
        st.maps = st.clustering = st.last_cut = st.deformed = None
        st.optimized = False
        return {"vertex_count": mesh.vertex_count, "face_count": mesh.face_count}
    if name == "optimize":
        before = st.mesh.vertex_count
        st.mesh, _ = remove_duplicates(st.mesh, a.tol)
        st.optimized = True
        return {"merged_vertices": before - st.mesh.vertex_count}
    if name == "adjacency":
        st.maps = build_adjacency(st.mesh)
        return {"warnings": len(st.maps.warnings)}
    if name == "cluster":
        st.clustering = cluster(st.mesh, a.range)
        return {"particle_count": st.clustering.particle_count}
    if name == "cut":
        report = cut(st.mesh, st.maps, _plane(a.plane))
        st.mesh = report.mesh
        st.last_cut = report
        _recluster(st, report)
        return {"intersection_count": report.intersection_count, "submeshes": len(report.submeshes)}
    if name == "tear":
        stroke = ScalpelStroke((a.start[:3], a.start[3:]), (a.end[:3], a.end[3:]), a.open)
        st.mesh, report = tear(st.mesh, st.maps, stroke)
        _recluster(st, report)
        return {"intersection_count": len(report.seam_points), "duplicated": len(report.duplicated_pairs)}
    if name == "drill":
        cyl = DrillCylinder(a.axis[:3], a.axis[3:], a.radius)
        st.mesh, report = drill(st.mesh, st.maps, cyl, a.min_contour)
        _recluster(st, report)
        return {"intersection_count": len(report.contour_points), "removed_faces": report.removed_face_count,
                "subdivision_rounds": report.subdivision_rounds,
                "contour_quality_unmet": report.contour_quality_unmet}
    if name == "impulse":
        hit = apply_impulse(st.clustering, a.at, a.force, a.radius, ctx.dt)
        return {"particles_hit": hit, "particle_count": st.clustering.particle_count}
    if name == "step":
        params = SoftBodyParams(a.k, a.c, a.dt).validate()
        pose = load_pose(ctx.resolve(a.pose)) if a.pose else None
        out = None
        for _ in range(a.n):
            _, out = step(st.clustering, st.mesh, pose, params)
        ctx.dt = a.dt
        st.deformed = out
        return {"particle_count": st.clustering.particle_count, "steps": a.n}
    if name == "save":
        path = ctx.out_path(a.path)
        written = []
        if a.submeshes:
            if st.last_cut is None:
                raise ScriptError("save --submeshes needs a preceding cut", cmd.ordinal)
            for i, sub in enumerate(st.last_cut.submeshes):
                p = path.with_name(f"{path.stem}_{i}{path.suffix}")
                save_mesh(sub, p)
                written.append(str(p))
        else:
            mesh = st.mesh
            if a.deformed:
                if st.deformed is None:
                    raise ScriptError("save --deformed needs a preceding step", cmd.ordinal)
                mesh = SkinnedMesh(st.deformed, mesh.faces, mesh.uvs, mesh.weights, mesh.bone_count)
            mesh, _ = compact(mesh)
            save_mesh(mesh, path)
            written.append(str(path))
        ctx.outputs.extend(written)
        return {"files": written}
    if name == "stats":
        return mesh_stats(st.mesh).as_dict()
    raise ScriptError(f"unknown command {name!r}", cmd.ordinal)


def _recluster(st, report):
    if st.clustering is not None:
        update_clustering(st.clustering, report)


class _Context:
    def __init__(self, base_dir, out_dir, seed):
        self.base_dir = Path(base_dir)
        self.out_dir = Path(out_dir)
        self.seed = seed
        self.dt = SoftBodyParams.dt
        self.outputs = []

    def resolve(self, p):
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    def out_path(self, p):
        p = Path(p)
        return p if p.is_absolute() else self.out_dir / p


def _implicit(name, ordinal):
    return Command(ordinal, name, PARSERS[name].parse_args([]), name)


def run_script(script: OperationScript, out_dir=".", seed: int = 42, repeats: int = MIN_REPEATS,
               base_dir=".") -> TimingReport:
    """Execute ``script`` in order; every surgery also patches adjacency and clustering.

    Timed commands run ``repeats`` times, all but the last on throw-away
    copies of the state, so the record carries median, min and max.  The
    first failing command raises its module error, re-raised as the same
    type with the command's ordinal attached.
    """
    if repeats < 1:
        raise ScriptError("repeats must be >= 1")
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    ctx = _Context(base_dir, out_dir, seed)
    st = _State()
    report = TimingReport(outputs=ctx.outputs)
    for cmd in script.commands:
        todo = []
        needs_maps = cmd.name in SURGERY and st.maps is None
        if (needs_maps or cmd.name in ("adjacency", "cluster")) and not st.optimized:
            todo.append((_implicit("optimize", cmd.ordinal), True))
        if needs_maps:
            todo.append((_implicit("adjacency", cmd.ordinal), True))
        todo.append((cmd, False))
        for c, implicit in todo:
            record = _run_one(c, st, ctx, repeats if c.name in TIMED else 1)
            if implicit:
                record["implicit"] = True
            report.records.append(record)
    return report


def _run_one(cmd, st, ctx, repeats):
    times = []
    info = None
    try:
        for r in range(repeats):
            target = st.clone() if r < repeats - 1 else st
            t0 = time.perf_counter()
            info = _execute(cmd, target, ctx)
            times.append(time.perf_counter() - t0)
    except ScriptError as exc:
        if exc.ordinal is None:
            raise ScriptError(str(exc), cmd.ordinal) from exc
        raise
    except (MeshSurgeryError, OSError) as exc:
        exc.ordinal = cmd.ordinal
        exc.command = cmd.text
        raise
    ms = np.asarray(times) * 1e3
    record = {"ordinal": cmd.ordinal, "command": cmd.name, "params": cmd.text, "ms": float(np.median(ms)),
              "ms_min": float(ms.min()), "ms_max": float(ms.max()), "repeats": repeats}
    record.update(info)
    return record
