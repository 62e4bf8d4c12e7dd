"""Timing helpers and the scaling suites (operation time against work size)."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from . import generate as gen
from .adjacency import build_adjacency
from .predicates import DrillCylinder, Plane
from .softbody import SoftBodyParams, cluster, step
from .surgery import ScalpelStroke, cut, drill, tear

MIN_REPEATS = 5
CUT_SIZES = (16, 32, 64, 128, 256)
STEP_SIZES = (224, 452, 863)
TEAR_SIZES = (8, 16, 24, 32, 48)
DRILL_SIZES = (8, 16, 24, 32, 48)


@dataclass
class LineFit:
    slope: float
    intercept: float
    r2: Optional[float]

    @property
    def defined(self) -> bool:
        return self.r2 is not None


def fit_line(x, y) -> LineFit:
    """Least-squares ``y = slope * x + intercept``.

    ``r2`` is ``None`` when fewer than two distinct ``x`` values are given
    or ``y`` has no variance, since the coefficient is undefined there.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(np.unique(x)) < 2:
        return LineFit(0.0, float(np.mean(y)) if len(y) else 0.0, None)
    slope, intercept = np.polyfit(x, y, 1)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return LineFit(float(slope), float(intercept), None)
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    return LineFit(float(slope), float(intercept), 1.0 - ss_res / ss_tot)


def time_repeated(run: Callable[[], object], repeats: int = MIN_REPEATS,
                  setup: Optional[Callable[[], object]] = None) -> list[float]:
    """Wall times in seconds of ``repeats`` calls; ``setup`` runs untimed before each and its
    result is passed to ``run``."""
    times = []
    for _ in range(repeats):
        arg = setup() if setup is not None else None
        t0 = time.perf_counter()
        run(arg) if setup is not None else run()
        times.append(time.perf_counter() - t0)
    return times


@dataclass
class SuitePoint:
    size: int
    count: int
    median_ms: float
    min_ms: float
    max_ms: float


@dataclass
class SuiteResult:
    which: str
    points: list = field(default_factory=list)
    fit: Optional[LineFit] = None
    elapsed: float = 0.0
    outputs: dict = field(default_factory=dict)

    @property
    def counts(self) -> list:
        return [p.count for p in self.points]

    @property
    def medians(self) -> list:
        return [p.median_ms for p in self.points]

    def as_dict(self) -> dict:
        return {
            "suite": self.which,
            "points": [asdict(p) for p in self.points],
            "slope_ms": self.fit.slope if self.fit else None,
            "intercept_ms": self.fit.intercept if self.fit else None,
            "r2": self.fit.r2 if self.fit else None,
            "elapsed_s": self.elapsed,
        }


def _cut_case(n):
    mesh = gen.cylinder(n, 4)
    maps = build_adjacency(mesh)
    plane = Plane((0.0, 0.0, 1.0), gen.cylinder_mid_plane_height(4))

    def run(m):
        return cut(mesh, m, plane)

    report = run(maps.copy())
    return run, maps.copy, report.intersection_count, report.mesh


def _tear_case(n):
    mesh = gen.plate(n)
    maps = build_adjacency(mesh)
    # diagonal-ish stroke across most of the plate, away from grid lines
    y0, y1 = 0.5 + 0.37 / n, 0.5 + 0.21 / n
    stroke = ScalpelStroke(((0.1, y0, 1.0), (0.1, y0, -1.0)), ((0.9, y1, 1.0), (0.9, y1, -1.0)))

    def run(m):
        return tear(mesh, m, stroke)

    out, report = run(maps.copy())
    return run, maps.copy, len(report.seam_points), out


def _drill_case(n):
    mesh = gen.plate(n)
    maps = build_adjacency(mesh)
    cyl = DrillCylinder((0.5 + 0.13 / n, 0.5 + 0.07 / n, -1.0), (0.5 + 0.13 / n, 0.5 + 0.07 / n, 1.0), 0.3)

    def run(m):
        return drill(mesh, m, cyl, min_contour_edges=3)

    out, report = run(maps.copy())
    return run, maps.copy, len(report.contour_points), out


def _step_case(n, steps_per_sample=10):
    mesh = gen.particle_field(n)
    base = cluster(mesh, 0.8)
    params = SoftBodyParams()
    state = base.copy()
    state.velocities[:] = 0.05

    def run(cl):
        for _ in range(steps_per_sample):
            _, out = step(cl, mesh, params=params)
        return out

    out = run(state.copy())
    return run, state.copy, base.particle_count, out


_CASES = {"cut": (_cut_case, CUT_SIZES), "tear": (_tear_case, TEAR_SIZES),
          "drill": (_drill_case, DRILL_SIZES), "step": (_step_case, STEP_SIZES)}


def scaling_suite(which: str, sizes=None, repeats: int = MIN_REPEATS) -> SuiteResult:
    """Time ``which`` over a ladder of sizes and fit time against work count.

    The work count is the number of intersection points for the surgery
    suites (contour points for the drill) and the particle count for the
    step suite.  Each size is timed ``repeats`` times and the median is
    fitted; step timings are per step, averaged over a batch of ten.
    """
    if which not in _CASES:
        raise ValueError(f"unknown suite {which!r}; choose from {sorted(_CASES)}")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    make, default_sizes = _CASES[which]
    t0 = time.perf_counter()
    result = SuiteResult(which)
    for size in sizes or default_sizes:
        run, setup, count, output = make(size)
        times = np.asarray(time_repeated(run, repeats, setup)) * 1e3
        if which == "step":
            times /= 10
        result.points.append(SuitePoint(int(size), int(count), float(np.median(times)),
                                        float(times.min()), float(times.max())))
        result.outputs[int(size)] = output
    result.fit = fit_line(result.counts, result.medians)
    result.elapsed = time.perf_counter() - t0
    return result
