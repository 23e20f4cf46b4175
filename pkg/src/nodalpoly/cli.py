"""Command line front end: geometry, cover, solve, doubling, nodal and verify."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import plots
from .doubling import (
    GRID_RATIO,
    LiftedIntegrator,
    MeshIntegrator,
    chart_curves,
    eigen_doubling_survey,
    four_sphere_check,
    frequency_profiles,
    loglog_slope,
    monotonicity_check,
    propagation_check,
    radius_grid,
    resolved_r_min,
    survey_sup,
)
from .errors import NodalPolyError, ResolutionGuard
from .nodal import extract_nodal_set, resolution_guard, shell_accounting, yau_upper_survey
from .polytope import NAMED, lipschitz_constant, load_polytope
from .report import VerificationReport, write_json, write_text
from .spectral import solve_polytope
from .star import COVER_RATIO, FAULT_SHRINK, boundary_cover, cover_verify, max_star_radius
from .verify import run_checks

log = logging.getLogger("nodalpoly")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    polytope: str = "square"
    h: float = 0.02
    count: int = 30
    r0: float | None = None
    tol: float | None = None
    r_min: float = 0.05
    r_max: float = 0.4
    grid_ratio: float = GRID_RATIO
    samples: int = 100_000
    samples_small: int = 2000
    msr_samples: int = 200
    seed: int = 0
    out: str = "nodal-out"
    jobs: int = 1
    grade_corners: bool = False
    cache: str | None = None
    cover_ratio: float = COVER_RATIO
    mono_tol: float = 1e-3
    slope_guard: float = 0.05
    profile_modes: int = 6
    resolution_factor: float = 8.0
    centers: list | None = None
    c1: float = 1.0
    fault: str | None = None

    def __post_init__(self):
        for name in ("h", "r_min", "r_max", "cover_ratio", "mono_tol", "c1"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.r0 is not None and not self.r0 > 0:
            raise ConfigError("r0 must be positive")
        if not self.r_max > self.r_min:
            raise ConfigError("r_max must exceed r_min")
        if not self.grid_ratio > 1:
            raise ConfigError("grid_ratio must exceed 1")
        for name in ("count", "samples", "samples_small", "msr_samples", "jobs", "profile_modes"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.fault not in (None, "shrunken-cover"):
            raise ConfigError(f"unknown fault {self.fault!r}")

    @classmethod
    def from_json(cls, path):
        text = Path(path).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}")
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    def as_dict(self):
        d = dataclasses.asdict(self)
        d.pop("out")
        d.pop("jobs")
        d.pop("cache")
        return d


def polytope_from(cfg):
    if cfg.polytope in NAMED:
        return NAMED[cfg.polytope]()
    return load_polytope(cfg.polytope)


# ------------------------------------------------------------ commands


def cmd_geometry(cfg):
    P = polytope_from(cfg)
    out = Path(cfg.out)
    fc = P.face_constant
    msr = []
    for i, v in enumerate(P.vertices):
        res = max_star_radius(P, v, tol=cfg.tol)
        msr.append(dict(res.as_dict(), vertex=i, reflex=bool(i in P.reflex_vertices)))
    report = {
        "polytope": P.to_dict(),
        "face_counts": P.lattice.counts(),
        "face_constant": fc.as_dict(),
        "R0": P.vertex_separation,
        "lipschitz": lipschitz_constant(P) if P.dimension == 2 else None,
        "msr_vertices": msr,
    }
    write_json(out / "geometry.json", report)
    return report, 0


def cmd_cover(cfg):
    P = polytope_from(cfg)
    out = Path(cfg.out)
    r0 = cfg.r0 if cfg.r0 is not None else P.vertex_separation
    cover = boundary_cover(P, r0, ratio=cfg.cover_ratio)
    if cfg.fault == "shrunken-cover":
        cover = cover.with_radii_scaled(FAULT_SHRINK)
    rep = cover_verify(P, cover, samples=cfg.samples, raise_on_failure=False)
    rows = ["level,index,x,y,certified_radius,covering_radius"]
    for b in cover.balls:
        rows.append(f"{b.level},{b.index},{b.center[0]!r},{b.center[1]!r},"
                    f"{b.certified_radius!r},{b.covering_radius!r}")
    write_text(out / "cover.csv", "\n".join(rows) + "\n")
    write_json(out / "cover.json", {"r0": r0, "ratio": cfg.cover_ratio, "verification": rep,
                                    "stats": cover.stats})
    plots.plot_cover(P, cover, out / "cover.svg")
    ok = rep["gaps"] == 0 and rep["certificate_failures"] == 0
    return rep, 0 if ok else 1


def _solve(cfg, P):
    return solve_polytope(P, cfg.h, cfg.count, cfg.grade_corners, cfg.cache)


def cmd_solve(cfg):
    P = polytope_from(cfg)
    out = Path(cfg.out)
    mesh, pairs = _solve(cfg, P)
    resolution_guard(pairs, cfg.h)
    rows = ["k,lambda,residual,cluster"]
    for p in pairs:
        rows.append(f"{p.index + 1},{p.value!r},{p.residual!r},{p.cluster}")
    write_text(out / "eigen.csv", "\n".join(rows) + "\n")
    report = {
        "mesh": {"nodes": len(mesh.nodes), "triangles": len(mesh.triangles), "h": mesh.h,
                 "min_angle": mesh.min_angle, "graded": cfg.grade_corners},
        "values": [p.value for p in pairs],
        "max_residual": max(p.residual for p in pairs),
    }
    write_json(out / "eigen.json", report)
    return report, 0


def _default_centers(P):
    c = [list(v) + [0.0] for v in P.vertices]
    m = P.vertices.mean(axis=0)
    if P.contains(m)[0]:
        c.append([float(m[0]), float(m[1]), 0.0])
    return c


def _center_profiles(args):
    mesh, V, lam, P, center, cfg = args
    r = resolved_r_min(mesh, center, cfg.r_min, cfg.resolution_factor)
    if 2 * r > cfg.r_max:
        return r, []
    I = LiftedIntegrator(MeshIntegrator(mesh, V, P), lam)
    return r, frequency_profiles(I, P, center, radius_grid(r, cfg.r_max, cfg.grid_ratio))


def cmd_doubling(cfg):
    P = polytope_from(cfg)
    out = Path(cfg.out)
    mesh, pairs = _solve(cfg, P)
    use = pairs[: cfg.profile_modes]
    V = np.stack([p.nodal for p in use], axis=1)
    lam = np.array([p.value for p in use])
    centers = [np.asarray(c, float) for c in (cfg.centers or _default_centers(P))]
    tasks = [(mesh, V, lam, P, c, cfg) for c in centers]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as ex:
            results = list(ex.map(_center_profiles, tasks))  # ordered merge
    else:
        results = [_center_profiles(t) for t in tasks]
    rows, profiles, starts = [], [], []
    for ci, (r_start, profs) in enumerate(results):
        starts.append(r_start)
        for p in profs:
            mono = monotonicity_check(p, cfg.mono_tol)
            write_text(out / "profiles" / f"center{ci}_mode{p.column + 1}.csv", p.to_csv())
            rows.append({"center": ci, "mode": p.column + 1, "monotonicity": mono.as_dict()})
            profiles.append(p)
    I = LiftedIntegrator(MeshIntegrator(mesh, V, P), lam)
    spheres = []
    for c, r in zip(centers, starts):
        if 2 * r > cfg.r_max:
            continue
        for j, rep in enumerate(four_sphere_check(I, P, c, r, 2 * r, column=None)):
            spheres.append(dict(rep.as_dict(), center=c.tolist(), mode=j + 1))
    curves, rejected = chart_curves(P, cfg.r_max / 8, cfg.r_max)
    propagation = [dict(propagation_check(I, P, c, column=j).as_dict(), origin=c.origin.tolist(),
                        mode=j + 1)
                   for c in curves for j in range(len(use))]
    rejected = [{"origin": c.origin.tolist(), "condition": e.condition, "reason": str(e)}
                for c, e in rejected]
    survey = eigen_doubling_survey(P, pairs, centers, cfg.r_min)
    sup = survey_sup(survey)
    keys = sorted(sup)
    slope = loglog_slope([pairs[k].value for k in keys], [sup[k] for k in keys]) if len(keys) > 1 else 0.0
    certified = [r for r in rows if r["monotonicity"]["certified"]]
    failing = [r for r in certified if not r["monotonicity"]["passed"]]
    report = {
        "r_start": starts,
        "centers": [c.tolist() for c in centers],
        "profiles": rows,
        "four_sphere": spheres,
        "propagation": {"curves": propagation, "rejected": rejected},
        "survey": {"rows": survey, "sup": {str(k): v for k, v in sup.items()}, "slope": slope},
        "summary": {"profiles": len(rows), "certified": len(certified), "failing": len(failing),
                    "four_sphere_failures": sum(1 for s in spheres if s["certified"] and not s["holds"]),
                    "propagation_failures": sum(1 for p in propagation if not p["holds"])},
    }
    write_json(out / "doubling.json", report)
    plots.plot_profiles(profiles[: min(len(profiles), 12)], out / "profiles.svg",
                        [f"c{r['center']} m{r['mode']}" for r in rows[:12]])
    plots.plot_survey([pairs[k].value for k in keys], [sup[k] for k in keys], out / "eigen_doubling.svg",
                      "sup N / sqrt(λ)")
    summ = report["summary"]
    bad = summ["failing"] + summ["four_sphere_failures"] + summ["propagation_failures"]
    return report, 0 if bad == 0 else 1


def cmd_nodal(cfg):
    P = polytope_from(cfg)
    out = Path(cfg.out)
    mesh, pairs = _solve(cfg, P)
    survey = yau_upper_survey(P, pairs)
    write_text(out / "survey.csv", survey.to_csv())
    show = pairs[min(len(pairs) - 1, 9)]
    z = extract_nodal_set(show.field)
    center = np.asarray(cfg.centers[0][:2] if cfg.centers else P.vertices[0], float)
    r0 = cfg.r0 if cfg.r0 is not None else P.vertex_separation
    shells = None
    try:
        shells = shell_accounting(P, show.field, center, r0, c1=cfg.c1, z=z).as_dict()
    except NodalPolyError as exc:
        shells = {"error": f"{type(exc).__name__}: {exc}"}
    write_text(out / f"nodal_mode{show.index + 1}.csv", z.to_csv())
    plots.plot_nodal(P, z, out / f"nodal_mode{show.index + 1}.svg",
                     balls=[(center, r0 / 8)])
    plots.plot_survey([r["lambda"] for r in survey.rows], [r["ratio"] for r in survey.rows],
                      out / "survey.svg", "length / sqrt(λ)")
    report = {"survey": survey.as_dict(), "shells": shells, "mode": show.index + 1,
              "length": z.length, "zero_triangles": len(z.zero_triangles), "zero_area": z.zero_area}
    write_json(out / "nodal.json", report)
    return report, 0


def cmd_verify(cfg):
    P = polytope_from(cfg)
    records = run_checks(P, cfg)
    rep = VerificationReport(cfg.as_dict(), records)
    rep.write(cfg.out)
    for line in rep.lines():
        print(line)
    return rep.as_dict(), rep.exit_code


COMMANDS = {
    "geometry": cmd_geometry,
    "cover": cmd_cover,
    "solve": cmd_solve,
    "doubling": cmd_doubling,
    "nodal": cmd_nodal,
    "verify": cmd_verify,
}


# ------------------------------------------------------------ argument parsing


def build_parser():
    p = argparse.ArgumentParser(prog="nodalpoly", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path, help="JSON run configuration")
        s.add_argument("--out", help="output directory")
        s.add_argument("--seed", type=int)
        s.add_argument("--jobs", type=int)
        s.add_argument("--polytope", help="named shape or path to a polytope JSON file")
        s.add_argument("--h", type=float, help="target mesh size")
        s.add_argument("--count", type=int, help="number of eigenpairs")
        s.add_argument("--r0", type=float)
        s.add_argument("--tol", type=float)
        s.add_argument("--samples", type=int)
        s.add_argument("--grade-corners", action="store_true", default=None)
        s.add_argument("--center", type=float, nargs="+", action="append",
                       help="profile centre x y [t]; repeatable")
        s.add_argument("--r-min", type=float)
        s.add_argument("--r-max", type=float)
        s.add_argument("--grid-ratio", type=float)
        s.add_argument("--fault", choices=["shrunken-cover"])
    return p


def config_from_args(args):
    data = {}
    if args.config is not None:
        data = dataclasses.asdict(RunConfig.from_json(args.config))
    flags = {
        "out": args.out, "seed": args.seed, "jobs": args.jobs, "polytope": args.polytope,
        "h": args.h, "count": args.count, "r0": args.r0, "tol": args.tol, "samples": args.samples,
        "grade_corners": args.grade_corners, "r_min": args.r_min, "r_max": args.r_max,
        "grid_ratio": args.grid_ratio, "fault": args.fault,
    }
    if args.center:
        flags["centers"] = [list(c) + [0.0] * (3 - len(c)) for c in args.center]
    data.update({k: v for k, v in flags.items() if v is not None})
    if "cache" not in data or data["cache"] is None:
        data["cache"] = os.environ.get("NODAL_CACHE_DIR")
    return RunConfig.from_dict(data)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        _, code = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ResolutionGuard as exc:
        print(f"resolution guard: {exc}", file=sys.stderr)
        return 3
    except NodalPolyError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return code


if __name__ == "__main__":
    sys.exit(main())
