"""Command-line entry point.

Machine-readable output goes to files (or stdout where noted); progress and
errors go to stderr.  Exit status: 0 success, 1 bad input, 2 registration hit
``--max-iter`` without converging.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io_formats as iof
from .cpd import RegistrationConfig, RegistrationError, cpd_register
from .geometry import DEFAULT_ABSCISSA_SCALE, Curve
from .pipeline import generate_step_trajectory, warp_scene_cartesian, warp_tangent_scene
from .scenario import (
    DEFAULT_THRESHOLD,
    TaskError,
    fixture_names,
    make_fixture,
    run_task,
    validate_physical,
)

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED = 0, 1, 2


class InputError(Exception):
    pass


def _diag(msg):
    print(msg, file=sys.stderr)


def _add_reg_flags(p):
    g = p.add_argument_group("registration")
    g.add_argument("--lambda", dest="lam", type=float, default=10.0,
                   help="regularization weight (default 10)")
    g.add_argument("--omega", type=float, default=0.0, help="outlier weight in [0, 1) (default 0)")
    g.add_argument("--area", type=float, default=None,
                   help="observation area for the outlier density; required when omega > 0")
    g.add_argument("--beta", type=float, default=1.0, help="kernel width (default 1)")
    g.add_argument("--max-iter", type=int, default=100, help="EM iteration cap (default 100)")
    g.add_argument("--tol", type=float, default=1e-8, help="objective decrease threshold")
    g.add_argument("--scale", type=float, default=DEFAULT_ABSCISSA_SCALE,
                   help="tangent-space abscissa per node index (default 10)")
    g.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD,
                   help="relative segment deviation flagged as stretch/compression (default 0.05)")
    g.add_argument("--seed", type=int, default=None,
                   help="reserved; registration is deterministic and ignores it")


def _config(args) -> RegistrationConfig:
    try:
        cfg = RegistrationConfig(lam=args.lam, omega=args.omega, beta=args.beta,
                                 max_iter=args.max_iter, tol=args.tol, area=args.area)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if not args.scale > 0:
        raise InputError(f"--scale must be > 0, got {args.scale}")
    return cfg


def _out_dir(args) -> Path:
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _load_scene(path) -> Curve:
    try:
        return iof.load_scene(path)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


# -- subcommands -----------------------------------------------------------

def cmd_register(args) -> int:
    cfg = _config(args)
    X = _load_scene(args.x_file)
    Y = _load_scene(args.y_file)
    reg = cpd_register(X.nodes, Y.nodes, cfg)
    diam = float(np.max(np.ptp(np.vstack([X.nodes, Y.nodes]), axis=0)))
    d2 = ((reg.Z[:, None, :] - X.nodes[None, :, :]) ** 2).sum(axis=-1)
    residual = float(np.sqrt(d2.min(axis=1)).max())
    doc = iof.result_document(reg, include_correspondence=args.correspondence,
                              extra={"residual": residual, "diameter": diam})
    text = iof.dumps(doc)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    _diag(f"register: {reg.iterations} iterations, converged={reg.converged}, "
          f"sigma2={reg.sigma2:.3g}, residual={residual:.3g}, "
          f"max displacement={doc['diagnostics']['max_displacement']:.3g}")
    return EXIT_OK if reg.converged else EXIT_NOT_CONVERGED


def _scenes_from_args(args):
    if args.fixture:
        demo, test = _fixture(args.fixture)
        step = demo.steps[0]
        return step.before, step.after, test, step.trajectory
    if not (args.train_before and args.train_after and args.test_before):
        raise InputError("give three scene files (train_before train_after test_before) "
                         "or --fixture NAME")
    return (_load_scene(args.train_before), _load_scene(args.train_after),
            _load_scene(args.test_before), None)


def _fixture(name):
    try:
        return make_fixture(name)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _scene_layers(train_before, train_after, test_before):
    return [
        (train_before.nodes, {"label": "training before", "color": "#999999", "dash": "6,4"}),
        (train_after.nodes, {"label": "training after", "color": "#555555"}),
        (test_before.nodes, {"label": "test before", "color": "#1f77b4", "dash": "6,4"}),
    ]


def cmd_warp(args) -> int:
    cfg = _config(args)
    tb, ta, test, train_traj = _scenes_from_args(args)
    if tb.n_nodes != ta.n_nodes:
        raise InputError(f"training before/after node counts differ: {tb.n_nodes} vs {ta.n_nodes}")
    out_dir = _out_dir(args)
    layers = _scene_layers(tb, ta, test)
    if args.mode == "tangent":
        out = warp_tangent_scene(tb, ta, test, cfg, args.scale)
        traj = None if train_traj is None else generate_step_trajectory(out, train_traj, test)
        report = validate_physical([out.target_curve], test.delta_l, args.threshold)
        target = out.target_curve.nodes
        reg = out.registration
        doc = iof.result_document(out, trajectory=traj,
                                  include_correspondence=args.correspondence)
    else:
        out = warp_scene_cartesian(tb, ta, test, cfg, train_traj)
        traj = out.trajectory
        report = validate_physical([out.implied_target], test.delta_l, args.threshold)
        target = out.implied_target
        reg = out.registration
        doc = iof.result_document(out, include_correspondence=args.correspondence)
    doc["diagnostics"]["over_stretch"] = report.over_stretch
    doc["diagnostics"]["over_compression"] = report.over_compression
    layers.append((target, {"label": f"{args.mode} target", "color": "#d62728"}))
    if traj is not None:
        layers.append((traj.positions, {"label": "gripper keyframes", "color": "#2ca02c",
                                        "dash": "3,3", "markers": True}))
    stem = out_dir / f"warp_{args.mode}"
    iof.save_result(stem.with_suffix(".json"), doc)
    iof.plot_svg(layers, stem.with_suffix(".svg"))
    d = doc["diagnostics"]
    _diag(f"warp ({args.mode}): {reg.iterations} iterations, converged={reg.converged}, "
          f"length error={d['length_error']:.3g}, segment deviation={d['segment_deviation']:.3g}")
    _diag(f"wrote {stem.with_suffix('.json')} and {stem.with_suffix('.svg')}")
    return EXIT_OK if reg.converged else EXIT_NOT_CONVERGED


def cmd_task(args) -> int:
    cfg = _config(args)
    if args.fixture:
        demo, test = _fixture(args.fixture)
    else:
        if not (args.demo_file and args.test_scene):
            raise InputError("give a demo file and a test scene, or --fixture NAME")
        try:
            demo = iof.load_demo(args.demo_file)
        except ValueError as exc:
            raise InputError(f"{args.demo_file}: {exc}") from None
        test = _load_scene(args.test_scene)
    try:
        results = run_task(demo, test, cfg, args.scale)
    except TaskError as exc:
        if isinstance(exc.cause, RegistrationError):
            raise
        raise InputError(str(exc)) from None
    out_dir = _out_dir(args)
    states = [test] + [r.predicted for r in results]
    steps = []
    all_converged = True
    for k, r in enumerate(results, start=1):
        path = out_dir / f"step_{k}.json"
        iof.save_result(path, r.output, trajectory=r.trajectory,
                        include_correspondence=args.correspondence,
                        extra={"predicted_state": r.predicted.nodes})
        reg = r.output.registration
        all_converged &= bool(reg.converged)
        steps.append({"step": k, "file": path.name, "iterations": reg.iterations,
                      "converged": bool(reg.converged),
                      "grasp_nodes": sorted({kf.grasp_node for kf in r.trajectory.keyframes
                                             if kf.grasp_node is not None})})
    report = validate_physical(states, [s.delta_l for s in states], args.threshold,
                               [s["grasp_nodes"] for s in steps])
    summary = iof.result_document(report, extra={"steps": steps})
    iof.save_result(out_dir / "summary.json", summary)
    _diag(f"task: {len(results)} steps, max length error "
          f"{max(abs(e) for e in report.length_errors):.3g}, "
          f"max segment deviation {report.max_deviation:.3g}; wrote {out_dir}")
    return EXIT_OK if all_converged else EXIT_NOT_CONVERGED


def _states_from_file(path):
    """Point sequences and their delta_l from a scene or result file."""
    try:
        doc = iof._read(path)
        fmt = doc.get("format") if isinstance(doc, dict) else None
        if fmt == iof.RESULT_FORMAT:
            doc = iof.load_result(path)
            key = {"tangent": "target_curve", "cartesian": "implied_target"}.get(doc["mode"])
            if key is None:
                raise InputError(f"{path}: result mode {doc['mode']!r} holds no curve")
            nodes = iof._points(doc[key]["nodes"], f"/{key}/nodes")
            return nodes, float(doc[key]["delta_l"])
        return iof.load_points(path)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def cmd_validate(args) -> int:
    states, dls = [], []
    for path in args.files:
        nodes, dl = _states_from_file(path)
        dl = args.delta_l if args.delta_l is not None else dl
        if dl is None:
            raise InputError(f"{path}: no delta_l in file; pass --delta-l")
        states.append(nodes)
        dls.append(dl)
    try:
        report = validate_physical(states, dls, args.threshold)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    text = iof.dumps(iof.result_document(report))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    _diag(f"validate: max deviation {report.max_deviation:.3g}, "
          f"over-stretch={report.over_stretch}, over-compression={report.over_compression}")
    return EXIT_OK


def cmd_plot(args) -> int:
    layers = []
    for path in args.files:
        nodes, _ = _states_from_file(path)
        layers.append((nodes, {"label": Path(path).stem, "markers": args.markers}))
    iof.plot_svg(layers, args.out)
    _diag(f"wrote {args.out}")
    return EXIT_OK


def cmd_fixtures(args) -> int:
    if args.write:
        out = Path(args.write)
        out.mkdir(parents=True, exist_ok=True)
        for name in fixture_names():
            demo, test = make_fixture(name)
            iof.save_demo(out / f"{name}.demo.json", demo)
            iof.save_scene(out / f"{name}.test.json", test, role="test_before")
        _diag(f"wrote {len(fixture_names())} fixtures to {out}")
    for name in fixture_names():
        print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tangent-warp",
        description="Transfer deformable-object manipulation demos by tangent-space "
                    "point set registration.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("register", help="register a reference scene onto an observed scene")
    p.add_argument("x_file", help="observed scene (X)")
    p.add_argument("y_file", help="reference scene (Y), the one that gets moved")
    p.add_argument("--out", help="result file (default: stdout)")
    p.add_argument("--correspondence", action="store_true", help="include the posterior matrix")
    _add_reg_flags(p)
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("warp", help="transfer one demonstrated step to a test scene")
    p.add_argument("train_before", nargs="?")
    p.add_argument("train_after", nargs="?")
    p.add_argument("test_before", nargs="?")
    p.add_argument("--mode", choices=("tangent", "cartesian"), default="tangent")
    p.add_argument("--fixture", help="use a built-in scene instead of files")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--correspondence", action="store_true",
                   help="include the correspondence (or posterior) matrix")
    _add_reg_flags(p)
    p.set_defaults(func=cmd_warp)

    p = sub.add_parser("task", help="transfer a multi-step demonstration")
    p.add_argument("demo_file", nargs="?")
    p.add_argument("test_scene", nargs="?")
    p.add_argument("--fixture", help="use a built-in task instead of files")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--correspondence", action="store_true")
    _add_reg_flags(p)
    p.set_defaults(func=cmd_task)

    p = sub.add_parser("validate", help="check states for stretched or compressed segments")
    p.add_argument("files", nargs="+", help="scene or result files")
    p.add_argument("--delta-l", type=float, default=None, help="override the nominal spacing")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--out", help="report file (default: stdout)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("plot", help="draw scene or result curves to SVG")
    p.add_argument("files", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--markers", action="store_true")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("fixtures", help="list built-in scenes")
    p.add_argument("--write", metavar="DIR", help="also write them as demo/scene files")
    p.set_defaults(func=cmd_fixtures)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except InputError as exc:
        _diag(f"error: {exc}")
        return EXIT_INPUT
    except (RegistrationError, TaskError) as exc:
        _diag(f"error: registration failed: {exc}")
        return EXIT_INPUT
    except OSError as exc:
        _diag(f"error: {exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
