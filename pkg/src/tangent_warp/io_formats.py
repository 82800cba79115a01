"""JSON documents for scenes, demonstrations and results, plus SVG plots.

All writers are deterministic: keys are emitted in a fixed order and floats
with 17 significant digits, so saving the same value twice gives identical
bytes and every double survives a load/save cycle unchanged.
"""

from __future__ import annotations

import json
import math
import warnings
from pathlib import Path

import numpy as np

from .cpd import RegistrationResult
from .geometry import Curve, curve_length, resample_uniform, segment_deviation
from .pipeline import CartesianWarpOutput, Keyframe, Trajectory, WarpOutput
from .scenario import StepDemo, TaskDemo, ValidationReport

VERSION = 1
SCENE_FORMAT = "tangent-warp/scene"
DEMO_FORMAT = "tangent-warp/demo"
RESULT_FORMAT = "tangent-warp/result"
ROLES = ("train_before", "train_after", "test_before")


class SchemaError(ValueError):
    """A document does not match the expected layout.

    ``pointer`` is a JSON-pointer-style path to the offending value.
    """

    def __init__(self, pointer, message):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


# -- writing ---------------------------------------------------------------

def _scalar(v):
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            raise ValueError(f"cannot serialize non-finite number {v}")
        return format(v, ".17g")
    if isinstance(v, str):
        return json.dumps(v)
    raise TypeError(f"cannot serialize {type(v).__name__}")


def _is_scalar(v):
    return not isinstance(v, (dict, list, tuple, np.ndarray))


def _emit(v, level, out):
    pad = "  " * level
    if isinstance(v, np.ndarray):
        v = v.tolist()
    if isinstance(v, dict):
        if not v:
            out.append("{}")
            return
        out.append("{\n")
        for i, (k, item) in enumerate(v.items()):
            out.append(f"{pad}  {json.dumps(str(k))}: ")
            _emit(item, level + 1, out)
            out.append(",\n" if i < len(v) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(v, (list, tuple)):
        if all(_is_scalar(x) for x in v):
            out.append("[" + ", ".join(_scalar(x) for x in v) + "]")
            return
        out.append("[\n")
        for i, item in enumerate(v):
            out.append(pad + "  ")
            _emit(item, level + 1, out)
            out.append(",\n" if i < len(v) - 1 else "\n")
        out.append(pad + "]")
    else:
        out.append(_scalar(v))


def dumps(doc) -> str:
    out = []
    _emit(doc, 0, out)
    return "".join(out) + "\n"


def _write(path, doc):
    Path(path).write_text(dumps(doc), encoding="utf-8")


# -- reading helpers -------------------------------------------------------

def _read(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError("", f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("", f"invalid JSON in {path}: {exc}") from exc


def _require(doc, key, ptr):
    if not isinstance(doc, dict):
        raise SchemaError(ptr, "expected an object")
    if key not in doc:
        raise SchemaError(f"{ptr}/{key}", "missing")
    return doc[key]


def _number(v, ptr):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(ptr, f"expected a number, got {v!r}")
    if not math.isfinite(v):
        raise SchemaError(ptr, f"not a finite number ({v})")
    return float(v)


def _points(v, ptr):
    if not isinstance(v, list) or len(v) < 2:
        raise SchemaError(ptr, "expected a list of at least 2 [x, y] pairs")
    out = np.empty((len(v), 2))
    for i, p in enumerate(v):
        if not isinstance(p, list) or len(p) != 2:
            raise SchemaError(f"{ptr}/{i}", "expected an [x, y] pair")
        for j in range(2):
            try:
                out[i, j] = _number(p[j], f"{ptr}/{i}/{j}")
            except SchemaError as exc:
                raise SchemaError(exc.pointer, f"node {i}: {str(exc).split(': ', 1)[1]}") from None
    return out


def _check_header(doc, fmt, ptr=""):
    version = _require(doc, "version", ptr)
    if version != VERSION:
        raise SchemaError(f"{ptr}/version", f"unsupported version {version!r}")
    if "format" in doc and doc["format"] != fmt:
        raise SchemaError(f"{ptr}/format", f"expected {fmt!r}, got {doc['format']!r}")


# -- scenes ----------------------------------------------------------------

def _curve_doc(curve: Curve) -> dict:
    return {"delta_l": curve.delta_l, "nodes": curve.nodes}


def _parse_curve(doc, ptr) -> Curve:
    nodes = _points(_require(doc, "nodes", ptr), f"{ptr}/nodes")
    dl = doc.get("delta_l")
    if dl is None:
        try:
            return resample_uniform(nodes, len(nodes))
        except ValueError as exc:
            raise SchemaError(f"{ptr}/nodes", str(exc)) from None
    dl = _number(dl, f"{ptr}/delta_l")
    try:
        return Curve(nodes, dl)
    except ValueError as exc:
        raise SchemaError(f"{ptr}/nodes", f"{exc}. Omit delta_l to have the nodes "
                          "resampled (resample_uniform)") from None


def scene_document(curve: Curve, role: str | None = None) -> dict:
    if role is not None and role not in ROLES:
        raise ValueError(f"role must be one of {ROLES}, got {role!r}")
    doc = {"format": SCENE_FORMAT, "version": VERSION}
    if role is not None:
        doc["role"] = role
    doc.update(_curve_doc(curve))
    return doc


def save_scene(path, curve: Curve, role: str | None = None):
    _write(path, scene_document(curve, role))


def load_scene(path) -> Curve:
    """Read a scene file.

    A scene that gives ``delta_l`` claims uniform spacing and is rejected if
    the nodes disagree; without ``delta_l`` the raw nodes are resampled to the
    same count.
    """
    doc = _read(path)
    _check_header(doc, SCENE_FORMAT)
    role = doc.get("role")
    if role is not None and role not in ROLES:
        raise SchemaError("/role", f"unknown role {role!r}")
    return _parse_curve(doc, "")


def load_points(path):
    """Raw ``(nodes, delta_l)`` from a scene file, without the spacing check."""
    doc = _read(path)
    _check_header(doc, SCENE_FORMAT)
    nodes = _points(_require(doc, "nodes", ""), "/nodes")
    dl = doc.get("delta_l")
    return nodes, None if dl is None else _number(dl, "/delta_l")


# -- demonstrations --------------------------------------------------------

def _keyframe_doc(k: Keyframe) -> dict:
    return {"position": list(k.position), "status": k.status, "grasp_node": k.grasp_node}


def trajectory_document(traj: Trajectory) -> list:
    return [_keyframe_doc(k) for k in traj.keyframes]


def _parse_trajectory(v, ptr) -> Trajectory:
    if not isinstance(v, list) or not v:
        raise SchemaError(ptr, "expected a non-empty list of keyframes")
    kfs = []
    for i, kd in enumerate(v):
        p = f"{ptr}/{i}"
        pos = _require(kd, "position", p)
        if not isinstance(pos, list) or len(pos) != 2:
            raise SchemaError(f"{p}/position", "expected an [x, y] pair")
        pos = [_number(pos[j], f"{p}/position/{j}") for j in range(2)]
        status = _require(kd, "status", p)
        if status not in ("open", "closed"):
            raise SchemaError(f"{p}/status", f"expected 'open' or 'closed', got {status!r}")
        node = kd.get("grasp_node")
        if node is not None and (isinstance(node, bool) or not isinstance(node, int) or node < 0):
            raise SchemaError(f"{p}/grasp_node", f"expected a non-negative integer, got {node!r}")
        kfs.append(Keyframe(tuple(pos), status, node))
    return Trajectory(tuple(kfs))


def demo_document(demo: TaskDemo) -> dict:
    return {
        "format": DEMO_FORMAT,
        "version": VERSION,
        "anchor": demo.anchor,
        "steps": [{"before": _curve_doc(s.before), "after": _curve_doc(s.after),
                   "trajectory": trajectory_document(s.trajectory)} for s in demo.steps],
    }


def save_demo(path, demo: TaskDemo):
    _write(path, demo_document(demo))


def parse_demo(doc) -> TaskDemo:
    _check_header(doc, DEMO_FORMAT)
    anchor = doc.get("anchor")
    if anchor is not None and (isinstance(anchor, bool) or not isinstance(anchor, int)):
        raise SchemaError("/anchor", f"expected an integer or null, got {anchor!r}")
    steps_doc = _require(doc, "steps", "")
    if not isinstance(steps_doc, list) or not steps_doc:
        raise SchemaError("/steps", "expected a non-empty list")
    steps = []
    for k, sd in enumerate(steps_doc):
        p = f"/steps/{k}"
        before = _parse_curve(_require(sd, "before", p), f"{p}/before")
        after = _parse_curve(_require(sd, "after", p), f"{p}/after")
        traj = _parse_trajectory(_require(sd, "trajectory", p), f"{p}/trajectory")
        try:
            steps.append(StepDemo(before, after, traj))
        except ValueError as exc:
            raise SchemaError(p, str(exc)) from None
    try:
        return TaskDemo(tuple(steps), anchor)
    except ValueError as exc:
        raise SchemaError("/steps", str(exc)) from None


def load_demo(path) -> TaskDemo:
    return parse_demo(_read(path))


# -- results ---------------------------------------------------------------

def _registration_diagnostics(reg: RegistrationResult) -> dict:
    return {
        "iterations": reg.iterations,
        "converged": bool(reg.converged),
        "sigma2": reg.sigma2,
        "objective_trace": list(reg.objective_trace),
    }


def result_document(obj, trajectory: Trajectory | None = None,
                    include_correspondence: bool = False, extra: dict | None = None) -> dict:
    """Plain-data view of a warp, registration or validation result."""
    doc = {"format": RESULT_FORMAT, "version": VERSION}
    if isinstance(obj, WarpOutput):
        curve = obj.target_curve
        nominal = curve.nominal_length
        doc["mode"] = "tangent"
        doc["target_curve"] = _curve_doc(curve)
        doc["target_angles"] = obj.target_profile.thetas
        doc["grasp_map"] = [[m, n] for m, n in sorted(obj.grasp_map.items())]
        if trajectory is not None:
            doc["trajectory"] = trajectory_document(trajectory)
        if include_correspondence:
            doc["correspondence"] = obj.correspondence
        diag = _registration_diagnostics(obj.registration)
        diag["length_error"] = abs(curve_length(curve) - nominal) / nominal
        diag["segment_deviation"] = segment_deviation(curve, curve.delta_l)
    elif isinstance(obj, CartesianWarpOutput):
        nominal = (len(obj.implied_target) - 1) * obj.delta_l
        strain = (np.hypot(*np.diff(obj.implied_target, axis=0).T) - obj.delta_l) / obj.delta_l
        doc["mode"] = "cartesian"
        doc["implied_target"] = {"delta_l": obj.delta_l, "nodes": obj.implied_target}
        traj = trajectory if trajectory is not None else obj.trajectory
        if traj is not None:
            doc["trajectory"] = trajectory_document(traj)
        if include_correspondence:
            doc["posterior"] = obj.registration.P
        diag = _registration_diagnostics(obj.registration)
        diag["length_error"] = abs(curve_length(obj.implied_target) - nominal) / nominal
        diag["segment_deviation"] = obj.segment_deviation
        diag["max_strain"] = float(strain.max())
        diag["min_strain"] = float(strain.min())
        diag["x_extent"] = float(np.ptp(obj.implied_target[:, 0]))
        diag["nominal_length"] = nominal
    elif isinstance(obj, RegistrationResult):
        doc["mode"] = "register"
        doc["transformed"] = obj.Z
        doc["weights"] = obj.W
        if include_correspondence:
            doc["posterior"] = obj.P
        diag = _registration_diagnostics(obj)
        diag["max_displacement"] = float(np.max(np.hypot(*(obj.Z - obj.Y).T)))
    elif isinstance(obj, ValidationReport):
        doc["mode"] = "validate"
        diag = {
            "length_errors": obj.length_errors,
            "deviations": obj.deviations,
            "max_deviation": obj.max_deviation,
            "max_strain": obj.max_strain,
            "min_strain": obj.min_strain,
            "x_extents": obj.x_extents,
            "nominal_lengths": obj.nominal_lengths,
            "threshold": obj.threshold,
            "over_stretch": obj.over_stretch,
            "over_compression": obj.over_compression,
            "grasp_indices": obj.grasp_indices,
        }
    else:
        raise TypeError(f"cannot build a result document from {type(obj).__name__}")
    if extra:
        diag.update(extra)
    doc["diagnostics"] = diag
    return doc


def save_result(path, obj, **kwargs):
    _write(path, obj if isinstance(obj, dict) else result_document(obj, **kwargs))


def load_result(path) -> dict:
    doc = _read(path)
    _check_header(doc, RESULT_FORMAT)
    _require(doc, "mode", "")
    _require(doc, "diagnostics", "")
    return doc


# -- SVG -------------------------------------------------------------------

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")


def _f(v):
    # adding 0.0 turns -0.0 into 0.0
    return format(float(v) + 0.0, ".6g")


def render_svg(layers, width_px: int = 640, legend: bool = True) -> str:
    """SVG 1.1 document with one polyline per layer.

    ``layers`` is a sequence of ``(points, style)``; recognised style keys are
    ``label``, ``color``, ``width`` (px), ``dash`` (e.g. ``"6,4"``) and
    ``markers`` (draw nodes).  The y axis points up.  Empty layers are left
    out with a comment in their place.
    """
    layers = list(layers)
    if not layers:
        raise ValueError("no layers to plot")
    pts_all = [np.asarray(p, dtype=float).reshape(-1, 2) for p, _ in layers]
    nonempty = [p for p in pts_all if len(p)]
    if not nonempty:
        raise ValueError("every layer is empty")
    stacked = np.vstack(nonempty)
    lo, hi = stacked.min(axis=0), stacked.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    margin = 0.05 * span
    x0, y0 = lo[0] - margin[0], -(hi[1] + margin[1])
    w, h = span[0] + 2 * margin[0], span[1] + 2 * margin[1]
    height_px = max(1, int(round(width_px * h / w)))
    unit = w / width_px

    out = ['<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
           '<!DOCTYPE svg PUBLIC "-//W3C//DTD SVG 1.1//EN" '
           '"http://www.w3.org/Graphics/SVG/1.1/DTD/svg11.dtd">',
           f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width_px}" '
           f'height="{height_px}" viewBox="{_f(x0)} {_f(y0)} {_f(w)} {_f(h)}">',
           f'<rect x="{_f(x0)}" y="{_f(y0)}" width="{_f(w)}" height="{_f(h)}" fill="#ffffff"/>']
    labels = []
    for i, (pts, (_, style)) in enumerate(zip(pts_all, layers)):
        style = dict(style or {})
        label = str(style.get("label", f"layer {i}"))
        if len(pts) == 0:
            warnings.warn(f"skipping empty layer {label!r}")
            out.append(f"<!-- skipped empty layer {label.replace('--', '- -')} -->")
            continue
        color = style.get("color", PALETTE[i % len(PALETTE)])
        sw = float(style.get("width", 2.0)) * unit
        attrs = f'fill="none" stroke="{color}" stroke-width="{_f(sw)}"'
        if style.get("dash"):
            dash = ",".join(_f(float(d) * unit) for d in str(style["dash"]).split(","))
            attrs += f' stroke-dasharray="{dash}"'
        coords = " ".join(f"{_f(x)},{_f(-y)}" for x, y in pts)
        out.append(f'<polyline {attrs} points="{coords}"/>')
        if style.get("markers"):
            r = 2.0 * sw
            out.extend(f'<circle cx="{_f(x)}" cy="{_f(-y)}" r="{_f(r)}" fill="{color}"/>'
                       for x, y in pts)
        labels.append((label, color))
    if legend and labels:
        fs = 12 * unit
        for j, (label, color) in enumerate(labels):
            ty = y0 + (j + 1.5) * 1.4 * fs
            tx = x0 + 0.5 * fs
            text = label.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
            out.append(f'<line x1="{_f(tx)}" y1="{_f(ty - 0.35 * fs)}" x2="{_f(tx + 2 * fs)}" '
                       f'y2="{_f(ty - 0.35 * fs)}" stroke="{color}" stroke-width="{_f(2 * unit)}"/>')
            out.append(f'<text x="{_f(tx + 2.5 * fs)}" y="{_f(ty)}" font-family="sans-serif" '
                       f'font-size="{_f(fs)}" fill="#000000">{text}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_svg(layers, path, **kwargs):
    Path(path).write_text(render_svg(layers, **kwargs), encoding="utf-8")
