"""Planar curves with uniform segment length and their tangent-angle profiles.

A rope (or an extracted cloth edge) is an ordered chain of nodes whose
neighbours sit a fixed distance ``delta_l`` apart.  The same object can be
described by one direction angle per segment plus the position of the first
node; integrating the angles back gives the node positions, and the length of
the result is fixed by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

UNIFORM_RTOL = 1e-9
DEFAULT_ABSCISSA_SCALE = 10.0


def _as_points(points, name="points") -> np.ndarray:
    arr = np.array(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{name} must have shape (n, 2), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.all(np.isfinite(arr), axis=1))[0])
        raise ValueError(f"{name}[{bad}] is not finite")
    return arr


def _segment_lengths(points: np.ndarray) -> np.ndarray:
    return np.hypot(*np.diff(points, axis=0).T)


@dataclass(frozen=True, eq=False)
class Curve:
    """Ordered 2-D nodes, neighbours exactly ``delta_l`` apart (meters)."""

    nodes: np.ndarray
    delta_l: float

    def __post_init__(self):
        nodes = _as_points(self.nodes, "nodes")
        if len(nodes) < 2:
            raise ValueError("a curve needs at least 2 nodes")
        delta_l = float(self.delta_l)
        if not (np.isfinite(delta_l) and delta_l > 0):
            raise ValueError(f"delta_l must be positive, got {delta_l}")
        seg = _segment_lengths(nodes)
        rel = np.abs(seg - delta_l) / delta_l
        if np.any(rel > UNIFORM_RTOL):
            worst = int(np.argmax(rel))
            raise ValueError(
                f"segment {worst} has length {seg[worst]!r}, expected delta_l="
                f"{delta_l!r} (relative deviation {rel[worst]:.3g}); "
                "use resample_uniform for raw polylines")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "delta_l", delta_l)

    @classmethod
    def from_nodes(cls, nodes) -> "Curve":
        """Build a curve taking ``delta_l`` as the mean segment length."""
        nodes = _as_points(nodes, "nodes")
        if len(nodes) < 2:
            raise ValueError("a curve needs at least 2 nodes")
        return cls(nodes, float(np.mean(_segment_lengths(nodes))))

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_segments(self) -> int:
        return len(self.nodes) - 1

    @property
    def nominal_length(self) -> float:
        return self.n_segments * self.delta_l

    def allclose(self, other: "Curve", atol: float = 1e-12) -> bool:
        return (self.nodes.shape == other.nodes.shape
                and np.allclose(self.nodes, other.nodes, rtol=0, atol=atol)
                and abs(self.delta_l - other.delta_l) <= atol)


@dataclass(frozen=True, eq=False)
class TangentProfile:
    """Per-segment direction angles (degrees, unwrapped) plus the anchor node.

    ``thetas[i]`` is the heading of the segment from node ``i`` to node
    ``i + 1``.  ``abscissa_scale`` only matters when the profile is turned into
    a planar point set for registration.
    """

    thetas: np.ndarray
    base_point: np.ndarray
    delta_l: float
    abscissa_scale: float = DEFAULT_ABSCISSA_SCALE

    def __post_init__(self):
        thetas = np.array(self.thetas, dtype=float).reshape(-1)
        base = np.array(self.base_point, dtype=float).reshape(-1)
        if len(thetas) < 1:
            raise ValueError("a profile needs at least one angle")
        if not np.all(np.isfinite(thetas)):
            raise ValueError(f"thetas[{int(np.flatnonzero(~np.isfinite(thetas))[0])}] is not finite")
        if base.shape != (2,) or not np.all(np.isfinite(base)):
            raise ValueError("base_point must be a finite 2-D point")
        if not (np.isfinite(self.delta_l) and self.delta_l > 0):
            raise ValueError(f"delta_l must be positive, got {self.delta_l}")
        if not (np.isfinite(self.abscissa_scale) and self.abscissa_scale > 0):
            raise ValueError(f"abscissa_scale must be positive, got {self.abscissa_scale}")
        thetas.setflags(write=False)
        base.setflags(write=False)
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "base_point", base)
        object.__setattr__(self, "delta_l", float(self.delta_l))
        object.__setattr__(self, "abscissa_scale", float(self.abscissa_scale))

    @property
    def points(self) -> np.ndarray:
        """The profile as a planar point set ``(i * scale, theta_i)``."""
        return tangent_points(self.thetas, self.abscissa_scale)


def tangent_points(thetas, abscissa_scale: float = DEFAULT_ABSCISSA_SCALE) -> np.ndarray:
    thetas = np.asarray(thetas, dtype=float).reshape(-1)
    return np.column_stack([np.arange(len(thetas)) * float(abscissa_scale), thetas])


def _walk_chords(poly, cum, step, n_steps):
    """Step along ``poly`` placing points exactly ``step`` apart (chord length).

    Returns the placed points and the arc-length position of the last one, or
    ``None`` for the latter if the polyline runs out first.
    """
    out = [poly[0]]
    seg, t_cur = 0, 0.0
    pos = poly[0]
    for _ in range(n_steps):
        a, b = poly[seg], poly[seg + 1]
        seg_len = cum[seg + 1] - cum[seg]
        t_next = t_cur + step / seg_len
        if t_next <= 1.0:
            t_cur = t_next
            pos = a + t_cur * (b - a)
            out.append(pos)
            continue
        # later segments start strictly inside the circle, so the positive
        # root of |a + t d - pos| = step is the first crossing
        for k in range(seg + 1, len(poly) - 1):
            a, d = poly[k], poly[k + 1] - poly[k]
            f = a - pos
            dd = d @ d
            bq = f @ d
            cq = f @ f - step * step
            t = (-bq + np.sqrt(bq * bq - dd * cq)) / dd
            if t <= 1.0:
                seg, t_cur = k, t
                pos = a + t * d
                out.append(pos)
                break
        else:
            return np.array(out), None
    return np.array(out), cum[seg] + t_cur * (cum[seg + 1] - cum[seg])


def resample_uniform(polyline, n_nodes: int) -> Curve:
    """Resample a raw polyline into ``n_nodes`` equally spaced nodes.

    Nodes lie on the polyline, start at its first point and end at its last.
    Neighbouring nodes are exactly ``delta_l`` apart in the plane, so on a
    bent polyline ``delta_l`` comes out slightly below ``arc_length / (n - 1)``;
    on straight runs the two agree.
    """
    poly = _as_points(polyline, "polyline")
    if n_nodes < 2:
        raise ValueError("n_nodes must be >= 2")
    seg = _segment_lengths(poly)
    keep = np.concatenate([[True], seg > 0])
    poly = poly[keep]
    if len(poly) < 2:
        raise ValueError("polyline has zero total length")
    cum = np.concatenate([[0.0], np.cumsum(_segment_lengths(poly))])
    total = cum[-1]
    n_steps = n_nodes - 1
    if len(poly) == 2:
        t = np.linspace(0.0, 1.0, n_nodes)
        nodes = poly[0] + t[:, None] * (poly[1] - poly[0])
        return Curve(nodes, total / n_steps)

    def overshoot(step):
        _, arc = _walk_chords(poly, cum, step, n_steps)
        return total if arc is None else arc - total

    # chords never exceed arcs, so the arc-length spacing overshoots or hits
    hi = total / n_steps
    if abs(overshoot(hi)) <= 1e-14 * total:
        step = hi
    else:
        lo = hi
        for _ in range(200):
            lo *= 0.5
            if overshoot(lo) < 0:
                break
        else:
            raise ValueError("could not bracket a uniform spacing for this polyline")
        step = brentq(overshoot, lo, hi, xtol=1e-15 * total, rtol=4 * np.finfo(float).eps,
                      maxiter=500)
    nodes, _ = _walk_chords(poly, cum, step, n_steps)
    return Curve(nodes, step)


def _wrap_diff(d):
    # into (-180, 180]
    return 180.0 - np.mod(180.0 - d, 360.0)


def segment_angles(points) -> np.ndarray:
    """Unwrapped heading (degrees) of every segment of a polyline."""
    pts = _as_points(points)
    d = np.diff(pts, axis=0)
    if np.any(np.hypot(d[:, 0], d[:, 1]) == 0):
        raise ValueError(f"nodes {int(np.flatnonzero(np.hypot(*d.T) == 0)[0])} and next coincide")
    raw = np.degrees(np.arctan2(d[:, 1], d[:, 0]))
    return raw[0] + np.concatenate([[0.0], np.cumsum(_wrap_diff(np.diff(raw)))])


def to_tangent(curve: Curve, abscissa_scale: float = DEFAULT_ABSCISSA_SCALE) -> TangentProfile:
    return TangentProfile(segment_angles(curve.nodes), curve.nodes[0], curve.delta_l,
                          abscissa_scale)


def from_tangent(profile: TangentProfile) -> Curve:
    """Integrate headings into node positions starting from ``base_point``."""
    rad = np.radians(profile.thetas)
    steps = profile.delta_l * np.column_stack([np.cos(rad), np.sin(rad)])
    nodes = profile.base_point + np.vstack([np.zeros(2), np.cumsum(steps, axis=0)])
    return Curve(nodes, profile.delta_l)


def curve_length(curve) -> float:
    pts = curve.nodes if isinstance(curve, Curve) else _as_points(curve)
    return float(np.sum(_segment_lengths(pts)))


def segment_deviation(points, delta_l: float) -> float:
    """Largest relative departure of a neighbour distance from ``delta_l``."""
    if not delta_l > 0:
        raise ValueError(f"delta_l must be positive, got {delta_l}")
    pts = points.nodes if isinstance(points, Curve) else _as_points(points)
    if len(pts) < 2:
        raise ValueError("need at least 2 points")
    return float(np.max(np.abs(_segment_lengths(pts) - delta_l)) / delta_l)


def signed_segment_strain(points, delta_l: float) -> np.ndarray:
    """Per-segment ``(dist - delta_l) / delta_l``; positive means stretched."""
    if not delta_l > 0:
        raise ValueError(f"delta_l must be positive, got {delta_l}")
    pts = points.nodes if isinstance(points, Curve) else _as_points(points)
    return (_segment_lengths(pts) - delta_l) / delta_l
