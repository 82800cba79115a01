"""Multi-step demonstrations, a kinematic rope surrogate and synthetic scenes.

The replay model is follow-the-leader: the grasped node is dragged along the
gripper path in short steps and every other node is pulled back onto the
segment towards its (already updated) neighbour at distance ``delta_l``.
When one end is anchored, the part between anchor and gripper is solved with
forward/backward reaching passes instead, so the anchor never moves.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cpd import RegistrationConfig
from .geometry import (
    DEFAULT_ABSCISSA_SCALE,
    Curve,
    TangentProfile,
    from_tangent,
    signed_segment_strain,
)
from .pipeline import (
    CLOSED,
    OPEN,
    Keyframe,
    Trajectory,
    WarpOutput,
    _grasp_runs,
    generate_step_trajectory,
    warp_tangent_scene,
)

CONTINUITY_ATOL = 1e-6
DEFAULT_THRESHOLD = 0.05


class TaskError(RuntimeError):
    def __init__(self, step, cause):
        super().__init__(f"step {step}: {cause}")
        self.step = step
        self.cause = cause


@dataclass(frozen=True, eq=False)
class StepDemo:
    before: Curve
    after: Curve
    trajectory: Trajectory

    def __post_init__(self):
        if self.before.n_nodes != self.after.n_nodes:
            raise ValueError(f"before/after node counts differ: "
                             f"{self.before.n_nodes} vs {self.after.n_nodes}")
        if len(self.trajectory) == 0:
            raise ValueError("step trajectory is empty")
        self.trajectory.check_nodes(self.before.n_nodes)


@dataclass(frozen=True, eq=False)
class TaskDemo:
    """Ordered demonstration steps; ``anchor`` is a node held fixed throughout."""

    steps: tuple
    anchor: Optional[int] = None

    def __post_init__(self):
        steps = tuple(self.steps)
        if not steps:
            raise ValueError("a task needs at least one step")
        for k in range(len(steps) - 1):
            a, b = steps[k].after, steps[k + 1].before
            if a.nodes.shape != b.nodes.shape or \
                    np.max(np.abs(a.nodes - b.nodes)) > CONTINUITY_ATOL:
                raise ValueError(f"state continuity broken between step {k} and step {k + 1}")
        object.__setattr__(self, "steps", steps)


@dataclass
class ValidationReport:
    length_errors: list
    deviations: list
    max_deviation: float
    max_strain: float
    min_strain: float
    x_extents: list
    nominal_lengths: list
    threshold: float = DEFAULT_THRESHOLD
    grasp_indices: list = field(default_factory=list)

    @property
    def over_stretch(self) -> bool:
        return self.max_strain > self.threshold

    @property
    def over_compression(self) -> bool:
        return self.min_strain < -self.threshold

    @property
    def flagged(self) -> bool:
        return self.over_stretch or self.over_compression


@dataclass(eq=False)
class StepResult:
    output: WarpOutput
    trajectory: Trajectory
    predicted: Curve


# -- replay ----------------------------------------------------------------

def _pull(nodes, order, delta_l):
    # each node in `order` is re-projected towards its predecessor in `order`
    for prev, cur in zip(order[:-1], order[1:]):
        d = nodes[cur] - nodes[prev]
        dist = np.hypot(d[0], d[1])
        if dist == 0.0:
            # keep the old heading if the node got stacked on its leader
            back = cur - prev
            d = nodes[prev] - nodes[prev - back] if 0 <= prev - back < len(nodes) else np.array([1.0, 0.0])
            dist = np.hypot(d[0], d[1]) or 1.0
        nodes[cur] = nodes[prev] + d * (delta_l / dist)


def _chain(a, b):
    step = 1 if b >= a else -1
    return list(range(a, b + step, step))


def _drag(nodes, g, target, delta_l, anchor):
    n = len(nodes)
    if anchor is None or anchor == g:
        if anchor == g:
            return
        nodes[g] = target
        _pull(nodes, _chain(g, n - 1), delta_l)
        _pull(nodes, _chain(g, 0), delta_l)
        return
    anchor_pos = nodes[anchor].copy()
    inner = _chain(g, anchor)
    outer = _chain(g, n - 1 if anchor < g else 0)
    span = target - anchor_pos
    dist = np.hypot(span[0], span[1])
    if dist >= (len(inner) - 1) * delta_l * (1 - 1e-9):
        # at full reach the only solution is the straight chain, which the
        # reaching passes approach too slowly
        u = span / dist
        for k, i in enumerate(inner[::-1]):
            nodes[i] = anchor_pos + u * (k * delta_l)
        _pull(nodes, outer, delta_l)
        return
    for _ in range(200):
        nodes[g] = target
        _pull(nodes, inner, delta_l)
        nodes[anchor] = anchor_pos
        _pull(nodes, inner[::-1], delta_l)
        if np.hypot(*(nodes[g] - target)) <= 1e-12 * delta_l:
            break
    _pull(nodes, outer, delta_l)


def replay_rope(state: Curve, grasp_node: int, gripper_path, anchor: int | None = None,
                max_step: float | None = None) -> Curve:
    """Drag ``grasp_node`` through ``gripper_path`` and return the new state.

    The path is walked from the node's current position in increments of at
    most ``max_step`` (default ``delta_l / 2``).  With ``anchor`` set, a path
    point farther from the anchor than the chain between them can reach raises
    ``ValueError``.
    """
    M = state.n_nodes
    if not 0 <= grasp_node < M:
        raise IndexError(f"grasp node {grasp_node} out of range 0..{M - 1}")
    if anchor is not None and not 0 <= anchor < M:
        raise IndexError(f"anchor {anchor} out of range 0..{M - 1}")
    path = np.asarray(gripper_path, dtype=float).reshape(-1, 2)
    dl = state.delta_l
    step = dl / 2 if max_step is None else max_step
    nodes = state.nodes.copy()
    if anchor is not None:
        reach = abs(grasp_node - anchor) * dl
        for i, p in enumerate(path):
            if np.hypot(*(p - nodes[anchor])) > reach * (1 + 1e-9):
                raise ValueError(f"gripper path point {i} is {np.hypot(*(p - nodes[anchor])):.6g} "
                                 f"from anchored node {anchor}, beyond reach {reach:.6g}")
    pos = nodes[grasp_node].copy()
    moved = False
    for p in path:
        dist = np.hypot(*(p - pos))
        if dist == 0.0:
            continue
        k = int(np.ceil(dist / step))
        for s in range(1, k + 1):
            _drag(nodes, grasp_node, pos + (p - pos) * (s / k), dl, anchor)
        pos = p
        moved = True
    if not moved:
        return state
    return Curve(nodes, dl)


# -- validation ------------------------------------------------------------

def validate_physical(states, delta_l, threshold: float = DEFAULT_THRESHOLD,
                      grasp_indices=None) -> ValidationReport:
    """Measure how far each state departs from a chain of ``delta_l`` links.

    ``delta_l`` may be a single value or one per state.  Length errors are
    relative to ``segments * delta_l``; strains are signed per segment.
    """
    states = [s.nodes if isinstance(s, Curve) else np.asarray(s, dtype=float) for s in states]
    if not states:
        raise ValueError("no states to validate")
    dls = np.broadcast_to(np.asarray(delta_l, dtype=float), (len(states),))
    length_errors, deviations, extents, nominals = [], [], [], []
    hi, lo = -np.inf, np.inf
    for pts, dl in zip(states, dls):
        strain = signed_segment_strain(pts, dl)
        nominal = (len(pts) - 1) * dl
        length = np.sum(np.hypot(*np.diff(pts, axis=0).T))
        length_errors.append(float((length - nominal) / nominal))
        deviations.append(float(np.max(np.abs(strain))))
        extents.append(float(np.ptp(pts[:, 0])))
        nominals.append(float(nominal))
        hi = max(hi, float(strain.max()))
        lo = min(lo, float(strain.min()))
    return ValidationReport(length_errors, deviations, max(deviations), hi, lo, extents,
                            nominals, float(threshold), list(grasp_indices or []))


# -- multi-step execution --------------------------------------------------

def _test_anchor(anchor, n_train, n_test):
    # a held tail stays the tail when node counts differ
    if anchor is None:
        return None
    return n_test - 1 if anchor == n_train - 1 else min(anchor, n_test - 1)


def run_task(demo: TaskDemo, test_initial: Curve, config: RegistrationConfig | None = None,
             abscissa_scale: float = DEFAULT_ABSCISSA_SCALE) -> list:
    """Transfer every step of ``demo`` in turn, chaining predicted states.

    Each step warps against the current test state, assembles the keyframes
    and replays the grasp runs on the rope surrogate to predict the state the
    next step starts from.
    """
    state = test_initial
    results = []
    for k, step in enumerate(demo.steps):
        try:
            out = warp_tangent_scene(step.before, step.after, state, config, abscissa_scale)
            traj = generate_step_trajectory(out, step.trajectory, state)
            anchor = _test_anchor(demo.anchor, step.before.n_nodes, state.n_nodes)
            predicted = state
            for first, last in _grasp_runs(traj.keyframes):
                path = [traj.keyframes[j].position for j in range(first, last + 1)]
                predicted = replay_rope(predicted, traj.keyframes[first].grasp_node, path,
                                        anchor)
        except (ValueError, IndexError, RuntimeError) as exc:
            raise TaskError(k, exc) from exc
        results.append(StepResult(out, traj, predicted))
        state = predicted
    return results


# -- fixtures --------------------------------------------------------------

def _curve(thetas, delta_l, base=(0.0, 0.0)) -> Curve:
    return from_tangent(TangentProfile(thetas, base, delta_l))


def _grasp_trajectory(before: Curve, node: int, waypoints) -> Trajectory:
    start = before.nodes[node]
    kfs = [Keyframe(start, OPEN, node), Keyframe(start, CLOSED, node)]
    kfs += [Keyframe(p, CLOSED, node) for p in waypoints]
    kfs.append(Keyframe(waypoints[-1], OPEN, node))
    return Trajectory(tuple(kfs))


def _straighten():
    n_seg, dl = 20, 0.05
    before = _curve(np.linspace(0.0, 90.0, n_seg), dl)
    after = _curve(np.zeros(n_seg), dl)
    test = _curve(np.linspace(0.0, 150.0, n_seg), dl)
    traj = _grasp_trajectory(before, n_seg, [after.nodes[-1]])
    return TaskDemo((StepDemo(before, after, traj),), anchor=0), test


def _folded_edge(width, n_seg, fold_at, flap_heading):
    """Upper cloth edge laid along +x, folded back over itself near ``fold_at``.

    The turn is spread over a few segments so the heading stays continuous.
    """
    dl = width / n_seg
    turn = max(3, n_seg // 6)
    k0 = int(round(fold_at * n_seg)) - turn // 2
    th = np.zeros(n_seg)
    th[k0:k0 + turn] = np.linspace(0.0, flap_heading, turn + 2)[1:-1]
    th[k0 + turn:] = flap_heading
    return _curve(th, dl)


CLOTH_TRAIN = dict(width=0.46, n_seg=23, fold_at=0.55, flap_heading=165.0)
CLOTH_TESTS = {
    "cloth_unfold": dict(width=0.46, n_seg=23, fold_at=0.62, flap_heading=160.0),
    "cloth_unfold_narrow": dict(width=0.35, n_seg=18, fold_at=0.55, flap_heading=160.0),
    "cloth_unfold_wide": dict(width=0.58, n_seg=29, fold_at=0.75, flap_heading=160.0),
}


def _cloth(name):
    before = _folded_edge(**CLOTH_TRAIN)
    n_seg = CLOTH_TRAIN["n_seg"]
    after = _curve(np.zeros(n_seg), before.delta_l)
    traj = _grasp_trajectory(before, n_seg, [[before.nodes[-1, 0], 0.08], after.nodes[-1]])
    return TaskDemo((StepDemo(before, after, traj),), anchor=0), _folded_edge(**CLOTH_TESTS[name])


KNOT_WAYPOINTS = (
    [(0.95, 0.30), (0.70, 0.45)],
    [(0.50, 0.32), (0.48, -0.12)],
    [(0.62, -0.18), (0.66, 0.16), (0.56, 0.22)],
    [(0.62, 0.05), (0.90, -0.05)],
)


def _knot():
    n_seg, dl = 40, 0.03
    s = np.linspace(0.0, 1.0, n_seg)
    state = _curve(8.0 * np.sin(np.pi * s), dl)
    steps = []
    for waypoints in KNOT_WAYPOINTS:
        traj = _grasp_trajectory(state, n_seg, waypoints)
        after = replay_rope(state, n_seg, waypoints, anchor=0)
        steps.append(StepDemo(state, after, traj))
        state = after
    demo = TaskDemo(tuple(steps), anchor=0)
    test = _curve(12.0 * np.sin(np.pi * s) - 6.0 * s, dl)
    return demo, test


FIXTURES = {
    "straighten": _straighten,
    "cloth_unfold": lambda: _cloth("cloth_unfold"),
    "cloth_unfold_narrow": lambda: _cloth("cloth_unfold_narrow"),
    "cloth_unfold_wide": lambda: _cloth("cloth_unfold_wide"),
    "knot_4step": _knot,
}


def fixture_names() -> list:
    return sorted(FIXTURES)


def make_fixture(name: str):
    """Return ``(TaskDemo, test_initial_curve)`` for a named synthetic scene."""
    try:
        build = FIXTURES[name]
    except KeyError:
        raise ValueError(f"unknown fixture {name!r}; available: {', '.join(fixture_names())}") \
            from None
    return build()
