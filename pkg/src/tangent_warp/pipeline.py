"""Trajectory transfer from a demonstrated scene to a new one.

Two routes are provided.  The tangent route registers the tangent-angle
profiles of the training and test objects, averages the demonstrated
after-state angles through the resulting correspondence weights and
integrates them into a target curve, so the target always has the test
object's length.  The Cartesian route registers node positions directly and
pushes the demonstrated keyframes (and after-state) through the fitted map.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cpd import RegistrationConfig, RegistrationResult, cpd_register
from .geometry import (
    DEFAULT_ABSCISSA_SCALE,
    Curve,
    TangentProfile,
    from_tangent,
    segment_deviation,
    to_tangent,
)

OPEN = "open"
CLOSED = "closed"


@dataclass(frozen=True)
class Keyframe:
    position: tuple
    status: str = OPEN
    grasp_node: Optional[int] = None

    def __post_init__(self):
        pos = tuple(float(v) for v in np.asarray(self.position, dtype=float).reshape(-1))
        if len(pos) != 2 or not all(np.isfinite(pos)):
            raise ValueError(f"keyframe position must be a finite 2-D point, got {self.position}")
        if self.status not in (OPEN, CLOSED):
            raise ValueError(f"status must be 'open' or 'closed', got {self.status!r}")
        if self.grasp_node is not None:
            if int(self.grasp_node) != self.grasp_node or self.grasp_node < 0:
                raise ValueError(f"grasp_node must be a non-negative integer, got {self.grasp_node}")
            object.__setattr__(self, "grasp_node", int(self.grasp_node))
        object.__setattr__(self, "position", pos)


@dataclass(frozen=True)
class Trajectory:
    keyframes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "keyframes", tuple(self.keyframes))

    def __len__(self):
        return len(self.keyframes)

    @property
    def positions(self) -> np.ndarray:
        return np.array([k.position for k in self.keyframes], dtype=float).reshape(-1, 2)

    def check_nodes(self, n_nodes: int):
        for i, k in enumerate(self.keyframes):
            if k.grasp_node is not None and k.grasp_node >= n_nodes:
                raise ValueError(f"keyframe {i}: grasp node {k.grasp_node} outside object "
                                 f"of {n_nodes} nodes")


@dataclass(eq=False)
class WarpOutput:
    target_profile: TangentProfile
    target_curve: Curve
    correspondence: np.ndarray
    grasp_map: dict
    registration: RegistrationResult
    train_before: Curve = None
    train_after: Curve = None
    test_before: Curve = None


@dataclass(eq=False)
class CartesianWarpOutput:
    """Cartesian baseline: the after-state and keyframes pushed through f."""

    implied_target: np.ndarray
    registration: RegistrationResult
    delta_l: float
    trajectory: Trajectory | None = None
    train_before: Curve = None
    train_after: Curve = None
    test_before: Curve = None
    extra: dict = field(default_factory=dict)

    @property
    def segment_deviation(self) -> float:
        return segment_deviation(self.implied_target, self.delta_l)


def correspondence(reg: RegistrationResult) -> np.ndarray:
    """Row-stochastic weights ``C[n, m]`` of training point ``m`` for test point ``n``.

    The posterior columns are transposed and renormalized over the training
    points, which drops whatever mass went to the outlier component.
    """
    P = np.asarray(reg.P, dtype=float)
    mass = P.sum(axis=0)
    empty = np.flatnonzero(~(mass > 0))
    if len(empty):
        raise ValueError(f"test node {int(empty[0])} has zero posterior mass over training nodes")
    return P.T / mass[:, None]


def map_grasp_node(C, m: int) -> int:
    """Map training node ``m`` to the test node it corresponds to.

    ``C`` is indexed by segments (one tangent point per segment), so node
    ``m`` is looked up through the segment it starts; the tail node, which
    starts none, goes through the last segment and maps to the tail of the
    matched test segment.  Ties go to the smaller index.
    """
    C = np.asarray(C)
    n_seg = C.shape[1]
    if not 0 <= m <= n_seg:
        raise IndexError(f"training node {m} out of range 0..{n_seg}")
    if m == n_seg:
        return int(np.argmax(C[:, n_seg - 1])) + 1
    return int(np.argmax(C[:, m]))


def grasp_target_position(output: WarpOutput, m: int) -> np.ndarray:
    return output.target_curve.nodes[map_grasp_node(output.correspondence, m)].copy()


def warp_tangent_scene(train_before: Curve, train_after: Curve, test_before: Curve,
                       config: RegistrationConfig | None = None,
                       abscissa_scale: float = DEFAULT_ABSCISSA_SCALE) -> WarpOutput:
    if train_before.n_nodes != train_after.n_nodes:
        raise ValueError(f"training before/after node counts differ: "
                         f"{train_before.n_nodes} vs {train_after.n_nodes}")
    ref = to_tangent(train_before, abscissa_scale)
    obs = to_tangent(test_before, abscissa_scale)
    goal = to_tangent(train_after, abscissa_scale)
    reg = cpd_register(obs.points, ref.points, config)
    C = correspondence(reg)
    target = TangentProfile(C @ goal.thetas, test_before.nodes[0], test_before.delta_l,
                            abscissa_scale)
    grasp_map = {m: map_grasp_node(C, m) for m in range(train_before.n_nodes)}
    return WarpOutput(target, from_tangent(target), C, grasp_map, reg,
                      train_before, train_after, test_before)


def warp_trajectory_cartesian(reg: RegistrationResult, traj: Trajectory) -> Trajectory:
    if len(traj) == 0:
        return Trajectory()
    moved = reg.apply(traj.positions)
    return Trajectory(tuple(Keyframe(p, k.status, k.grasp_node)
                            for p, k in zip(moved, traj.keyframes)))


def warp_scene_cartesian(train_before: Curve, train_after: Curve, test_before: Curve,
                         config: RegistrationConfig | None = None,
                         trajectory: Trajectory | None = None) -> CartesianWarpOutput:
    """Register node positions directly and warp the after-state through f.

    The warped training after-state is the target rope the warped trajectory
    implies; its neighbour distances are measured against the test object's
    ``delta_l``.
    """
    if train_before.n_nodes != train_after.n_nodes:
        raise ValueError(f"training before/after node counts differ: "
                         f"{train_before.n_nodes} vs {train_after.n_nodes}")
    reg = cpd_register(test_before.nodes, train_before.nodes, config)
    implied = reg.apply(train_after.nodes)
    warped = None if trajectory is None else warp_trajectory_cartesian(reg, trajectory)
    return CartesianWarpOutput(implied, reg, test_before.delta_l, warped,
                               train_before, train_after, test_before)


def _grasp_runs(keyframes):
    runs = []
    i = 0
    while i < len(keyframes):
        if keyframes[i].status == CLOSED:
            j = i
            while j + 1 < len(keyframes) and keyframes[j + 1].status == CLOSED:
                j += 1
            runs.append((i, j))
            i = j + 1
        else:
            i += 1
    return runs


def _similarity(src_a, src_b, dst_a, dst_b):
    """Map taking segment src_a->src_b onto dst_a->dst_b (rotation, scale, shift)."""
    s = complex(*(src_b - src_a))
    d = complex(*(dst_b - dst_a))
    k = d / s if abs(s) > 1e-12 else 1.0

    def apply(p):
        z = k * complex(*(p - src_a))
        return dst_a + np.array([z.real, z.imag])
    return apply


def generate_step_trajectory(output: WarpOutput, train_traj: Trajectory,
                             test_before: Curve) -> Trajectory:
    """Assemble test keyframes for one manipulation step.

    Each run of closed keyframes is one grasp.  Its first frame (and an open
    approach frame just before it naming the same node) goes to the mapped
    node on ``test_before``; its last frame (and an open release frame just
    after it) goes to that node on the target curve.  Closed frames in between
    are carried by the similarity map taking the training grasp->release
    segment onto the test one.  Open frames without a node are kept as is.
    """
    kfs = train_traj.keyframes
    out = [None] * len(kfs)
    for i, k in enumerate(kfs):
        if k.status == CLOSED and k.grasp_node is None:
            raise ValueError(f"keyframe {i} is closed but names no grasp node")
    for first, last in _grasp_runs(kfs):
        m = kfs[first].grasp_node
        if any(kfs[j].grasp_node != m for j in range(first, last + 1)):
            raise ValueError(f"keyframes {first}..{last} switch grasp node while closed")
        n = map_grasp_node(output.correspondence, m)
        start = test_before.nodes[n].copy()
        end = output.target_curve.nodes[n].copy()
        src_a = np.array(kfs[first].position)
        src_b = np.array(kfs[last].position)
        carry = _similarity(src_a, src_b, start, end)
        for j in range(first, last + 1):
            if j == first:
                pos = start
            elif j == last:
                pos = end
            else:
                pos = carry(np.array(kfs[j].position))
            out[j] = Keyframe(pos, CLOSED, n)
        if first > 0 and out[first - 1] is None and kfs[first - 1].grasp_node == m:
            out[first - 1] = Keyframe(start, kfs[first - 1].status, n)
        if last + 1 < len(kfs) and kfs[last + 1].grasp_node == m:
            out[last + 1] = Keyframe(end, kfs[last + 1].status, n)
    for i, k in enumerate(kfs):
        if out[i] is None:
            if k.grasp_node is not None:
                n = map_grasp_node(output.correspondence, k.grasp_node)
                out[i] = Keyframe(test_before.nodes[n], k.status, n)
            else:
                out[i] = k
    return Trajectory(tuple(out))
