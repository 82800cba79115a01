"""Length-preserving transfer of deformable-object manipulation demos.

Registration runs on tangent-angle profiles instead of node positions, and
the target state is recovered by integrating the transferred angles.
"""

from .cpd import (
    RegistrationConfig,
    RegistrationError,
    RegistrationResult,
    cpd_register,
    gaussian_kernel,
    initial_sigma2,
    m_step,
    objective,
    posterior,
    transform,
    warp_points,
)
from .geometry import (
    Curve,
    TangentProfile,
    curve_length,
    from_tangent,
    resample_uniform,
    segment_angles,
    segment_deviation,
    tangent_points,
    to_tangent,
)
from .pipeline import (
    CartesianWarpOutput,
    Keyframe,
    Trajectory,
    WarpOutput,
    correspondence,
    generate_step_trajectory,
    grasp_target_position,
    map_grasp_node,
    warp_scene_cartesian,
    warp_tangent_scene,
    warp_trajectory_cartesian,
)
from .scenario import (
    StepDemo,
    TaskDemo,
    TaskError,
    ValidationReport,
    fixture_names,
    make_fixture,
    replay_rope,
    run_task,
    validate_physical,
)

__version__ = "0.1.0"
