# ---
# jupyter:
#   jupytext:
#     formats: ipynb,py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
#       format_version: '1.3'
#   kernelspec:
#     display_name: Python 3
#     language: python
#     name: python3
# ---

# %% [markdown]
# # Straightening a rope
#
# The demonstration pulls the free end of a gently curved rope until the rope
# is straight, while node 0 stays pinned. The test rope is curled much
# further. Transferring the demonstration through Cartesian coordinates asks
# for a straight rope that is too long. Transferring it through heading space
# produces a straight rope of the right length.

# %%
from pathlib import Path

import numpy as np

from tangent_warp import (
    generate_step_trajectory,
    make_fixture,
    run_task,
    segment_deviation,
    validate_physical,
    warp_scene_cartesian,
    warp_tangent_scene,
)
from tangent_warp.io_formats import plot_svg

OUT = Path("out")
OUT.mkdir(exist_ok=True)

demo, test = make_fixture("straighten")
step = demo.steps[0]
test.n_nodes, test.delta_l, test.nominal_length

# %% [markdown]
# ## Cartesian transfer
#
# Register the training rope onto the test rope in the plane and push the
# demonstrated final state through the fitted field.

# %%
cart = warp_scene_cartesian(step.before, step.after, test, trajectory=step.trajectory)
report = validate_physical([cart.implied_target], test.delta_l)
report.max_strain, report.over_stretch

# %%
release = np.array(cart.trajectory.keyframes[-1].position)
np.hypot(*release), test.nominal_length

# %% [markdown]
# The release point lies farther from the pinned end than the rope can reach.

# %% [markdown]
# ## Heading-space transfer

# %%
out = warp_tangent_scene(step.before, step.after, test)
segment_deviation(out.target_curve, test.delta_l)

# %%
out.grasp_map[step.before.n_nodes - 1]

# %% [markdown]
# The grasped tail of the training rope maps to the tail of the test rope. The
# generated keyframes grasp it where it lies and release it at full extension.

# %%
traj = generate_step_trajectory(out, step.trajectory, test)
[(k.status, np.round(k.position, 3)) for k in traj.keyframes]

# %% [markdown]
# Replaying the keyframes on the follow-the-leader rope surrogate gives the
# state the robot would leave behind.

# %%
(result,) = run_task(demo, test)
segment_deviation(result.predicted, test.delta_l)

# %%
plot_svg([(test.nodes, {"label": "test rope", "color": "#1f77b4", "dash": "6,4"}),
          (cart.implied_target, {"label": "cartesian target", "color": "#ff7f0e"}),
          (out.target_curve.nodes, {"label": "tangent target", "color": "#d62728"}),
          (traj.positions, {"label": "keyframes", "color": "#2ca02c", "markers": True})],
         OUT / "03_straightening.svg")
