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
# # A four-step knot
#
# Each step of a longer task starts from whatever the previous step left
# behind. `run_task` warps one step, replays its keyframes on the rope
# surrogate and feeds the predicted state into the next registration.

# %%
from pathlib import Path

import numpy as np

from tangent_warp import curve_length, make_fixture, run_task, to_tangent
from tangent_warp.io_formats import plot_svg, save_demo

OUT = Path("out")
OUT.mkdir(exist_ok=True)

demo, test = make_fixture("knot_4step")
len(demo.steps), test.n_nodes, test.nominal_length

# %% [markdown]
# By the end of the demonstration the rope has turned through well over a full
# circle, which is what a knot needs.

# %%
[round(float(np.ptp(to_tangent(s.after).thetas))) for s in demo.steps]

# %%
results = run_task(demo, test)
[(r.output.registration.iterations,
  abs(curve_length(r.predicted) - test.nominal_length)) for r in results]

# %% [markdown]
# Running the task on the demonstration's own starting rope should reproduce
# the demonstration.

# %%
own = run_task(demo, demo.steps[0].before)
np.hypot(*(own[-1].predicted.nodes - demo.steps[-1].after.nodes).T).max()

# %%
layers = [(test.nodes, {"label": "test start", "color": "#999999", "dash": "6,4"})]
layers += [(r.predicted.nodes, {"label": f"after step {k}"}) for k, r in enumerate(results, 1)]
plot_svg(layers, OUT / "05_knotting.svg")

# %% [markdown]
# The demonstration can be written to a file and replayed with the command
# line tool: `tangent-warp task out/knot.demo.json <test scene> --out-dir out/knot`.

# %%
save_demo(OUT / "knot.demo.json", demo)
