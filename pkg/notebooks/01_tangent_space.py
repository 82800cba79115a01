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
# # Curves as heading profiles
#
# A rope or cloth edge is stored as a polyline whose nodes are all `delta_l`
# apart. Listing the heading of every segment gives an equivalent description
# that cannot express a stretched rope at all: whatever the headings are,
# integrating them back with steps of `delta_l` yields the same total length.

# %%
from pathlib import Path

import numpy as np

from tangent_warp import (
    Curve,
    TangentProfile,
    curve_length,
    from_tangent,
    resample_uniform,
    to_tangent,
)
from tangent_warp.io_formats import plot_svg

OUT = Path("out")
OUT.mkdir(exist_ok=True)

# %% [markdown]
# Start from a raw, unevenly sampled polyline (say, from a vision pipeline)
# and resample it to 31 equally spaced nodes.

# %%
t = np.sort(np.random.default_rng(0).uniform(0, 1.6 * np.pi, 80))
raw = np.column_stack([np.cos(t) * (1 + 0.2 * t), np.sin(t) * (1 + 0.2 * t)]) * 0.2
rope = resample_uniform(raw, 31)
rope.delta_l, curve_length(rope), curve_length(raw)

# %% [markdown]
# The resampled rope is slightly shorter than the raw polyline because chords
# cut corners. From here on the rope length is `30 * delta_l` by definition.

# %%
profile = to_tangent(rope)
profile.thetas[:5], profile.thetas[-5:]

# %% [markdown]
# Headings are unwrapped, so a spiral that turns more than a full circle keeps
# climbing instead of jumping back by 360 degrees.

# %%
np.ptp(profile.thetas), np.abs(np.diff(profile.thetas)).max()

# %% [markdown]
# The registration works on the points `(10 * i, theta_i)`. The factor of ten
# makes one node step comparable to a ten degree change in heading.

# %%
profile.points[:3]

# %% [markdown]
# Any heading sequence integrates back to a curve of exactly the same length.
# Scrambling the headings is an extreme test of that.

# %%
scrambled = TangentProfile(np.random.default_rng(1).permutation(profile.thetas),
                           profile.base_point, profile.delta_l)
back = from_tangent(scrambled)
curve_length(back) - 30 * rope.delta_l

# %%
plot_svg([(raw, {"label": "raw polyline", "color": "#999999"}),
          (rope.nodes, {"label": "resampled", "markers": True}),
          (back.nodes, {"label": "scrambled headings", "dash": "6,4"})],
         OUT / "01_tangent_space.svg")

# %% [markdown]
# The round trip through heading space is exact up to rounding.

# %%
np.abs(from_tangent(to_tangent(rope)).nodes - rope.nodes).max()

# %%
isinstance(back, Curve)
