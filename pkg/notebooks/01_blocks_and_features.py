"""
Example notebook code for inspecting block textures and codebook labels.

Copy/paste these cells into a Jupyter notebook (or run directly via
`jupytext`) to load a face dataset, draw its 3x3 block grid, compare the
block descriptors across classes and look at the k-means label vectors.
"""

# %%
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from src.data_loader import load_images, read_manifest
from src.features import DESCRIPTOR_NAMES, describe_dataset, descriptor_matrix, grid_blocks
from src.quantizer import kmeans_fit, labelize_frame
from src.synthetic import write_synthetic_dataset

# %% [markdown]
# ## Load a dataset
# Point `manifest_path` at a real manifest (see `scripts/make_orl_manifest.py`)
# or fall back to the bundled synthetic faces.

# %%
manifest_path = Path("data/orl/manifest.txt")
if not manifest_path.exists():
    manifest_path = write_synthetic_dataset("data/synthetic")
manifest = read_manifest(manifest_path)
images = load_images(manifest)
names = [relative for relative, _ in manifest.entries]
print(f"{len(images)} images, {manifest.class_count} classes, dims {manifest.image_dims}")

# %% [markdown]
# ## Block grid
# The last row and column absorb the remainder when the size is not a multiple of 3.

# %%
first_of_class = [names.index(next(n for n, c in manifest.entries if c == k)) for k in range(manifest.class_count)]
fig, axes = plt.subplots(1, len(first_of_class), figsize=(3 * len(first_of_class), 3.5))
for ax, index in zip(np.atleast_1d(axes), first_of_class):
    image = images[index]
    grid = grid_blocks(image)
    ax.imshow(image.pixels, cmap="gray", vmin=0, vmax=255)
    for cut in np.cumsum(grid.column_widths)[:-1]:
        ax.axvline(cut - 0.5, color="red", linewidth=1)
    for cut in np.cumsum(grid.row_heights)[:-1]:
        ax.axhline(cut - 0.5, color="red", linewidth=1)
    ax.set_title(f"class {manifest.entries[index][1] + 1}")
    ax.axis("off")
plt.tight_layout()
plt.show()

# %% [markdown]
# ## Block descriptors
# Mean of each descriptor per class and block position.

# %%
features = describe_dataset(images, names)
features["class"] = features["image"].map(dict(manifest.entries)) + 1
summary = features.groupby(["class", "block"])[list(DESCRIPTOR_NAMES)].mean()
summary.head(18)

# %%
fig, axes = plt.subplots(2, 3, figsize=(12, 6))
for ax, name in zip(axes.ravel(), DESCRIPTOR_NAMES):
    summary[name].unstack("block").plot(ax=ax, legend=False, marker="o")
    ax.set_title(name)
    ax.set_xlabel("class")
axes[0, 0].legend(title="block", ncol=3, fontsize="small")
plt.tight_layout()
plt.show()

# %% [markdown]
# ## Codebook labels
# Quantize every block with one shared codebook and show the label vectors.

# %%
k = 4 if "synthetic" in str(manifest_path) else 8
codebook = kmeans_fit(descriptor_matrix(features), k=k)
labels = labelize_frame(codebook, features.drop(columns="class"))
print(f"inertia by iteration: {np.round(codebook.inertia_history, 3)}")

fig, ax = plt.subplots(figsize=(6, 8))
ax.imshow(labels.iloc[:, 1:].to_numpy(), aspect="auto", cmap="tab10", interpolation="nearest")
ax.set_xlabel("block")
ax.set_ylabel("image")
ax.set_title(f"label vectors (k={k})")
plt.show()
