"""
Example notebook code for training the five classifiers and reading the reports.

Paste these cells into a Jupyter notebook (or run via `jupytext`) to run the
whole pipeline, print the rate tables, plot confusion matrices and compare
the learned structures across the variants.
"""

# %%
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from src.bayesnet import count_arrays, robinson_dag_count
from src.metrics import render_feature_table, render_prior_table, render_reports
from src.pipeline import read_labels, run_pipeline
from src.settings import build_config
from src.synthetic import write_synthetic_dataset

# %% [markdown]
# ## Search space
# Number of labelled DAGs on n nodes; the nine block attributes plus the class give n = 10.

# %%
for n in range(1, 11):
    print(f"G({n}) = {robinson_dag_count(n)}")

# %% [markdown]
# ## Run every variant
# Uses `data/orl/manifest.txt` when present, otherwise the synthetic faces.

# %%
manifest_path = Path("data/orl/manifest.txt")
if not manifest_path.exists():
    manifest_path = write_synthetic_dataset("data/synthetic")
k = "4" if "synthetic" in str(manifest_path) else "8"
config = build_config({"manifest": str(manifest_path), "output_dir": "output/notebook", "k": k, "kind": "all"})
result = run_pipeline(config)
print(render_reports(result.reports))

# %% [markdown]
# ## Prior and attribute tables
# Laplace estimates on the training label vectors.

# %%
_, labels, classes = read_labels(config.output_dir / "labels_train.csv")
class_count = result.reports[0].class_count
counts = count_arrays(labels, classes, (int(k),) * labels.shape[1], class_count)
print(render_prior_table((counts.class_counts + 1.0) / (counts.total + class_count)))
print(render_feature_table(counts, value=0))

# %% [markdown]
# ## Confusion matrices on the test split

# %%
fig, axes = plt.subplots(1, len(result.reports), figsize=(4 * len(result.reports), 4))
for ax, report in zip(np.atleast_1d(axes), result.reports):
    matrix = np.asarray(report.confusion)
    ax.imshow(matrix, cmap="Blues")
    for (t, p), count in np.ndenumerate(matrix):
        ax.text(p, t, str(count), ha="center", va="center", fontsize=8)
    ax.set_title(f"{report.network}\nPCC {report.test_pcc:.2f}")
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
plt.tight_layout()
plt.show()

# %% [markdown]
# ## Learned structures
# `F2 -> F1` means block 2 has block 1 as its attribute parent.

# %%
for report in result.reports:
    print(f"=== {report.network} ({report.structure_label}) ===")
    print("\n".join(report.structure))
