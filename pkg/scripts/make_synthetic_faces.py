"""Write the bundled synthetic face dataset used for smoke runs.

Usage: python -m scripts.make_synthetic_faces [output_dir]
"""

import sys
from pathlib import Path

from src.synthetic import write_synthetic_dataset

OUT_DIR = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("data/synthetic")
CLASS_COUNT = 5
PER_CLASS = 10

manifest = write_synthetic_dataset(OUT_DIR, class_count=CLASS_COUNT, per_class=PER_CLASS)
print(f"Saved {CLASS_COUNT * PER_CLASS} images and {manifest}")
print(f"Run: python -m src.cli run --manifest {manifest} --k 4 --kind all --output-dir output/synthetic")
