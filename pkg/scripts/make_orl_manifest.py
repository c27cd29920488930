"""Build a manifest for a local copy of the ORL face database.

The archive is not downloaded here; unpack it so that the subject folders
``s1`` .. ``s40`` (ten PGM files each) sit under ``data/orl``.

Usage: python -m scripts.make_orl_manifest [orl_dir] [class_count]
"""

import sys
from pathlib import Path

ORL_DIR = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("data/orl")
CLASS_COUNT = int(sys.argv[2]) if len(sys.argv) > 2 else 5

if not ORL_DIR.is_dir():
    sys.exit(f"{ORL_DIR} not found; unpack the ORL archive there first")

lines = [f"# classes: {CLASS_COUNT}"]
for class_id in range(CLASS_COUNT):
    subject = ORL_DIR / f"s{class_id + 1}"
    images = sorted(subject.glob("*.pgm"), key=lambda p: (len(p.stem), p.stem))
    if not images:
        sys.exit(f"no PGM files in {subject}")
    lines.extend(f"{image.relative_to(ORL_DIR).as_posix()} {class_id}" for image in images)
    print(f"{subject.name}: {len(images)} images -> class {class_id}")

manifest = ORL_DIR / "manifest.txt"
manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
print(f"Saved {manifest} with {len(lines) - 1} entries")
