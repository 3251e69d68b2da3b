#!/usr/bin/env python3
"""Build a small self-contained demo dataset from synthetic frames.

Generates random PNG frames for a handful of fake videos (including one too
short for the default frame indices, to show the skip accounting), samples a
permutation set, builds shards, and verifies the result. Everything lands
under the given output directory.

    python scripts/make_demo_dataset.py --out /tmp/vjig-demo
"""

import argparse
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from vjig.cli import main as vjig_main
from vjig.rng import substream


def write_frames(root: Path, n_videos: int, n_frames: int) -> tuple[Path, Path]:
    frames = root / "frames"
    rng = substream(2024, "demo-frames")
    lines = []
    for v in range(n_videos):
        (frames / f"video{v}").mkdir(parents=True, exist_ok=True)
        refs = []
        count = 4 if v == n_videos - 1 else n_frames  # last video is too short
        for f in range(count):
            ref = f"video{v}/frame{f:04d}.png"
            pixels = rng.integers(0, 256, (256, 320, 3), dtype=np.uint8)
            Image.fromarray(pixels).save(frames / ref)
            refs.append(ref)
        lines.append(f"video{v} " + " ".join(refs))
    tuples = root / "tuples.txt"
    tuples.write_text("\n".join(lines) + "\n")
    return frames, tuples


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--out", required=True, help="demo root directory")
    parser.add_argument("--videos", type=int, default=5)
    parser.add_argument("--frames-per-video", type=int, default=12)
    parser.add_argument("--n-perms", type=int, default=100)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    root = Path(args.out)
    root.mkdir(parents=True, exist_ok=True)
    frames, tuples = write_frames(root, args.videos, args.frames_per_video)
    perms = root / "perms.txt"
    dataset = root / "dataset"

    steps = [
        ["perms", "--mode", "sp", "--n", str(args.n_perms), "--np", "4", "--nf", "3",
         "--seed", str(args.seed), "--out", str(perms)],
        ["build", "--tuples", str(tuples), "--frames-dir", str(frames), "--perm-file", str(perms),
         "--out", str(dataset), "--seed", str(args.seed), "--max-skip-frac", "0.5"],
        ["verify", "--perm-file", str(perms), "--out", str(dataset)],
        ["stats", "--perm-file", str(perms)],
    ]
    for argv in steps:
        print(f"\n$ vjig {' '.join(argv)}")
        rc = vjig_main(argv)
        if rc != 0:
            return rc
    print(f"\ndemo dataset ready under {dataset}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
