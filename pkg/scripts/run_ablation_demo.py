#!/usr/bin/env python3
"""End-to-end demo: synthesize a planted corpus, fit both codebooks,
textualize, and run the four-mode baseline ablation.

Labels depend only on the acoustic cluster, so the T column should sit
at chance and the T+A / T+A+V columns should be near perfect.

    python scripts/run_ablation_demo.py --workdir /tmp/demo --seed 7
"""

import argparse
import sys
from pathlib import Path

from nvtext.cli import main as nvtext


def run(workdir: Path, seed: int) -> int:
    data = workdir / "data"
    steps = [
        ["synth", "--out-dir", str(data), "--seed", str(seed),
         "--segments", "400", "--words-per-segment", "6"],
        ["fit", "--manifest", str(data / "manifest.json"), "--modality", "visual",
         "--seed", str(seed), "--out", str(workdir / "visual.model.json")],
        ["fit", "--manifest", str(data / "manifest.json"), "--modality", "acoustic",
         "--seed", str(seed), "--out", str(workdir / "acoustic.model.json")],
        ["textualize", "--manifest", str(data / "manifest.json"),
         "--visual-model", str(workdir / "visual.model.json"),
         "--acoustic-model", str(workdir / "acoustic.model.json"),
         "--modes", "t,tv,ta,tav", "--out", str(workdir / "corpus.jsonl")],
        ["baseline", "--corpus", str(workdir / "corpus.jsonl"), "--task", "binary",
         "--modes", "t,tv,ta,tav", "--dataset-name", "synth",
         "--out", str(workdir / "metrics.json")],
    ]
    for argv in steps:
        print(f"\n$ nvtext {' '.join(argv)}")
        code = nvtext(argv)
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", type=Path, default=Path("/tmp/nvtext-demo"))
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()
    args.workdir.mkdir(parents=True, exist_ok=True)
    sys.exit(run(args.workdir, args.seed))
