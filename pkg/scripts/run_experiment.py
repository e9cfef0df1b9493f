"""Run both arms at desk scale and print the headline numbers.

    python scripts/run_experiment.py --out-dir runs/desk [--config configs/desk.yaml]
"""

import argparse
import json
import sys
from pathlib import Path

from malvis.cli import main

ROOT = Path(__file__).resolve().parent.parent


def summarise(out: Path) -> None:
    manifest = json.loads((out / "manifest.json").read_text())
    tail = json.loads((out / "reports" / "gan_tail.json").read_text())
    print(f"arm A accuracy {manifest['accuracy']['a']:.4f}")
    print(f"arm B accuracy {manifest['accuracy']['b']:.4f}")
    print("cGAN last-100 means: " + ", ".join(f"{k} {v:.3f}" for k, v in tail.items()))
    print(f"generated {manifest['stages']['generate']['n_generated']} images, "
          f"mean black pixels {manifest['stages']['generate']['mean_black']:.1f}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=str(ROOT / "configs" / "desk.yaml"))
    ap.add_argument("--out-dir", default="runs/desk")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rc = main(["run-all", "-v", "--config", args.config, "--out-dir", args.out_dir,
               "--seed", str(args.seed)])
    if rc == 0:
        summarise(Path(args.out_dir))
    sys.exit(rc)
