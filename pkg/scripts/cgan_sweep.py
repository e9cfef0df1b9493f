"""Train the cGAN on desk-scale data under several settings and report the
last-100-iteration means used by the equilibrium check.

    python scripts/cgan_sweep.py '{"g_learning_rate": 0.001}' '{"beta1": 0.9, "data_seed": 2}'

Each argument is a JSON object of CganConfig fields, plus an optional
"data_seed" for the synthetic dataset.
"""

import json
import sys
import time

import numpy as np

from malvis.cgan import CganConfig, generate_malign, train_cgan
from malvis.prs import derive_layout, encode_batch
from malvis.synth import SynthConfig, gen_dataset


def run(overrides: dict, n_benign: int = 600, n_malign: int = 300, data_seed: int = 1) -> dict:
    X, y = gen_dataset(SynthConfig(n_benign=n_benign, n_malign=n_malign, rng_seed=data_seed))
    ink = encode_batch(X, derive_layout(128))
    cfg = CganConfig(**overrides)
    t0 = time.time()

    def progress(epoch, trace):
        if epoch % 10 == 0:
            means = {k: round(v, 3) for k, v in trace.tail_means(50).items()}
            print(f"  epoch {epoch:3d} {time.time() - t0:6.0f}s {means}", flush=True)

    gen, _, trace = train_cgan(ink, y, cfg, progress=progress)
    black = np.mean([im.black_count() for im in generate_malign(gen, 200, 1)])
    return {"tail": trace.tail_means(100), "generated_black": float(black),
            "real_malign_black": float(ink[y == 1].sum(axis=(1, 2)).mean())}


if __name__ == "__main__":
    for arg in sys.argv[1:] or ["{}"]:
        overrides = json.loads(arg)
        data_seed = overrides.pop("data_seed", 1)
        print(f"settings {overrides} data_seed {data_seed}", flush=True)
        print(json.dumps(run(overrides, data_seed=data_seed), indent=2), flush=True)
