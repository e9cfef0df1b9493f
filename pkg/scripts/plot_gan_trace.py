"""Plot a cGAN loss trace CSV (losses and discriminator accuracies).

    python scripts/plot_gan_trace.py runs/desk/reports/gan_trace.csv gan_trace.png

Needs matplotlib (``pip install .[plots]``).
"""

import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def main(src: str, dst: str, window: int = 20) -> None:
    data = np.genfromtxt(src, delimiter=",", names=True)
    kernel = np.ones(window) / window
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    for col in ("d_loss_real", "d_loss_fake", "g_loss"):
        top.plot(data["iter"][window - 1:], np.convolve(data[col], kernel, "valid"), label=col)
    top.axhline(np.log(2), color="grey", ls="--", lw=0.8)
    top.set_ylabel("loss")
    top.legend()
    for col in ("d_acc_real", "d_acc_fake"):
        bottom.plot(data["iter"][window - 1:], np.convolve(data[col], kernel, "valid"), label=col)
    bottom.axhline(0.5, color="grey", ls="--", lw=0.8)
    bottom.set_ylabel("D accuracy")
    bottom.set_xlabel("iteration")
    bottom.legend()
    fig.tight_layout()
    fig.savefig(dst, dpi=120)


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
