"""Small helpers shared by the demo scripts: an output folder and optional plotting."""

import os
import sys

OUT = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:  # the demos still print their numbers
    plt = None


def save(fig, name):
    path = os.path.join(OUT, name)
    fig.savefig(path, dpi=110, bbox_inches="tight")
    plt.close(fig)
    print("  wrote", path)


def panels(images, titles, name, cmap="gray"):
    """One row of images with titles, saved under ``name`` when matplotlib is present."""
    if plt is None:
        return
    fig, axes = plt.subplots(1, len(images), figsize=(3.2 * len(images), 3.4))
    for ax, im, title in zip(axes, images, titles):
        ax.imshow(im, cmap=cmap, interpolation="nearest")
        ax.set_title(title, fontsize=9)
        ax.axis("off")
    save(fig, name)
