#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Sample grids and training curves
"""
import logging
import os

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
from matplotlib.figure import Figure

from . import InvalidArgumentError
from . import data as kdata
from . import util as kutil

logger = logging.getLogger(__name__)

#: Number of rows and columns of sample grids
GRID_SIZE = 8

#: Metric name prefixes plotted in separate panels
PANELS = ("d/", "g/", "agkd/", "eval/")


def make_grid(images, nrow=GRID_SIZE, padding=1):
    """Tile ``[N, C, H, W]`` images in [-1, 1] into one uint8 image

    Return
    ------
    numpy.ndarray
        ``[rows, cols]`` for one channel, ``[rows, cols, C]`` otherwise
    """
    pixels = kdata.unit_to_uint8(images)
    if pixels.ndim != 4:
        raise InvalidArgumentError(f"Expected images of shape [N, C, H, W], got {pixels.shape}")
    n, c, h, w = pixels.shape
    ncol = nrow
    nrows = -(-n // ncol)
    grid = np.zeros((nrows * (h + padding) + padding, ncol * (w + padding) + padding, c), dtype="uint8")
    for k in range(n):
        row, col = divmod(k, ncol)
        y = padding + row * (h + padding)
        x = padding + col * (w + padding)
        grid[y : y + h, x : x + w] = pixels[k].transpose(1, 2, 0)
    return grid[..., 0] if c == 1 else grid


def save_sample_grid(images, path, nrow=GRID_SIZE):
    """Save a PNG grid of generated images and return its path"""
    path = kutil.check_dir(path)
    grid = make_grid(images, nrow=nrow)
    if grid.ndim == 2:
        plt.imsave(path, grid, cmap="gray", vmin=0, vmax=255)
    else:
        plt.imsave(path, grid)
    logger.debug(f"Saved sample grid: {path}")
    return path


def plot_run(run_dir, names=None, output=None):
    """Plot the metric curves of a run

    Parameters
    ----------
    run_dir: str
        Run directory containing :file:`metrics.csv`
    names: list(str), None
        Metrics to plot, all by default
    output: str, None
        Defaults to :file:`{run_dir}/curves.png`

    Return
    ------
    str
        Figure path
    """
    csvfile = os.path.join(run_dir, "metrics.csv")
    if not os.path.exists(csvfile):
        raise FileNotFoundError(f"No metrics file in run directory: {run_dir}")
    df = pd.read_csv(csvfile)
    if names:
        df = df[df["name"].isin(names)]
    if df.empty:
        raise InvalidArgumentError(f"No metric to plot in {csvfile}")
    panels = [prefix for prefix in PANELS if df["name"].str.startswith(prefix).any()]
    others = ~df["name"].str.startswith(PANELS)
    if others.any():
        panels.append(None)

    fig = Figure(figsize=(7, 2.5 * len(panels)))
    axes = fig.subplots(len(panels), 1, squeeze=False)[:, 0]
    for ax, prefix in zip(axes, panels):
        sub = df[others] if prefix is None else df[df["name"].str.startswith(prefix)]
        for name, curve in sub.groupby("name"):
            curve = curve.groupby("step")["value"].mean()
            ax.plot(curve.index, curve.values, label=name, marker="o" if len(curve) < 20 else None)
        ax.set_ylabel(prefix.rstrip("/") if prefix else "other")
        ax.legend(fontsize="small")
        ax.grid(alpha=0.3)
    axes[-1].set_xlabel("step")
    fig.tight_layout()

    output = kutil.check_dir(output or os.path.join(run_dir, "curves.png"))
    fig.savefig(output, dpi=100)
    logger.info(f"Saved training curves: {output}")
    return output
