"""Figure rendering for run artifacts.

Each function draws one diagnostic from a trace and writes it to a file; the
format follows the file extension (the CLI uses .svg).  Figures mirror the
plot-data CSVs one to one; the CSVs remain the contract.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finish(fig, ax, path, xlabel="iteration k", ylabel=""):
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_consensus(series, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    for i in range(series.values.shape[1]):
        ax.plot(series.ks, series.values[:, i], lw=0.8)
    ax.set_xscale("log")
    _finish(fig, ax, path, ylabel=f"(k+1)^{series.tau:g} * |s_i - xbar|")


def plot_tracking(trace, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    for i in range(trace.n):
        ax.plot(trace.ks, trace.s[:, i, 0], lw=0.8, alpha=0.8)
    ax.plot(trace.ks, trace.xbar[:, 0], "k--", lw=1.6, label="network average")
    ax.legend(loc="best", fontsize=8)
    _finish(fig, ax, path, ylabel="s_i and xbar")


def plot_decisions(trace, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    for i in range(trace.n):
        ax.plot(trace.ks, trace.x[:, i, 0], lw=0.8, label=f"agent {i}")
    if trace.n <= 10:
        ax.legend(loc="best", fontsize=7, ncol=2)
    _finish(fig, ax, path, ylabel="x_i")


def plot_cost(ks, named_series: dict, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, series in named_series.items():
        ax.plot(ks, series, lw=1.0, label=label)
    ax.legend(loc="best", fontsize=8)
    _finish(fig, ax, path, ylabel="social cost")
