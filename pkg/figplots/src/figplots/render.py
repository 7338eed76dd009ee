"""Figure construction and PNG output.

Figures are built directly on matplotlib's object API (no pyplot, no GUI
backend) and rasterized at a fixed DPI with fixed metadata, so rendering
the same spec over the same inputs reproduces the image byte for byte.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

from .spec import PlotSpec, read_sweep, read_timeseries

DPI = 150
FIGSIZE = (6.4, 4.0)
FIGSIZE_TWO_PANEL = (6.4, 6.0)
PNG_METADATA = {"Software": "figplots"}

_NEGATIVITY_LABEL = "$E_N$"


def _draw_gridlines(ax, period: float, x_max: float) -> None:
    k = 1
    while k * period <= x_max * (1 + 1e-9):
        ax.axvline(k * period, color="0.85", linewidth=0.8, zorder=0)
        k += 1


def build_figure(plot_spec: PlotSpec) -> Figure:
    """Assemble the matplotlib figure for a validated spec."""
    if plot_spec.kind == "sweep":
        return _build_sweep(plot_spec)
    return _build_timeseries(plot_spec)


def _build_timeseries(plot_spec: PlotSpec) -> Figure:
    two_panel = bool(plot_spec.population_panel)
    fig = Figure(
        figsize=FIGSIZE_TWO_PANEL if two_panel else FIGSIZE,
        dpi=DPI,
        constrained_layout=True,
    )
    if two_panel:
        ax_en, ax_pop = fig.subplots(2, 1, sharex=True)
    else:
        ax_en = fig.add_subplot(1, 1, 1)
        ax_pop = None

    x_max = 0.0
    for ref in plot_spec.curves:
        data = read_timeseries(ref.csv)
        x = data["t"] * plot_spec.time_scale
        x_max = max(x_max, float(x[-1]))
        ax_en.plot(x, data["EN"], label=ref.label)
    if plot_spec.gridline_period is not None:
        _draw_gridlines(ax_en, plot_spec.gridline_period, x_max)
    ax_en.set_ylabel(_NEGATIVITY_LABEL)
    ax_en.legend()
    if plot_spec.title:
        ax_en.set_title(plot_spec.title)

    if ax_pop is not None:
        for ref in plot_spec.population_panel:
            data = read_timeseries(ref.csv)
            x = data["t"] * plot_spec.time_scale
            ax_pop.plot(x, data["n1"], label=f"{ref.label}: resonator 1")
            ax_pop.plot(x, data["n2"], linestyle="--", label=f"{ref.label}: resonator 2")
        if plot_spec.gridline_period is not None:
            _draw_gridlines(ax_pop, plot_spec.gridline_period, x_max)
        ax_pop.set_ylabel(r"$\langle b^\dagger b \rangle$")
        ax_pop.legend()
        ax_pop.set_xlabel(plot_spec.x_label)
    else:
        ax_en.set_xlabel(plot_spec.x_label)
    return fig


def _build_sweep(plot_spec: PlotSpec) -> Figure:
    data = read_sweep(plot_spec.sweep_csv)
    fig = Figure(figsize=FIGSIZE, dpi=DPI, constrained_layout=True)
    ax = fig.add_subplot(1, 1, 1)
    values = np.asarray(data["value"], dtype=float)
    ax.plot(values, data["late_EN"], marker="o", label="late-time $E_N$")
    ax.set_xlabel(plot_spec.x_label or data["axis"][0])
    ax.set_ylabel(_NEGATIVITY_LABEL)
    ax.legend()
    if plot_spec.title:
        ax.set_title(plot_spec.title)
    return fig


def render(plot_spec: PlotSpec) -> Path:
    """Render the spec to its PNG output path and return that path."""
    fig = build_figure(plot_spec)
    output = plot_spec.output
    output.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(output, format="png", dpi=DPI, metadata=dict(PNG_METADATA))
    return output
