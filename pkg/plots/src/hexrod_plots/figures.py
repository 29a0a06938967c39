"""Figure builders for the hexrod experiment CSV tables.

Each builder validates the file against the expected column schema,
returns a matplotlib Figure, and leaves the input untouched.  Styling is
fixed and nothing time-dependent is drawn, so identical inputs produce
identical figure data.
"""

from __future__ import annotations

import csv
import math
import sys

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

FIGURE_DPI = 110

CENTERLINES_HEADER = ["leg", "s", "x", "y", "z"]
STIFFNESS_HEADER = ["force_N", "ee_height_m", "converged", "residual", "wall_s"]
TRAJECTORY_HEADER = ["index", "ref_x", "ref_y", "ref_z", "fk_x", "fk_y", "fk_z",
                     "error_m", "converged", "residual", "wall_s"]
WORKSPACE_HEADER = ["x", "y", "z", "converged", "accepted", "residual",
                    "q1_deg_min", "q1_deg_max", "wall_s"]
MOTOR_RANGES_HEADER = ["z", "leg", "q1_deg_min", "q1_deg_max", "n_accepted"]


class SchemaError(ValueError):
    """Input file does not match the expected column schema."""


def load_table(path, expected_header, allow_empty=False):
    """Read a CSV into a dict of float columns, enforcing the header."""
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            rows = list(csv.reader(handle))
    except OSError as err:
        raise SchemaError(f"cannot read {path}: {err}") from None
    if not rows or rows[0] != expected_header:
        raise SchemaError(f"{path}: expected columns {expected_header}, "
                          f"got {rows[0] if rows else 'nothing'}")
    data = rows[1:]
    if not data and not allow_empty:
        raise SchemaError(f"{path}: no data rows")
    columns = {}
    for k, name in enumerate(expected_header):
        try:
            columns[name] = np.array([float(r[k]) for r in data])
        except (ValueError, IndexError) as err:
            raise SchemaError(f"{path}: column {name!r} not numeric ({err})") \
                from None
    return columns


def plot_centerlines(csv_path):
    """Six rod centerlines in 3D plus the platform polygon through the tips."""
    table = load_table(csv_path, CENTERLINES_HEADER)
    legs = sorted(set(table["leg"].astype(int)))
    if len(legs) != 6:
        raise SchemaError(f"{csv_path}: expected 6 legs, found {len(legs)}")
    fig = plt.figure(figsize=(7.0, 6.0), dpi=FIGURE_DPI)
    ax = fig.add_subplot(111, projection="3d")
    tips = []
    for leg in legs:
        mask = table["leg"].astype(int) == leg
        order = np.argsort(table["s"][mask])
        x = table["x"][mask][order]
        y = table["y"][mask][order]
        z = table["z"][mask][order]
        ax.plot(x, y, z, label=f"leg {leg}", linewidth=1.4)
        tips.append([x[-1], y[-1], z[-1]])
    tips = np.array(tips)
    centroid = tips.mean(axis=0)
    azimuth = np.arctan2(tips[:, 1] - centroid[1], tips[:, 0] - centroid[0])
    ring = np.argsort(azimuth)
    polygon = np.vstack([tips[ring], tips[ring][:1]])
    ax.plot(polygon[:, 0], polygon[:, 1], polygon[:, 2], "k-", linewidth=2.0,
            label="platform")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_zlabel("z (m)")
    ax.legend(loc="upper left", fontsize=7)
    return fig


def plot_force_height(csv_path):
    """Compressive force versus platform height for the converged samples."""
    table = load_table(csv_path, STIFFNESS_HEADER)
    mask = table["converged"] > 0.5
    fig, ax = plt.subplots(figsize=(6.0, 4.5), dpi=FIGURE_DPI)
    ax.plot(table["force_N"][mask], table["ee_height_m"][mask], "o-",
            color="tab:blue")
    failed = ~mask
    if np.any(failed):
        ax.plot(table["force_N"][failed],
                np.full(failed.sum(), np.nanmin(table["ee_height_m"][mask])
                        if mask.any() else 0.0),
                "x", color="tab:red", label="not converged")
        ax.legend(fontsize=8)
    ax.set_xlabel("compressive force (N)")
    ax.set_ylabel("platform height (m)")
    ax.grid(True, alpha=0.3)
    return fig


def plot_trajectory_error(csv_path):
    """Euclidean gap between the forward solution and the reference path."""
    table = load_table(csv_path, TRAJECTORY_HEADER)
    mask = table["converged"] > 0.5
    fig, ax = plt.subplots(figsize=(6.0, 4.5), dpi=FIGURE_DPI)
    ax.semilogy(table["index"][mask], table["error_m"][mask], "o-",
                color="tab:green")
    ax.set_xlabel("trajectory sample")
    ax.set_ylabel("position error (m)")
    ax.grid(True, which="both", alpha=0.3)
    return fig


def plot_workspace(csv_path):
    """3D scatter of sampled platform positions, accepted points in green."""
    table = load_table(csv_path, WORKSPACE_HEADER)
    accepted = table["accepted"] > 0.5
    fig = plt.figure(figsize=(7.0, 6.0), dpi=FIGURE_DPI)
    ax = fig.add_subplot(111, projection="3d")
    if np.any(accepted):
        ax.scatter(table["x"][accepted], table["y"][accepted],
                   table["z"][accepted], c="tab:green", s=22, label="reachable")
    else:
        print("warning: no accepted workspace points", file=sys.stderr)
    if np.any(~accepted):
        ax.scatter(table["x"][~accepted], table["y"][~accepted],
                   table["z"][~accepted], c="tab:red", s=12, marker="x",
                   label="rejected")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_zlabel("z (m)")
    if np.any(accepted) or np.any(~accepted):
        ax.legend(loc="upper left", fontsize=8)
    return fig


def plot_motor_ranges(csv_path):
    """Per-leg crank-angle ranges, partitioned by platform height bin."""
    table = load_table(csv_path, MOTOR_RANGES_HEADER)
    fig, ax = plt.subplots(figsize=(7.0, 4.5), dpi=FIGURE_DPI)
    heights = np.unique(table["z"])
    legs = np.unique(table["leg"].astype(int))
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    width = 0.8 / max(len(legs), 1)
    for slot, leg in enumerate(legs):
        mask = (table["leg"].astype(int) == leg) & (table["n_accepted"] > 0)
        z = table["z"][mask]
        lo = table["q1_deg_min"][mask]
        hi = table["q1_deg_max"][mask]
        positions = [np.searchsorted(heights, value) + slot * width
                     for value in z]
        ax.bar(positions, hi - lo, bottom=lo, width=width * 0.9,
               color=colors[slot % len(colors)], label=f"leg {leg}")
    ax.set_xticks(np.arange(len(heights)) + 0.4)
    ax.set_xticklabels([f"{h:.3f}" for h in heights], fontsize=8)
    ax.set_xlabel("platform height bin (m)")
    ax.set_ylabel("motor angle range (deg)")
    ax.legend(fontsize=7, ncol=3)
    ax.grid(True, axis="y", alpha=0.3)
    return fig


PLOT_KINDS = {
    "centerlines3d": plot_centerlines,
    "force_height": plot_force_height,
    "trajectory_error": plot_trajectory_error,
    "workspace_scatter": plot_workspace,
    "motor_ranges": plot_motor_ranges,
}


def render(kind, csv_path, out_path):
    """Build the figure for `kind` from csv_path and write it to out_path."""
    if kind not in PLOT_KINDS:
        raise SchemaError(f"unknown plot kind {kind!r}; "
                          f"choose from {sorted(PLOT_KINDS)}")
    fig = PLOT_KINDS[kind](csv_path)
    try:
        fig.savefig(out_path, dpi=FIGURE_DPI)
    finally:
        plt.close(fig)
