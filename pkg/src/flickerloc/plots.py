"""Static result plots, written as standalone SVG files.

Everything renders through the Agg backend; nothing here opens a window.
The SVG date metadata is stripped so plot files rerun byte-stable.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from .sim import GroundTruthLog  # noqa: E402

_SAVE_KW = {"metadata": {"Date": None}, "bbox_inches": "tight"}


def plot_trajectory(pose_log: pd.DataFrame, ground_truth: GroundTruthLog, path) -> Path:
    """Estimated camera path against truth, 3-D projection."""
    rows = pose_log.dropna(subset=["tx"])
    fig = plt.figure(figsize=(7, 6))
    ax = fig.add_subplot(projection="3d")
    gt = ground_truth.translation
    ax.plot(gt[:, 0], gt[:, 1], gt[:, 2], color="0.5", lw=1.8, label="truth")
    ax.plot(rows["tx"], rows["ty"], rows["tz"], color="tab:blue", lw=0.9,
            label="estimate")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_zlabel("z (m)")
    ax.legend(loc="upper left")
    ax.set_title("relative position, landmark frame")
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return Path(path)


def plot_position_error(pose_log: pd.DataFrame, ground_truth: GroundTruthLog, path) -> Path:
    """Per-axis error and error norm over time."""
    rows = pose_log.dropna(subset=["tx"])
    t = rows["t_us"].to_numpy(float)
    gt_t = ground_truth.t_us.astype(float)
    err = np.stack(
        [rows[c].to_numpy(float)
         - np.interp(t, gt_t, ground_truth.translation[:, k])
         for k, c in enumerate(("tx", "ty", "tz"))], axis=1)
    fig, axes = plt.subplots(4, 1, figsize=(8, 7), sharex=True)
    secs = t / 1e6
    for k, (ax, name) in enumerate(zip(axes[:3], ("x", "y", "z"))):
        ax.plot(secs, err[:, k], lw=0.7)
        ax.set_ylabel(f"{name} (m)")
        ax.axhline(0.0, color="0.8", lw=0.6)
    axes[3].plot(secs, np.linalg.norm(err, axis=1), lw=0.7, color="tab:red")
    axes[3].set_ylabel("norm (m)")
    axes[3].set_xlabel("time (s)")
    axes[0].set_title("relative position error")
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return Path(path)


def plot_tracking_overlay(track_log: pd.DataFrame, ground_truth: GroundTruthLog, path) -> Path:
    """Image-plane track traces over the true projected centers."""
    fig, ax = plt.subplots(figsize=(7, 5.5))
    if ground_truth.centers is not None:
        for j, ident in enumerate(ground_truth.landmark_ids):
            c = ground_truth.centers[:, j, :]
            ok = np.isfinite(c).all(axis=1)
            ax.plot(c[ok, 0], c[ok, 1], color="0.75", lw=2.5,
                    label="truth" if j == 0 else None)
    for ident, grp in track_log.groupby("id"):
        ax.plot(grp["u"], grp["v"], lw=0.8, label=f"track {ident}")
    ax.invert_yaxis()  # image rows grow downward
    ax.set_xlabel("u (px)")
    ax.set_ylabel("v (px)")
    ax.set_title("landmark tracks, image plane")
    ax.legend(loc="upper right", fontsize=7, ncol=2)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return Path(path)


def render_all(result, out_dir) -> list[Path]:
    """The standard plot set for one run; skips what lacks ground truth."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    made: list[Path] = []
    if result.ground_truth is None:
        return made
    made.append(plot_trajectory(
        result.pose_log, result.ground_truth, out / "trajectory.svg"))
    made.append(plot_position_error(
        result.pose_log, result.ground_truth, out / "position_error.svg"))
    made.append(plot_tracking_overlay(
        result.track_log, result.ground_truth, out / "tracking_overlay.svg"))
    return made
