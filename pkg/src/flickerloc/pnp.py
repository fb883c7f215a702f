"""Relative pose from identified landmark correspondences.

Gauss-Newton reprojection minimization over a 6-dim twist, warm-started from
the previous pose or cold-started by a scaled-orthographic linear estimate.
Near-planar constellations admit a mirrored local minimum; an explicit
re-seed from the reflected branch plus the positive-depth validity check
rejects it. Also hosts the yaw readout used by the orientation filter and
the landmark-layout depth-spread rule.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .camera import CameraModel
from .rotations import euler_zyx_from_matrix, rotvec_to_matrix

LOG = logging.getLogger(__name__)

DEFAULT_MAX_ITER = 50
DEFAULT_RMS_THRESHOLD = 5.0  # px; fits this loose are treated as failures
GIMBAL_PITCH_RAD = np.deg2rad(85.0)
LAYOUT_SPREAD_FRACTION = 7.0  # required axial spread is range / 7


class InsufficientPointsError(ValueError):
    """PnP called with fewer than four correspondences."""


@dataclass
class PoseEstimate:
    """Camera pose in the landmark frame with fit diagnostics.

    ``rotation`` maps camera vectors into the landmark frame; ``translation``
    is the camera origin in the landmark frame.
    """

    rotation: np.ndarray
    translation: np.ndarray
    reproj_rms: float = 0.0
    n_iter: int = 0
    valid: bool = True

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, float).reshape(3, 3)
        self.translation = np.asarray(self.translation, float).reshape(3)


def _project_cam(camera: CameraModel, p_c: np.ndarray) -> np.ndarray:
    z = p_c[:, 2]
    u = camera.u0 + (camera.fu * p_c[:, 0] + camera.skew * p_c[:, 1]) / z
    v = camera.v0 + camera.fv * p_c[:, 1] / z
    return np.column_stack([u, v])


def _residuals(camera, r_cl, t_cl, points, pixels):
    p_c = points @ r_cl.T + t_cl
    return (_project_cam(camera, p_c) - pixels).ravel(), p_c


def _gn_jacobian(camera, p_c):
    """Stacked 2x6 blocks d(pixel)/d(left twist on the cam-from-landmark map)."""
    n = len(p_c)
    x, y, z = p_c[:, 0], p_c[:, 1], p_c[:, 2]
    # d(pixel)/d(p_c)
    dpix = np.zeros((n, 2, 3))
    dpix[:, 0, 0] = camera.fu / z
    dpix[:, 0, 1] = camera.skew / z
    dpix[:, 0, 2] = -(camera.fu * x + camera.skew * y) / (z * z)
    dpix[:, 1, 1] = camera.fv / z
    dpix[:, 1, 2] = -camera.fv * y / (z * z)
    # d(p_c)/d(dv, dw) = [I | -[p_c]x]
    dp = np.zeros((n, 3, 6))
    dp[:, 0, 0] = dp[:, 1, 1] = dp[:, 2, 2] = 1.0
    dp[:, 0, 4], dp[:, 0, 5] = z, -y
    dp[:, 1, 3], dp[:, 1, 5] = -z, x
    dp[:, 2, 3], dp[:, 2, 4] = y, -x
    return (dpix @ dp).reshape(2 * n, 6)


def _posit_init(camera: CameraModel, points: np.ndarray, pixels: np.ndarray,
                n_iter: int = 10):
    """Scaled-orthographic pose and its mirrored branch.

    Classic POS with iterated perspective correction. The out-of-plane sign
    is ambiguous under weak perspective, so both branches are returned and
    the caller keeps whichever reprojects better.
    """
    x = (pixels[:, 0] - camera.u0) / camera.fu
    y = (pixels[:, 1] - camera.v0) / camera.fv
    d = points - points[0]
    a_pinv = np.linalg.pinv(d)
    eps = np.zeros(len(points))

    def branch(mirror: bool):
        e = eps.copy()
        r, t = None, None
        for _ in range(n_iter):
            bi = x * (1.0 + e) - x[0]
            bj = y * (1.0 + e) - y[0]
            ii = a_pinv @ bi
            jj = a_pinv @ bj
            if mirror:
                ii, jj = ii.copy(), jj.copy()
                ii[2] = -ii[2]
                jj[2] = -jj[2]
            s = 0.5 * (np.linalg.norm(ii) + np.linalg.norm(jj))
            if not np.isfinite(s) or s <= 1e-12:
                return None
            r1, r2 = ii / np.linalg.norm(ii), jj / np.linalg.norm(jj)
            r3 = np.cross(r1, r2)
            r = _nearest_rotation(np.vstack([r1, r2, r3]))
            z0 = 1.0 / s
            t = np.array([x[0] * z0, y[0] * z0, z0])
            w = d @ r[2] / z0
            e = w
        return r, t

    out = []
    for mirror in (False, True):
        rt = branch(mirror)
        if rt is not None and np.all(np.isfinite(rt[0])) and np.all(np.isfinite(rt[1])):
            r, t = rt
            # branch gives the pose of the frame anchored at points[0]
            t_cl = t - r @ points[0]
            out.append((r, t_cl))
    return out


def _nearest_rotation(m: np.ndarray) -> np.ndarray:
    u, _, vt = np.linalg.svd(m)
    r = u @ vt
    if np.linalg.det(r) < 0.0:
        u[:, -1] = -u[:, -1]
        r = u @ vt
    return r


def _gauss_newton(camera, r_cl, t_cl, points, pixels, max_iter):
    res, _ = _residuals(camera, r_cl, t_cl, points, pixels)
    cost = float(res @ res)
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        _, p_c = _residuals(camera, r_cl, t_cl, points, pixels)
        jac = _gn_jacobian(camera, p_c)
        g = jac.T @ res
        h = jac.T @ jac
        try:
            step = np.linalg.solve(h + 1e-12 * np.eye(6), -g)
        except np.linalg.LinAlgError:
            return r_cl, t_cl, cost, n_iter, False
        alpha = 1.0
        improved = False
        for _ in range(10):  # backtracking keeps the cost non-increasing
            dr = rotvec_to_matrix(alpha * step[3:])
            r_new = dr @ r_cl
            t_new = dr @ t_cl + alpha * step[:3]
            res_new, _ = _residuals(camera, r_new, t_new, points, pixels)
            cost_new = float(res_new @ res_new)
            if cost_new <= cost:
                improved = cost - cost_new > 1e-14 * max(cost, 1.0)
                r_cl, t_cl, res, cost = r_new, t_new, res_new, cost_new
                break
            alpha *= 0.5
        else:
            return r_cl, t_cl, cost, n_iter, True
        if not improved:
            return r_cl, t_cl, cost, n_iter, True
    # still strictly improving after max_iter full steps: call it unconverged
    return r_cl, t_cl, cost, max_iter, False


def pnp_solve(
    correspondences: Sequence[tuple[np.ndarray, np.ndarray]],
    camera: CameraModel,
    init: PoseEstimate | None = None,
    max_iter: int = DEFAULT_MAX_ITER,
    rms_threshold: float = DEFAULT_RMS_THRESHOLD,
    accept_rms: float = 0.0,
) -> PoseEstimate:
    """Pose from (landmark point, pixel) pairs by reprojection minimization.

    A converged fit is still declared invalid when any landmark would sit
    behind the camera or the residual stays above `rms_threshold`; callers
    keep their previous pose in that case. A nonzero `accept_rms` stops the
    multi-start search at the first valid fit at or below it; seeds are
    ordered warm-start first, so steady-state callers pay for one descent.
    """
    if len(correspondences) < 4:
        raise InsufficientPointsError(
            f"need at least 4 correspondences, got {len(correspondences)}")
    points = np.asarray([c[0] for c in correspondences], float)
    pixels = np.asarray([c[1] for c in correspondences], float)

    seeds = []
    if init is not None:
        seeds.append((init.rotation.T, -init.rotation.T @ init.translation))
    seeds.extend(_posit_init(camera, points, pixels))
    if not seeds:  # degenerate linear stage; start in front of the centroid
        r0 = np.eye(3)
        seeds.append((r0, np.array([0.0, 0.0, 3.0]) - r0 @ points.mean(axis=0)))

    best = None
    for r0, t0 in seeds:
        r_cl, t_cl, cost, n_iter, ok = _gauss_newton(
            camera, r0, t0, points, pixels, max_iter)
        rms = float(np.sqrt(cost / len(points) / 2.0))
        depths_ok = bool(np.all(points @ r_cl.T[:, 2] + t_cl[2] > 0.0))
        valid = ok and depths_ok and rms <= rms_threshold
        cand = (valid, -rms, r_cl, t_cl, n_iter)
        if best is None or cand[:2] > best[:2]:
            best = cand
        if valid and rms <= max(accept_rms, 1e-9):
            break  # good enough; later seeds are not tried

    valid, neg_rms, r_cl, t_cl, n_iter = best
    rotation = r_cl.T
    translation = -r_cl.T @ t_cl
    if not valid:
        LOG.debug("pnp fit invalid (rms %.2f px)", -neg_rms)
    return PoseEstimate(rotation, translation, -neg_rms, n_iter, valid)


class YawReading(NamedTuple):
    phi: float  # rad
    gimbal: bool  # pitch too close to +-90 deg to trust the yaw


def yaw_extract(rotation: np.ndarray) -> YawReading:
    """Yaw about the landmark-frame z axis of a camera-to-landmark rotation."""
    yaw, pitch, _ = euler_zyx_from_matrix(np.asarray(rotation, float))
    return YawReading(float(yaw), bool(abs(pitch) > GIMBAL_PITCH_RAD))


# ---------------------------------------------------------------------------
# Constellation layout advisory
# ---------------------------------------------------------------------------


@dataclass
class LayoutReport:
    axial_spread_m: float
    required_spread_m: float
    max_supported_range_m: float
    ok: bool
    near_planar: bool

    def __str__(self) -> str:
        state = "ok" if self.ok else "insufficient"
        extra = " (near-planar layout)" if self.near_planar else ""
        return (f"axial spread {self.axial_spread_m:.3f} m, required "
                f"{self.required_spread_m:.3f} m [{state}]{extra}; "
                f"max supported range {self.max_supported_range_m:.2f} m")


def layout_check(constellation, max_range: float,
                 axis=(1.0, 0.0, 0.0)) -> LayoutReport:
    """Depth-spread rule: the constellation needs two landmarks separated
    along the viewing axis by at least range/7, or PnP approaches the
    near-planar flip ambiguity."""
    if len(constellation) < 4:
        raise ValueError("layout check needs at least 4 landmarks")
    axis = np.asarray(axis, float)
    axis = axis / np.linalg.norm(axis)
    proj = constellation.positions @ axis
    spread = float(np.max(proj) - np.min(proj))
    required = float(max_range) / LAYOUT_SPREAD_FRACTION
    near_planar = spread < 0.01
    ok = spread >= required and not near_planar
    report = LayoutReport(spread, required, LAYOUT_SPREAD_FRACTION * spread,
                          ok, near_planar)
    if not ok:
        LOG.warning("landmark layout: %s", report)
    return report
