"""Flicker-frequency clustering and landmark identification.

A window of polarity transitions yields a multiset of frequency estimates.
A one-dimensional Gaussian mixture is fit by EM for every component count up
to a cap, the count is chosen by a fixed-penalty information criterion, and
each cluster is reduced to an image-plane measurement: the centroid of the
largest 8-connected blob of its member pixels, identified against the
nominal frequency registry.

EM details: deterministic quantile initialization, a variance floor that
stops components from collapsing onto quantization noise, and one optional
seeded restart when a fit degenerates. All candidate component counts are
fit together in one column-stacked array, which keeps the per-window cost
low enough for the 1/tau-rate loop.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .camera import CameraModel
from .events import TransitionWindow

DEFAULT_J_MAX = 10
DEFAULT_VAR_FLOOR = 1.0  # Hz^2
DEFAULT_MERGE_GAP_HZ = 10.0
DEFAULT_MIN_BLOB_PIXELS = 3
BIC_ALPHA = 4.0  # fixed penalty weight, independent of component count
BIC_MODES = ("pooled", "literal", "standard")

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class GaussianComponent:
    mean: float
    variance: float
    weight: float


@dataclass
class GmmModel:
    """Fitted mixture plus the E-step bookkeeping needed downstream."""

    components: tuple[GaussianComponent, ...]
    log_likelihood: float
    responsibilities: np.ndarray  # (N, J), rows sum to one
    converged: bool
    n_iter: int
    degenerate: bool
    ll_history: tuple[float, ...] = ()

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def means(self) -> np.ndarray:
        return np.array([c.mean for c in self.components])

    @property
    def variances(self) -> np.ndarray:
        return np.array([c.variance for c in self.components])

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])


@dataclass(frozen=True)
class BicScore:
    n_components: int
    gamma: float
    err_cov: float
    log_likelihood: float


@dataclass
class SelectionResult:
    """Outcome of the component-count search."""

    j_opt: int
    model: GmmModel
    scores: tuple[BicScore, ...]
    # final (means, variances, weights) per candidate count, for warm starts
    params: tuple[tuple[np.ndarray, np.ndarray, np.ndarray], ...] = ()


class InsufficientDataError(ValueError):
    """Fewer samples than mixture components."""


def _quantile_init(f: np.ndarray, j: int, var_floor: float):
    qs = (2.0 * np.arange(j) + 1.0) / (2.0 * j)
    means = np.quantile(f, qs)
    var = max(float(np.var(f)) / j, var_floor)
    return means, np.full(j, var), np.full(j, 1.0 / j)


def _restart_init(f: np.ndarray, j: int, var_floor: float, seed: int):
    """Initialization for the one allowed restart of a degenerate fit.

    Plain quantiles weight by multiplicity, so a heavily populated mode can
    swallow two initial means while a sparse mode gets none, and EM cannot
    walk a mean across the empty gap afterwards. Cutting the sorted support
    at the j-1 widest gaps puts one initial mean in every isolated mode.
    """
    uniq = np.unique(f)
    if len(uniq) >= j:
        cuts = np.array([], dtype=int)
        if j > 1:
            gaps = np.diff(uniq)
            cuts = np.sort(np.argsort(gaps, kind="stable")[::-1][: j - 1])
        bounds = np.concatenate([[0], cuts + 1, [len(uniq)]])
        means = np.array([uniq[a:b].mean() for a, b in zip(bounds[:-1], bounds[1:])])
    else:
        qs = (2.0 * np.arange(j) + 1.0) / (2.0 * j)
        means = np.quantile(uniq, qs)
    means = means + np.random.default_rng(seed).normal(0.0, 0.01, j)
    var = max(float(np.var(f)) / j, var_floor)
    return means, np.full(j, var), np.full(j, 1.0 / j)


def _split_merge_init(base, j: int, n: int, var_floor: float, seed: int):
    """Restart init derived from the current best fit of any other count.

    The base is first canonicalized: sub-gap duplicates merge and components
    holding under two samples are dissolved, since neither carries cluster
    structure. The remaining budget goes into splitting the widest component
    in half, which reaches the modes a stuck quantile init missed (two of
    them absorbed into one wide Gaussian). Walking down merges the closest
    pair. Near-converged starts keep the restart pass cheap.
    """
    bm = np.asarray(base[0], float)
    bv = np.asarray(base[1], float)
    bw = np.asarray(base[2], float)
    order, offs = _merge_partition(bm)
    bounds = np.append(offs, len(order))
    means, variances, weights = [], [], []
    for a, b in zip(bounds[:-1], bounds[1:]):
        idx = order[a:b]
        w = float(bw[idx].sum())
        if w * n < 2.0 and len(order) > (b - a):
            continue
        means.append(float(np.dot(bm[idx], bw[idx])) / max(w, 1e-12))
        variances.append(float(bv[idx].max()))
        weights.append(w)
    if not means:
        k = int(np.argmax(bw))
        means, variances, weights = [float(bm[k])], [float(bv[k])], [1.0]
    while len(means) < j:
        k = int(np.argmax(variances))
        mu, v, w = means.pop(k), variances.pop(k), weights.pop(k)
        half = np.sqrt(v) / 2.0
        means += [mu - half, mu + half]
        variances += [max(v / 4.0, var_floor)] * 2
        weights += [w / 2.0] * 2
    while len(means) > j:
        order = np.argsort(means)
        gaps = np.diff(np.asarray(means)[order])
        k = int(np.argmin(gaps))
        a, b = int(order[k]), int(order[k + 1])
        wa, wb = weights[a], weights[b]
        tot = max(wa + wb, 1e-12)
        merged = (means[a] * wa + means[b] * wb) / tot
        var = max(variances[a], variances[b])
        for idx in sorted((a, b), reverse=True):
            means.pop(idx), variances.pop(idx), weights.pop(idx)
        means.append(merged), variances.append(var), weights.append(tot)
    means = np.asarray(means) + np.random.default_rng(seed).normal(0.0, 0.01, j)
    w = np.maximum(np.asarray(weights), 1e-12)
    return means, np.asarray(variances), w / w.sum()


def _estep_single(fcol: np.ndarray, means, variances, weights):
    """One E-step for a single mixture: (responsibilities, log-likelihood)."""
    with np.errstate(divide="ignore"):
        coeff = np.log(weights) - 0.5 * (_LOG_2PI + np.log(variances))
    diff = fcol - means[None, :]
    logp = coeff[None, :] - (0.5 / variances)[None, :] * (diff * diff)
    m = logp.max(axis=1, keepdims=True)
    row_ll = m[:, 0] + np.log(np.exp(logp - m).sum(axis=1))
    resp = np.exp(logp - row_ll[:, None])
    return resp, float(row_ll.sum())


def _batch_em(
    f: np.ndarray,
    inits: Sequence[tuple[np.ndarray, np.ndarray, np.ndarray]],
    tol: float,
    max_iter: int,
    var_floor: float,
):
    """Fit several mixtures over the same data in one vectorized loop.

    Returns per-init (means, variances, weights, responsibilities, ll,
    n_iter, converged, ll_history). Mixtures of different sizes are stacked
    column-wise, normalized per group with segmented reductions, and frozen
    out of the working block as they converge. Frozen results get a final
    E-step so responsibilities match the returned parameters.
    """
    n = len(f)
    f = np.asarray(f, float)
    f2 = f * f
    fcol = f[:, None]
    n_groups = len(inits)

    active = list(range(n_groups))
    sizes = np.array([len(m) for m, _, _ in inits])
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    means = np.concatenate([m for m, _, _ in inits]).astype(float)
    variances = np.maximum(np.concatenate([v for _, v, _ in inits]).astype(float), var_floor)
    weights = np.concatenate([w for _, _, w in inits]).astype(float)

    prev_ll = np.full(n_groups, -np.inf)
    histories: list[list[float]] = [[] for _ in range(n_groups)]
    results: list = [None] * n_groups

    def freeze(local: int, g: int, it: int, converged: bool) -> None:
        sl = slice(offsets[local], offsets[local] + sizes[local])
        mg, vg, wg = means[sl].copy(), variances[sl].copy(), weights[sl].copy()
        resp_g, ll_g = _estep_single(fcol, mg, vg, wg)
        histories[g].append(ll_g)
        dg = fcol - mg[None, :]
        err_g = float((resp_g * dg * dg).sum()) / n
        results[g] = (mg, vg, wg, resp_g, ll_g, it, converged, tuple(histories[g]), err_g)

    basis = np.vstack([np.ones(n), f, f2])  # M-step moments in one product

    for it in range(1, max_iter + 1):
        with np.errstate(divide="ignore"):  # zero weights are legitimate
            coeff = np.log(weights) - 0.5 * (_LOG_2PI + np.log(variances))
        diff = fcol - means[None, :]
        logp = coeff[None, :] - (0.5 / variances)[None, :] * (diff * diff)

        if len(active) == 1:  # broadcast path, no segmented reductions
            m = logp.max(axis=1, keepdims=True)
            ex = np.exp(logp - m)
            s = ex.sum(axis=1, keepdims=True)
            resp = ex / s
            ll = np.array([float((m[:, 0] + np.log(s[:, 0])).sum())])
        else:
            m = np.maximum.reduceat(logp, offsets, axis=1)
            ex = np.exp(logp - np.repeat(m, sizes, axis=1))
            s = np.add.reduceat(ex, offsets, axis=1)
            resp = ex / np.repeat(s, sizes, axis=1)
            ll = (m + np.log(s)).sum(axis=0)

        moments = basis @ resp
        nk = moments[0]
        nk_safe = np.maximum(nk, 1e-12)
        means = moments[1] / nk_safe
        variances = np.maximum(moments[2] / nk_safe - means * means, var_floor)
        weights = nk / n

        done_local = []
        for local, g in enumerate(active):
            histories[g].append(float(ll[local]))
            if abs(ll[local] - prev_ll[g]) < tol or it == max_iter:
                freeze(local, g, it, abs(ll[local] - prev_ll[g]) < tol)
                done_local.append(local)
            prev_ll[g] = ll[local]

        if done_local:
            keep = [i for i in range(len(active)) if i not in done_local]
            if not keep:
                break
            cols = np.concatenate(
                [np.arange(offsets[i], offsets[i] + sizes[i]) for i in keep]
            )
            means, variances, weights = means[cols], variances[cols], weights[cols]
            active = [active[i] for i in keep]
            sizes = sizes[keep]
            offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])

    return results


def _raw_degenerate(means: np.ndarray, weights: np.ndarray, n: int) -> bool:
    """A fit wastes capacity when components sit closer than the merge gap
    (downstream treats them as one) or a component holds under two samples
    (a singleton locked onto an outlier is not a cluster)."""
    if not (np.all(np.isfinite(means)) and np.all(np.isfinite(weights))):
        return True
    if np.any(weights * n < 2.0):
        return True
    if len(means) > 1 and float(np.min(np.diff(np.sort(means)))) < DEFAULT_MERGE_GAP_HZ:
        return True
    return False


def _merge_partition(means: np.ndarray, gap_hz: float = DEFAULT_MERGE_GAP_HZ):
    """Column order and group offsets that merge means closer than gap_hz.

    Chain rule on the sorted means: a gap below the threshold joins the
    neighboring components into one group.
    """
    order = np.argsort(means, kind="stable")
    if len(means) < 2:
        return order, np.array([0])
    brk = np.nonzero(np.diff(means[order]) >= gap_hz)[0] + 1
    return order, np.concatenate([[0], brk])


def em_fit(
    frequencies: np.ndarray,
    n_components: int,
    seed: int = 0,
    init: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None,
    tol: float = 1e-6,
    max_iter: int = 100,
    var_floor: float = DEFAULT_VAR_FLOOR,
) -> GmmModel:
    """Fit one mixture by EM.

    Initialization is deterministic (quantile means, pooled variance split,
    uniform weights) unless `init` overrides it. A degenerate outcome gets
    one seeded random-restart; the higher-likelihood fit wins.
    """
    f = np.asarray(frequencies, float).ravel()
    if n_components < 1:
        raise ValueError("n_components must be >= 1")
    if len(f) < n_components:
        raise InsufficientDataError(
            f"{len(f)} samples cannot support {n_components} components"
        )
    if init is None:
        init = _quantile_init(f, n_components, var_floor)
    raw = _batch_em(f, [init], tol, max_iter, var_floor)[0]
    model = _to_model_with_history(raw)

    if model.degenerate:
        retry_init = _restart_init(f, n_components, var_floor, seed)
        retry = _to_model_with_history(_batch_em(f, [retry_init], tol, max_iter, var_floor)[0])
        model = _prefer(model, retry)
    return model


def _prefer(first: GmmModel, retry: GmmModel) -> GmmModel:
    """Pick between an original fit and its restart: sound fits before
    degenerate ones, likelihood as the tie judge."""
    if first.degenerate != retry.degenerate:
        return retry if first.degenerate else first
    return retry if retry.log_likelihood > first.log_likelihood else first


def _raw_prefer_retry(first, retry, n: int) -> bool:
    """Same preference rule as `_prefer`, on raw batch results."""
    d_first = _raw_degenerate(first[0], first[2], n)
    d_retry = _raw_degenerate(retry[0], retry[2], n)
    if d_first != d_retry:
        return d_first
    return retry[4] > first[4]


def _to_model_with_history(raw) -> GmmModel:
    means, variances, weights, resp, ll, n_iter, converged, hist, _ = raw
    comps = tuple(
        GaussianComponent(float(m), float(v), float(w))
        for m, v, w in zip(means, variances, weights)
    )
    return GmmModel(
        comps, ll, resp, converged, n_iter,
        _raw_degenerate(means, weights, resp.shape[0]), hist,
    )


def _merged_err(f: np.ndarray, means: np.ndarray, resp: np.ndarray):
    """Pooled weighted squared residual against the post-merge structure.

    Components inside one merge group share a data-weighted mean, so a fit
    that splits a cluster into sub-resolution pieces scores exactly like
    the unsplit fit and cannot buy selection weight with fictional detail.
    """
    order, offs = _merge_partition(means)
    gr = np.add.reduceat(resp[:, order], offs, axis=1)
    nk = gr.sum(axis=0)
    mu = (f @ gr) / np.maximum(nk, 1e-12)
    d = f[:, None] - mu[None, :]
    return mu, float((gr * d * d).sum()) / len(f)


def _bic_gamma(
    f: np.ndarray,
    merged_means: np.ndarray,
    ll: float,
    merged_err: float,
    raw_j: int,
    mode: str,
) -> tuple[float, float]:
    """Return (gamma, error covariance) for one fitted mixture."""
    n = len(f)
    if mode == "pooled":
        gamma = n * np.log(max(merged_err, 1e-12)) + BIC_ALPHA * np.log(n)
        err = merged_err
    elif mode == "literal":
        # The unsquared form: residuals of the sample mean against each
        # component mean, summed. Non-positive values make the log undefined;
        # those counts are scored +inf (never selected).
        err = float(np.sum(np.mean(f) - merged_means))
        gamma = n * np.log(err) + BIC_ALPHA * np.log(n) if err > 0 else np.inf
    elif mode == "standard":
        # classic form: the parameter count penalizes the raw fit directly,
        # no merge treatment needed
        err = float("nan")
        gamma = -2.0 * ll + (3.0 * raw_j - 1.0) * np.log(n)
    else:
        raise ValueError(f"unknown bic mode {mode!r}, expected one of {BIC_MODES}")
    return float(gamma), err


def select_model(
    frequencies: np.ndarray,
    j_max: int = DEFAULT_J_MAX,
    seed: int = 0,
    warm: Sequence[tuple[np.ndarray, np.ndarray, np.ndarray]] | None = None,
    bic_mode: str = "pooled",
    tol: float = 1e-6,
    max_iter: int = 100,
    var_floor: float = DEFAULT_VAR_FLOOR,
) -> SelectionResult:
    """Fit all component counts 1..min(j_max, N) and pick the best score.

    Ties break toward the smaller count. `warm` may carry the previous
    window's per-count parameters to shorten EM; candidates it does not
    cover fall back to quantile initialization.
    """
    f = np.asarray(frequencies, float).ravel()
    if len(f) < 1:
        raise InsufficientDataError("model selection needs at least one sample")
    js = list(range(1, min(j_max, len(f)) + 1))

    inits = []
    for j in js:
        ini = None
        if warm is not None:
            for cand in warm:
                if cand is not None and len(cand[0]) == j:
                    ini = (np.asarray(cand[0], float), np.asarray(cand[1], float),
                           np.asarray(cand[2], float))
                    break
        inits.append(ini if ini is not None else _quantile_init(f, j, var_floor))

    raws = _batch_em(f, inits, tol, max_iter, var_floor)

    def gamma_of(raw) -> tuple[float, float]:
        mu, err = _merged_err(f, raw[0], raw[3])
        return _bic_gamma(f, mu, raw[4], err, len(raw[0]), bic_mode)

    gammas = np.array([gamma_of(r)[0] for r in raws])

    # Post-merge scoring leaves only sub-resolution noise between a fit and
    # its over-split twins; differences inside this band are ties, broken
    # toward fewer components.
    tie_band = 1e-3 * len(f)

    # One restart pass for every degenerate fit, seeded by splitting or
    # merging the current best fit toward the target count. When several
    # quantile inits fall into one shared trap (a sparse mode missed by
    # all of them), their duplicated components mark them degenerate and
    # the split of the widest component recovers the missing mode.
    best_raw = raws[int(np.argmin(gammas))]
    retry_idx = [
        i for i, r in enumerate(raws)
        if js[i] > 1 and _raw_degenerate(r[0], r[2], len(f))
    ]
    if retry_idx:
        base = (best_raw[0], best_raw[1], best_raw[2])
        retry_inits = [_split_merge_init(base, js[i], len(f), var_floor, seed)
                       for i in retry_idx]
        retries = _batch_em(f, retry_inits, tol, max_iter, var_floor)
        for i, raw in zip(retry_idx, retries):
            if _raw_prefer_retry(raws[i], raw, len(f)):
                raws[i] = raw
                gammas[i] = gamma_of(raw)[0]

    # Sound fits outrank degenerate ones whatever their score: a duplicated
    # pair or a singleton component can buy arbitrary error reduction (one
    # outlier sample carried by its own component) without describing more
    # clusters. Degenerate fits stay eligible only when nothing is sound.
    sound = np.array([not _raw_degenerate(r[0], r[2], len(f)) for r in raws])
    eligible = sound if bool(np.any(sound)) else np.ones(len(raws), bool)

    best = float(np.min(gammas[eligible]))
    i_opt = int(np.nonzero(eligible & (gammas <= best + tie_band))[0][0])
    model = _to_model_with_history(raws[i_opt])

    scores = tuple(
        BicScore(js[i], float(gammas[i]), gamma_of(r)[1], r[4]) for i, r in enumerate(raws)
    )
    params = tuple((r[0], r[1], r[2]) for r in raws)
    return SelectionResult(js[i_opt], model, scores, params)


# ---------------------------------------------------------------------------
# Clusters and image-plane measurements
# ---------------------------------------------------------------------------


@dataclass
class Cluster:
    mean_hz: float
    member_idx: np.ndarray  # indices into the window's transitions
    n_members: int


@dataclass
class ClusterSet:
    window: TransitionWindow
    clusters: tuple[Cluster, ...]
    labels: np.ndarray  # (N,) cluster index per transition
    j_opt: int  # selected count before any mean-merge


def assign_clusters(
    window: TransitionWindow,
    model: GmmModel,
    j_opt: int | None = None,
    merge_gap_hz: float = DEFAULT_MERGE_GAP_HZ,
) -> ClusterSet:
    """Hard-assign each transition to its highest-responsibility component.

    Components whose means sit closer than `merge_gap_hz` are merged first
    (over-segmentation guard); every transition lands in exactly one cluster.
    """
    f = window.frequencies
    resp = model.responsibilities
    if len(f) != resp.shape[0]:
        raise ValueError("model was fit on a different window")

    comp_label = np.argmax(resp, axis=1)  # ties: lowest index, fixed by argmax
    means = model.means
    weights = model.weights

    order = np.argsort(means, kind="stable")
    group_of = np.empty(len(means), dtype=int)
    group_means: list[float] = []
    group_weights: list[float] = []
    for rank, ci in enumerate(order):
        if rank == 0 or means[ci] - group_means[-1] >= merge_gap_hz:
            group_means.append(float(means[ci]))
            group_weights.append(float(weights[ci]))
        else:
            w0, w1 = group_weights[-1], float(weights[ci])
            tot = max(w0 + w1, 1e-12)
            group_means[-1] = (group_means[-1] * w0 + float(means[ci]) * w1) / tot
            group_weights[-1] = tot
        group_of[ci] = len(group_means) - 1

    labels = group_of[comp_label]
    clusters = []
    for g, gm in enumerate(group_means):
        idx = np.nonzero(labels == g)[0]
        # merged mean re-estimated from the actual members when any exist
        mean = float(np.mean(f[idx])) if len(idx) else gm
        clusters.append(Cluster(mean, idx, len(idx)))
    return ClusterSet(window, tuple(clusters), labels, j_opt or model.n_components)


@dataclass
class CentroidResult:
    center: np.ndarray  # (u, v), NaN when rejected
    n_pixels: int  # pixels in the kept blob
    n_blobs: int
    rejected: bool


_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


def extract_centroid(
    xs: np.ndarray,
    ys: np.ndarray,
    min_pixels: int = DEFAULT_MIN_BLOB_PIXELS,
) -> CentroidResult:
    """Centroid of the largest 8-connected blob of the given pixels.

    Duplicate pixels count once (binary occupancy). Blobs below `min_pixels`
    are clutter and rejected.
    """
    if len(xs) == 0:
        return CentroidResult(np.array([np.nan, np.nan]), 0, 0, True)
    pix = np.unique(np.stack([np.asarray(xs), np.asarray(ys)], axis=1), axis=0)
    x0, y0 = pix[:, 0].min(), pix[:, 1].min()
    img = np.zeros((pix[:, 1].max() - y0 + 1, pix[:, 0].max() - x0 + 1), dtype=bool)
    img[pix[:, 1] - y0, pix[:, 0] - x0] = True

    labels, n_blobs = ndimage.label(img, structure=_EIGHT_CONNECTED)
    if n_blobs == 0:
        return CentroidResult(np.array([np.nan, np.nan]), 0, 0, True)
    counts = np.bincount(labels.ravel())[1:]
    best = int(np.argmax(counts)) + 1  # ties: first label in scan order
    size = int(counts[best - 1])
    if size < min_pixels:
        return CentroidResult(np.array([np.nan, np.nan]), size, int(n_blobs), True)
    yy, xx = np.nonzero(labels == best)
    center = np.array([float(xx.mean()) + x0, float(yy.mean()) + y0])
    return CentroidResult(center, size, int(n_blobs), False)


@dataclass(frozen=True)
class NvbmEntry:
    landmark_id: int
    frequency_hz: float
    center: tuple[float, float]
    n_pixels: int
    ambiguous: bool = False


@dataclass
class NvbmFrame:
    """Identified landmark measurements for one analysis window."""

    t_us: int
    entries: tuple[NvbmEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def ids(self) -> np.ndarray:
        return np.array([e.landmark_id for e in self.entries], dtype=np.int64)

    @property
    def centers(self) -> np.ndarray:
        return np.array([e.center for e in self.entries], dtype=float).reshape(-1, 2)


def identify_landmarks(
    clusters: ClusterSet,
    nominal_frequencies: np.ndarray,
    tol_hz: float | None = None,
    min_pixels: int = DEFAULT_MIN_BLOB_PIXELS,
    frequency_floor_hz: float | None = None,
) -> NvbmFrame:
    """Match clusters to nominal frequencies and produce one frame.

    Default tolerance is half the smallest registry gap. Clusters without a
    nominal within tolerance are dropped; when two clusters claim the same
    nominal the closer mean wins (ties to the larger cluster, flagged).
    """
    nominal = np.sort(np.asarray(nominal_frequencies, float).ravel())
    if len(nominal) == 0:
        return NvbmFrame(clusters.window.t_now_us, ())
    if tol_hz is None:
        tol_hz = float(np.min(np.diff(nominal)) / 2.0) if len(nominal) > 1 else 25.0
    if frequency_floor_hz is None:
        frequency_floor_hz = 1.0 / clusters.window.tau_s

    best: dict[int, tuple[float, int, Cluster, CentroidResult]] = {}
    ambiguous: set[int] = set()
    tr = clusters.window.transitions
    for cl in clusters.clusters:
        if cl.n_members == 0:
            continue
        if cl.mean_hz < frequency_floor_hz:
            # pair rule bounds every sample above 1/tau, so this only fires
            # on inputs that bypassed transition detection
            continue
        k = int(np.argmin(np.abs(nominal - cl.mean_hz)))
        dist = abs(float(nominal[k]) - cl.mean_hz)
        if dist > tol_hz:
            continue
        cen = extract_centroid(tr.x[cl.member_idx], tr.y[cl.member_idx], min_pixels)
        if cen.rejected:
            continue
        ident = int(round(nominal[k]))
        held = best.get(ident)
        if held is None:
            best[ident] = (dist, cl.n_members, cl, cen)
            continue
        ambiguous.add(ident)
        if (dist, -cl.n_members) < (held[0], -held[1]):  # closer, then larger
            best[ident] = (dist, cl.n_members, cl, cen)

    entries = tuple(
        NvbmEntry(
            ident,
            best[ident][2].mean_hz,
            (float(best[ident][3].center[0]), float(best[ident][3].center[1])),
            best[ident][3].n_pixels,
            ambiguous=ident in ambiguous,
        )
        for ident in sorted(best)
    )
    return NvbmFrame(clusters.window.t_now_us, entries)
