"""Event streams and polarity-transition detection.

An event is (x, y, t, p) with integer microsecond timestamp and polarity
p in {-1, +1}. A polarity transition is an OFF event followed at the same
pixel by an ON event within half the analysis window tau; its half-period
dt gives the flicker frequency estimate f = 1 / (2 dt).

Detection is vectorized over the whole stream but follows per-pixel state
machine semantics: an ON overwrites pixel state, a consumed OFF is not
reused, and a late (non-monotone) event at a pixel is rejected.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np
import pandas as pd

LOG = logging.getLogger(__name__)

US_PER_S = 1_000_000

EVENT_CSV_COLUMNS = ("t_us", "x", "y", "p")
_BINARY_DTYPE = np.dtype({"names": ["t", "x", "y", "p"], "formats": ["<u8", "<u2", "<u2", "<i1"]})


class Event(NamedTuple):
    """Single event; mostly a convenience for tests and small examples."""

    x: int
    y: int
    t_us: int
    p: int


class PolarityTransitionEvent(NamedTuple):
    x: int
    y: int
    t_off_us: int
    t_on_us: int
    dt_s: float
    f_hz: float


@dataclass
class EventArray:
    """Column store for an event stream (time in microseconds)."""

    t_us: np.ndarray
    x: np.ndarray
    y: np.ndarray
    p: np.ndarray

    def __post_init__(self) -> None:
        self.t_us = np.asarray(self.t_us, dtype=np.int64)
        self.x = np.asarray(self.x, dtype=np.int64)
        self.y = np.asarray(self.y, dtype=np.int64)
        self.p = np.asarray(self.p, dtype=np.int8)
        lengths = {len(self.t_us), len(self.x), len(self.y), len(self.p)}
        if len(lengths) != 1:
            raise ValueError("event columns must have equal length")

    def __len__(self) -> int:
        return len(self.t_us)

    def __iter__(self) -> Iterator[Event]:
        for i in range(len(self)):
            yield Event(int(self.x[i]), int(self.y[i]), int(self.t_us[i]), int(self.p[i]))

    @classmethod
    def empty(cls) -> "EventArray":
        z = np.zeros(0, dtype=np.int64)
        return cls(z, z.copy(), z.copy(), np.zeros(0, dtype=np.int8))

    @classmethod
    def from_events(cls, events) -> "EventArray":
        rows = list(events)
        if not rows:
            return cls.empty()
        arr = np.array([(e.t_us, e.x, e.y, e.p) for e in rows], dtype=np.int64)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3].astype(np.int8))

    def sorted_canonical(self) -> "EventArray":
        """Stable sort by (t, y, x); the canonical on-disk / stream order."""
        order = np.lexsort((self.x, self.y, self.t_us))
        return EventArray(self.t_us[order], self.x[order], self.y[order], self.p[order])


def write_events_csv(path, events: EventArray) -> None:
    pd.DataFrame(
        {"t_us": events.t_us, "x": events.x, "y": events.y, "p": events.p}
    ).to_csv(path, index=False)


def read_events_csv(path) -> EventArray:
    df = pd.read_csv(path)
    missing = [c for c in EVENT_CSV_COLUMNS if c not in df.columns]
    if missing:
        raise ValueError(f"event CSV missing columns: {missing}")
    return EventArray(
        df["t_us"].to_numpy(np.int64),
        df["x"].to_numpy(np.int64),
        df["y"].to_numpy(np.int64),
        df["p"].to_numpy(np.int8),
    )


def write_events_binary(path, events: EventArray) -> None:
    """Length-prefixed little-endian records: u64 count, then (u64, u16, u16, i8)."""
    rec = np.empty(len(events), dtype=_BINARY_DTYPE)
    rec["t"] = events.t_us.astype(np.uint64)
    rec["x"] = events.x.astype(np.uint16)
    rec["y"] = events.y.astype(np.uint16)
    rec["p"] = events.p
    with open(path, "wb") as fh:
        fh.write(np.uint64(len(events)).tobytes())
        fh.write(rec.tobytes())


def read_events_binary(path) -> EventArray:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 8:
        raise ValueError("binary event file truncated: missing length prefix")
    n = int(np.frombuffer(raw[:8], dtype="<u8")[0])
    body = raw[8:]
    if len(body) != n * _BINARY_DTYPE.itemsize:
        raise ValueError(
            f"binary event file length mismatch: prefix says {n} records, "
            f"payload holds {len(body) // _BINARY_DTYPE.itemsize}"
        )
    rec = np.frombuffer(body, dtype=_BINARY_DTYPE)
    return EventArray(
        rec["t"].astype(np.int64), rec["x"].astype(np.int64), rec["y"].astype(np.int64), rec["p"]
    )


# ---------------------------------------------------------------------------
# Transition detection
# ---------------------------------------------------------------------------


@dataclass
class DetectionStats:
    n_events: int = 0
    n_out_of_bounds: int = 0
    n_non_monotone: int = 0
    n_transitions: int = 0


@dataclass
class TransitionArray:
    """Columns of polarity transitions, ordered by (t_on, y, x)."""

    x: np.ndarray
    y: np.ndarray
    t_off_us: np.ndarray
    t_on_us: np.ndarray

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=np.int64)
        self.y = np.asarray(self.y, dtype=np.int64)
        self.t_off_us = np.asarray(self.t_off_us, dtype=np.int64)
        self.t_on_us = np.asarray(self.t_on_us, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.t_on_us)

    def __iter__(self) -> Iterator[PolarityTransitionEvent]:
        dt = self.dt_s
        f = self.f_hz
        for i in range(len(self)):
            yield PolarityTransitionEvent(
                int(self.x[i]),
                int(self.y[i]),
                int(self.t_off_us[i]),
                int(self.t_on_us[i]),
                float(dt[i]),
                float(f[i]),
            )

    @property
    def dt_s(self) -> np.ndarray:
        """OFF-to-ON half period in seconds."""
        return (self.t_on_us - self.t_off_us) / US_PER_S

    @property
    def f_hz(self) -> np.ndarray:
        """Flicker frequency estimate, f = 1 / (2 dt)."""
        return US_PER_S / (2.0 * (self.t_on_us - self.t_off_us))

    @classmethod
    def empty(cls) -> "TransitionArray":
        z = np.zeros(0, dtype=np.int64)
        return cls(z, z.copy(), z.copy(), z.copy())

    def take(self, idx) -> "TransitionArray":
        return TransitionArray(self.x[idx], self.y[idx], self.t_off_us[idx], self.t_on_us[idx])

    def concat(self, other: "TransitionArray") -> "TransitionArray":
        return TransitionArray(
            np.concatenate([self.x, other.x]),
            np.concatenate([self.y, other.y]),
            np.concatenate([self.t_off_us, other.t_off_us]),
            np.concatenate([self.t_on_us, other.t_on_us]),
        )


def detect_transitions(
    events: EventArray,
    tau_s: float = 0.010,
    width: int = 640,
    height: int = 480,
    return_stats: bool = False,
):
    """Extract OFF-to-ON transitions with dt strictly below tau / 2.

    Events only need to be time-ordered per pixel. Out-of-bounds events and
    per-pixel non-monotone (late) events are rejected and counted.
    """
    stats = DetectionStats(n_events=len(events))
    t, x, y, p = events.t_us, events.x, events.y, events.p

    in_bounds = (x >= 0) & (x < width) & (y >= 0) & (y < height)
    stats.n_out_of_bounds = int(len(t) - in_bounds.sum())
    if stats.n_out_of_bounds:
        LOG.warning("rejected %d out-of-bounds events", stats.n_out_of_bounds)
        t, x, y, p = t[in_bounds], x[in_bounds], y[in_bounds], p[in_bounds]

    if len(t) == 0:
        result = TransitionArray.empty()
        return (result, stats) if return_stats else result

    pixel = y * width + x
    order = np.argsort(pixel, kind="stable")  # preserves arrival order per pixel
    t, x, y, p, pixel = t[order], x[order], y[order], p[order], pixel[order]

    # Per-pixel running max via a global cummax on offset timestamps; a late
    # event never raises the max, so raw cummax equals cummax of kept events.
    offset = pixel.astype(np.int64) * np.int64(1 << 42)
    if np.any(t >= np.int64(1 << 42)):
        raise ValueError("timestamps exceed the supported range (~4.4e6 s)")
    cummax = np.maximum.accumulate(t + offset) - offset
    first_of_pixel = np.empty(len(pixel), dtype=bool)
    first_of_pixel[0] = True
    first_of_pixel[1:] = pixel[1:] != pixel[:-1]
    prev_cummax = np.empty_like(cummax)
    prev_cummax[0] = np.iinfo(np.int64).min
    prev_cummax[1:] = cummax[:-1]
    monotone = first_of_pixel | (t >= prev_cummax)
    stats.n_non_monotone = int(len(t) - monotone.sum())
    if stats.n_non_monotone:
        LOG.warning("rejected %d non-monotone events", stats.n_non_monotone)
        t, x, y, p, pixel = t[monotone], x[monotone], y[monotone], p[monotone], pixel[monotone]
        first_of_pixel = np.empty(len(pixel), dtype=bool)
        if len(pixel):
            first_of_pixel[0] = True
            first_of_pixel[1:] = pixel[1:] != pixel[:-1]

    if len(t) < 2:
        result = TransitionArray.empty()
        stats.n_transitions = 0
        return (result, stats) if return_stats else result

    # Adjacent pairs within a pixel: OFF then ON, gap strictly under tau/2.
    # Zero-gap pairs are degenerate (f would be infinite) and are skipped.
    lim_us = int(round(tau_s / 2.0 * US_PER_S))
    gap = t[1:] - t[:-1]
    same_pixel = ~first_of_pixel[1:]
    pair = same_pixel & (p[:-1] == -1) & (p[1:] == 1) & (gap < lim_us) & (gap > 0)
    idx_on = np.nonzero(pair)[0] + 1

    out = TransitionArray(x[idx_on], y[idx_on], t[idx_on - 1], t[idx_on])
    order = np.lexsort((out.x, out.y, out.t_on_us))
    out = out.take(order)
    stats.n_transitions = len(out)
    return (out, stats) if return_stats else out


# ---------------------------------------------------------------------------
# Sliding analysis window
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransitionWindow:
    """Transitions with t_on in (t_now - tau, t_now]; immutable snapshot."""

    tau_s: float
    t_now_us: int
    transitions: TransitionArray = field(default_factory=TransitionArray.empty)

    def __len__(self) -> int:
        return len(self.transitions)

    @property
    def frequencies(self) -> np.ndarray:
        """The multiset of frequency estimates in the window."""
        return self.transitions.f_hz


def advance_window(
    window: TransitionWindow, new: TransitionArray, t_now_us: int
) -> TransitionWindow:
    """Evict expired transitions, admit new ones up to t_now, move the clock."""
    if t_now_us < window.t_now_us:
        raise ValueError("window clock must not move backwards")
    tau_us = int(round(window.tau_s * US_PER_S))
    lo = t_now_us - tau_us
    kept = window.transitions.take(window.transitions.t_on_us > lo)
    admit = new.take((new.t_on_us > lo) & (new.t_on_us <= t_now_us))
    merged = kept.concat(admit)
    order = np.lexsort((merged.x, merged.y, merged.t_on_us))
    return TransitionWindow(window.tau_s, t_now_us, merged.take(order))


def iter_windows(
    transitions: TransitionArray, tau_s: float, t_start_us: int, t_end_us: int
) -> Iterator[TransitionWindow]:
    """Non-overlapping analysis windows closing at t_start + k tau.

    The input must be ordered by t_on (detect_transitions output is). Each
    window is a cheap slice view, suitable for the 1/tau-rate pipeline.
    """
    tau_us = int(round(tau_s * US_PER_S))
    t_on = transitions.t_on_us
    for t_close in range(t_start_us + tau_us, t_end_us + 1, tau_us):
        lo = np.searchsorted(t_on, t_close - tau_us, side="right")
        hi = np.searchsorted(t_on, t_close, side="right")
        yield TransitionWindow(tau_s, t_close, transitions.take(slice(lo, hi)))
