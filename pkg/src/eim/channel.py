"""Phenomenological event-sensor channel.

Each light edge makes every pixel fire a small burst of events of the edge's
polarity. The burst size is scaled by ``1 - exp(-dt / lowpass_tau)`` where
``dt`` is the time since the previous (opposite) edge, modelling the limited
pixel bandwidth. Event times get an exponential burst spread plus Gaussian
jitter and are clamped to the edge time. A per-pixel refractory period then
drops events, and uniform background events are mixed in.

Times are integer nanoseconds throughout.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .modulator import FALLING, RISING, EdgeSchedule

POSITIVE = 1
NEGATIVE = -1

# edges per RNG substream; results do not depend on how chunks are scheduled
CHUNK_EDGES = 1024


@dataclass(frozen=True)
class ChannelConfig:
    pixel_count: int = 32
    events_per_edge: float = 3.0
    burst_decay: float = 3_000.0
    jitter_sigma: float = 2_000.0
    refractory: float = 5_000.0
    lowpass_tau: float = 8_000.0
    noise_rate: float = 100.0  # events/s per polarity
    seed: int = 0
    deterministic_counts: bool = False

    def __post_init__(self):
        if self.pixel_count < 1:
            raise ValueError("pixel_count must be >= 1")
        for name in ("events_per_edge", "burst_decay", "jitter_sigma", "refractory",
                     "lowpass_tau", "noise_rate"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    @classmethod
    def noiseless(cls, pixel_count: int = 1, events_per_edge: float = 5.0, **kw) -> "ChannelConfig":
        """Deterministic channel: exact event counts at the edge instants."""
        params = dict(pixel_count=pixel_count, events_per_edge=events_per_edge, burst_decay=0.0,
                      jitter_sigma=0.0, refractory=0.0, lowpass_tau=0.0, noise_rate=0.0,
                      deterministic_counts=True)
        params.update(kw)
        return cls(**params)


@dataclass(frozen=True, eq=False)
class EventStream:
    times: np.ndarray
    polarities: np.ndarray

    def __post_init__(self):
        if len(self.times) != len(self.polarities):
            raise ValueError("times and polarities differ in length")

    def __len__(self) -> int:
        return len(self.times)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        return (np.array_equal(self.times, other.times)
                and np.array_equal(self.polarities, other.polarities))

    @classmethod
    def from_arrays(cls, times, polarities) -> "EventStream":
        times = np.asarray(times, dtype=np.int64)
        polarities = np.asarray(polarities, dtype=np.int8)
        order = np.lexsort((-polarities, times))
        return cls(times[order], polarities[order])

    def shifted(self, dt: int) -> "EventStream":
        return EventStream(self.times + int(dt), self.polarities.copy())

    def count(self, polarity: int) -> int:
        return int(np.count_nonzero(self.polarities == polarity))


def _substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def amplitude_scale(schedule: EdgeSchedule, lowpass_tau: float) -> np.ndarray:
    s = np.ones(len(schedule), dtype=float)
    if lowpass_tau > 0 and len(schedule) > 1:
        # edges alternate, so the previous edge is always the opposite one
        s[1:] = -np.expm1(-np.diff(schedule.times) / lowpass_tau)
    return s


def _edge_events(schedule: EdgeSchedule, config: ChannelConfig):
    K = config.pixel_count
    scale = config.events_per_edge * amplitude_scale(schedule, config.lowpass_tau)
    times, pols, pixels, parts = [], [], [], range(0, len(schedule), CHUNK_EDGES)
    for chunk, start in enumerate(parts):
        rng = _substream(config.seed, 0, chunk)
        stop = min(start + CHUNK_EDGES, len(schedule))
        lam = np.broadcast_to(scale[start:stop, None], (stop - start, K))
        if config.deterministic_counts:
            counts = np.rint(lam).astype(np.int64)
        else:
            counts = rng.poisson(lam)
        flat = counts.ravel()
        n = int(flat.sum())
        edge = np.repeat(np.repeat(np.arange(start, stop), K), flat)
        pixel = np.repeat(np.tile(np.arange(K, dtype=np.int32), stop - start), flat)
        offset = np.zeros(n)
        if config.burst_decay > 0:
            offset += rng.exponential(config.burst_decay, n)
        if config.jitter_sigma > 0:
            offset += rng.normal(0.0, config.jitter_sigma, n)
        times.append(schedule.times[edge] + np.rint(np.maximum(offset, 0.0)).astype(np.int64))
        pols.append(np.where(schedule.directions[edge] == RISING, POSITIVE, NEGATIVE).astype(np.int8))
        pixels.append(pixel)
    if not times:
        return np.zeros(0, np.int64), np.zeros(0, np.int8), np.zeros(0, np.int32)
    return np.concatenate(times), np.concatenate(pols), np.concatenate(pixels)


def refractory_mask(times: np.ndarray, pixels: np.ndarray, refractory: float) -> np.ndarray:
    """Events surviving a per-pixel dead time.

    An event is kept when it arrives at least ``refractory`` after the last
    kept event of the same pixel. Dropped events do not extend the dead time.
    Returns a boolean mask aligned with the inputs.
    """
    n = len(times)
    keep = np.ones(n, dtype=bool)
    if refractory <= 0 or n == 0:
        return keep
    rho = int(np.ceil(refractory))
    # radix pass on pixel ids, then timsort on nearly-sorted per-pixel times
    by_pixel = np.argsort(pixels.astype(np.int16 if pixels.max() < 2**15 else np.int64), kind="stable")
    stride = int(times.max()) + rho + 1
    key = pixels[by_pixel].astype(np.int64) * stride + times[by_pixel]
    perm = np.argsort(key, kind="stable")
    order, key = by_pixel[perm], key[perm]
    t = times[order]
    p = pixels[order]
    new_pixel = np.r_[True, p[1:] != p[:-1]]
    # an event far enough from its predecessor is kept whatever happened before
    settled = new_pixel | np.r_[True, np.diff(t) >= rho]
    kept = settled.copy()
    starts = np.flatnonzero(settled)
    ends = np.r_[starts[1:], n]
    clustered = np.flatnonzero(ends - starts > 1)
    cur, stop = starts[clustered], ends[clustered]
    while len(cur):
        nxt = np.searchsorted(key, key[cur] + rho, side="left")
        ok = nxt < stop
        kept[nxt[ok]] = True
        cur, stop = nxt[ok], stop[ok]
    keep[order] = kept
    return keep


def _noise_events(config: ChannelConfig, span: tuple[int, int]):
    a, b = span
    times, pols = [], []
    if config.noise_rate <= 0 or b <= a:
        return np.zeros(0, np.int64), np.zeros(0, np.int8)
    for k, pol in enumerate((POSITIVE, NEGATIVE)):
        rng = _substream(config.seed, 1, k)
        n = rng.poisson(config.noise_rate * (b - a) * 1e-9)
        times.append(rng.integers(a, b, n, dtype=np.int64))
        pols.append(np.full(n, pol, np.int8))
    return np.concatenate(times), np.concatenate(pols)


def simulate(schedule: EdgeSchedule, config: ChannelConfig,
             span: tuple[int, int] | None = None) -> EventStream:
    """Event stream produced by ``schedule``.

    Background events cover ``span`` (default: first to last edge).
    """
    t, pol, pix = _edge_events(schedule, config)
    keep = refractory_mask(t, pix, config.refractory)
    t, pol = t[keep], pol[keep]
    nt, npol = _noise_events(config, schedule.span if span is None else span)
    return EventStream.from_arrays(np.concatenate([t, nt]), np.concatenate([pol, npol]))


def square_wave(freq: float, cycles: int, t0: int = 0) -> EdgeSchedule:
    """50% duty on/off schedule; edge times rounded to whole ns."""
    period = 1e9 / freq
    k = np.arange(cycles)
    times = np.empty(2 * cycles, dtype=np.int64)
    times[0::2] = t0 + np.rint(k * period)
    times[1::2] = t0 + np.rint(k * period + period / 2)
    dirs = np.tile(np.array([RISING, FALLING], np.int8), cycles)
    return EdgeSchedule(times, dirs, int(round(period / 2)))


@dataclass(frozen=True)
class FrequencyPoint:
    freq: float
    positive_per_edge: float
    negative_per_edge: float


def frequency_response(config: ChannelConfig, freqs: Sequence[float],
                       cycles: int = 1000) -> list[FrequencyPoint]:
    """Mean events per rising/falling edge for a square wave at each frequency."""
    out = []
    for f in freqs:
        if f <= 0:
            raise ValueError("frequencies must be positive")
        ev = simulate(square_wave(f, cycles), config)
        out.append(FrequencyPoint(float(f), ev.count(POSITIVE) / cycles,
                                  ev.count(NEGATIVE) / cycles))
    return out

