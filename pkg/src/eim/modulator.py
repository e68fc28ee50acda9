"""Payload bits to interval sequences and transmitter edge schedules."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .codebook import Codebook

logger = logging.getLogger(__name__)

RISING = 1
FALLING = -1


@dataclass(frozen=True, eq=False)
class EdgeSchedule:
    """Time-ordered light edges. ``directions`` is +1 for rising, -1 for falling."""

    times: np.ndarray
    directions: np.ndarray
    pulse_width: int

    def __post_init__(self):
        if len(self.times) != len(self.directions):
            raise ValueError("times and directions differ in length")
        if len(self.times):
            d = self.directions
            if d[0] != RISING or np.any(d[1:] == d[:-1]):
                raise ValueError("edges must alternate starting with a rising edge")
            if np.any(np.diff(self.times) <= 0):
                raise ValueError("edge times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def rising_times(self) -> np.ndarray:
        return self.times[self.directions == RISING]

    @property
    def span(self) -> tuple[int, int]:
        if not len(self.times):
            return (0, 0)
        return int(self.times[0]), int(self.times[-1])

    @classmethod
    def empty(cls) -> "EdgeSchedule":
        return cls(np.zeros(0, np.int64), np.zeros(0, np.int8), 0)


def pad_bits(bits, L: int) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if np.any(bits > 1):
        raise ValueError("bits must be 0 or 1")
    extra = (-len(bits)) % L
    if extra:
        logger.warning("payload of %d bits is not a multiple of %d; zero-padding %d bits",
                       len(bits), L, extra)
        bits = np.concatenate([bits, np.zeros(extra, np.uint8)])
    return bits


def bits_to_values(bits, L: int) -> np.ndarray:
    """Group bits into L-bit integers, MSB first."""
    groups = pad_bits(bits, L).reshape(-1, L).astype(np.int64)
    return groups @ (1 << np.arange(L - 1, -1, -1, dtype=np.int64))


def values_to_bits(values, L: int) -> np.ndarray:
    values = np.asarray(values, dtype=np.int64)
    shifts = np.arange(L - 1, -1, -1, dtype=np.int64)
    return ((values[:, None] >> shifts) & 1).astype(np.uint8).ravel()


def encode_symbols(bits, codebook: Codebook) -> np.ndarray:
    """Alphabet indices (0-based) carrying ``bits``."""
    values = bits_to_values(bits, codebook.payload_bits)
    return codebook.codewords[values].ravel()


def encode(bits, codebook: Codebook) -> np.ndarray:
    """Interval sequence in ns carrying ``bits``."""
    return codebook.alphabet.as_array()[encode_symbols(bits, codebook)]


def to_edge_schedule(intervals, pulse_width: int, t0: int = 0) -> EdgeSchedule:
    """Rising edges separated by ``intervals``, each followed by a falling edge
    ``pulse_width`` later. One closing pulse follows the last interval."""
    intervals = np.asarray(intervals, dtype=np.int64)
    if t0 < 0:
        raise ValueError("t0 must be nonnegative")
    if pulse_width <= 0:
        raise ValueError("pulse_width must be positive")
    if len(intervals) and pulse_width >= intervals.min():
        raise ValueError(
            f"pulse_width {pulse_width} ns must be shorter than the shortest interval {intervals.min()} ns"
        )
    rising = t0 + np.concatenate([[0], np.cumsum(intervals)])
    times = np.empty(2 * len(rising), dtype=np.int64)
    times[0::2] = rising
    times[1::2] = rising + pulse_width
    directions = np.tile(np.array([RISING, FALLING], dtype=np.int8), len(rising))
    return EdgeSchedule(times, directions, int(pulse_width))


def default_pulse_width(codebook: Codebook) -> int:
    return codebook.alphabet.T_r // 2
