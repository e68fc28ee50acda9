"""Event stream to symbols: binning, smoothing, peak timing, interval decisions."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .channel import NEGATIVE, POSITIVE, EventStream
from .codebook import Codebook, SymbolAlphabet
from .modulator import values_to_bits


@dataclass(frozen=True)
class DemodConfig:
    """Receiver knobs. ``bin_width`` of None means ``max(1 us, T_d / 8)``."""

    bin_width: int | None = None
    smooth_window: int = 3
    neg_threshold: float = 1.0
    pos_threshold: float = 1.0

    def __post_init__(self):
        if self.bin_width is not None and self.bin_width <= 0:
            raise ValueError("bin_width must be positive")
        if self.smooth_window < 1 or self.smooth_window % 2 == 0:
            raise ValueError("smooth_window must be a positive odd number")
        if self.neg_threshold < 0 or self.pos_threshold < 0:
            raise ValueError("thresholds must be nonnegative")

    def resolved(self, alphabet: SymbolAlphabet) -> "DemodConfig":
        if self.bin_width is not None:
            return self
        return replace(self, bin_width=max(1000, alphabet.T_d // 8))


@dataclass(frozen=True, eq=False)
class SampledSignals:
    t_start: int
    bin_width: int
    r_p: np.ndarray
    r_n: np.ndarray

    def __len__(self) -> int:
        return len(self.r_p)

    def bin_centers(self, idx=None) -> np.ndarray:
        j = np.arange(len(self.r_p)) if idx is None else np.asarray(idx)
        return self.t_start + (j + 0.5) * self.bin_width


@dataclass(frozen=True, eq=False)
class PeakTimes:
    t_p: np.ndarray
    erasures: int = 0

    def __len__(self) -> int:
        return len(self.t_p)


@dataclass
class Diagnostics:
    peaks_detected: int = 0
    symbols_decoded: int = 0
    erasures: int = 0
    nearest_match_corrections: int = 0
    exact_matches: int = 0
    trailing_discarded: int = 0
    low_confidence: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class DemodResult:
    bits: np.ndarray
    symbols: np.ndarray
    diagnostics: Diagnostics
    peaks: PeakTimes = field(default_factory=lambda: PeakTimes(np.zeros(0)))
    intervals: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __iter__(self):
        return iter((self.bits, self.symbols, self.diagnostics))


def moving_average(x: np.ndarray, w: int) -> np.ndarray:
    """Centered moving average; windows shrink at the edges."""
    if w == 1 or len(x) == 0:
        return x.astype(float)
    h = w // 2
    c = np.concatenate([[0.0], np.cumsum(x, dtype=float)])
    n = len(x)
    lo = np.clip(np.arange(n) - h, 0, n)
    hi = np.clip(np.arange(n) + h + 1, 0, n)
    return (c[hi] - c[lo]) / (hi - lo)


def bin_and_smooth(stream: EventStream, config: DemodConfig) -> SampledSignals:
    """Per-polarity event histograms, smoothed by a centered moving average.

    The bins cover the first to the last event plus ``smooth_window // 2``
    empty bins on each side, so a burst at the stream start is smoothed the
    same way as any later one.
    """
    if config.bin_width is None:
        raise ValueError("bin_width unresolved; call DemodConfig.resolved(alphabet)")
    b = int(config.bin_width)
    if len(stream) == 0:
        return SampledSignals(0, b, np.zeros(0), np.zeros(0))
    pad = config.smooth_window // 2
    t0 = int(stream.times[0]) - pad * b
    j = (stream.times - t0) // b
    n = int(j[-1]) + 1 + pad
    hp = np.bincount(j[stream.polarities == POSITIVE], minlength=n)
    hn = np.bincount(j[stream.polarities == NEGATIVE], minlength=n)
    w = config.smooth_window
    return SampledSignals(t0, b, moving_average(hp, w), moving_average(hn, w))


def negative_flag(r_p: np.ndarray, r_n: np.ndarray, threshold: float) -> np.ndarray:
    """Negative-event flag after each bin.

    The flag is set where ``r_n`` exceeds ``threshold`` and is not below
    ``r_p``; it is cleared where ``r_p > r_n``. Elsewhere it holds its value.
    It starts clear.
    """
    n = len(r_p)
    pos_dom = r_p > r_n
    sets = (r_n > threshold) & ~pos_dom
    idx = np.arange(n)
    last = np.maximum.accumulate(np.where(sets | pos_dom, idx, -1))
    return (last >= 0) & sets[np.maximum(last, 0)]


def detect_peaks(signals: SampledSignals, config: DemodConfig) -> PeakTimes:
    """First local maximum of ``r_p`` in every stretch where the negative flag is clear.

    A maximum is a run of equal ``r_p`` values with lower neighbours on both
    sides. Runs are cut at the flagged stretches around the episode (a cut
    side counts as lower), and the peak sits at the first bin of the run, so
    a plateau that starts while the flag still holds keeps its true start.
    """
    r_p, r_n = signals.r_p, signals.r_n
    n = len(r_p)
    if n == 0:
        return PeakTimes(np.zeros(0))
    flag = negative_flag(r_p, r_n, config.neg_threshold)
    idx = np.arange(n)
    new_run = np.r_[True, r_p[1:] != r_p[:-1]]
    end_run = np.r_[r_p[1:] != r_p[:-1], True]
    run_start = np.maximum.accumulate(np.where(new_run, idx, 0))
    run_end = np.minimum.accumulate(np.where(end_run, idx, n - 1)[::-1])[::-1]
    # region of an episode: from the first bin of the flagged stretch before it
    # to the last bin before the next flagged stretch
    flag_on = flag & ~np.r_[False, flag[:-1]]
    lo = np.maximum(run_start, np.maximum.accumulate(np.where(flag_on, idx, 0)))
    nxt = np.minimum.accumulate(np.where(flag_on, idx, n)[::-1])[::-1]
    hi = np.minimum(run_end, nxt - 1)
    padded = np.r_[0.0, r_p, 0.0]
    left_lower = (lo > run_start) | (padded[lo] < r_p)
    right_lower = (hi < run_end) | (padded[np.minimum(hi, n - 1) + 2] < r_p)
    cand = left_lower & right_lower & (r_p >= config.pos_threshold) & ~flag
    episode = np.cumsum(np.r_[False, flag[:-1]] & ~flag)
    cidx = np.flatnonzero(cand)
    ep = episode[cidx]
    first = np.r_[True, ep[1:] != ep[:-1]] if len(ep) else np.zeros(0, bool)
    hits = lo[cidx[first]]
    # an episode only exists if some bin in it has the flag clear
    n_episodes = len(np.unique(episode[~flag]))
    return PeakTimes(signals.bin_centers(hits).astype(float), n_episodes - len(hits))


def peak_intervals(peaks: PeakTimes) -> np.ndarray:
    if len(peaks) < 2:
        return np.zeros(0)
    return np.diff(peaks.t_p)


def quantize_intervals(t_d, alphabet: SymbolAlphabet) -> np.ndarray:
    """0-based index of the nearest interval; exact midpoints go to the smaller index."""
    t_d = np.asarray(t_d, dtype=float)
    tau = alphabet.as_array().astype(float)
    if t_d.size == 0:
        return np.zeros(0, np.int64)
    return np.argmin(np.abs(t_d[:, None] - tau[None, :]), axis=1).astype(np.int64)


def quantize_interval(t_d: float, alphabet: SymbolAlphabet) -> int:
    return int(quantize_intervals([t_d], alphabet)[0])


def low_confidence(t_d, alphabet: SymbolAlphabet) -> np.ndarray:
    """True where ``t_d`` lies outside the ladder by more than half an end step."""
    t_d = np.asarray(t_d, dtype=float)
    tau = alphabet.as_array().astype(float)
    lo = tau[0] - (tau[1] - tau[0]) / 2
    hi = tau[-1] + (tau[-1] - tau[-2]) / 2
    return (t_d < lo) | (t_d > hi)


def nearest_codeword(tuples: np.ndarray, codebook: Codebook) -> np.ndarray:
    """Payload value whose intervals are closest in summed absolute difference."""
    tau = codebook.alphabet.as_array()
    cw = tau[codebook.codewords]
    out = np.empty(len(tuples), np.int64)
    for i, row in enumerate(np.atleast_2d(tuples)):
        out[i] = np.argmin(np.abs(cw - tau[row]).sum(axis=1))
    return out


def decide_bits(indices, codebook: Codebook) -> tuple[np.ndarray, Diagnostics]:
    """Group alphabet indices into blocks and map each block to its payload bits."""
    indices = np.asarray(indices, dtype=np.int64)
    n = codebook.block_length
    diag = Diagnostics()
    whole = len(indices) // n
    diag.trailing_discarded = len(indices) - whole * n
    if whole == 0:
        return np.zeros(0, np.uint8), diag
    tuples = indices[: whole * n].reshape(whole, n)
    values = codebook.lookup(tuples)
    miss = values < 0
    if miss.any():
        codes = codebook.flat_codes(tuples[miss])
        uniq, first, inverse = np.unique(codes, return_index=True, return_inverse=True)
        values[miss] = nearest_codeword(tuples[miss][first], codebook)[inverse]
    diag.exact_matches = int(whole - miss.sum())
    diag.nearest_match_corrections = int(miss.sum())
    diag.symbols_decoded = whole * n
    return values_to_bits(values, codebook.payload_bits), diag


def demodulate(stream: EventStream, codebook: Codebook,
               config: DemodConfig = DemodConfig()) -> DemodResult:
    alphabet = codebook.alphabet
    config = config.resolved(alphabet)
    peaks = detect_peaks(bin_and_smooth(stream, config), config)
    t_d = peak_intervals(peaks)
    symbols = quantize_intervals(t_d, alphabet)
    bits, diag = decide_bits(symbols, codebook)
    diag.peaks_detected = len(peaks)
    diag.erasures = peaks.erasures
    diag.low_confidence = int(low_confidence(t_d, alphabet).sum())
    return DemodResult(bits, symbols, diag, peaks, t_d)
