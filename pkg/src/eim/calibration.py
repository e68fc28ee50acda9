"""Symbol-design calibration against the simulated channel, plus SER/BER metrics."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.stats import binomtest

from .channel import ChannelConfig, EventStream, frequency_response, simulate
from .codebook import Codebook
from .demodulator import (DemodConfig, bin_and_smooth, demodulate, detect_peaks,
                          peak_intervals)
from .modulator import default_pulse_width, to_edge_schedule, values_to_bits

SER_LIMIT = 1e-4
SWEEP_PARAMETERS = ("jitter_sigma", "noise_rate", "lowpass_tau", "frequency")


class CalibrationError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class IntervalHistogram:
    true_interval: int
    samples: np.ndarray

    def __post_init__(self):
        if len(self.samples) == 0:
            raise ValueError("histogram needs at least one sample")

    @property
    def T_Upper(self) -> float:
        return float(self.samples.max())

    @property
    def T_Lower(self) -> float:
        return float(self.samples.min())

    @property
    def spread(self) -> float:
        return self.T_Upper - self.T_Lower

    def counts(self) -> list[tuple[float, int]]:
        values, counts = np.unique(self.samples, return_counts=True)
        return [(float(v), int(c)) for v, c in zip(values, counts)]


@dataclass(frozen=True)
class SerReport:
    symbols_sent: int
    symbol_errors: int
    bits_sent: int = 0
    bit_errors: int = 0
    length_delta: int = 0  # received minus sent symbols
    max_interval_error: float | None = None  # ns, over aligned positions

    @property
    def ser(self) -> float:
        return self.symbol_errors / self.symbols_sent if self.symbols_sent else 0.0

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_sent if self.bits_sent else 0.0

    def ser_interval(self, confidence: float = 0.95) -> tuple[float, float]:
        """Exact (Clopper-Pearson) binomial interval for the SER."""
        k = min(self.symbol_errors, self.symbols_sent)
        ci = binomtest(k, self.symbols_sent).proportion_ci(confidence, method="exact")
        return float(ci.low), float(ci.high)

    def as_dict(self) -> dict:
        return {
            "symbols_sent": self.symbols_sent, "symbol_errors": self.symbol_errors,
            "ser": self.ser, "bits_sent": self.bits_sent, "bit_errors": self.bit_errors,
            "ber": self.ber, "length_delta": self.length_delta,
            "max_interval_error_ns": self.max_interval_error,
        }


def _positional_errors(tx: np.ndarray, rx: np.ndarray) -> int:
    m = min(len(tx), len(rx))
    return int(np.count_nonzero(tx[:m] != rx[:m])) + abs(len(tx) - len(rx))


def measure_ser(tx_symbols, rx_symbols, tx_bits=None, rx_bits=None) -> SerReport:
    """Positional comparison from the stream start; missing or extra positions count as errors."""
    tx = np.asarray(tx_symbols)
    rx = np.asarray(rx_symbols)
    report = SerReport(len(tx), _positional_errors(tx, rx), length_delta=len(rx) - len(tx))
    if tx_bits is not None:
        tb = np.asarray(tx_bits)
        rb = np.asarray(rx_bits if rx_bits is not None else [])
        report = replace(report, bits_sent=len(tb), bit_errors=_positional_errors(tb, rb))
    return report


def payload_rng(seed: int) -> np.random.Generator:
    # spawn key 2 keeps the payload stream apart from the channel substreams
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2,)))


def run_experiment(codebook: Codebook, channel: ChannelConfig, demod: DemodConfig,
                   n_symbols: int, seed: int, pulse_width: int | None = None) -> SerReport:
    """Random payload through modulation, the channel and the demodulator.

    ``seed`` drives both the payload and the channel; ``channel.seed`` is
    ignored. Whole codewords are sent, so the symbol count is rounded up to
    a multiple of the block length.
    """
    n_words = -(-n_symbols // codebook.block_length)
    values = payload_rng(seed).integers(0, len(codebook), n_words)
    tx_bits = values_to_bits(values, codebook.payload_bits)
    tx_symbols = codebook.codewords[values].ravel()
    intervals = codebook.alphabet.as_array()[tx_symbols]
    pw = default_pulse_width(codebook) if pulse_width is None else pulse_width
    stream = simulate(to_edge_schedule(intervals, pw), replace(channel, seed=seed))
    result = demodulate(stream, codebook, demod)
    report = measure_ser(tx_symbols, result.symbols, tx_bits, result.bits)
    m = min(len(intervals), len(result.intervals))
    if m:
        worst = float(np.abs(result.intervals[:m] - intervals[:m]).max())
        report = replace(report, max_interval_error=worst)
    return report


def _measured_intervals(stream: EventStream, demod: DemodConfig) -> np.ndarray:
    if demod.bin_width is None:
        demod = replace(demod, bin_width=1000)
    return peak_intervals(detect_peaks(bin_and_smooth(stream, demod), demod))


def _periodic_stream(config: ChannelConfig, period: int, trials: int) -> EventStream:
    return simulate(to_edge_schedule(np.full(trials, period, np.int64), period // 2), config)


def detection_rate(config: ChannelConfig, demod: DemodConfig, period: int, trials: int,
                   tolerance: float = 0.1) -> float:
    """Fraction of ``trials`` on/off periods recovered within ``tolerance * period``."""
    t_d = _measured_intervals(_periodic_stream(config, period, trials), demod)
    good = np.count_nonzero(np.abs(t_d - period) <= tolerance * period)
    return min(good, trials) / trials


def estimate_Tr(config: ChannelConfig, demod: DemodConfig, periods: Sequence[int],
                trials: int = 10_000, stability: float = 1 - SER_LIMIT,
                tolerance: float = 0.1) -> int:
    """Shortest tested on/off period that is recovered stably.

    ``demod.bin_width`` defaults to 1 us here since no ladder exists yet.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    for period in sorted(int(p) for p in periods):
        if detection_rate(config, demod, period, trials, tolerance) >= stability:
            return period
    raise CalibrationError(f"no period in [{min(periods)}, {max(periods)}] ns is detected stably")


def estimate_Td(config: ChannelConfig, demod: DemodConfig, probe_interval: int,
                trials: int = 10_000, margin: float = 0.1) -> tuple[IntervalHistogram, int]:
    """Spread of measured intervals for a fixed probe and the step it calls for.

    Samples further than half the probe from it are discarded as missed or
    spurious peaks. The step is ``ceil(spread * (1 + margin))``, at least one
    bin width.
    """
    if trials < 2:
        raise ValueError("trials must be >= 2")
    if margin <= 0:
        raise ValueError("margin must be positive")
    t_d = _measured_intervals(_periodic_stream(config, probe_interval, trials), demod)
    t_d = t_d[np.abs(t_d - probe_interval) < probe_interval / 2]
    if len(t_d) < 2:
        raise CalibrationError(f"only {len(t_d)} intervals detected at probe {probe_interval} ns")
    hist = IntervalHistogram(int(probe_interval), t_d)
    floor = demod.bin_width or 1000
    return hist, max(int(math.ceil(hist.spread * (1 + margin))), floor)


@dataclass(frozen=True)
class SweepRow:
    param: str
    value: float
    ser: float
    ber: float
    symbols: int
    errors: int


def sweep(parameter: str, values: Sequence[float], codebook: Codebook, channel: ChannelConfig,
          demod: DemodConfig, n_symbols: int = 100_000, seed: int = 0, threads: int = 1,
          cycles: int = 1000) -> list:
    """One row per value, in input order.

    Channel parameters produce :class:`SweepRow` entries from full
    experiments; ``frequency`` produces frequency-response points.
    """
    if parameter not in SWEEP_PARAMETERS:
        raise ValueError(f"unknown sweep parameter {parameter!r}; choose from {SWEEP_PARAMETERS}")
    if parameter == "frequency":
        return frequency_response(replace(channel, seed=seed), values, cycles)

    def one(v):
        rep = run_experiment(codebook, replace(channel, **{parameter: v}), demod, n_symbols, seed)
        return SweepRow(parameter, float(v), rep.ser, rep.ber, rep.symbols_sent, rep.symbol_errors)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, values))
    return [one(v) for v in values]


def feasibility_threshold(rows: Sequence[SweepRow], limit: float = SER_LIMIT) -> float | None:
    """Largest swept value below which every row keeps SER under ``limit``."""
    best = None
    for row in sorted(rows, key=lambda r: r.value):
        if row.ser >= limit:
            break
        best = row.value
    return best
