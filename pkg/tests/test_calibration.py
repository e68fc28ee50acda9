from dataclasses import replace

import numpy as np
import pytest

from eim.calibration import (CalibrationError, IntervalHistogram, SerReport, SweepRow,
                             detection_rate, estimate_Td, estimate_Tr, feasibility_threshold,
                             measure_ser, run_experiment, sweep)
from eim.channel import ChannelConfig, FrequencyPoint
from eim.codebook import design
from eim.demodulator import DemodConfig

US = 1000


@pytest.fixture(scope="module")
def mod1():
    return design(32 * US, 26 * US, 4)


class TestMeasureSer:
    def test_identical(self):
        seq = np.random.default_rng(0).integers(0, 4, 100_000)
        assert measure_ser(seq, seq).ser == 0.0

    def test_one_mismatch(self):
        tx = np.zeros(10_000, int)
        rx = tx.copy()
        rx[1234] = 2
        rep = measure_ser(tx, rx)
        assert rep.symbol_errors == 1 and rep.ser == pytest.approx(1e-4)

    def test_short_receive(self):
        rep = measure_ser([1, 2, 3, 0, 1], [1, 2])
        assert rep.symbol_errors == 3 and rep.length_delta == -3

    def test_bits(self):
        rep = measure_ser([0, 1], [0, 1], [0, 1, 1, 0], [0, 1, 1, 1])
        assert (rep.bits_sent, rep.bit_errors, rep.ber) == (4, 1, 0.25)

    def test_interval(self):
        lo, hi = SerReport(100_000, 0).ser_interval()
        assert lo == 0.0 and hi == pytest.approx(3.69e-5, rel=0.01)


class TestRunExperiment:
    def test_noiseless_is_error_free(self, mod1):
        rep = run_experiment(mod1, ChannelConfig.noiseless(), DemodConfig(), 10_000, seed=1)
        assert rep.symbols_sent == 10_000 and rep.symbol_errors == 0 and rep.bit_errors == 0
        assert rep.max_interval_error < 26 * US / 2

    def test_whole_codewords(self):
        cb = design(160 * US, 60 * US, 6)
        rep = run_experiment(cb, ChannelConfig.noiseless(), DemodConfig(), 100, seed=1)
        assert rep.symbols_sent == 105 and rep.bits_sent == 15 * 18 and rep.ser == 0

    def test_seed_determinism(self, mod1):
        ch = ChannelConfig(jitter_sigma=9 * US)
        a = run_experiment(mod1, ch, DemodConfig(), 5000, seed=3)
        b = run_experiment(mod1, ch, DemodConfig(), 5000, seed=3)
        c = run_experiment(mod1, ch, DemodConfig(), 5000, seed=4)
        assert a == b
        assert a != c


class TestEstimateTr:
    def test_noiseless_returns_smallest_period(self):
        ch = ChannelConfig.noiseless(pixel_count=4, events_per_edge=5, lowpass_tau=8 * US)
        periods = range(10 * US, 60 * US, 5 * US)
        assert estimate_Tr(ch, DemodConfig(), periods, trials=500) == 10 * US

    def test_grows_with_pixel_time_constant(self):
        base = ChannelConfig(seed=5)
        periods = range(6 * US, 80 * US + 1, 2 * US)
        found = [estimate_Tr(replace(base, lowpass_tau=t * US), DemodConfig(), periods, trials=2000)
                 for t in (4, 16, 32)]
        assert found == sorted(found) and found[0] < found[-1]

    def test_failure_is_explicit(self):
        ch = ChannelConfig(events_per_edge=0.0)
        with pytest.raises(CalibrationError):
            estimate_Tr(ch, DemodConfig(), [20 * US, 40 * US], trials=100)

    def test_detection_rate_bounds(self):
        ch = ChannelConfig.noiseless(pixel_count=4)
        assert detection_rate(ch, DemodConfig(), 40 * US, 200) == 1.0


class TestEstimateTd:
    single = ChannelConfig.noiseless(pixel_count=1, events_per_edge=1)
    fine = DemodConfig(bin_width=500, neg_threshold=0.2, pos_threshold=0.2)

    def test_zero_jitter_clamps_to_bin(self):
        hist, t_d = estimate_Td(self.single, self.fine, 84 * US, trials=200)
        assert hist.T_Upper == hist.T_Lower
        assert t_d == 500

    def test_monotone_in_jitter(self):
        steps = []
        for s in (1, 2, 4, 8):
            hist, t_d = estimate_Td(replace(self.single, jitter_sigma=s * US), self.fine, 84 * US, 3000)
            assert t_d > hist.T_Upper - hist.T_Lower
            steps.append(t_d)
        assert steps == sorted(steps) and len(set(steps)) == 4

    def test_default_channel_spread_is_a_few_us(self):
        hist, t_d = estimate_Td(ChannelConfig(), DemodConfig(), 32 * US, trials=2000)
        assert 0 < hist.spread < 10 * US
        assert t_d == int(np.ceil(hist.spread * 1.1))

    def test_insufficient_intervals(self):
        with pytest.raises(CalibrationError):
            estimate_Td(ChannelConfig(events_per_edge=0.0), DemodConfig(), 50 * US, trials=50)

    def test_histogram_counts(self):
        h = IntervalHistogram(10, np.array([9.0, 10.0, 10.0, 12.0]))
        assert h.counts() == [(9.0, 1), (10.0, 2), (12.0, 1)]
        assert (h.T_Lower, h.T_Upper) == (9.0, 12.0)


class TestSweep:
    def test_rows_per_value_and_noiseless_flat(self, mod1):
        rows = sweep("noise_rate", [0.0, 50.0, 100.0], mod1, ChannelConfig.noiseless(), DemodConfig(),
                     n_symbols=2000, seed=1)
        assert [r.value for r in rows] == [0.0, 50.0, 100.0]
        assert all(r.ser == 0 for r in rows)

    def test_frequency(self):
        rows = sweep("frequency", [1e3, 50e3], None, ChannelConfig(noise_rate=0), DemodConfig(), cycles=200)
        assert all(isinstance(r, FrequencyPoint) for r in rows)
        assert rows[1].positive_per_edge < rows[0].positive_per_edge

    def test_unknown_parameter(self, mod1):
        with pytest.raises(ValueError):
            sweep("distance", [1.0], mod1, ChannelConfig(), DemodConfig())

    def test_ser_nondecreasing_in_noise(self, mod1):
        ch = ChannelConfig(jitter_sigma=9 * US)
        rows = sweep("noise_rate", [0.0, 2e4, 1e5], mod1, ch, DemodConfig(), n_symbols=5000, seed=2)
        sers = [r.ser for r in rows]
        assert sers == sorted(sers)

    def test_threads_keep_order(self, mod1):
        args = ("jitter_sigma", [4 * US, 1 * US], mod1, ChannelConfig(), DemodConfig(), 1000, 0)
        assert sweep(*args, threads=2) == sweep(*args)


def test_feasibility_threshold():
    rows = [SweepRow("jitter_sigma", v, s, 0, 10**5, 0) for v, s in
            [(3.0, 0.0), (1.0, 0.0), (2.0, 5e-5), (4.0, 2e-4), (5.0, 0.0)]]
    assert feasibility_threshold(rows) == 3.0
    assert feasibility_threshold(rows[3:4]) is None
