"""Event interval modulation for event-based optical camera links."""
from .calibration import (CalibrationError, IntervalHistogram, SerReport, estimate_Td,
                          estimate_Tr, feasibility_threshold, measure_ser, run_experiment, sweep)
from .channel import ChannelConfig, EventStream, frequency_response, simulate
from .codebook import (Codebook, SymbolAlphabet, bitrate_general, bitrate_uniform, build_alphabet,
                       design, optimal_block_length, payload_bits, select_codewords, sweep_M)
from .demodulator import (DemodConfig, SampledSignals, PeakTimes, bin_and_smooth, decide_bits,
                          demodulate, detect_peaks, peak_intervals, quantize_interval)
from .modulator import EdgeSchedule, encode, to_edge_schedule

__version__ = "0.1.0"
