"""Line-oriented text formats: edge schedules, event streams, sweep tables, histograms."""
from __future__ import annotations

import csv
import io
from decimal import Decimal
from typing import Iterable, Sequence

import numpy as np

from .channel import EventStream, FrequencyPoint
from .codebook import MSweep
from .modulator import FALLING, RISING, EdgeSchedule

# sweep parameter -> (csv name, ns-per-unit divisor)
SWEEP_UNITS = {
    "jitter_sigma": ("jitter_sigma_us", 1000.0),
    "lowpass_tau": ("lowpass_tau_us", 1000.0),
    "noise_rate": ("noise_rate", 1.0),
}


def ns_to_us(ns) -> str:
    ns = int(round(ns))
    sign = "-" if ns < 0 else ""
    q, r = divmod(abs(ns), 1000)
    return f"{sign}{q}.{r:03d}"


def us_to_ns(text: str) -> int:
    return int((Decimal(text.strip()) * 1000).to_integral_value())


def _rows(text: str, header: Sequence[str]) -> list[list[str]]:
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r and any(c.strip() for c in r)]
    if not rows or [c.strip() for c in rows[0]] != list(header):
        raise ValueError(f"expected header {','.join(header)}")
    return rows[1:]


def format_schedule(schedule: EdgeSchedule) -> str:
    lines = ["t_us,direction"]
    for t, d in zip(schedule.times, schedule.directions):
        lines.append(f"{ns_to_us(t)},{'R' if d == RISING else 'F'}")
    return "\n".join(lines) + "\n"


def parse_schedule(text: str) -> EdgeSchedule:
    rows = _rows(text, ["t_us", "direction"])
    times = np.array([us_to_ns(r[0]) for r in rows], dtype=np.int64)
    codes = {"R": RISING, "F": FALLING}
    try:
        dirs = np.array([codes[r[1].strip()] for r in rows], dtype=np.int8)
    except KeyError as e:
        raise ValueError(f"bad edge direction {e.args[0]!r}") from None
    pulse = int(times[1] - times[0]) if len(times) > 1 else 0
    return EdgeSchedule(times, dirs, pulse)


def format_events(stream: EventStream) -> str:
    """CSV with simultaneous same-polarity events folded into one row."""
    lines = ["t_us,polarity,count"]
    t, p = stream.times, stream.polarities
    if len(t):
        brk = np.flatnonzero((t[1:] != t[:-1]) | (p[1:] != p[:-1])) + 1
        starts = np.r_[0, brk]
        counts = np.diff(np.r_[starts, len(t)])
        for s, c in zip(starts, counts):
            lines.append(f"{ns_to_us(t[s])},{int(p[s])},{int(c)}")
    return "\n".join(lines) + "\n"


def parse_events(text: str) -> EventStream:
    rows = _rows(text, ["t_us", "polarity", "count"])
    times, pols = [], []
    for r in rows:
        t, pol, n = us_to_ns(r[0]), int(r[1]), int(r[2])
        if pol not in (1, -1) or n < 1:
            raise ValueError(f"bad event row: {','.join(r)}")
        times.extend([t] * n)
        pols.extend([pol] * n)
    return EventStream.from_arrays(times, pols)


def format_sweep(rows: Iterable) -> str:
    rows = list(rows)
    if rows and isinstance(rows[0], FrequencyPoint):
        lines = ["param,value,pos_per_edge,neg_per_edge"]
        for r in rows:
            lines.append(f"frequency_hz,{r.freq:g},{r.positive_per_edge:.6g},{r.negative_per_edge:.6g}")
        return "\n".join(lines) + "\n"
    lines = ["param,value,ser,ber,symbols,errors"]
    for r in rows:
        name, div = SWEEP_UNITS[r.param]
        lines.append(f"{name},{r.value / div:g},{r.ser:.6g},{r.ber:.6g},{r.symbols},{r.errors}")
    return "\n".join(lines) + "\n"


def format_histogram(counts: Iterable[tuple[float, int]]) -> str:
    lines = ["t_d_us,count"] + [f"{ns_to_us(v)},{c}" for v, c in counts]
    return "\n".join(lines) + "\n"


def format_m_sweep(result: MSweep) -> str:
    lines = ["M,N_star,L,bitrate_bps"]
    for p in result.points:
        lines.append(f"{p.M},{p.N_star},{p.L},{p.bitrate:.3f}")
    return "\n".join(lines) + "\n"


def bits_to_hex(bits) -> str:
    bits = np.asarray(bits, dtype=np.uint8)
    return np.packbits(bits).tobytes().hex() if len(bits) else ""


def parse_bits(text: str) -> np.ndarray:
    """Bits from a text of '0'/'1' characters; whitespace is ignored."""
    chars = "".join(text.split())
    if set(chars) - {"0", "1"}:
        raise ValueError("bit file may only contain 0, 1 and whitespace")
    return np.frombuffer(chars.encode(), dtype=np.uint8) - ord("0")
