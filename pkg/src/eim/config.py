"""Flat ``key = value`` experiment configuration.

Durations are given in microseconds, rates in events per second. Every key
has a default except ``tr_us``, ``td_us`` and ``m``, which come from the
file or from a preset.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Optional

from .channel import ChannelConfig
from .codebook import DEFAULT_EPSILON, DEFAULT_N_MAX, Codebook, SymbolAlphabet, build_alphabet, design
from .demodulator import DemodConfig

PRESETS = {
    "modulation1": {"tr_us": 32.0, "td_us": 26.0, "m": 4},
    "modulation2": {"tr_us": 160.0, "td_us": 60.0, "m": 6},
}


def _us(v: float) -> int:
    return int(round(v * 1000))


@dataclass(frozen=True)
class ExperimentConfig:
    tr_us: Optional[float] = None
    td_us: Optional[float] = None
    m: Optional[int] = None
    # codebook
    n_max: int = DEFAULT_N_MAX
    epsilon: float = DEFAULT_EPSILON
    # transmitter
    pulse_width_us: Optional[float] = None  # None: T_r / 2
    # channel
    pixel_count: int = 32
    events_per_edge: float = 3.0
    burst_decay_us: float = 3.0
    jitter_sigma_us: float = 2.0
    refractory_us: float = 5.0
    lowpass_tau_us: float = 8.0
    noise_rate: float = 100.0
    deterministic_counts: bool = False
    # demodulator
    bin_width_us: Optional[float] = None  # None: max(1 us, T_d / 8)
    smooth_window: int = 3
    neg_threshold: float = 1.0
    pos_threshold: float = 1.0
    # run
    n_symbols: int = 100_000
    seed: int = 0
    # calibration
    cal_trials: int = 10_000
    cal_stability: float = 0.9999
    cal_period_min_us: float = 10.0
    cal_period_max_us: float = 200.0
    cal_period_step_us: float = 2.0
    cal_probe_us: Optional[float] = None  # None: T_r
    cal_margin: float = 0.1

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def updated(self, values: dict) -> "ExperimentConfig":
        known = {f.name: f for f in fields(self)}
        parsed = {}
        for key, raw in values.items():
            if key not in known:
                raise ValueError(f"unknown config key {key!r}")
            parsed[key] = _convert(key, known[key].type, raw)
        return replace(self, **parsed)

    @classmethod
    def from_text(cls, text: str, base: "ExperimentConfig | None" = None) -> "ExperimentConfig":
        values = {}
        for n, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {n}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            values[key] = val
        return (base or cls()).updated(values)

    @classmethod
    def preset(cls, name: str) -> "ExperimentConfig":
        if name not in PRESETS:
            raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        return cls(**PRESETS[name])

    def to_text(self) -> str:
        out = []
        for key in self.keys():
            v = getattr(self, key)
            out.append(f"{key} = {'auto' if v is None else str(v).lower() if isinstance(v, bool) else v}")
        return "\n".join(out) + "\n"

    # -- builders -------------------------------------------------------
    def _require_ladder(self):
        missing = [k for k in ("tr_us", "td_us", "m") if getattr(self, k) is None]
        if missing:
            raise ValueError(f"missing required config keys: {', '.join(missing)}")

    def alphabet(self) -> SymbolAlphabet:
        self._require_ladder()
        return build_alphabet(_us(self.tr_us), _us(self.td_us), int(self.m))

    def codebook(self) -> Codebook:
        a = self.alphabet()
        return design(a.T_r, a.T_d, a.M, self.n_max)

    def pulse_width(self) -> int:
        if self.pulse_width_us is not None:
            return _us(self.pulse_width_us)
        return self.alphabet().T_r // 2

    def channel(self) -> ChannelConfig:
        return ChannelConfig(
            pixel_count=self.pixel_count, events_per_edge=self.events_per_edge,
            burst_decay=self.burst_decay_us * 1000, jitter_sigma=self.jitter_sigma_us * 1000,
            refractory=self.refractory_us * 1000, lowpass_tau=self.lowpass_tau_us * 1000,
            noise_rate=self.noise_rate, seed=self.seed,
            deterministic_counts=self.deterministic_counts,
        )

    def demod(self) -> DemodConfig:
        bw = None if self.bin_width_us is None else _us(self.bin_width_us)
        return DemodConfig(bw, self.smooth_window, self.neg_threshold, self.pos_threshold)


def _convert(key: str, typ, raw):
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    typ = str(typ)
    if "Optional" in typ and text.lower() in ("auto", "none", ""):
        return None
    try:
        if "bool" in typ:
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if "int" in typ:
            return int(text)
        return float(text)
    except ValueError:
        raise ValueError(f"bad value for {key}: {raw!r}") from None
