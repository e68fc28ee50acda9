"""Interval alphabets and block codebooks for event interval modulation.

All durations are integer nanoseconds. A codebook groups ``N`` consecutive
intervals into one codeword and keeps the ``2**L`` shortest ``N``-tuples,
where ``L = floor(N * log2(M))``.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

DEFAULT_N_MAX = 10
DEFAULT_EPSILON = 0.02
MAX_TUPLES = 10**8

HEADER = "EIM-CODEBOOK v1"


class EnumerationLimitError(ValueError):
    """Raised when M**N exceeds the tuple enumeration cap."""


@dataclass(frozen=True)
class SymbolAlphabet:
    """Ladder of allowed event intervals ``tau_i = T_r + (i-1) * T_d``."""

    T_r: int
    T_d: int
    M: int
    intervals: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.T_r <= 0 or self.T_d <= 0:
            raise ValueError(f"T_r and T_d must be positive, got {self.T_r}, {self.T_d}")
        if self.M < 2:
            raise ValueError(f"M must be >= 2, got {self.M}")
        if not self.intervals:
            object.__setattr__(
                self, "intervals", tuple(self.T_r + i * self.T_d for i in range(self.M))
            )
        ivals = self.intervals
        if len(ivals) != self.M:
            raise ValueError("interval count does not match M")
        if any(b <= a for a, b in zip(ivals, ivals[1:])) or ivals[0] <= 0:
            raise ValueError("intervals must be positive and strictly increasing")

    @classmethod
    def from_intervals(cls, intervals: Iterable[int]) -> "SymbolAlphabet":
        """Build an alphabet from an arbitrary strictly increasing interval list."""
        ivals = tuple(int(v) for v in intervals)
        if len(ivals) < 2:
            raise ValueError("need at least two intervals")
        steps = [b - a for a, b in zip(ivals, ivals[1:])]
        return cls(T_r=ivals[0], T_d=max(min(steps), 1), M=len(ivals), intervals=ivals)

    @property
    def uniform(self) -> bool:
        return all(v == self.T_r + i * self.T_d for i, v in enumerate(self.intervals))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.intervals, dtype=np.int64)


def build_alphabet(T_r: int, T_d: int, M: int) -> SymbolAlphabet:
    return SymbolAlphabet(int(T_r), int(T_d), int(M))


def _floor_log2_power(M: int, N: int) -> int:
    # exact floor(N * log2 M) via integer bit length
    return (M**N).bit_length() - 1


def fractional_bits(M: int, N: int) -> float:
    """Fractional part of ``N * log2(M)``; exactly 0.0 when ``M**N`` is a power of two."""
    L = _floor_log2_power(M, N)
    if M**N == 1 << L:
        return 0.0
    return N * math.log2(M) - L


def optimal_block_length(M: int, N_max: int = DEFAULT_N_MAX) -> int:
    """Block length in ``1 <= N < N_max`` minimising the wasted fraction of a bit.

    Ties go to the smaller ``N``.
    """
    if M < 2:
        raise ValueError(f"M must be >= 2, got {M}")
    if N_max < 2:
        # the search range 1 <= N < N_max must be nonempty
        raise ValueError(f"N_max must be >= 2, got {N_max}")
    best_n, best_frac = 1, fractional_bits(M, 1)
    for n in range(2, N_max):
        f = fractional_bits(M, n)
        if f < best_frac - 1e-12:
            best_n, best_frac = n, f
    return best_n


def payload_bits(M: int, N_star: int) -> int:
    if M < 2 or N_star < 1:
        raise ValueError("need M >= 2 and N_star >= 1")
    return _floor_log2_power(M, N_star)


@dataclass(frozen=True, eq=False)
class Codebook:
    """Ordered set of ``2**L`` codewords, each an ``N*``-tuple of alphabet indices.

    ``codewords`` holds 0-based alphabet indices with shape ``(2**L, N*)``;
    row ``k`` carries the payload value ``k`` (MSB first on the wire).
    """

    alphabet: SymbolAlphabet
    block_length: int
    payload_bits: int
    codewords: np.ndarray
    durations: np.ndarray

    def __len__(self) -> int:
        return len(self.codewords)

    @property
    def total_duration(self) -> int:
        return int(self.durations.sum())

    def bitrate(self) -> float:
        return bitrate_general(self)

    def flat_codes(self, tuples: np.ndarray) -> np.ndarray:
        """Mixed-radix code of each tuple, first element most significant."""
        tuples = np.atleast_2d(np.asarray(tuples, dtype=np.int64))
        weights = self.alphabet.M ** np.arange(self.block_length - 1, -1, -1, dtype=np.int64)
        return tuples @ weights

    def lookup(self, tuples: np.ndarray) -> np.ndarray:
        """Payload value for each tuple, or -1 for tuples outside the codebook."""
        codes = self.flat_codes(tuples)
        sorted_codes, order = self._code_index
        pos = np.searchsorted(sorted_codes, codes)
        pos = np.minimum(pos, len(sorted_codes) - 1)
        hit = sorted_codes[pos] == codes
        return np.where(hit, order[pos], -1)

    @property
    def _code_index(self):
        cached = self.__dict__.get("_code_index_cache")
        if cached is None:
            codes = self.flat_codes(self.codewords)
            order = np.argsort(codes)
            cached = (codes[order], order)
            object.__setattr__(self, "_code_index_cache", cached)
        return cached

    def to_text(self) -> str:
        a = self.alphabet
        if not a.uniform:
            raise ValueError("text export needs a uniform interval ladder")
        lines = [HEADER, f"{a.T_r} {a.T_d} {a.M} {self.block_length} {self.payload_bits}"]
        for k, (row, d) in enumerate(zip(self.codewords, self.durations)):
            lines.append(f"{k} {' '.join(str(int(i) + 1) for i in row)} {int(d)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Codebook":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != HEADER:
            raise ValueError(f"missing '{HEADER}' header")
        T_r, T_d, M, n_star, L = (int(v) for v in lines[1].split())
        alphabet = build_alphabet(T_r, T_d, M)
        rows = [ln.split() for ln in lines[2:]]
        if len(rows) != 1 << L:
            raise ValueError(f"expected {1 << L} codewords, found {len(rows)}")
        codewords = np.empty((len(rows), n_star), dtype=np.int64)
        durations = np.empty(len(rows), dtype=np.int64)
        tau = alphabet.as_array()
        for k, parts in enumerate(rows):
            if int(parts[0]) != k or len(parts) != n_star + 2:
                raise ValueError(f"malformed codeword line {k}: {' '.join(parts)}")
            codewords[k] = [int(p) - 1 for p in parts[1:-1]]
            durations[k] = int(parts[-1])
        if codewords.min() < 0 or codewords.max() >= M:
            raise ValueError("alphabet index out of range")
        if not np.array_equal(tau[codewords].sum(axis=1), durations):
            raise ValueError("codeword durations do not match the alphabet")
        return cls(alphabet, n_star, L, codewords, durations)


def enumerate_durations(alphabet: SymbolAlphabet, N: int, max_tuples: int = MAX_TUPLES) -> np.ndarray:
    """Total duration of every ``N``-tuple, in lexicographic tuple order."""
    if alphabet.M**N > max_tuples:
        raise EnumerationLimitError(
            f"{alphabet.M}^{N} = {alphabet.M**N} tuples exceeds the cap of {max_tuples}"
        )
    tau = alphabet.as_array()
    sums = np.zeros(1, dtype=np.int64)
    for _ in range(N):
        sums = (sums[:, None] + tau[None, :]).ravel()
    return sums


def select_codewords(
    alphabet: SymbolAlphabet, N_star: int, L: int, max_tuples: int = MAX_TUPLES
) -> Codebook:
    """Keep the ``2**L`` shortest ``N_star``-tuples; duration ties go to the lexicographically smaller tuple."""
    M = alphabet.M
    if L < 1:
        raise ValueError("L must be >= 1")
    if M**N_star < 1 << L:
        raise ValueError(f"{M}^{N_star} tuples cannot carry {L} bits")
    sums = enumerate_durations(alphabet, N_star, max_tuples)
    # stable sort keeps lexicographic order within equal durations
    chosen = np.argsort(sums, kind="stable")[: 1 << L]
    tuples = np.stack(np.unravel_index(chosen, (M,) * N_star), axis=1).astype(np.int64)
    return Codebook(alphabet, N_star, L, tuples, sums[chosen])


def design(T_r: int, T_d: int, M: int, N_max: int = DEFAULT_N_MAX, max_tuples: int = MAX_TUPLES) -> Codebook:
    alphabet = build_alphabet(T_r, T_d, M)
    n_star = optimal_block_length(M, N_max)
    return select_codewords(alphabet, n_star, payload_bits(M, n_star), max_tuples)


def duration_counts(alphabet: SymbolAlphabet, N: int) -> list[tuple[int, int]]:
    """(total duration, number of N-tuples with that duration), ascending."""
    dist = Counter({0: 1})
    for _ in range(N):
        nxt: Counter = Counter()
        for s, c in dist.items():
            for t in alphabet.intervals:
                nxt[s + t] += c
        dist = nxt
    return sorted(dist.items())


def min_total_duration(alphabet: SymbolAlphabet, N: int, count: int) -> int:
    """Smallest achievable sum of durations over ``count`` distinct N-tuples.

    Works from the duration histogram, so it never materialises the tuples.
    """
    remaining, total = count, 0
    for d, c in duration_counts(alphabet, N):
        take = min(c, remaining)
        total += take * d
        remaining -= take
        if remaining == 0:
            return total
    raise ValueError(f"only {count - remaining} tuples available, asked for {count}")


def bitrate_general(codebook: Codebook) -> float:
    """Bits per second: ``2**L * L / sum(d_k)``."""
    L = codebook.payload_bits
    if L < 1:
        raise ValueError("L must be >= 1")
    return (1 << L) * L / (codebook.total_duration * 1e-9)


def bitrate_uniform(T_r: int, T_d: int, M: int, L: int) -> float:
    """Closed-form rate for ``M = 2**L`` on a uniform ladder."""
    if L < 1 or M != 1 << L:
        raise ValueError(f"closed form needs M == 2**L, got M={M}, L={L}")
    return 2 * L / ((2 * T_r + T_d * (M - 1)) * 1e-9)


@dataclass(frozen=True)
class DesignPoint:
    M: int
    N_star: int
    L: int
    bitrate: float


@dataclass(frozen=True)
class MSweep:
    points: tuple[DesignPoint, ...]
    best_M: int
    selected_M: int
    epsilon: float


def _design_point(T_r: int, T_d: int, M: int, N_max: int) -> DesignPoint:
    alphabet = build_alphabet(T_r, T_d, M)
    n_star = optimal_block_length(M, N_max)
    L = payload_bits(M, n_star)
    total = min_total_duration(alphabet, n_star, 1 << L)
    return DesignPoint(M, n_star, L, (1 << L) * L / (total * 1e-9))


def sweep_M(
    T_r: int,
    T_d: int,
    M_range: Sequence[int] = range(2, 17),
    N_max: int = DEFAULT_N_MAX,
    epsilon: float = DEFAULT_EPSILON,
    threads: int = 1,
) -> MSweep:
    """Optimal design per M and the preferred M.

    The preferred M is the one with the smallest ``N*`` (then the smallest M)
    among all M whose rate is within relative ``epsilon`` of the best rate.
    """
    ms = list(M_range)
    if not ms:
        raise ValueError("empty M range")
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(threads) as pool:
            points = list(pool.map(lambda m: _design_point(T_r, T_d, m, N_max), ms))
    else:
        points = [_design_point(T_r, T_d, m, N_max) for m in ms]
    best = max(points, key=lambda p: p.bitrate)
    near = [p for p in points if p.bitrate >= best.bitrate * (1 - epsilon)]
    chosen = min(near, key=lambda p: (p.N_star, p.M))
    return MSweep(tuple(points), best.M, chosen.M, epsilon)
