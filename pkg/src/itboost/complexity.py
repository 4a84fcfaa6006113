"""Residual-history encoding, Lempel-Ziv sequence complexity, and trust weights.

Each training sample accumulates a symbol history describing the direction
(and optionally the size) of its pseudo-residuals across boosting rounds.
The number of phrases in the exhaustive left-to-right Lempel-Ziv parsing of
that history measures how erratic the sample's error trajectory is; erratic
samples receive an exponentially reduced trust weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

BINARY_ALPHABET = "01"
QUATERNARY_ALPHABET = "0123"

SIGN_MODE = "sign"
DELTA_SIGN_MODE = "delta-sign"


def binarize_gradient(g: float, mode: str = SIGN_MODE, g_prev: float | None = None) -> str:
    """Map a pseudo-residual to a binary symbol.

    In ``sign`` mode the symbol is '1' iff g > 0 (a tie at exactly zero maps
    to '0').  In ``delta-sign`` mode the symbol encodes the direction of
    change relative to the previous round's residual; the first round, which
    has no predecessor, falls back to sign mode.
    """
    if not math.isfinite(g):
        raise ValueError(f"binarize_gradient: non-finite gradient {g!r}")
    if mode == SIGN_MODE:
        return "1" if g > 0 else "0"
    if mode == DELTA_SIGN_MODE:
        if g_prev is None:
            return "1" if g > 0 else "0"
        if not math.isfinite(g_prev):
            raise ValueError(f"binarize_gradient: non-finite previous gradient {g_prev!r}")
        return "1" if g - g_prev > 0 else "0"
    raise ValueError(f"binarize_gradient: unknown mode {mode!r}")


def quantize_gradient(g: float, magnitude_threshold: float) -> str:
    """Map a pseudo-residual to one of four symbols: sign x small/large magnitude.

    Symbol code is 2*[g > 0] + [|g| >= threshold].  The threshold is supplied
    by the caller (the per-round median of |g| across all samples).
    """
    if not math.isfinite(g) or not math.isfinite(magnitude_threshold):
        raise ValueError("quantize_gradient: non-finite input")
    if magnitude_threshold <= 0:
        raise ValueError(f"quantize_gradient: threshold must be positive, got {magnitude_threshold!r}")
    code = 2 * int(g > 0) + int(abs(g) >= magnitude_threshold)
    return QUATERNARY_ALPHABET[code]


def encode_gradients(
    g: np.ndarray,
    encoding: str,
    g_prev: np.ndarray | None = None,
    first_round: bool = False,
) -> list[str]:
    """Vectorised symbol encoding for one boosting round.

    ``encoding`` is one of ``binary-sign``, ``binary-delta`` or ``quantized``.
    ``g_prev`` is required for binary-delta except on the first round.
    """
    g = np.asarray(g, dtype=np.float64)
    if not np.all(np.isfinite(g)):
        raise ValueError("encode_gradients: non-finite gradients")
    if encoding == "binary-sign" or (encoding == "binary-delta" and first_round):
        codes = (g > 0).astype(np.int64)
        alphabet = BINARY_ALPHABET
    elif encoding == "binary-delta":
        if g_prev is None:
            raise ValueError("encode_gradients: binary-delta needs previous gradients")
        codes = (g - g_prev > 0).astype(np.int64)
        alphabet = BINARY_ALPHABET
    elif encoding == "quantized":
        threshold = float(np.median(np.abs(g)))
        if threshold <= 0:
            raise ValueError("encode_gradients: median |g| is zero, quantized encoding undefined")
        codes = 2 * (g > 0).astype(np.int64) + (np.abs(g) >= threshold).astype(np.int64)
        alphabet = QUATERNARY_ALPHABET
    else:
        raise ValueError(f"encode_gradients: unknown encoding {encoding!r}")
    return [alphabet[c] for c in codes]


class SymbolSequence:
    """Append-only symbol history with an online Lempel-Ziv phrase counter.

    The parser state mirrors the exhaustive left-to-right parsing performed
    by :func:`lz76_complexity`: symbols are appended one at a time, and after
    every append :attr:`complexity` equals a from-scratch parse of the current
    contents.  Existing symbols are never modified (it is a history).
    """

    __slots__ = ("alphabet", "_chars", "_phrase_start", "_closed")

    def __init__(self, alphabet: str = BINARY_ALPHABET, symbols: str = ""):
        if len(set(alphabet)) != len(alphabet) or not alphabet:
            raise ValueError("SymbolSequence: alphabet must be nonempty and duplicate-free")
        self.alphabet = alphabet
        self._chars = ""
        self._phrase_start = 0
        self._closed = 0
        for s in symbols:
            self.append(s)

    def __len__(self) -> int:
        return len(self._chars)

    @property
    def symbols(self) -> str:
        return self._chars

    @property
    def complexity(self) -> int:
        """Phrase count of the current contents (open suffix counts as one)."""
        return self._closed + (1 if self._phrase_start < len(self._chars) else 0)

    def append(self, symbol: str) -> int:
        """Append one symbol and return the updated phrase count."""
        if symbol not in self.alphabet:
            raise ValueError(f"SymbolSequence: symbol {symbol!r} not in alphabet {self.alphabet!r}")
        j = len(self._chars)
        self._chars += symbol
        # The open phrase extended to position j stays open only while it
        # occurs somewhere in the text strictly before j.
        if self._chars[self._phrase_start : j + 1] not in self._chars[:j]:
            self._closed += 1
            self._phrase_start = j + 1
        return self.complexity


def lz76_complexity(sequence) -> int:
    """Phrase count of the exhaustive left-to-right Lempel-Ziv parsing.

    A phrase starting at position p is extended through position j while the
    substring s[p..j] occurs inside s[0..j-1]; as soon as it does not, the
    phrase closes at j and the next phrase starts at j+1.  A final suffix
    that never stopped matching counts as one phrase.  The empty sequence has
    complexity 0.

    Accepts a string, a :class:`SymbolSequence`, or an iterable of small ints.
    """
    if isinstance(sequence, SymbolSequence):
        s = sequence.symbols
    elif isinstance(sequence, str):
        s = sequence
    else:
        s = "".join(str(int(c)) for c in sequence)
    n = len(s)
    if n == 0:
        return 0
    count = 0
    p = 0  # start of the current (open) phrase
    j = 0
    while j < n:
        if s[p : j + 1] in s[:j]:
            j += 1
        else:
            count += 1
            p = j + 1
            j = p
    if p < n:
        count += 1  # reproducible suffix
    return count


def normalize_complexities(raw) -> np.ndarray:
    """Min-max scale raw complexities to [0, 1] across the sample population.

    When every sample has the same complexity there is no evidence to
    penalise anyone, so all outputs are 0 (full trust).
    """
    values = np.asarray(raw, dtype=np.float64)
    if values.size == 0:
        raise ValueError("normalize_complexities: empty input")
    lo = values.min()
    hi = values.max()
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def trust_weights(gradients, normalized) -> tuple[np.ndarray, np.ndarray]:
    """Trust terms tau = exp(-normalized complexity) and weights w = |g| * tau."""
    g = np.asarray(gradients, dtype=np.float64)
    c = np.asarray(normalized, dtype=np.float64)
    if g.shape != c.shape:
        raise ValueError(f"trust_weights: length mismatch {g.shape} vs {c.shape}")
    if c.size and (c.min() < 0.0 or c.max() > 1.0):
        raise ValueError("trust_weights: normalized complexities must lie in [0, 1]")
    tau = np.exp(-c)
    return tau, np.abs(g) * tau


@dataclass(frozen=True)
class TrustState:
    """Per-round record of the trust computation for all samples."""

    iteration: int
    raw_complexity: np.ndarray
    normalized: np.ndarray
    tau: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        n = self.raw_complexity.shape[0]
        for name in ("normalized", "tau", "weights"):
            if getattr(self, name).shape[0] != n:
                raise ValueError(f"TrustState: field {name} has inconsistent length")
