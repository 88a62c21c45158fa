"""Scalar quantization of channel gains for limited feedback.

A codebook is a sorted grid of reconstruction levels starting at 0. Gains
are mapped to the largest level not exceeding them, so the fed-back value
never overstates the channel: rate selection based on it stays decodable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ChannelDistribution


@dataclass(frozen=True)
class Codebook:
    """Quantization levels, strictly increasing, anchored at 0.

    A b-bit feedback link uses 2**b levels (bits = 0 being the no-feedback
    degenerate case); the container itself accepts any count so codebooks
    can be refined level by level.
    """

    levels: tuple[float, ...]

    def __post_init__(self):
        levels = tuple(float(v) for v in self.levels)
        object.__setattr__(self, "levels", levels)
        if len(levels) < 1:
            raise ValueError("codebook needs at least one level")
        if levels[0] != 0.0:
            raise ValueError(f"first level must be 0, got {levels[0]}")
        if not all(a < b for a, b in zip(levels, levels[1:])):
            raise ValueError("levels must be strictly increasing")
        if not all(math.isfinite(v) for v in levels):
            raise ValueError("levels must be finite")

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    @property
    def bits(self) -> int:
        """Feedback bits when the level count is a power of two."""
        if self.n_levels & (self.n_levels - 1):
            raise ValueError(
                f"{self.n_levels} levels do not form a whole number of bits")
        return self.n_levels.bit_length() - 1

    def as_array(self) -> np.ndarray:
        return np.asarray(self.levels, dtype=float)


def quantize_index(x, codebook: Codebook):
    """Index of the largest level <= x (the top bin is unbounded above)."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise ValueError("gains must be nonnegative")
    return np.searchsorted(codebook.as_array(), x, side="right") - 1


def quantize(x, codebook: Codebook):
    """Reconstruction level fed back for gain x; never exceeds x."""
    return codebook.as_array()[quantize_index(x, codebook)]


def uniform_step(rate_param: float, bits: int, log_base: float = math.e) -> float:
    """Step size of the load-balanced uniform codebook.

    The step solves (N-1)*lambda*step^2 = log(1/step)/log(log_base), which
    places the top level at (1/(lambda*step))*log(1/step): the span a
    uniform grid can cover before the tail bin outweighs the interior ones.
    The left side grows and the right side falls on (0, 1), so the root is
    unique and bisection suffices.
    """
    if bits < 1:
        raise ValueError(f"uniform step needs bits >= 1, got {bits}")
    if not rate_param > 0.0:
        raise ValueError(f"rate_param must be positive, got {rate_param}")
    if not log_base > 1.0:
        raise ValueError(f"log_base must exceed 1, got {log_base}")
    n_minus_1 = (1 << bits) - 1
    scale = math.log(log_base)

    def f(step):
        return n_minus_1 * rate_param * step * step + math.log(step) / scale

    lo, hi = 1e-300, 1.0
    if not f(lo) < 0.0 < f(hi):
        raise ValueError(
            f"step equation has no root in (0, 1) for rate_param={rate_param}, "
            f"bits={bits}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 2.0 * np.spacing(lo):
            break
    return 0.5 * (lo + hi)


def uniform_codebook(distribution: ChannelDistribution, bits: int,
                     log_base: float = math.e) -> Codebook:
    """Uniform grid {0, step, ..., (N-1)*step} matched to the gain law."""
    if bits == 0:
        return Codebook(levels=(0.0,))
    step = uniform_step(distribution.rate_param, bits, log_base)
    n = 1 << bits
    return Codebook(levels=tuple(i * step for i in range(n)))


def bin_masses(codebook: Codebook, distribution: ChannelDistribution) -> np.ndarray:
    """Probability of each quantization bin under the gain law.

    Computed from the survival function so adjacent-level differences stay
    accurate deep in the tail; the top bin takes all remaining mass, so the
    result sums to 1 exactly up to rounding.
    """
    survival = np.exp(-distribution.rate_param * codebook.as_array())
    masses = np.empty(codebook.n_levels)
    masses[:-1] = survival[:-1] - survival[1:]
    masses[-1] = survival[-1]
    return masses


def bin_mass(codebook: Codebook, distribution: ChannelDistribution, index: int) -> float:
    if not 0 <= index < codebook.n_levels:
        raise ValueError(f"bin index {index} out of range for {codebook.n_levels} levels")
    return float(bin_masses(codebook, distribution)[index])


def save_codebook(codebook: Codebook, path) -> None:
    """Write one level per line in full float precision."""
    with open(path, "w", encoding="utf-8") as fh:
        for level in codebook.levels:
            fh.write(f"{level!r}\n")


def load_codebook(path) -> Codebook:
    """Read a codebook written by save_codebook (blank lines and # comments ok)."""
    levels = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            levels.append(float(stripped))
    return Codebook(levels=tuple(levels))
