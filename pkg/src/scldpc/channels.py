"""Binary-input memoryless channel models and intrinsic LLR generation.

BPSK map: bit 0 -> +1, bit 1 -> -1.  LLRs are conditioned so that positive
values vote for bit 0.  Finite LLRs are saturated at +-LLR_SAT; the
saturated value also stands in for "known" (+-infinity) messages in the
message-passing decoder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LLR_SAT = 50.0


@dataclass(frozen=True)
class ChannelModel:
    kind: str  # "bec" | "biawgn" | "noiseless"
    param: float = 0.0  # erasure probability / noise standard deviation

    def __post_init__(self):
        if self.kind == "bec":
            if not (0.0 <= self.param <= 1.0):
                raise ValueError("erasure probability must be in [0, 1]")
        elif self.kind == "biawgn":
            if not self.param > 0.0:
                raise ValueError("noise standard deviation must be > 0")
        elif self.kind != "noiseless":
            raise ValueError(f"unknown channel kind {self.kind!r}")

    @property
    def bhattacharyya(self) -> float:
        """Channel Bhattacharyya parameter."""
        if self.kind == "bec":
            return self.param
        if self.kind == "biawgn":
            return math.exp(-1.0 / (2.0 * self.param ** 2))
        return 0.0


def bec(eps: float) -> ChannelModel:
    return ChannelModel("bec", eps)


def biawgn(sigma: float) -> ChannelModel:
    return ChannelModel("biawgn", sigma)


def noiseless() -> ChannelModel:
    return ChannelModel("noiseless")


def sigma_from_ebn0(ebn0_db: float, rate: float) -> float:
    """Noise deviation for a given Eb/N0 (dB) at code rate `rate`."""
    return 1.0 / math.sqrt(2.0 * rate * 10.0 ** (ebn0_db / 10.0))


def ebn0_from_sigma(sigma: float, rate: float) -> float:
    return 10.0 * math.log10(1.0 / (2.0 * rate * sigma ** 2))


def channel_llr(channel: ChannelModel, codeword: np.ndarray,
                seed: int | np.random.SeedSequence) -> np.ndarray:
    """Per-bit intrinsic LLRs for one transmission of `codeword`."""
    bits = np.asarray(codeword, dtype=np.int8)
    signs = 1.0 - 2.0 * bits  # BPSK
    if channel.kind == "noiseless":
        return signs * LLR_SAT
    rng = np.random.Generator(np.random.PCG64(seed))
    if channel.kind == "bec":
        erased = rng.random(bits.size) < channel.param
        return np.where(erased, 0.0, signs * LLR_SAT)
    noise = rng.standard_normal(bits.size)
    y = signs + channel.param * noise
    return np.clip(2.0 * y / channel.param ** 2, -LLR_SAT, LLR_SAT)
