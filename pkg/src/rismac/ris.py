"""RIS phase control: analytic alignment, discrete quantization, element
grouping, and an exhaustive-search oracle for testing."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import ChannelRealization, composite_gain
from .errors import ConfigError, SearchSpaceError

TWO_PI = 2.0 * math.pi

#: Exhaustive search refuses beyond 2**16 candidates.
BRUTE_FORCE_MAX_BITS = 16


@dataclass
class RisConfig:
    """Per-group phase shifts.  bits=None marks a continuous configuration;
    otherwise every phase is a member of {2*pi*k / 2**bits}."""

    phases: np.ndarray
    group_size: int = 1
    bits: Optional[int] = None

    def element_phases(self, n_elements: int) -> np.ndarray:
        if len(self.phases) * self.group_size != n_elements:
            raise ConfigError(
                f"{len(self.phases)} groups of {self.group_size} cannot cover "
                f"{n_elements} elements")
        return np.repeat(np.asarray(self.phases, dtype=float), self.group_size)

    def num_groups(self) -> int:
        return len(self.phases)


def phase_set(bits: int) -> np.ndarray:
    """The discrete set {2*pi*k / 2**bits} in ascending order."""
    if bits < 1:
        raise ConfigError(f"phase resolution needs bits >= 1, got {bits}")
    return TWO_PI * np.arange(2 ** bits) / (2 ** bits)


def align_phases(r: ChannelRealization, group_size: int = 1) -> RisConfig:
    """Continuous phases rotating every cascaded term onto the direct path.

    theta_n = arg(h_direct) - arg(h_ris_rx[n]*h_tx_ris[n]) mod 2*pi, which
    makes |composite| equal |h_direct| + sum |products|.  With grouping, each
    group's summed product is rotated instead.  A zero direct gain falls back
    to reference phase 0.
    """
    products = r.element_products()
    if len(products) % group_size != 0:
        raise ConfigError(
            f"group size {group_size} does not divide {len(products)} elements")
    sums = products.reshape(-1, group_size).sum(axis=1)
    ref = np.angle(r.h_direct) if r.h_direct != 0 else 0.0
    theta = np.mod(ref - np.angle(sums), TWO_PI)
    return RisConfig(phases=theta, group_size=group_size, bits=None)


def quantize(cfg: RisConfig, bits: int) -> RisConfig:
    """Map each phase to the nearest member of the 2**bits set.

    Distance is wrapped angular distance; exact ties break toward the smaller
    quantized value.
    """
    levels = phase_set(bits)
    diff = np.abs(np.asarray(cfg.phases, dtype=float)[:, None] - levels[None, :])
    dist = np.minimum(diff, TWO_PI - diff)
    # argmin returns the first minimum and levels ascend, so ties pick the
    # smaller value.
    snapped = levels[np.argmin(dist, axis=1)]
    return RisConfig(phases=snapped, group_size=cfg.group_size, bits=bits)


def config_gain(r: ChannelRealization, cfg: RisConfig) -> float:
    return abs(composite_gain(r, cfg))


def brute_force_best(r: ChannelRealization, bits: int, group_size: int = 1) -> RisConfig:
    """Exhaustively enumerate all discrete configs and return the gain maximizer.

    Candidates are enumerated in lexicographic phase order and the first
    maximum wins, so among exact ties the smallest phase vector is returned.
    Refuses when groups*bits exceeds 16 (65536 candidates).
    """
    products = r.element_products()
    if len(products) % group_size != 0:
        raise ConfigError(
            f"group size {group_size} does not divide {len(products)} elements")
    groups = len(products) // group_size
    if groups * bits > BRUTE_FORCE_MAX_BITS:
        raise SearchSpaceError(
            f"{groups} groups x {bits} bits exceeds the 2**{BRUTE_FORCE_MAX_BITS} "
            f"candidate bound")
    sums = products.reshape(-1, group_size).sum(axis=1)
    levels = phase_set(bits)
    n_levels = 2 ** bits
    # Row i of `index` is the i-th candidate's per-group level choices, in
    # lexicographic order (C-order enumeration).
    index = np.indices((n_levels,) * groups).reshape(groups, -1).T
    rotated = np.exp(1j * levels)[index] * sums[None, :]
    gains = np.abs(r.h_direct + rotated.sum(axis=1))
    best = int(np.argmax(gains))
    return RisConfig(phases=levels[index[best]], group_size=group_size, bits=bits)
