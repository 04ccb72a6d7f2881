"""Physical layer: log-distance path loss, Rician/Rayleigh fading, cascaded
Tx-RIS-Rx gains, SNR and Shannon rate."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError
from .kernel import RngStreams

#: SNR sentinel for a zero composite gain; rate_bps maps it to 0 bps.
SNR_FLOOR_DB = -math.inf


@dataclass
class ChannelParams:
    """Propagation constants.  LoS exponent applies to the Tx-RIS and RIS-Rx
    legs, the NLoS exponent to the direct Tx-Rx link."""

    pl0_db: float = -30.0       # reference loss at 1 m
    alpha_los: float = 2.2
    alpha_nlos: float = 3.6
    rician_k_db: float = 10.0   # LoS links; direct link is Rayleigh
    coherence_s: float = 0.02   # block-fading redraw interval


@dataclass
class ChannelRealization:
    """Complex gains for one Tx-RIS-Rx triple in one coherence block."""

    h_direct: complex
    h_tx_ris: np.ndarray   # one entry per RIS element
    h_ris_rx: np.ndarray

    def element_products(self) -> np.ndarray:
        return self.h_ris_rx * self.h_tx_ris


@dataclass
class UserChannel:
    """Per-user bundle: direct gain plus cascaded legs toward every RIS."""

    h_direct: complex
    per_ris: list = field(default_factory=list)  # [(h_tx_ris, h_ris_rx), ...]

    def realization(self, ris: int) -> ChannelRealization:
        h_t, h_r = self.per_ris[ris]
        return ChannelRealization(self.h_direct, h_t, h_r)


def path_loss_db(d: float, alpha: float, pl0_db: float) -> float:
    """Log-distance loss pl0 - 10*alpha*log10(d); d below 1 m is out of model."""
    if d < 1.0:
        raise DomainError(f"distance {d} m below 1 m reference")
    return pl0_db - 10.0 * alpha * math.log10(d)


def _fading(k_db: float, rng: np.random.Generator, size=None):
    """Unit-mean-power Rician fading (K in dB); K -> -inf gives Rayleigh."""
    if math.isinf(k_db) and k_db > 0:
        phi = rng.uniform(0.0, 2.0 * math.pi, size=size)
        return np.exp(1j * phi)
    k = 10.0 ** (k_db / 10.0)
    phi = rng.uniform(0.0, 2.0 * math.pi, size=size)
    los = math.sqrt(k / (k + 1.0)) * np.exp(1j * phi)
    scatter = rng.normal(size=size) + 1j * rng.normal(size=size)
    return los + math.sqrt(1.0 / (k + 1.0)) * scatter / math.sqrt(2.0)


def sample_link(d: float, alpha: float, los: bool, params: ChannelParams,
                rng: np.random.Generator, size=None):
    """Complex link gain: sqrt(linear path loss) times unit-power fading.

    LoS links fade Rician with params.rician_k_db, NLoS links Rayleigh.
    """
    amp = math.sqrt(10.0 ** (path_loss_db(d, alpha, params.pl0_db) / 10.0))
    if los:
        return amp * _fading(params.rician_k_db, rng, size=size)
    scatter = rng.normal(size=size) + 1j * rng.normal(size=size)
    return amp * scatter / math.sqrt(2.0)


def draw_user_channel(streams: RngStreams, user: int, block: int,
                      d_tx_ris: float, d_ris_rx: float, d_tx_rx: float,
                      elements: int, num_ris: int,
                      params: ChannelParams) -> UserChannel:
    """Draw one user's block realization from the "channel" stream.

    The draw depends only on (seed, user, block), so protocol choice or call
    order cannot perturb it.  Stream consumption order is fixed: the direct
    gain first, then one batched Rician draw covering every RIS leg (row
    2*r is the Tx-RIS vector of RIS r, row 2*r+1 its RIS-Rx vector).
    """
    rng = streams.block_stream("channel", user, block)
    h_direct = complex(sample_link(d_tx_rx, params.alpha_nlos, False, params, rng))
    fading = _fading(params.rician_k_db, rng, size=(2 * num_ris, elements))
    amp_t = math.sqrt(10.0 ** (path_loss_db(d_tx_ris, params.alpha_los,
                                            params.pl0_db) / 10.0))
    amp_r = math.sqrt(10.0 ** (path_loss_db(d_ris_rx, params.alpha_los,
                                            params.pl0_db) / 10.0))
    per_ris = [(amp_t * fading[2 * r], amp_r * fading[2 * r + 1])
               for r in range(num_ris)]
    return UserChannel(h_direct=h_direct, per_ris=per_ris)


def composite_gain(r: ChannelRealization, cfg) -> complex:
    """h_direct + sum_n h_ris_rx[n] * exp(j*theta_n) * h_tx_ris[n]."""
    theta = cfg.element_phases(len(r.h_tx_ris))
    if len(r.h_ris_rx) != len(r.h_tx_ris):
        raise ConfigError(
            f"cascaded vectors disagree: {len(r.h_tx_ris)} vs {len(r.h_ris_rx)}")
    return complex(r.h_direct + np.sum(r.element_products() * np.exp(1j * theta)))


def snr_db(g: complex, tx_power_dbm: float, noise_dbm: float) -> float:
    mag = abs(g)
    if mag == 0.0:
        return SNR_FLOOR_DB
    return tx_power_dbm + 20.0 * math.log10(mag) - noise_dbm


def rate_bps(snr_in_db: float, bandwidth_hz: float) -> float:
    """Shannon rate B*log2(1 + SNR); the -inf sentinel maps to 0 bps."""
    if bandwidth_hz <= 0:
        raise DomainError(f"bandwidth must be positive, got {bandwidth_hz}")
    if snr_in_db == SNR_FLOOR_DB:
        return 0.0
    return bandwidth_hz * math.log2(1.0 + 10.0 ** (snr_in_db / 10.0))
