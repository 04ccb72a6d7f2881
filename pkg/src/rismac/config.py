"""Scenario description: topology, channel, MAC timing, cost model and run
controls, with an INI-style file format (sections of key = value).

Defaults reproduce the headline evaluation setup: 2 RISs with 128 elements
each on 2 sub-channels, Tx-RIS/RIS-Rx legs of 50 m/30 m, 10 dBm transmit
power, -94 dBm noise over the full 10 MHz band, up to 100 transmitters.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
import math
from dataclasses import dataclass

from .channel import ChannelParams
from .errors import ConfigError
from .learning import (MODE_AI_CENTRAL, MODE_AI_DISTRIBUTED,
                       MODE_NONE_ITERATIVE, ComputeCostModel)

PROTOCOLS = ("centralized", "distributed", "hybrid1", "hybrid2", "hybrid3")
SCENARIOS = ("auto", "S1", "S2", "S3", "S4")

#: Canonical file layout: section -> field names.
SECTIONS = {
    "run": ("scenario", "protocol", "ai", "seed", "horizon_s"),
    "topology": ("K", "M", "num_ris", "num_subchannels", "elements"),
    "geometry": ("d_tx_ris", "d_ris_rx", "d_tx_rx"),
    "channel": ("pl0_db", "alpha_los", "alpha_nlos", "rician_k_db",
                "coherence_s", "bandwidth_hz", "tx_power_dbm", "noise_dbm"),
    "ris": ("ris_bits", "ris_group_size"),
    "mac": ("pilot_slot_s", "data_slot_s", "data_slots", "difs_s", "sifs_s",
            "backoff_slot_s", "cw_min", "cw_max", "request_s", "feedback_s",
            "deny_doubles_cw", "hybrid_scheduled_frac", "request_window_s"),
    "cost": ("beta_s", "t0_s", "gamma_s", "t_local_s", "p_compute_bs_w",
             "p_compute_user_w", "est_coeff_s", "idle_listen_w",
             "feedback_tx_w"),
    "rl": ("epsilon", "epsilon_min", "epsilon_decay", "learning_rate",
           "discount", "rate_buckets"),
}


@dataclass
class ScenarioConfig:
    # run
    scenario: str = "auto"
    protocol: str = "centralized"
    ai: bool = True
    seed: int = 1
    horizon_s: float = 1.0
    # topology
    K: int = 100                 # transmitters
    M: int = 1                   # receivers
    num_ris: int = 2
    num_subchannels: int = 0     # 0 = one sub-channel per RIS
    elements: int = 128          # per RIS
    # geometry (m)
    d_tx_ris: float = 50.0
    d_ris_rx: float = 30.0
    d_tx_rx: float = 70.0
    # channel
    pl0_db: float = -30.0
    alpha_los: float = 2.2
    alpha_nlos: float = 3.6
    rician_k_db: float = 10.0
    coherence_s: float = 0.02
    bandwidth_hz: float = 10e6   # total band, split evenly across sub-channels
    tx_power_dbm: float = 10.0
    noise_dbm: float = -94.0     # total-band noise floor
    # ris control
    ris_bits: int = 2
    ris_group_size: int = 16
    # mac timing
    pilot_slot_s: float = 1e-4
    data_slot_s: float = 1e-3
    data_slots: int = 0          # scheduled slots per frame; 0 = fit requests
    difs_s: float = 5e-5
    sifs_s: float = 1e-5
    backoff_slot_s: float = 2e-5
    cw_min: int = 16
    cw_max: int = 1024
    request_s: float = 2e-4
    feedback_s: float = 1e-4
    deny_doubles_cw: bool = True
    hybrid_scheduled_frac: float = 0.7
    request_window_s: float = 0.01   # hybrid case 2/3 contention window
    # cost model
    beta_s: float = 1e-3
    t0_s: float = 6e-3
    gamma_s: float = 2e-5
    t_local_s: float = 1.25e-4
    p_compute_bs_w: float = 5.0
    p_compute_user_w: float = 0.5
    est_coeff_s: float = 1.2e-5
    idle_listen_w: float = 0.1
    feedback_tx_w: float = 1e-4
    # rl
    epsilon: float = 0.1
    epsilon_min: float = 0.01
    epsilon_decay: float = 0.999
    learning_rate: float = 0.5
    discount: float = 0.3
    rate_buckets: int = 4

    # ------------------------------------------------------------------ #
    # derived quantities

    def subchannels(self) -> int:
        return self.num_subchannels if self.num_subchannels else self.num_ris

    def groups_per_ris(self) -> int:
        return self.elements // self.ris_group_size

    def subchannel_bandwidth_hz(self) -> float:
        return self.bandwidth_hz / self.subchannels()

    def subchannel_noise_dbm(self) -> float:
        """Noise floor of one sub-channel (total-band noise split evenly)."""
        return self.noise_dbm - 10.0 * math.log10(self.subchannels())

    def tx_power_w(self) -> float:
        return 10.0 ** (self.tx_power_dbm / 10.0) / 1000.0

    def channel_params(self) -> ChannelParams:
        return ChannelParams(pl0_db=self.pl0_db, alpha_los=self.alpha_los,
                             alpha_nlos=self.alpha_nlos,
                             rician_k_db=self.rician_k_db,
                             coherence_s=self.coherence_s)

    def cost_model(self) -> ComputeCostModel:
        if not self.ai:
            mode = MODE_NONE_ITERATIVE
        elif self.protocol == "distributed":
            mode = MODE_AI_DISTRIBUTED
        else:
            mode = MODE_AI_CENTRAL
        return ComputeCostModel(mode=mode, beta=self.beta_s, t0=self.t0_s,
                                gamma=self.gamma_s, t_local=self.t_local_s,
                                p_bs=self.p_compute_bs_w,
                                p_user=self.p_compute_user_w,
                                est_coeff=self.est_coeff_s)

    def local_cost_model(self) -> ComputeCostModel:
        """Cost of a user's own per-attempt computation (hybrid competing
        periods and pure distributed contention)."""
        mode = MODE_AI_DISTRIBUTED if self.ai else MODE_NONE_ITERATIVE
        return ComputeCostModel(mode=mode, beta=self.beta_s, t0=self.t0_s,
                                gamma=self.gamma_s, t_local=self.t_local_s,
                                p_bs=self.p_compute_bs_w,
                                p_user=self.p_compute_user_w,
                                est_coeff=self.est_coeff_s)

    def resolved_scenario(self) -> str:
        if self.scenario != "auto":
            return self.scenario
        if self.num_ris == 1:
            return "S1" if self.M == 1 else "S2"
        return "S3" if self.M == 1 else "S4"

    # ------------------------------------------------------------------ #

    def validate(self) -> "ScenarioConfig":
        def require(cond: bool, constraint: str) -> None:
            if not cond:
                raise ConfigError(constraint)

        require(self.protocol in PROTOCOLS,
                f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        require(self.scenario in SCENARIOS,
                f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        require(self.K >= 1, f"K must be >= 1, got {self.K}")
        require(self.M >= 1, f"M must be >= 1, got {self.M}")
        require(self.num_ris >= 1, f"num_ris must be >= 1, got {self.num_ris}")
        require(self.num_subchannels in (0, self.num_ris),
                "each RIS occupies a single sub-channel: num_subchannels must "
                f"equal num_ris ({self.num_ris}), got {self.num_subchannels}")
        if self.scenario in ("S1", "S2"):
            require(self.num_ris == 1, f"{self.scenario} requires num_ris=1")
        if self.scenario in ("S3", "S4"):
            require(self.num_ris >= 2, f"{self.scenario} requires num_ris>=2")
        if self.scenario in ("S1", "S3"):
            require(self.M == 1, f"{self.scenario} requires M=1")
        if self.scenario in ("S2", "S4"):
            require(self.M >= 2, f"{self.scenario} requires M>=2")
        require(self.elements >= 1, "elements must be >= 1")
        require(self.ris_bits >= 1, "ris_bits must be >= 1")
        require(self.ris_group_size >= 1, "ris_group_size must be >= 1")
        require(self.elements % self.ris_group_size == 0,
                f"ris_group_size {self.ris_group_size} must divide elements "
                f"{self.elements}")
        for name in ("d_tx_ris", "d_ris_rx", "d_tx_rx"):
            require(getattr(self, name) >= 1.0, f"{name} must be >= 1 m")
        require(self.coherence_s > 0, "coherence_s must be positive")
        require(self.bandwidth_hz > 0, "bandwidth_hz must be positive")
        require(self.horizon_s > 0, "horizon_s must be positive")
        for name in ("pilot_slot_s", "data_slot_s", "difs_s", "sifs_s",
                     "backoff_slot_s", "request_s", "feedback_s",
                     "request_window_s"):
            require(getattr(self, name) > 0, f"{name} must be positive")
        require(self.sifs_s < self.difs_s, "sifs_s must be smaller than difs_s")
        require(1 <= self.cw_min <= self.cw_max,
                f"need 1 <= cw_min <= cw_max, got {self.cw_min}, {self.cw_max}")
        require(self.data_slots >= 0, "data_slots must be >= 0 (0 = auto)")
        require(0.0 < self.hybrid_scheduled_frac < 1.0,
                "hybrid_scheduled_frac must lie in (0, 1)")
        for name in ("beta_s", "t0_s", "gamma_s", "t_local_s",
                     "p_compute_bs_w", "p_compute_user_w"):
            require(getattr(self, name) > 0, f"{name} must be positive")
        require(self.est_coeff_s >= 0, "est_coeff_s must be >= 0")
        require(self.idle_listen_w >= 0, "idle_listen_w must be >= 0")
        require(0.0 <= self.epsilon <= 1.0, "epsilon must lie in [0, 1]")
        require(0.0 <= self.epsilon_min <= 1.0, "epsilon_min must lie in [0, 1]")
        require(0.0 < self.learning_rate <= 1.0,
                "learning_rate must lie in (0, 1]")
        require(0.0 <= self.discount < 1.0, "discount must lie in [0, 1)")
        require(self.rate_buckets >= 2, "rate_buckets must be >= 2")
        return self


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ScenarioConfig)}


def _convert(key: str, raw: str):
    ftype = _FIELD_TYPES[key]
    raw = raw.strip()
    if ftype is bool or ftype == "bool":
        lowered = raw.lower()
        if lowered in ("true", "yes", "1", "on"):
            return True
        if lowered in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"key {key!r}: cannot parse {raw!r} as a boolean")
    if ftype is int or ftype == "int":
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: cannot parse {raw!r} as an integer") from exc
    if ftype is float or ftype == "float":
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: cannot parse {raw!r} as a number") from exc
    return raw


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


def parse_scenario(path) -> ScenarioConfig:
    """Read a scenario file; unset keys keep their defaults.

    Sections are organizational: keys may appear under any section name, but
    an unknown key is an error naming that key.
    """
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keys are case-sensitive (K vs k)
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read scenario file {path}")
    overrides = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            if key not in _FIELD_TYPES:
                raise ConfigError(f"unknown configuration key {key!r} "
                                  f"(section [{section}])")
            if key in overrides:
                raise ConfigError(f"configuration key {key!r} set twice")
            overrides[key] = _convert(key, raw)
    return ScenarioConfig(**overrides).validate()


def emit_scenario(cfg: ScenarioConfig, path=None) -> str:
    """Write the full configuration in canonical section order."""
    buf = io.StringIO()
    for section, keys in SECTIONS.items():
        buf.write(f"[{section}]\n")
        for key in keys:
            buf.write(f"{key} = {_format(getattr(cfg, key))}\n")
        buf.write("\n")
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
