"""Acoustic link model, TDMA medium access and the packet wire format.

The sonar equation gives the SNR of a link as ``SL - TL - NL + DI`` with the
transmission loss combining spherical spreading and Thorp absorption. A
packet is physically receivable when the SNR reaches the modem detection
threshold; an independent Bernoulli draw then models residual losses.

Wire layout (little-endian)::

    byte 0      sender id (bits 0-3) | measurement count (bits 4-5) | flags (bits 6-7)
    intent      float32 x, y, theta, then H heading increments
    meas[k]     float32 t, bearing, x_obs, y_obs

The byte budget of a slot, ``floor(bitrate * T_f / 8)``, applies to the intent
and measurement blocks; the header byte is modem framing.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .world import Measurement

HEADER_BYTES = 1
FLOAT_BYTES = 4
MEAS_FLOATS = 4
MAX_MEASUREMENTS = 2
MAX_AGENTS = 16


class PacketError(ValueError):
    """Raised for packets that cannot be encoded or decoded."""


@dataclass(frozen=True)
class ModemConfig:
    source_level: float = 186.0
    noise_level: float = 20.0
    directivity: float = 0.0
    frequency: float = 25.0  # kHz
    detection_threshold: float = 40.0
    bitrate: float = 120.0
    rho_max: float | None = None

    def __post_init__(self):
        if self.frequency <= 0:
            raise ValueError("frequency must be positive")
        if self.bitrate <= 0:
            raise ValueError("bitrate must be positive")
        if self.rho_max is None:
            # ideal SNR with zero transmission loss
            object.__setattr__(self, "rho_max", self.source_level - self.noise_level + self.directivity)
        if not self.rho_max > self.detection_threshold > 0:
            raise ValueError("need rho_max > detection_threshold > 0")


@dataclass(frozen=True)
class TdmaConfig:
    n: int
    slot: float
    order: tuple[int, ...] = ()

    def __post_init__(self):
        if self.n < 1 or self.slot <= 0:
            raise ValueError("need n >= 1 and slot > 0")
        if not self.order:
            object.__setattr__(self, "order", tuple(range(self.n)))
        if sorted(self.order) != list(range(self.n)):
            raise ValueError("slot order must be a permutation of agent ids")

    @property
    def round_duration(self) -> float:
        return self.n * self.slot

    def budget(self, bitrate: float) -> int:
        return byte_budget(bitrate, self.slot)


def thorp_absorption(f: float) -> float:
    """Thorp absorption coefficient in dB/km for a frequency in kHz."""
    if f <= 0:
        raise ValueError("frequency must be positive")
    f2 = f * f
    return 0.11 * f2 / (1 + f2) + 44 * f2 / (4100 + f2) + 2.75e-4 * f2 + 0.003


def transmission_loss(d: float, f: float) -> float:
    """Spreading plus absorption loss in dB over ``d`` meters."""
    if d <= 0:
        raise ValueError("distance must be positive")
    return 20 * math.log10(d) + d * thorp_absorption(f) * 1e-3


def snr(cfg: ModemConfig, d: float) -> float:
    return cfg.source_level - transmission_loss(d, cfg.frequency) - cfg.noise_level + cfg.directivity


def snr_array(cfg: ModemConfig, d: np.ndarray) -> np.ndarray:
    """Vectorized :func:`snr`; distances below 1 mm are clipped to avoid log(0)."""
    d = np.maximum(np.asarray(d, dtype=float), 1e-3)
    tl = 20 * np.log10(d) + d * (thorp_absorption(cfg.frequency) * 1e-3)
    return cfg.source_level - tl - cfg.noise_level + cfg.directivity


def slot_owner(t: float, tdma: TdmaConfig) -> int:
    if t < 0:
        raise ValueError("t must be nonnegative")
    k = int(math.floor(t / tdma.slot + 1e-9))
    return tdma.order[k % tdma.n]


def byte_budget(bitrate: float, slot: float) -> int:
    return int(math.floor(bitrate * slot / 8 + 1e-9))


def intent_block_size(horizon: int) -> int:
    return (3 + horizon) * FLOAT_BYTES


def payload_size(horizon: int, n_meas: int) -> int:
    return intent_block_size(horizon) + n_meas * MEAS_FLOATS * FLOAT_BYTES


def measurement_capacity(horizon: int, budget: int) -> int:
    """How many measurement blocks fit next to an intent block."""
    free = budget - intent_block_size(horizon)
    if free < 0:
        return -1
    return min(MAX_MEASUREMENTS, free // (MEAS_FLOATS * FLOAT_BYTES))


@dataclass
class AcousticPacket:
    sender: int
    pose: tuple[float, float, float]
    headings: tuple[float, ...]
    measurements: list[Measurement] = field(default_factory=list)
    flags: int = 0

    def payload_size(self) -> int:
        return payload_size(len(self.headings), len(self.measurements))


def encode_packet(pkt: AcousticPacket, budget: int | None = None) -> bytes:
    if not 0 <= pkt.sender < MAX_AGENTS:
        raise PacketError(f"sender id {pkt.sender} does not fit in 4 bits")
    if len(pkt.measurements) > MAX_MEASUREMENTS:
        raise PacketError("at most two measurement blocks per packet")
    if not 0 <= pkt.flags < 4:
        raise PacketError("flags must fit in 2 bits")
    if budget is not None and pkt.payload_size() > budget:
        raise PacketError(f"payload of {pkt.payload_size()} bytes exceeds budget of {budget}")
    header = pkt.sender | (len(pkt.measurements) << 4) | (pkt.flags << 6)
    floats = [*pkt.pose, *pkt.headings]
    for m in pkt.measurements:
        floats += [m.t, m.bearing, m.x_obs, m.y_obs]
    return bytes([header]) + struct.pack(f"<{len(floats)}f", *floats)


def decode_packet(data: bytes, horizon: int, n_agents: int = MAX_AGENTS) -> AcousticPacket:
    if len(data) < HEADER_BYTES:
        raise PacketError("empty packet")
    header = data[0]
    sender = header & 0x0F
    n_meas = (header >> 4) & 0x03
    flags = header >> 6
    if sender >= n_agents:
        raise PacketError(f"unknown sender id {sender}")
    if n_meas > MAX_MEASUREMENTS:
        raise PacketError("measurement count out of range")
    expected = HEADER_BYTES + payload_size(horizon, n_meas)
    if len(data) != expected:
        raise PacketError(f"packet length {len(data)} != {expected} implied by header")
    vals = struct.unpack(f"<{(len(data) - 1) // FLOAT_BYTES}f", data[1:])
    if not all(math.isfinite(v) for v in vals):
        raise PacketError("non-finite value in packet")
    pose = (vals[0], vals[1], vals[2])
    headings = tuple(vals[3:3 + horizon])
    meas = []
    off = 3 + horizon
    for k in range(n_meas):
        t, b, x, y = vals[off + 4 * k: off + 4 * k + 4]
        meas.append(Measurement(t=t, bearing=b, x_obs=x, y_obs=y, source_id=sender))
    return AcousticPacket(sender=sender, pose=pose, headings=headings, measurements=meas, flags=flags)


def transmit(pkt: AcousticPacket, sender_pos: Sequence[float], receiver_pos: Sequence[float],
             cfg: ModemConfig, pdr: float, rng: np.random.Generator, budget: int | None = None) -> bool:
    """Decide whether one receiver gets a broadcast packet.

    The link must clear the detection threshold; after that a Bernoulli(pdr)
    draw is taken from the link's own stream. The draw happens only for
    receivable links so that each stream advances once per usable transmission.
    """
    if budget is not None and pkt.payload_size() > budget:
        raise PacketError(f"payload of {pkt.payload_size()} bytes exceeds budget of {budget}")
    d = math.dist(sender_pos, receiver_pos)
    if d == 0:
        raise ValueError("sender and receiver positions coincide")
    if snr(cfg, d) < cfg.detection_threshold:
        return False
    return bool(rng.random() < pdr)
