"""Spectral efficiency, DWDM channel grids and per-fiber capacity."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .catalog import BandPlan, FiberSpec, TransceiverProfile, ValidationError

# tolerance for floor(width / slot) when the band edges are not exact in binary
_FLOOR_EPS = 1e-9


@dataclass(frozen=True)
class ChannelPlan:
    band: str
    slot_width: float  # GHz
    centers: tuple  # THz, ascending
    per_channel_rate: float = 0.0  # Gb/s

    @property
    def channel_count(self) -> int:
        return len(self.centers)


@dataclass(frozen=True)
class BandExtensionPenalty:
    reach_km: float
    naive_osnr_factor: float


@dataclass(frozen=True)
class CapacityReport:
    profile: str
    per_band_tbps: dict
    channels: dict
    total_tbps: float
    spectral_efficiency: float
    reach_penalty_km: dict = field(default_factory=dict)
    naive_osnr_factor: dict = field(default_factory=dict)


def spectral_efficiency(net_rate: float, slot_width: float) -> float:
    """Net rate (Gb/s) per occupied slot (GHz), i.e. b/s/Hz."""
    if not slot_width > 0:
        raise ValidationError(f"invariant violated: slot_width > 0 (got {slot_width})")
    return net_rate / slot_width


def enumerate_channels(band: BandPlan, slot_width: float, guard_ghz: float = 0.0,
                       per_channel_rate: float = 0.0) -> ChannelPlan:
    """Pack channels from the low band edge; centers sit mid-slot."""
    pitch = slot_width + guard_ghz
    if not pitch > 0:
        raise ValidationError(f"invariant violated: slot_width > 0 (got {slot_width})")
    n = max(0, math.floor(band.width_ghz / pitch + _FLOOR_EPS))
    centers = tuple(band.f_start + (k + 0.5) * pitch * 1e-3 for k in range(n))
    return ChannelPlan(band.id, slot_width, centers, per_channel_rate)


def band_extension_reach_penalty(splitter_loss: float, loss_coeff: float) -> BandExtensionPenalty:
    """Reach lost to a band splitter in a single-span link.

    Only the fiber length equivalent of the extra loss is lost; the naive
    OSNR-factor reading of the same dB value is returned alongside.
    """
    if not loss_coeff > 0:
        raise ValidationError(f"invariant violated: loss_coeff > 0 (got {loss_coeff})")
    if splitter_loss < 0:
        raise ValidationError(f"invariant violated: splitter_loss >= 0 (got {splitter_loss})")
    return BandExtensionPenalty(splitter_loss / loss_coeff, 10 ** (splitter_loss / 10))


def fiber_capacity(
    bands: Sequence[BandPlan],
    profile: TransceiverProfile,
    fiber: FiberSpec = FiberSpec(),
    guard_ghz: float = 0.0,
) -> CapacityReport:
    """Capacity when every band in ``bands`` is filled with ``profile`` lanes.

    Bands after the first are charged their splitter loss as a reach penalty.
    """
    per_band: dict[str, float] = {}
    channels: dict[str, int] = {}
    penalty_km: dict[str, float] = {}
    factor: dict[str, float] = {}
    for i, band in enumerate(bands):
        if band.id not in profile.bands:
            raise ValidationError(
                f"band {band.id} not allowed for {profile.id} (allowed: {', '.join(sorted(profile.bands))})"
            )
        plan = enumerate_channels(band, profile.slot_width, guard_ghz, profile.lane_rate)
        channels[band.id] = plan.channel_count
        per_band[band.id] = plan.channel_count * profile.lane_rate / 1e3
        pen = band_extension_reach_penalty(band.splitter_loss if i else 0.0, fiber.loss_coeff)
        penalty_km[band.id] = pen.reach_km
        factor[band.id] = pen.naive_osnr_factor
    return CapacityReport(
        profile=profile.id,
        per_band_tbps=per_band,
        channels=channels,
        total_tbps=math.fsum(per_band.values()),
        spectral_efficiency=spectral_efficiency(profile.lane_rate, profile.slot_width),
        reach_penalty_km=penalty_km,
        naive_osnr_factor=factor,
    )
