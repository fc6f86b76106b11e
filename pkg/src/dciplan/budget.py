"""OSNR budget of a preamplified single-span link.

Convention: single-polarization ASE in a 12.5 GHz reference bandwidth, all
noise attributed to the receiver preamplifier. The design margin is taken off
the achievable OSNR, not added to the requirement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .catalog import AmplifierSpec, FiberSpec, LinkTopology, TransceiverProfile

PLANCK = 6.62607015e-34  # J s


@dataclass(frozen=True)
class PhysicalConstants:
    h: float = PLANCK
    center_frequency: float = 193.4  # THz
    ref_bandwidth: float = 12.5  # GHz

    def __post_init__(self):
        for name in ("h", "center_frequency", "ref_bandwidth"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value}")


DEFAULT_CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class OsnrBudgetReport:
    achievable_osnr: float
    required_osnr: float
    residual_margin: float
    components: dict
    feasible: bool


@dataclass(frozen=True)
class PowerCheck:
    ok: bool
    total_dbm: float
    max_total_dbm: float


def ase_floor_dbm(constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Photon-energy noise floor h*nu*B_ref expressed in dBm."""
    watts = constants.h * constants.center_frequency * 1e12 * constants.ref_bandwidth * 1e9
    return 10 * math.log10(watts / 1e-3)


def span_osnr(
    launch_dbm: float,
    total_loss_db: float,
    nf_db: float,
    margin_db: float,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
) -> float:
    """Achievable OSNR in dB (12.5 GHz) after one lossy span and a preamp.

    >>> round(span_osnr(3, 20, 6, 3), 2)
    31.95
    """
    return launch_dbm - total_loss_db - nf_db - margin_db - ase_floor_dbm(constants)


def cascade_osnr(stages: Sequence[float]) -> float:
    """Combine independent per-stage OSNRs (dB) by adding their noise powers."""
    if len(stages) == 0:
        raise ValueError("no stages")
    return -10 * math.log10(math.fsum(10 ** (-x / 10) for x in stages))


def osnr_limited_reach(
    profile: TransceiverProfile,
    fiber: FiberSpec,
    launch_dbm: float = 3.0,
    nf_db: float = 6.0,
    margin_db: float = 3.0,
    extra_loss_db: float = 0.0,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
) -> float | None:
    """Longest span (km) still meeting the profile's required OSNR.

    Returns ``None`` when the requirement fails even at zero length.
    """
    headroom = span_osnr(launch_dbm, extra_loss_db, nf_db, margin_db, constants) - profile.required_osnr
    if headroom < 0:
        return None
    return headroom / fiber.loss_coeff


def check_amplifier_power(launch_dbm: float, channel_count: int, amp: AmplifierSpec) -> PowerCheck:
    if channel_count < 1:
        raise ValueError("channel_count must be >= 1")
    total = launch_dbm + 10 * math.log10(channel_count)
    return PowerCheck(ok=total <= amp.max_total_output, total_dbm=total, max_total_dbm=amp.max_total_output)


def link_budget(
    link: LinkTopology,
    required_osnr: float,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
) -> OsnrBudgetReport:
    """Itemized OSNR budget of ``link`` against ``required_osnr``."""
    floor = ase_floor_dbm(constants)
    loss = link.total_loss_db
    nf = link.preamp.noise_figure
    achievable = span_osnr(link.launch_power_per_channel, loss, nf, link.design_margin, constants)
    residual = achievable - required_osnr
    components = {
        "ase_floor_term_db": -floor,
        "launch_power_dbm": link.launch_power_per_channel,
        "span_loss_db": link.span_loss_db,
        "lumped_loss_db": link.lumped_loss_db,
        "total_loss_db": loss,
        "noise_figure_db": nf,
        "design_margin_db": link.design_margin,
    }
    return OsnrBudgetReport(
        achievable_osnr=achievable,
        required_osnr=required_osnr,
        residual_margin=residual,
        components=components,
        feasible=residual >= 0,
    )
