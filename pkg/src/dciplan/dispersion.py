"""Chromatic dispersion accounting and fixed+tunable DCM planning.

Signs are kept throughout: a C-band fiber accumulates positive ps/nm and
compensating modules carry negative values; O-band links with negative
dispersion are handled by the same code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .budget import DEFAULT_CONSTANTS, PhysicalConstants, osnr_limited_reach
from .catalog import DcmInventory, FiberSpec, LinkTopology, Span, TransceiverProfile

OSNR = "OSNR"
CD = "CD"


@dataclass(frozen=True)
class AccumulatedCd:
    value: float  # ps/nm

    def __add__(self, other: "AccumulatedCd") -> "AccumulatedCd":
        return AccumulatedCd(self.value + other.value)


@dataclass(frozen=True)
class CompensationPlan:
    accumulated: float
    fixed_module: float
    tunable_setting: float
    residual_cd: float
    cd_tolerance: float
    headroom: float  # tolerance - |residual|
    feasible: bool


@dataclass(frozen=True)
class LinkParams:
    """Budget inputs shared by the reach calculations (80 km single-span defaults)."""

    launch_dbm: float = 3.0
    nf_db: float = 6.0
    margin_db: float = 3.0
    extra_loss_db: float = 0.0

    @classmethod
    def from_link(cls, link: LinkTopology) -> "LinkParams":
        return cls(link.launch_power_per_channel, link.preamp.noise_figure,
                   link.design_margin, link.lumped_loss_db)


@dataclass(frozen=True)
class EffectiveReach:
    km: float | None  # None: infeasible at any length
    limiting_factor: str
    osnr_km: float | None
    cd_km: float


def accumulated_cd(link: LinkTopology | Iterable[Span]) -> AccumulatedCd:
    spans = link.spans if isinstance(link, LinkTopology) else link
    return AccumulatedCd(math.fsum(s.length_km * s.fiber.cd_coeff for s in spans))


def cd_limited_reach(cd_tolerance: float, cd_coeff: float) -> float:
    """Uncompensated reach in km; ``math.inf`` for zero-dispersion fiber."""
    if cd_tolerance < 0:
        raise ValueError("cd_tolerance must be >= 0")
    if cd_coeff == 0:
        return math.inf
    return cd_tolerance / abs(cd_coeff)


def _tunable_steps(inv: DcmInventory) -> int:
    # small epsilon so e.g. 200/1 is not floored to 199 by rounding noise
    return int(math.floor(inv.tunable_range / inv.tunable_granularity + 1e-9))


def plan_compensation(acc: AccumulatedCd | float, inv: DcmInventory, cd_tolerance: float) -> CompensationPlan:
    """Choose a fixed module and tunable setting for accumulated dispersion ``acc``.

    The pair with the smallest achievable |residual| wins; ties go to the fixed
    module closest to ``-acc`` and then to the smaller |fixed| (no module first).
    """
    acc_value = acc.value if isinstance(acc, AccumulatedCd) else float(acc)
    g = inv.tunable_granularity
    kmax = _tunable_steps(inv)

    best = None
    for fixed in inv.fixed_values:
        after_fixed = acc_value + fixed
        k = max(-kmax, min(kmax, round(-after_fixed / g)))
        tunable = k * g
        residual = acc_value + fixed + tunable
        key = (abs(residual), abs(after_fixed), abs(fixed), fixed)
        if best is None or key < best[0]:
            best = (key, fixed, tunable, residual)

    _, fixed, tunable, residual = best
    return CompensationPlan(
        accumulated=acc_value,
        fixed_module=fixed,
        tunable_setting=tunable,
        residual_cd=residual,
        cd_tolerance=cd_tolerance,
        headroom=cd_tolerance - abs(residual),
        feasible=abs(residual) <= cd_tolerance,
    )


def _covered_intervals(inv: DcmInventory, cd_tolerance: float) -> list[tuple[float, float]]:
    """Accumulated-CD intervals (ps/nm) that some inventory setting brings within tolerance."""
    g = inv.tunable_granularity
    kmax = _tunable_steps(inv)
    out = []
    for fixed in inv.fixed_values:
        center = -fixed
        if kmax == 0 or g <= 2 * cd_tolerance:
            half = kmax * g + cd_tolerance
            out.append((center - half, center + half))
        else:
            out.extend((center + k * g - cd_tolerance, center + k * g + cd_tolerance)
                       for k in range(-kmax, kmax + 1))
    return sorted(out)


def compensated_cd_reach(inv: DcmInventory, cd_tolerance: float, cd_coeff: float) -> float:
    """Longest length L such that every length in [0, L] has a feasible plan."""
    if cd_tolerance < 0:
        raise ValueError("cd_tolerance must be >= 0")
    if cd_coeff == 0:
        return math.inf
    intervals = _covered_intervals(inv, cd_tolerance)
    if cd_coeff < 0:
        intervals = sorted((-hi, -lo) for lo, hi in intervals)
    reach = 0.0
    for lo, hi in intervals:
        if hi < reach:
            continue
        if lo > reach:
            break
        reach = hi
    return reach / abs(cd_coeff)


def effective_reach(
    profile: TransceiverProfile,
    fiber: FiberSpec,
    link_params: LinkParams = LinkParams(),
    inventory: DcmInventory | None = None,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
) -> EffectiveReach:
    """Reach bounded by both the OSNR budget and the dispersion tolerance.

    With ``inventory`` the CD bound is the contiguous length range the DCM
    inventory can bring within the profile's tolerance.
    """
    osnr_km = osnr_limited_reach(
        profile, fiber, link_params.launch_dbm, link_params.nf_db,
        link_params.margin_db, link_params.extra_loss_db, constants,
    )
    if inventory is None:
        cd_km = cd_limited_reach(profile.cd_tolerance, fiber.cd_coeff)
    else:
        cd_km = compensated_cd_reach(inventory, profile.cd_tolerance, fiber.cd_coeff)
    if osnr_km is None:
        return EffectiveReach(None, OSNR, None, cd_km)
    if cd_km < osnr_km:
        return EffectiveReach(cd_km, CD, osnr_km, cd_km)
    return EffectiveReach(osnr_km, OSNR, osnr_km, cd_km)
