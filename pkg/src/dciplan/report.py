"""Compose budget, dispersion and grid results into per-profile reports.

Every number here comes straight from a core-module call; this layer only
selects inputs and groups outputs.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Any

from .budget import OsnrBudgetReport, PowerCheck, check_amplifier_power, link_budget
from .catalog import (
    COHERENT, NO_COMPENSATION, DcmInventory, LinkTopology, Scenario, TransceiverProfile, scenario_to_dict,
)
from .dispersion import (
    CompensationPlan, EffectiveReach, LinkParams, accumulated_cd, effective_reach, plan_compensation,
)
from .gridplan import CapacityReport, fiber_capacity


@dataclass(frozen=True)
class PlanReport:
    profile: str
    scenario: dict
    budget: OsnrBudgetReport
    accumulated_cd: float
    compensation: CompensationPlan
    reach: EffectiveReach
    capacity: CapacityReport
    power: PowerCheck
    feasible: bool


@dataclass(frozen=True)
class CompareRow:
    profile: str
    detection: str
    feasible: bool
    reach_km: float | None
    limiting_factor: str
    spectral_efficiency: float
    capacity_c_tbps: float | None
    capacity_cl_tbps: float | None


def profile_link(scenario: Scenario, profile: TransceiverProfile) -> LinkTopology:
    """The scenario link with span dispersion taken from the profile's band.

    A band with its own ``cd_coeff`` (O-band by default) overrides the span
    fibers; the largest-magnitude override among the profile's bands is used.
    """
    overrides = [b.cd_coeff for b in scenario.bands if b.id in profile.bands and b.cd_coeff is not None]
    if not overrides:
        return scenario.link
    cd = max(overrides, key=abs)
    spans = [dataclasses.replace(s, fiber=dataclasses.replace(s.fiber, cd_coeff=cd)) for s in scenario.link.spans]
    return dataclasses.replace(scenario.link, spans=spans)


def profile_fiber(scenario: Scenario, profile: TransceiverProfile):
    link = profile_link(scenario, profile)
    return link.spans[0].fiber if link.spans else scenario.fiber


def _bands_for(scenario: Scenario, profile: TransceiverProfile, only: tuple | None = None):
    return [b for b in scenario.bands if b.id in profile.bands and (only is None or b.id in only)]


def build_plan(
    scenario: Scenario,
    profile_id: str,
    inventory: DcmInventory | None = None,
    compensate: bool = True,
) -> PlanReport:
    profile = scenario.profile(profile_id)
    # coherent receivers undo CD in DSP; no modules are planned for them
    if not compensate or profile.detection == COHERENT:
        inventory = NO_COMPENSATION
    else:
        inventory = inventory or scenario.inventory
    link = profile_link(scenario, profile)
    fiber = profile_fiber(scenario, profile)

    budget = link_budget(link, profile.required_osnr)
    acc = accumulated_cd(link)
    comp = plan_compensation(acc, inventory, profile.cd_tolerance)
    reach = effective_reach(profile, fiber, LinkParams.from_link(link), inventory)
    capacity = fiber_capacity(_bands_for(scenario, profile), profile, fiber)
    channels = max(capacity.channels.values(), default=0)
    power = check_amplifier_power(link.launch_power_per_channel, max(channels, 1), link.preamp)
    return PlanReport(
        profile=profile.id,
        scenario=scenario_to_dict(scenario),
        budget=budget,
        accumulated_cd=acc.value,
        compensation=comp,
        reach=reach,
        capacity=capacity,
        power=power,
        feasible=budget.feasible and comp.feasible and power.ok,
    )


def compare(scenario: Scenario, profile_ids: list[str] | None = None) -> list[CompareRow]:
    """One row per profile, highest capacity first."""
    ids = sorted(scenario.catalog) if profile_ids is None else profile_ids
    rows = []
    for pid in ids:
        profile = scenario.profile(pid)
        plan = build_plan(scenario, pid)
        fiber = profile_fiber(scenario, profile)
        c_bands = _bands_for(scenario, profile, ("C",))
        cl_bands = _bands_for(scenario, profile, ("C", "L"))
        cap_c = fiber_capacity(c_bands, profile, fiber).total_tbps if c_bands else None
        cap_cl = fiber_capacity(cl_bands, profile, fiber).total_tbps if len(cl_bands) == 2 else None
        rows.append(CompareRow(
            profile=pid,
            detection=profile.detection,
            feasible=plan.feasible,
            reach_km=plan.reach.km,
            limiting_factor=plan.reach.limiting_factor,
            spectral_efficiency=plan.capacity.spectral_efficiency,
            capacity_c_tbps=cap_c,
            capacity_cl_tbps=cap_cl,
        ))

    def key(row: CompareRow):
        return (
            -(row.capacity_cl_tbps if row.capacity_cl_tbps is not None else -1.0),
            -(row.capacity_c_tbps if row.capacity_c_tbps is not None else -1.0),
            row.profile,
        )

    return sorted(rows, key=key)


def to_jsonable(obj: Any) -> Any:
    """Dataclasses/tuples/sets to plain JSON values; non-finite floats become strings."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    return obj
