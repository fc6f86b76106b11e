"""Domain types, the built-in transceiver/band catalog and scenario I/O.

All types are frozen dataclasses; invariants are checked on construction and
violations raise :class:`ValidationError` carrying the invariant text.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Iterable, Mapping

IM_DD = "IM-DD"
COHERENT = "coherent"
DETECTION_TYPES = (IM_DD, COHERENT)
BAND_IDS = ("O", "C", "L")

# Coherent DSP removes CD; treat as effectively unlimited.
UNLIMITED_CD_PS_NM = 100_000.0


class ScenarioError(ValueError):
    """Base class for problems with a scenario document."""


class SchemaError(ScenarioError):
    """Document shape is wrong (missing/unknown key, wrong type)."""


class ValidationError(ScenarioError):
    """A value violates a domain invariant."""


def _require(cond: bool, invariant: str, detail: str = "") -> None:
    if not cond:
        msg = f"invariant violated: {invariant}"
        raise ValidationError(f"{msg} ({detail})" if detail else msg)


def _finite(*values: float) -> bool:
    return all(math.isfinite(v) for v in values)


@dataclass(frozen=True)
class TransceiverProfile:
    id: str
    net_rate: float  # Gb/s, whole client port
    baud: float  # GBd, per lane
    bits_per_symbol: float
    detection: str
    slot_width: float  # GHz, per lane
    required_osnr: float  # dB in 12.5 GHz
    cd_tolerance: float  # ps/nm
    lane_count: int = 1
    bands: frozenset = frozenset({"C", "L"})

    def __post_init__(self):
        object.__setattr__(self, "bands", frozenset(self.bands))
        _require(self.detection in DETECTION_TYPES, "detection in {IM-DD, coherent}", self.detection)
        _require(
            _finite(self.net_rate, self.baud, self.bits_per_symbol, self.slot_width,
                    self.required_osnr, self.cd_tolerance),
            "numeric fields finite", self.id,
        )
        _require(self.net_rate > 0, "net_rate > 0", self.id)
        _require(self.baud > 0, "baud > 0", self.id)
        _require(self.slot_width > 0, "slot_width > 0", self.id)
        _require(self.cd_tolerance >= 0, "cd_tolerance >= 0", self.id)
        _require(self.lane_count >= 1, "lane_count >= 1", self.id)
        _require(self.bands <= set(BAND_IDS), "bands subset of {O, C, L}", self.id)
        _require(
            self.net_rate <= self.line_rate + 1e-9,
            "net_rate <= baud * bits_per_symbol * polarization_factor * lane_count",
            self.id,
        )

    @property
    def polarization_factor(self) -> int:
        return 2 if self.detection == COHERENT else 1

    @property
    def line_rate(self) -> float:
        """Raw line rate in Gb/s over all lanes."""
        return self.baud * self.bits_per_symbol * self.polarization_factor * self.lane_count

    @property
    def lane_rate(self) -> float:
        """Net rate carried by one wavelength, Gb/s."""
        return self.net_rate / self.lane_count


@dataclass(frozen=True)
class FiberSpec:
    loss_coeff: float = 0.25  # dB/km
    cd_coeff: float = 17.0  # ps/(nm km)

    def __post_init__(self):
        _require(_finite(self.loss_coeff), "loss_coeff finite")
        _require(self.loss_coeff > 0, "loss_coeff > 0", f"got {self.loss_coeff}")
        _require(_finite(self.cd_coeff), "cd_coeff finite", f"got {self.cd_coeff}")


@dataclass(frozen=True)
class AmplifierSpec:
    noise_figure: float = 6.0  # dB
    max_total_output: float = 23.0  # dBm

    def __post_init__(self):
        _require(_finite(self.noise_figure), "noise_figure finite")
        _require(self.noise_figure >= 3.0, "noise_figure >= 3.0", f"got {self.noise_figure}")
        _require(_finite(self.max_total_output), "max_total_output finite")


@dataclass(frozen=True)
class BandPlan:
    id: str
    f_start: float  # THz
    f_stop: float  # THz
    splitter_loss: float = 0.0  # dB, incurred when this band is added to another
    cd_coeff: float | None = None  # ps/(nm km); None -> use the link fiber value

    def __post_init__(self):
        _require(self.id in BAND_IDS, "band id in {O, C, L}", str(self.id))
        _require(_finite(self.f_start, self.f_stop), "band edges finite", self.id)
        _require(self.f_stop >= self.f_start, "f_stop >= f_start", self.id)
        _require(self.splitter_loss >= 0, "splitter_loss >= 0", self.id)
        if self.cd_coeff is not None:
            _require(_finite(self.cd_coeff), "cd_coeff finite", self.id)

    @property
    def width_ghz(self) -> float:
        return (self.f_stop - self.f_start) * 1e3


@dataclass(frozen=True)
class Span:
    length_km: float
    fiber: FiberSpec = field(default_factory=FiberSpec)

    def __post_init__(self):
        _require(_finite(self.length_km), "length_km finite")
        _require(self.length_km >= 0, "length_km >= 0", f"got {self.length_km}")

    @property
    def loss_db(self) -> float:
        return self.length_km * self.fiber.loss_coeff


@dataclass(frozen=True)
class LumpedLoss:
    label: str
    loss_db: float

    def __post_init__(self):
        _require(_finite(self.loss_db), "loss_db finite", self.label)
        _require(self.loss_db >= 0, "loss_db >= 0", self.label)


@dataclass(frozen=True)
class LinkTopology:
    spans: tuple = ()
    lumped_losses: tuple = ()
    preamp: AmplifierSpec = field(default_factory=AmplifierSpec)
    launch_power_per_channel: float = 3.0  # dBm
    design_margin: float = 3.0  # dB

    def __post_init__(self):
        object.__setattr__(self, "spans", tuple(self.spans))
        object.__setattr__(self, "lumped_losses", tuple(self.lumped_losses))
        _require(_finite(self.launch_power_per_channel), "launch_power_per_channel finite")
        _require(_finite(self.design_margin), "design_margin finite")
        _require(self.design_margin >= 0, "design_margin >= 0")

    @property
    def span_loss_db(self) -> float:
        return math.fsum(s.loss_db for s in self.spans)

    @property
    def lumped_loss_db(self) -> float:
        return math.fsum(l.loss_db for l in self.lumped_losses)

    @property
    def total_loss_db(self) -> float:
        return self.span_loss_db + self.lumped_loss_db

    @property
    def length_km(self) -> float:
        return math.fsum(s.length_km for s in self.spans)


@dataclass(frozen=True)
class DcmInventory:
    fixed_values: tuple = (0.0, -340.0, -680.0, -1020.0, -1360.0, -1700.0, -2040.0)
    tunable_range: float = 200.0  # +/- ps/nm
    tunable_granularity: float = 1.0  # ps/nm

    def __post_init__(self):
        object.__setattr__(self, "fixed_values", tuple(float(v) for v in self.fixed_values))
        _require(_finite(*self.fixed_values), "fixed_values finite")
        _require(0.0 in self.fixed_values, "0 in fixed_values")
        _require(_finite(self.tunable_range), "tunable_range finite")
        _require(self.tunable_range >= 0, "tunable_range >= 0")
        _require(_finite(self.tunable_granularity), "tunable_granularity finite")
        _require(self.tunable_granularity > 0, "tunable_granularity > 0")


NO_COMPENSATION = DcmInventory(fixed_values=(0.0,), tunable_range=0.0)


def builtin_catalog() -> list[TransceiverProfile]:
    """Built-in transceiver options for DCI links."""
    return [
        TransceiverProfile("PAM4-112", 112, 56, 2, IM_DD, 100, 28, 50),
        TransceiverProfile("SSB-PAM4-100", 100, 56, 2, IM_DD, 75, 28, 50),
        TransceiverProfile("DP-QPSK-100", 100, 32, 2, COHERENT, 50, 11, UNLIMITED_CD_PS_NM),
        TransceiverProfile("16QAM-200", 200, 32, 4, COHERENT, 50, 19, UNLIMITED_CD_PS_NM),
        TransceiverProfile("16QAM-400", 400, 56, 4, COHERENT, 75, 25, UNLIMITED_CD_PS_NM),
        TransceiverProfile("64QAM-1000", 1000, 100, 6, COHERENT, 112.5, 31, UNLIMITED_CD_PS_NM),
        # 8 x 50G lanes on the 800 GHz O-band grid; CD tolerance scaled from
        # 50 ps/nm at 56 GBd by the baud-squared law.
        TransceiverProfile(
            "O-PAM4-400", 400, 26.5625, 2, IM_DD, 800, 20, 220,
            lane_count=8, bands=frozenset({"O"}),
        ),
    ]


def builtin_bands() -> list[BandPlan]:
    return [
        BandPlan("O", 229.4, 235.8, 0.0, cd_coeff=-5.0),
        BandPlan("C", 191.3, 196.1, 1.5),
        BandPlan("L", 186.0, 190.8, 1.5),
    ]


def merge_catalog(
    base: Iterable[TransceiverProfile], user: Iterable[TransceiverProfile]
) -> dict[str, TransceiverProfile]:
    """Merge profiles by id; ``user`` entries replace ``base`` entries."""
    merged = {p.id: p for p in base}
    for p in user:
        merged[p.id] = p
    return merged


@dataclass(frozen=True)
class Scenario:
    catalog: Mapping[str, TransceiverProfile]
    link: LinkTopology
    inventory: DcmInventory
    bands: tuple = ()

    @property
    def fiber(self) -> FiberSpec:
        """Fiber of the first span (default fiber when the link is empty)."""
        return self.link.spans[0].fiber if self.link.spans else FiberSpec()

    def band(self, band_id: str) -> BandPlan:
        for b in self.bands:
            if b.id == band_id:
                return b
        raise KeyError(band_id)

    def profile(self, profile_id: str) -> TransceiverProfile:
        try:
            return self.catalog[profile_id]
        except KeyError:
            raise KeyError(
                f"unknown profile {profile_id!r}; available: {', '.join(sorted(self.catalog))}"
            ) from None


# ---------------------------------------------------------------- parsing

TOP_LEVEL_KEYS = (
    "fiber", "spans", "lumped_losses", "amplifier", "launch_power_dbm",
    "margin_db", "transceivers", "bands", "dcm_inventory",
)


class _Reader:
    def __init__(self, strict: bool):
        self.strict = strict

    def obj(self, value: Any, where: str, allowed: Iterable[str], required: Iterable[str] = ()):
        if not isinstance(value, dict):
            raise SchemaError(f"{where}: expected an object, got {type(value).__name__}")
        allowed = tuple(allowed)
        if self.strict:
            for key in value:
                if key not in allowed:
                    raise SchemaError(f"{where}: unknown key {key!r} at {_join(where, key)}")
        for key in required:
            if key not in value:
                raise SchemaError(f"{where}: missing required key {key!r}")
        return value

    def num(self, value: Any, where: str) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError(f"{where}: expected a number, got {value!r}")
        return float(value)

    def lst(self, value: Any, where: str) -> list:
        if not isinstance(value, list):
            raise SchemaError(f"{where}: expected a list, got {type(value).__name__}")
        return value

    def string(self, value: Any, where: str) -> str:
        if not isinstance(value, str):
            raise SchemaError(f"{where}: expected a string, got {value!r}")
        return value


def _join(where: str, key: str | int) -> str:
    if isinstance(key, int):
        return f"{where}[{key}]"
    return f"{where}.{key}" if where else key


def _build(cls, where: str, **kwargs):
    try:
        return cls(**kwargs)
    except ValidationError as exc:
        raise ValidationError(f"{where or '<root>'}: {exc}") from None


def _fiber(r: _Reader, doc: Any, where: str) -> FiberSpec:
    d = r.obj(doc, where, ("loss_coeff", "cd_coeff"))
    kw = {k: r.num(d[k], _join(where, k)) for k in ("loss_coeff", "cd_coeff") if k in d}
    return _build(FiberSpec, where, **kw)


def _profile(r: _Reader, doc: Any, where: str) -> TransceiverProfile:
    keys = ("id", "net_rate", "baud", "bits_per_symbol", "detection", "slot_width",
            "required_osnr", "cd_tolerance", "lane_count", "bands")
    required = keys[:8]
    d = r.obj(doc, where, keys, required)
    kw: dict[str, Any] = {
        "id": r.string(d["id"], _join(where, "id")),
        "detection": r.string(d["detection"], _join(where, "detection")),
    }
    for k in ("net_rate", "baud", "bits_per_symbol", "slot_width", "required_osnr", "cd_tolerance"):
        kw[k] = r.num(d[k], _join(where, k))
    if "lane_count" in d:
        lanes = d["lane_count"]
        if isinstance(lanes, bool) or not isinstance(lanes, int):
            raise SchemaError(f"{_join(where, 'lane_count')}: expected an integer, got {lanes!r}")
        kw["lane_count"] = lanes
    if "bands" in d:
        bw = _join(where, "bands")
        kw["bands"] = frozenset(
            r.string(b, _join(bw, i)) for i, b in enumerate(r.lst(d["bands"], bw))
        )
    return _build(TransceiverProfile, where, **kw)


def _band(r: _Reader, doc: Any, where: str) -> BandPlan:
    d = r.obj(doc, where, ("id", "f_start", "f_stop", "splitter_loss", "cd_coeff"),
              ("id", "f_start", "f_stop"))
    kw: dict[str, Any] = {"id": r.string(d["id"], _join(where, "id"))}
    for k in ("f_start", "f_stop", "splitter_loss"):
        if k in d:
            kw[k] = r.num(d[k], _join(where, k))
    if d.get("cd_coeff") is not None:
        kw["cd_coeff"] = r.num(d["cd_coeff"], _join(where, "cd_coeff"))
    return _build(BandPlan, where, **kw)


def parse_scenario(doc: Any, *, strict: bool = True) -> Scenario:
    """Build a :class:`Scenario` from an already-decoded JSON value."""
    r = _Reader(strict)
    d = r.obj(doc, "", TOP_LEVEL_KEYS, ("spans",))

    fiber = _fiber(r, d["fiber"], "fiber") if "fiber" in d else FiberSpec()

    spans = []
    for i, s in enumerate(r.lst(d["spans"], "spans")):
        where = _join("spans", i)
        sd = r.obj(s, where, ("length_km", "fiber"), ("length_km",))
        span_fiber = _fiber(r, sd["fiber"], _join(where, "fiber")) if "fiber" in sd else fiber
        spans.append(_build(Span, where, length_km=r.num(sd["length_km"], _join(where, "length_km")),
                            fiber=span_fiber))

    lumped = []
    for i, l in enumerate(r.lst(d.get("lumped_losses", []), "lumped_losses")):
        where = _join("lumped_losses", i)
        ld = r.obj(l, where, ("label", "loss_db"), ("label", "loss_db"))
        lumped.append(_build(LumpedLoss, where, label=r.string(ld["label"], _join(where, "label")),
                             loss_db=r.num(ld["loss_db"], _join(where, "loss_db"))))

    amp_kw = {}
    if "amplifier" in d:
        ad = r.obj(d["amplifier"], "amplifier", ("noise_figure", "max_total_output"))
        amp_kw = {k: r.num(ad[k], _join("amplifier", k)) for k in ad if k in ("noise_figure", "max_total_output")}
    amp = _build(AmplifierSpec, "amplifier", **amp_kw)

    link_kw: dict[str, Any] = {"spans": spans, "lumped_losses": lumped, "preamp": amp}
    if "launch_power_dbm" in d:
        link_kw["launch_power_per_channel"] = r.num(d["launch_power_dbm"], "launch_power_dbm")
    if "margin_db" in d:
        link_kw["design_margin"] = r.num(d["margin_db"], "margin_db")
    link = _build(LinkTopology, "", **link_kw)

    user = [
        _profile(r, p, _join("transceivers", i))
        for i, p in enumerate(r.lst(d.get("transceivers", []), "transceivers"))
    ]
    catalog = merge_catalog(builtin_catalog(), user)

    if "bands" in d:
        bands = tuple(_band(r, b, _join("bands", i)) for i, b in enumerate(r.lst(d["bands"], "bands")))
    else:
        bands = tuple(builtin_bands())

    inv_kw: dict[str, Any] = {}
    if "dcm_inventory" in d:
        idoc = r.obj(d["dcm_inventory"], "dcm_inventory",
                     ("fixed_values", "tunable_range", "tunable_granularity"))
        if "fixed_values" in idoc:
            fw = "dcm_inventory.fixed_values"
            inv_kw["fixed_values"] = [r.num(v, _join(fw, i)) for i, v in enumerate(r.lst(idoc["fixed_values"], fw))]
        for k in ("tunable_range", "tunable_granularity"):
            if k in idoc:
                inv_kw[k] = r.num(idoc[k], _join("dcm_inventory", k))
    inventory = _build(DcmInventory, "dcm_inventory", **inv_kw)

    return Scenario(catalog=catalog, link=link, inventory=inventory, bands=bands)


def loads_scenario(text: str, *, strict: bool = True) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_scenario(doc, strict=strict)


def load_scenario(path: str | Path, *, strict: bool = True) -> Scenario:
    """Read a scenario JSON file. ``OSError`` propagates for unreadable paths."""
    return loads_scenario(Path(path).read_text(), strict=strict)


# ---------------------------------------------------------- serialization

def profile_to_dict(p: TransceiverProfile) -> dict:
    d = {f.name: getattr(p, f.name) for f in fields(p)}
    d["bands"] = sorted(p.bands)
    return d


def scenario_to_dict(sc: Scenario) -> dict:
    """Inverse of :func:`parse_scenario`; every span carries its own fiber."""
    link = sc.link
    return {
        "fiber": _fiber_dict(sc.fiber),
        "spans": [{"length_km": s.length_km, "fiber": _fiber_dict(s.fiber)} for s in link.spans],
        "lumped_losses": [{"label": l.label, "loss_db": l.loss_db} for l in link.lumped_losses],
        "amplifier": {
            "noise_figure": link.preamp.noise_figure,
            "max_total_output": link.preamp.max_total_output,
        },
        "launch_power_dbm": link.launch_power_per_channel,
        "margin_db": link.design_margin,
        "transceivers": [profile_to_dict(sc.catalog[k]) for k in sorted(sc.catalog)],
        "bands": [
            {"id": b.id, "f_start": b.f_start, "f_stop": b.f_stop,
             "splitter_loss": b.splitter_loss, "cd_coeff": b.cd_coeff}
            for b in sc.bands
        ],
        "dcm_inventory": {
            "fixed_values": list(sc.inventory.fixed_values),
            "tunable_range": sc.inventory.tunable_range,
            "tunable_granularity": sc.inventory.tunable_granularity,
        },
    }


def _fiber_dict(f: FiberSpec) -> dict:
    return {"loss_coeff": f.loss_coeff, "cd_coeff": f.cd_coeff}


def dumps_scenario(sc: Scenario) -> str:
    return json.dumps(scenario_to_dict(sc), indent=2)


def with_inventory(sc: Scenario, inventory: DcmInventory) -> Scenario:
    return replace(sc, inventory=inventory)
