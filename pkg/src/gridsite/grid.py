"""Grid instance data model and the deterministic temperature response maps.

A grid instance bundles buses (with planar coordinates and a base demand),
transmission lines with symmetric capacity limits, existing and candidate
generators, and the response parameters that turn a per-bus temperature into
a realized demand and an available generation capacity.

All power quantities are MW for one representative hour; costs are dollars,
with candidate build costs already amortized to the same hour by the
instance author.  Instances are immutable after loading and safe to share
across worker threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields

import numpy as np

__all__ = [
    "Bus",
    "Line",
    "GeneratorSpec",
    "ResponseParams",
    "GridInstance",
    "InstanceError",
    "ParseError",
    "ValidationError",
    "load_instance",
    "serialize",
    "demand_at",
    "available_capacity",
    "temperature_deviation",
    "realize_demands",
    "realize_availability",
]


class InstanceError(Exception):
    """Base class for grid instance errors."""


class ParseError(InstanceError):
    """The instance document is not syntactically valid."""


class ValidationError(InstanceError):
    """The instance document violates a data invariant."""


@dataclass(frozen=True)
class Bus:
    id: str
    x_km: float
    y_km: float
    base_demand_mw: float
    mean_temp_c: float


@dataclass(frozen=True)
class Line:
    from_bus: str
    to_bus: str
    capacity_mw: float


@dataclass(frozen=True)
class GeneratorSpec:
    id: str
    bus: str
    capacity_mw: float
    marginal_cost: float
    kind: str  # "existing" | "candidate"
    build_cost: float = 0.0


@dataclass(frozen=True)
class ResponseParams:
    """Temperature response: comfort band, demand slope, derating ramp.

    Outside the comfort band [comfort_lo_c, comfort_hi_c] the deviation
    delta grows linearly; demand rises by ``demand_slope_per_c`` of base per
    degree of deviation, and generator capacity ramps down linearly from
    ``derate_start_c`` to ``derate_full_c`` of deviation, losing at most the
    fraction ``derate_max_frac``.  Unserved demand is penalized at
    ``shed_penalty`` dollars per MWh.
    """

    comfort_lo_c: float
    comfort_hi_c: float
    demand_slope_per_c: float
    derate_start_c: float
    derate_full_c: float
    derate_max_frac: float
    shed_penalty: float


@dataclass(frozen=True)
class GridInstance:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    generators: tuple[GeneratorSpec, ...]
    response: ResponseParams
    _bus_index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(
            self, "_bus_index", {b.id: i for i, b in enumerate(self.buses)}
        )

    def bus_index(self, bus_id: str) -> int:
        return self._bus_index[bus_id]

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def candidates(self) -> tuple[GeneratorSpec, ...]:
        return tuple(g for g in self.generators if g.kind == "candidate")

    @property
    def existing(self) -> tuple[GeneratorSpec, ...]:
        return tuple(g for g in self.generators if g.kind == "existing")

    @property
    def n_sites(self) -> int:
        return sum(1 for g in self.generators if g.kind == "candidate")

    def build_cost(self, build) -> float:
        """Total build cost of a 0/1 vector over candidate sites."""
        cands = self.candidates
        if len(build) != len(cands):
            raise ValueError(
                f"siting vector has length {len(build)}, expected {len(cands)}"
            )
        return float(sum(g.build_cost * int(b) for g, b in zip(cands, build)))

    def mean_temps(self) -> np.ndarray:
        return np.array([b.mean_temp_c for b in self.buses], dtype=float)

    def base_demands(self) -> np.ndarray:
        return np.array([b.base_demand_mw for b in self.buses], dtype=float)

    def coordinates(self) -> np.ndarray:
        return np.array([[b.x_km, b.y_km] for b in self.buses], dtype=float)


# ---------------------------------------------------------------------------
# temperature response maps
# ---------------------------------------------------------------------------

def temperature_deviation(temp_c, p: ResponseParams):
    """Degrees outside the comfort band (0 inside it).  Accepts arrays."""
    t = np.asarray(temp_c, dtype=float)
    delta = np.maximum(0.0, np.maximum(p.comfort_lo_c - t, t - p.comfort_hi_c))
    if np.ndim(temp_c) == 0:
        return float(delta)
    return delta


def demand_at(bus: Bus, temp_c: float, p: ResponseParams) -> float:
    """Realized demand at a bus for one temperature, MW.

    Demand equals the base demand inside the comfort band and grows
    piecewise linearly with the deviation outside it, so both cold snaps
    and heat waves raise load.
    """
    delta = temperature_deviation(temp_c, p)
    return bus.base_demand_mw * (1.0 + p.demand_slope_per_c * delta)


def available_capacity(gen: GeneratorSpec, temp_c: float, p: ResponseParams) -> float:
    """Available capacity of a generator under temperature stress, MW.

    Capacity is flat up to ``derate_start_c`` of deviation, ramps down
    linearly, and saturates at a loss of ``derate_max_frac`` beyond
    ``derate_full_c``.
    """
    delta = temperature_deviation(temp_c, p)
    ramp = (delta - p.derate_start_c) / (p.derate_full_c - p.derate_start_c)
    phi = min(1.0, max(0.0, ramp))
    return gen.capacity_mw * (1.0 - p.derate_max_frac * phi)


def realize_demands(instance: GridInstance, temps: np.ndarray) -> np.ndarray:
    """Vectorized demand map: temps (..., n_buses) -> demands (..., n_buses)."""
    p = instance.response
    base = instance.base_demands()
    delta = temperature_deviation(temps, p)
    return base * (1.0 + p.demand_slope_per_c * delta)


def realize_availability(instance: GridInstance, temps: np.ndarray) -> np.ndarray:
    """Vectorized capacity map: temps (..., n_buses) -> avail (..., n_gens)."""
    p = instance.response
    caps = np.array([g.capacity_mw for g in instance.generators], dtype=float)
    gen_bus = [instance.bus_index(g.bus) for g in instance.generators]
    delta = temperature_deviation(np.asarray(temps, dtype=float)[..., gen_bus], p)
    phi = np.clip(
        (delta - p.derate_start_c) / (p.derate_full_c - p.derate_start_c), 0.0, 1.0
    )
    return caps * (1.0 - p.derate_max_frac * phi)


# ---------------------------------------------------------------------------
# on-disk format (JSON document with sections: buses, lines, generators,
# response; unknown fields are a hard error to catch typos in study configs)
# ---------------------------------------------------------------------------

_SECTIONS = ("buses", "lines", "generators", "response")


def _require_fields(record: dict, cls, where: str, optional=()):
    known = {f.name for f in fields(cls) if not f.name.startswith("_")}
    for key in record:
        if key not in known:
            raise ValidationError(f"{where}: unknown field {key!r}")
    for name in known:
        if name in optional:
            continue
        if name not in record:
            raise ValidationError(f"{where}: missing field {name!r}")


def _check_number(value, where: str, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{where}: field {name!r} must be a number")
    if not math.isfinite(value):
        raise ValidationError(f"{where}: field {name!r} must be finite")
    return float(value)


def load_instance(text: str) -> GridInstance:
    """Parse and validate an instance document.

    Raises ParseError with line/column context for malformed documents and
    ValidationError naming the first violated invariant otherwise.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object with named sections")
    for key in doc:
        if key not in _SECTIONS:
            raise ValidationError(f"unknown section {key!r}")
    for key in _SECTIONS:
        if key not in doc:
            raise ValidationError(f"missing section {key!r}")

    buses = []
    seen = set()
    for i, rec in enumerate(doc["buses"]):
        where = f"buses[{i}]"
        _require_fields(rec, Bus, where)
        bus = Bus(
            id=str(rec["id"]),
            x_km=_check_number(rec["x_km"], where, "x_km"),
            y_km=_check_number(rec["y_km"], where, "y_km"),
            base_demand_mw=_check_number(rec["base_demand_mw"], where, "base_demand_mw"),
            mean_temp_c=_check_number(rec["mean_temp_c"], where, "mean_temp_c"),
        )
        if bus.id in seen:
            raise ValidationError(f"{where}: duplicate id {bus.id!r}")
        seen.add(bus.id)
        if bus.base_demand_mw < 0:
            raise ValidationError(f"{where}: negative demand")
        buses.append(bus)
    if not buses:
        raise ValidationError("instance must have at least one bus")
    bus_ids = {b.id for b in buses}

    lines = []
    for i, rec in enumerate(doc["lines"]):
        where = f"lines[{i}]"
        _require_fields(rec, Line, where)
        line = Line(
            from_bus=str(rec["from_bus"]),
            to_bus=str(rec["to_bus"]),
            capacity_mw=_check_number(rec["capacity_mw"], where, "capacity_mw"),
        )
        for end in (line.from_bus, line.to_bus):
            if end not in bus_ids:
                raise ValidationError(f"{where}: unknown bus id {end!r}")
        if line.from_bus == line.to_bus:
            raise ValidationError(f"{where}: endpoints must differ")
        if line.capacity_mw < 0:
            raise ValidationError(f"{where}: negative capacity")
        lines.append(line)

    gens = []
    seen_gen = set()
    for i, rec in enumerate(doc["generators"]):
        where = f"generators[{i}]"
        _require_fields(rec, GeneratorSpec, where, optional=("build_cost",))
        gen = GeneratorSpec(
            id=str(rec["id"]),
            bus=str(rec["bus"]),
            capacity_mw=_check_number(rec["capacity_mw"], where, "capacity_mw"),
            marginal_cost=_check_number(rec["marginal_cost"], where, "marginal_cost"),
            kind=str(rec["kind"]),
            build_cost=_check_number(rec.get("build_cost", 0.0), where, "build_cost"),
        )
        if gen.id in seen_gen:
            raise ValidationError(f"{where}: duplicate id {gen.id!r}")
        seen_gen.add(gen.id)
        if gen.bus not in bus_ids:
            raise ValidationError(f"{where}: unknown bus id {gen.bus!r}")
        if gen.capacity_mw < 0:
            raise ValidationError(f"{where}: negative capacity")
        if gen.marginal_cost < 0:
            raise ValidationError(f"{where}: negative marginal cost")
        if gen.kind not in ("existing", "candidate"):
            raise ValidationError(f"{where}: kind must be 'existing' or 'candidate'")
        if gen.kind == "candidate":
            if "build_cost" not in rec:
                raise ValidationError(f"{where}: candidate requires build_cost")
            if gen.build_cost < 0:
                raise ValidationError(f"{where}: negative build cost")
        elif gen.build_cost != 0.0:
            raise ValidationError(f"{where}: existing generator cannot carry build_cost")
        gens.append(gen)

    rec = doc["response"]
    where = "response"
    _require_fields(rec, ResponseParams, where)
    p = ResponseParams(**{k: _check_number(v, where, k) for k, v in rec.items()})
    if p.comfort_lo_c > p.comfort_hi_c:
        raise ValidationError(f"{where}: comfort_lo_c exceeds comfort_hi_c")
    if p.demand_slope_per_c < 0:
        raise ValidationError(f"{where}: negative demand slope")
    if p.derate_start_c < 0:
        raise ValidationError(f"{where}: negative derate_start_c")
    if p.derate_full_c <= p.derate_start_c:
        raise ValidationError(f"{where}: derate_full_c must exceed derate_start_c")
    if not 0.0 <= p.derate_max_frac <= 1.0:
        raise ValidationError(f"{where}: derate_max_frac outside [0, 1]")
    if p.shed_penalty <= 0:
        raise ValidationError(f"{where}: shed_penalty must be positive")

    return GridInstance(
        buses=tuple(buses), lines=tuple(lines), generators=tuple(gens), response=p
    )


def serialize(instance: GridInstance) -> str:
    """Render an instance back to its document form (exact round trip)."""
    def bus_rec(b: Bus) -> dict:
        return {
            "id": b.id,
            "x_km": b.x_km,
            "y_km": b.y_km,
            "base_demand_mw": b.base_demand_mw,
            "mean_temp_c": b.mean_temp_c,
        }

    def line_rec(ln: Line) -> dict:
        return {"from_bus": ln.from_bus, "to_bus": ln.to_bus, "capacity_mw": ln.capacity_mw}

    def gen_rec(g: GeneratorSpec) -> dict:
        rec = {
            "id": g.id,
            "bus": g.bus,
            "capacity_mw": g.capacity_mw,
            "marginal_cost": g.marginal_cost,
            "kind": g.kind,
        }
        if g.kind == "candidate":
            rec["build_cost"] = g.build_cost
        return rec

    doc = {
        "buses": [bus_rec(b) for b in instance.buses],
        "lines": [line_rec(ln) for ln in instance.lines],
        "generators": [gen_rec(g) for g in instance.generators],
        "response": {
            "comfort_lo_c": instance.response.comfort_lo_c,
            "comfort_hi_c": instance.response.comfort_hi_c,
            "demand_slope_per_c": instance.response.demand_slope_per_c,
            "derate_start_c": instance.response.derate_start_c,
            "derate_full_c": instance.response.derate_full_c,
            "derate_max_frac": instance.response.derate_max_frac,
            "shed_penalty": instance.response.shed_penalty,
        },
    }
    return json.dumps(doc, indent=2) + "\n"
