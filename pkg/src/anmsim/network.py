"""Immutable per-unit grid description: parsing, validation, serialization.

The on-disk format is a UTF-8 JSON document with four top-level keys:

    baseMVA  number
    bus      rows [id, kind(0=SLACK, 1=PQ), base_kv, v_max, v_min]
    branch   rows [from, to, r, x, b, rate, tap, shift]
    device   rows [id, bus, kind(0=SLACK_GEN, 1=LOAD, 2=RENEWABLE_GEN,
                   3=STORAGE), p_max, p_min, q_max, q_min, soc_max,
                   soc_min, eff]

All electrical quantities are per-unit on ``baseMVA``; storage energy
bounds are physical MWh.  Injections are signed: positive generates,
negative consumes, so loads carry p <= 0.  Unused trailing device
columns (storage bounds on non-storage devices) are written as 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import IntEnum

from .errors import BadField, MalformedDocument, MissingSection


class BusKind(IntEnum):
    SLACK = 0
    PQ = 1


class DeviceKind(IntEnum):
    SLACK_GEN = 0
    LOAD = 1
    RENEWABLE_GEN = 2
    STORAGE = 3


@dataclass(frozen=True)
class BusSpec:
    id: int
    kind: BusKind
    base_kv: float
    v_max: float
    v_min: float


@dataclass(frozen=True)
class BranchSpec:
    from_bus: int
    to_bus: int
    r: float
    x: float
    b: float
    rate: float
    tap: float = 1.0
    shift: float = 0.0


@dataclass(frozen=True)
class DeviceSpec:
    id: int
    bus: int
    kind: DeviceKind
    p_max: float
    p_min: float
    q_max: float
    q_min: float
    soc_max: float = 0.0
    soc_min: float = 0.0
    eff: float = 0.0


@dataclass(frozen=True)
class NetworkSpec:
    """Validated specs may be shared freely across environment instances."""

    base_mva: float
    buses: tuple[BusSpec, ...]
    branches: tuple[BranchSpec, ...]
    devices: tuple[DeviceSpec, ...]
    extra_keys: tuple[str, ...] = ()

    def bus_position(self, bus_id: int) -> int:
        """Positional index of a bus id (dense 0..n-1 ordering)."""
        return self._bus_positions()[bus_id]

    def _bus_positions(self) -> dict[int, int]:
        pos = getattr(self, "_bus_pos_cache", None)
        if pos is None:
            pos = {b.id: i for i, b in enumerate(self.buses)}
            object.__setattr__(self, "_bus_pos_cache", pos)
        return pos

    def devices_of_kind(self, kind: DeviceKind) -> list[int]:
        return [i for i, d in enumerate(self.devices) if d.kind == kind]

    @property
    def slack_bus(self) -> int:
        for i, b in enumerate(self.buses):
            if b.kind == BusKind.SLACK:
                return i
        raise ValueError("network has no slack bus")

    @property
    def slack_device(self) -> int:
        for i, d in enumerate(self.devices):
            if d.kind == DeviceKind.SLACK_GEN:
                return i
        raise ValueError("network has no slack generator")


class Severity(IntEnum):
    WARN = 0
    ERROR = 1


@dataclass(frozen=True)
class Issue:
    severity: Severity
    path: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[Issue, ...] = ()

    @property
    def ok(self) -> bool:
        return not any(i.severity == Severity.ERROR for i in self.issues)

    def errors(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == Severity.ERROR]

    def __str__(self) -> str:
        if not self.issues:
            return "ok: no issues"
        lines = [f"{'ok' if self.ok else 'invalid'}: {len(self.issues)} issue(s)"]
        for i in self.issues:
            lines.append(f"  {i.severity.name} {i.path}: {i.message}")
        return "\n".join(lines)


_SECTIONS = ("baseMVA", "bus", "branch", "device")
_BUS_ARITY = 5
_BRANCH_ARITY = 8
_DEVICE_ARITY = 10


def _num(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise BadField(f"{path}: expected a number, got {value!r}")
    return float(value)


def _row(raw, arity: int, path: str) -> list[float]:
    if not isinstance(raw, list):
        raise BadField(f"{path}: expected an array row")
    if len(raw) != arity:
        raise BadField(f"{path}: expected {arity} columns, got {len(raw)}")
    return [_num(v, f"{path}[{k}]") for k, v in enumerate(raw)]


def parse_network(text: str) -> NetworkSpec:
    """Parse a network document.  Defaults (tap=1, shift=0) are filled for
    zero-valued columns; unknown top-level keys are retained so that
    ``validate`` can surface them as warnings.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedDocument("top level must be an object")
    for section in _SECTIONS:
        if section not in doc:
            raise MissingSection(section)

    base_mva = _num(doc["baseMVA"], "baseMVA")

    buses = []
    if not isinstance(doc["bus"], list):
        raise BadField("bus: expected an array of rows")
    for i, raw in enumerate(doc["bus"]):
        vals = _row(raw, _BUS_ARITY, f"bus[{i}]")
        kind_code = int(vals[1])
        if kind_code not in (0, 1) or vals[1] != kind_code:
            raise BadField(f"bus[{i}]: kind must be 0 (slack) or 1 (PQ)")
        buses.append(BusSpec(id=int(vals[0]), kind=BusKind(kind_code),
                             base_kv=vals[2], v_max=vals[3], v_min=vals[4]))

    branches = []
    if not isinstance(doc["branch"], list):
        raise BadField("branch: expected an array of rows")
    for i, raw in enumerate(doc["branch"]):
        vals = _row(raw, _BRANCH_ARITY, f"branch[{i}]")
        tap = vals[6] if vals[6] != 0.0 else 1.0
        branches.append(BranchSpec(from_bus=int(vals[0]), to_bus=int(vals[1]),
                                   r=vals[2], x=vals[3], b=vals[4],
                                   rate=vals[5], tap=tap, shift=vals[7]))

    devices = []
    if not isinstance(doc["device"], list):
        raise BadField("device: expected an array of rows")
    for i, raw in enumerate(doc["device"]):
        vals = _row(raw, _DEVICE_ARITY, f"device[{i}]")
        kind_code = int(vals[2])
        if kind_code not in (0, 1, 2, 3) or vals[2] != kind_code:
            raise BadField(f"device[{i}]: kind must be one of 0..3")
        devices.append(DeviceSpec(id=int(vals[0]), bus=int(vals[1]),
                                  kind=DeviceKind(kind_code),
                                  p_max=vals[3], p_min=vals[4],
                                  q_max=vals[5], q_min=vals[6],
                                  soc_max=vals[7], soc_min=vals[8],
                                  eff=vals[9]))

    extra = tuple(k for k in doc if k not in _SECTIONS)
    return NetworkSpec(base_mva=base_mva, buses=tuple(buses),
                       branches=tuple(branches), devices=tuple(devices),
                       extra_keys=extra)


def serialize_network(spec: NetworkSpec) -> str:
    """Inverse of :func:`parse_network`; numeric values survive bit-exactly."""
    doc = {
        "baseMVA": spec.base_mva,
        "bus": [[b.id, int(b.kind), b.base_kv, b.v_max, b.v_min]
                for b in spec.buses],
        "branch": [[br.from_bus, br.to_bus, br.r, br.x, br.b, br.rate,
                    br.tap, br.shift] for br in spec.branches],
        "device": [[d.id, d.bus, int(d.kind), d.p_max, d.p_min, d.q_max,
                    d.q_min, d.soc_max, d.soc_min, d.eff]
                   for d in spec.devices],
    }
    return json.dumps(doc, indent=1)


def load_network(path) -> NetworkSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_network(fh.read())


def validate(spec: NetworkSpec) -> ValidationReport:
    """Check every structural invariant.  ``ok`` iff no ERROR entries;
    unknown top-level document keys surface as WARN.
    """
    issues: list[Issue] = []

    def err(path: str, msg: str) -> None:
        issues.append(Issue(Severity.ERROR, path, msg))

    def warn(path: str, msg: str) -> None:
        issues.append(Issue(Severity.WARN, path, msg))

    for key in spec.extra_keys:
        warn(key, "unknown top-level key ignored")

    if not spec.base_mva > 0:
        err("baseMVA", f"power base must be > 0, got {spec.base_mva}")

    bus_ids: set[int] = set()
    slack_buses = []
    for i, b in enumerate(spec.buses):
        path = f"bus[{i}]"
        if b.id in bus_ids:
            err(path, f"duplicate bus id {b.id}")
        bus_ids.add(b.id)
        if b.kind == BusKind.SLACK:
            slack_buses.append(i)
            if not (b.v_min < 1.0 < b.v_max):
                err(path, "slack bus must allow the 1.0 p.u. reference "
                          f"(v_min={b.v_min}, v_max={b.v_max})")
        if not b.base_kv > 0:
            err(path, f"base_kv must be > 0, got {b.base_kv}")
        if not (0 < b.v_min < b.v_max):
            err(path, f"need 0 < v_min < v_max, got ({b.v_min}, {b.v_max})")
    if len(slack_buses) != 1:
        err("bus", f"exactly one slack bus required, found {len(slack_buses)}")

    known_ids = {b.id for b in spec.buses}
    for i, br in enumerate(spec.branches):
        path = f"branch[{i}]"
        if br.from_bus not in known_ids:
            err(path, f"from references unknown bus id {br.from_bus}")
        if br.to_bus not in known_ids:
            err(path, f"to references unknown bus id {br.to_bus}")
        if br.from_bus == br.to_bus:
            err(path, "branch endpoints must be distinct")
        if br.r == 0.0 and br.x == 0.0:
            err(path, "series impedance must be non-zero")
        if br.b < 0:
            err(path, f"charging susceptance must be >= 0, got {br.b}")
        if not br.tap > 0:
            err(path, f"tap ratio must be > 0, got {br.tap}")
        if not br.rate > 0:
            err(path, f"rate must be > 0, got {br.rate}")

    dev_ids: set[int] = set()
    slack_gens = []
    for i, d in enumerate(spec.devices):
        path = f"device[{i}]"
        if d.id in dev_ids:
            err(path, f"duplicate device id {d.id}")
        dev_ids.add(d.id)
        if d.bus not in known_ids:
            err(path, f"references unknown bus id {d.bus}")
        if d.p_min > d.p_max:
            err(path, f"p_min {d.p_min} exceeds p_max {d.p_max}")
        if d.q_min > d.q_max:
            err(path, f"q_min {d.q_min} exceeds q_max {d.q_max}")
        if d.kind == DeviceKind.SLACK_GEN:
            slack_gens.append(i)
        elif d.kind == DeviceKind.LOAD:
            if d.p_max > 0:
                err(path, f"load must consume (p_max <= 0), got {d.p_max}")
        elif d.kind == DeviceKind.RENEWABLE_GEN:
            if d.p_min != 0.0:
                err(path, f"renewable p_min must be 0, got {d.p_min}")
            if d.p_max < 0:
                err(path, f"renewable p_max must be >= 0, got {d.p_max}")
        elif d.kind == DeviceKind.STORAGE:
            if d.p_min != -d.p_max:
                err(path, "storage must charge and discharge symmetrically "
                          f"(p_min = -p_max), got ({d.p_min}, {d.p_max})")
            if not (0 <= d.soc_min < d.soc_max):
                err(path, "need 0 <= soc_min < soc_max, got "
                          f"({d.soc_min}, {d.soc_max})")
            if not (0 < d.eff <= 1):
                err(path, f"efficiency must be in (0, 1], got {d.eff}")

    if len(slack_gens) > 1:
        err("device", "multiple slack generators")
    elif len(slack_gens) == 0:
        err("device", "exactly one slack generator required, found 0")
    elif len(slack_buses) == 1:
        slack_bus_id = spec.buses[slack_buses[0]].id
        if spec.devices[slack_gens[0]].bus != slack_bus_id:
            err(f"device[{slack_gens[0]}]",
                f"slack generator must sit on the slack bus {slack_bus_id}")

    return ValidationReport(issues=tuple(issues))
