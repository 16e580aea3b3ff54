import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anmsim import (
    BadField,
    BranchSpec,
    BusKind,
    BusSpec,
    DeviceKind,
    DeviceSpec,
    MalformedDocument,
    MissingSection,
    NetworkSpec,
    Severity,
    parse_network,
    serialize_network,
    validate,
)

MINIMAL = """{
 "baseMVA": 100.0,
 "bus": [[0, 0, 132.0, 1.1, 0.9]],
 "branch": [],
 "device": [[0, 0, 0, 100.0, -100.0, 100.0, -100.0, 0, 0, 0]]
}"""

TWO_BUS = """{
 "baseMVA": 100.0,
 "bus": [[0, 0, 132.0, 1.1, 0.9], [1, 1, 33.0, 1.1, 0.9]],
 "branch": [[0, 1, 0.01, 0.1, 0.0, 1.0, 1.0, 0.0]],
 "device": [[0, 0, 0, 100.0, -100.0, 100.0, -100.0, 0, 0, 0],
            [1, 1, 1, 0.0, -0.5, 0.0, -0.5, 0, 0, 0]]
}"""


def test_minimal_document():
    spec = parse_network(MINIMAL)
    assert len(spec.buses) == 1
    assert len(spec.branches) == 0
    assert len(spec.devices) == 1
    assert spec.buses[0].kind is BusKind.SLACK
    assert spec.devices[0].kind is DeviceKind.SLACK_GEN
    assert validate(spec).ok


def test_two_bus_document_valid():
    spec = parse_network(TWO_BUS)
    report = validate(spec)
    assert report.ok
    assert report.issues == ()


def test_column_order():
    # bus row is [id, kind, base_kv, v_max, v_min]; device row puts every
    # max before its min
    spec = parse_network(TWO_BUS)
    assert spec.buses[1].v_max == 1.1
    assert spec.buses[1].v_min == 0.9
    load = spec.devices[1]
    assert load.p_max == 0.0 and load.p_min == -0.5
    assert load.q_max == 0.0 and load.q_min == -0.5


def test_branch_defaults_filled():
    doc = json.loads(TWO_BUS)
    doc["branch"][0][6] = 0.0  # tap column zeroed means nominal
    spec = parse_network(json.dumps(doc))
    assert spec.branches[0].tap == 1.0
    assert spec.branches[0].shift == 0.0


@pytest.mark.parametrize("section", ["baseMVA", "bus", "branch", "device"])
def test_missing_section(section):
    doc = json.loads(TWO_BUS)
    del doc[section]
    with pytest.raises(MissingSection) as exc:
        parse_network(json.dumps(doc))
    assert section in str(exc.value)


def test_malformed_json():
    with pytest.raises(MalformedDocument):
        parse_network("{not json")
    with pytest.raises(MalformedDocument):
        parse_network("[1, 2, 3]")


@pytest.mark.parametrize("section,row", [
    ("bus", [0, 0, 132.0, 1.1]),            # arity 4, want 5
    ("branch", [0, 1, 0.01]),               # arity 3, want 8
    ("device", [0, 0, 0, 1.0]),             # arity 4, want 10
])
def test_wrong_arity(section, row):
    doc = json.loads(TWO_BUS)
    doc[section].append(row)
    with pytest.raises(BadField) as exc:
        parse_network(json.dumps(doc))
    assert section in str(exc.value)


def test_non_numeric_entry():
    doc = json.loads(TWO_BUS)
    doc["bus"][0][2] = "132"
    with pytest.raises(BadField):
        parse_network(json.dumps(doc))
    doc = json.loads(TWO_BUS)
    doc["device"][0][3] = True  # bool is not a number here
    with pytest.raises(BadField):
        parse_network(json.dumps(doc))


def test_bad_kind_codes():
    doc = json.loads(TWO_BUS)
    doc["bus"][1][1] = 2
    with pytest.raises(BadField):
        parse_network(json.dumps(doc))
    doc = json.loads(TWO_BUS)
    doc["device"][1][2] = 7
    with pytest.raises(BadField):
        parse_network(json.dumps(doc))


def test_unknown_top_level_key_warns():
    doc = json.loads(TWO_BUS)
    doc["comment"] = "hello"
    spec = parse_network(json.dumps(doc))
    assert spec.extra_keys == ("comment",)
    report = validate(spec)
    assert report.ok  # WARN only
    warns = [i for i in report.issues if i.severity == Severity.WARN]
    assert len(warns) == 1 and warns[0].path == "comment"


# --- validation errors ---------------------------------------------------

def spec_with(**overrides):
    base = dict(
        base_mva=100.0,
        buses=(BusSpec(0, BusKind.SLACK, 132.0, 1.1, 0.9),
               BusSpec(1, BusKind.PQ, 33.0, 1.1, 0.9)),
        branches=(BranchSpec(0, 1, 0.01, 0.1, 0.0, 1.0),),
        devices=(DeviceSpec(0, 0, DeviceKind.SLACK_GEN, 100., -100., 100., -100.),
                 DeviceSpec(1, 1, DeviceKind.LOAD, 0.0, -0.5, 0.0, -0.5)),
    )
    base.update(overrides)
    return NetworkSpec(**base)


def test_multiple_slack_generators():
    spec = spec_with(devices=(
        DeviceSpec(0, 0, DeviceKind.SLACK_GEN, 100., -100., 100., -100.),
        DeviceSpec(1, 0, DeviceKind.SLACK_GEN, 100., -100., 100., -100.)))
    report = validate(spec)
    assert not report.ok
    assert any("multiple slack generators" in i.message for i in report.errors())


def test_branch_unknown_bus():
    spec = spec_with(branches=(BranchSpec(0, 99, 0.01, 0.1, 0.0, 1.0),))
    report = validate(spec)
    assert not report.ok
    err = report.errors()[0]
    assert err.path == "branch[0]"
    assert "99" in err.message


@pytest.mark.parametrize("bad,field", [
    (spec_with(base_mva=0.0), "baseMVA"),
    (spec_with(buses=(BusSpec(0, BusKind.SLACK, 132.0, 1.1, 0.9),
                      BusSpec(0, BusKind.PQ, 33.0, 1.1, 0.9))), "bus[1]"),
    (spec_with(buses=(BusSpec(0, BusKind.SLACK, 132.0, 0.99, 0.9),
                      BusSpec(1, BusKind.PQ, 33.0, 1.1, 0.9))), "bus[0]"),
    (spec_with(branches=(BranchSpec(0, 0, 0.01, 0.1, 0.0, 1.0),)), "branch[0]"),
    (spec_with(branches=(BranchSpec(0, 1, 0.0, 0.0, 0.0, 1.0),)), "branch[0]"),
    (spec_with(branches=(BranchSpec(0, 1, 0.01, 0.1, -0.1, 1.0),)), "branch[0]"),
    (spec_with(branches=(BranchSpec(0, 1, 0.01, 0.1, 0.0, 0.0),)), "branch[0]"),
    (spec_with(branches=(BranchSpec(0, 1, 0.01, 0.1, 0.0, 1.0, tap=-1.0),)),
     "branch[0]"),
])
def test_validation_error_paths(bad, field):
    report = validate(bad)
    assert not report.ok
    assert any(i.path == field for i in report.errors())


def test_device_kind_invariants():
    # load must consume
    spec = spec_with(devices=(
        DeviceSpec(0, 0, DeviceKind.SLACK_GEN, 100., -100., 100., -100.),
        DeviceSpec(1, 1, DeviceKind.LOAD, 0.1, -0.5, 0.0, -0.5)))
    assert not validate(spec).ok
    # renewable p_min pinned to zero
    spec = spec_with(devices=(
        DeviceSpec(0, 0, DeviceKind.SLACK_GEN, 100., -100., 100., -100.),
        DeviceSpec(1, 1, DeviceKind.RENEWABLE_GEN, 0.5, -0.1, 0.1, -0.1)))
    assert not validate(spec).ok
    # storage asymmetric power range
    spec = spec_with(devices=(
        DeviceSpec(0, 0, DeviceKind.SLACK_GEN, 100., -100., 100., -100.),
        DeviceSpec(1, 1, DeviceKind.STORAGE, 0.5, -0.4, 0.1, -0.1,
                   soc_max=50.0, soc_min=0.0, eff=0.9)))
    assert not validate(spec).ok
    # storage efficiency out of range
    spec = spec_with(devices=(
        DeviceSpec(0, 0, DeviceKind.SLACK_GEN, 100., -100., 100., -100.),
        DeviceSpec(1, 1, DeviceKind.STORAGE, 0.5, -0.5, 0.1, -0.1,
                   soc_max=50.0, soc_min=0.0, eff=1.5)))
    assert not validate(spec).ok


def test_validate_is_pure():
    spec = parse_network(TWO_BUS)
    assert validate(spec) == validate(spec)


def test_bus_position_and_kind_queries():
    spec = parse_network(TWO_BUS)
    assert spec.bus_position(0) == 0
    assert spec.bus_position(1) == 1
    assert spec.slack_bus == 0
    assert spec.slack_device == 0
    assert spec.devices_of_kind(DeviceKind.LOAD) == [1]


# --- round-trip ----------------------------------------------------------

finite = st.floats(allow_nan=False, allow_infinity=False,
                   min_value=-1e6, max_value=1e6)
positive = st.floats(min_value=1e-6, max_value=1e6, allow_nan=False)


@st.composite
def networks(draw):
    n_bus = draw(st.integers(min_value=1, max_value=6))
    buses = [BusSpec(0, BusKind.SLACK, draw(positive), 1.1, 0.9)]
    for i in range(1, n_bus):
        buses.append(BusSpec(i, BusKind.PQ, draw(positive), 1.1, 0.9))
    branches = []
    for t in range(1, n_bus):  # radial chain keeps refs valid
        branches.append(BranchSpec(
            from_bus=draw(st.integers(0, t - 1)), to_bus=t,
            r=draw(positive), x=draw(positive),
            b=draw(st.floats(0, 1, allow_nan=False)),
            rate=draw(positive),
            tap=draw(st.floats(0.5, 2.0, allow_nan=False)),
            shift=draw(st.floats(-0.5, 0.5, allow_nan=False))))
    devices = [DeviceSpec(0, 0, DeviceKind.SLACK_GEN, 100., -100., 100., -100.)]
    for i in range(1, n_bus):
        pmax = draw(positive)
        devices.append(DeviceSpec(i, draw(st.integers(0, n_bus - 1)),
                                  DeviceKind.LOAD, 0.0, -pmax, 0.0, -pmax))
    return NetworkSpec(base_mva=draw(positive), buses=tuple(buses),
                       branches=tuple(branches), devices=tuple(devices))


@given(networks())
@settings(max_examples=100)
def test_roundtrip_identity(spec):
    assert validate(spec).ok
    again = parse_network(serialize_network(spec))
    assert again == spec  # field-exact, bit-exact floats
