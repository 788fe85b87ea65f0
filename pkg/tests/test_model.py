import json

import pytest
from hypothesis import given, strategies as st

from streamanon import ParseError, ValidationError, load_config, parse_message, to_document

VALID_DOC = {
    "anonymization": {
        "k": 5,
        "delta": 200,
        "beta": 50,
        "mu": 100,
        "quasi_identifiers": ["station_id", "vehicle_price"],
        "sensitive_attribute": "energy_kwh",
        "identifier_attribute": "person_id",
        "non_categorized_attributes": [],
    },
    "reduction": [
        {"type": "suppress", "attributes": ["raw_id"]},
        {"type": "deny", "attribute": "objectID", "values": [12, 99]},
        {"type": "allow", "attribute": "objectID", "values": [5]},
        {"type": "range", "attribute": "energy_kwh", "min": 0, "max": 100},
        {
            "type": "conditional",
            "match_attribute": "vehicle_model",
            "equals": "e-tron 55",
            "target_attribute": "vehicle_price",
            "value": 80000,
        },
        {
            "type": "conditional",
            "match_attribute": "price",
            "min": 40000,
            "max": 60000,
            "target_attribute": "price_class",
            "value": 2,
        },
    ],
}


def test_load_valid_config():
    anon, red = load_config(json.dumps(VALID_DOC))
    assert anon.k == 5
    assert anon.delta == 200
    assert anon.beta == 50
    assert anon.mu == 100
    assert anon.quasi_identifiers == ("station_id", "vehicle_price")
    assert anon.sensitive_attribute == "energy_kwh"
    assert len(red.rules) == 6


def test_k_zero_rejected():
    doc = json.loads(json.dumps(VALID_DOC))
    doc["anonymization"]["k"] = 0
    with pytest.raises(ValidationError) as exc:
        load_config(json.dumps(doc))
    assert exc.value.field == "k"


def test_delta_below_k_rejected():
    doc = json.loads(json.dumps(VALID_DOC))
    doc["anonymization"]["k"] = 5
    doc["anonymization"]["delta"] = 3
    with pytest.raises(ValidationError) as exc:
        load_config(json.dumps(doc))
    assert exc.value.field == "delta"


def test_sensitive_attribute_must_not_be_qi():
    doc = json.loads(json.dumps(VALID_DOC))
    doc["anonymization"]["sensitive_attribute"] = "station_id"
    with pytest.raises(ValidationError):
        load_config(json.dumps(doc))


def test_non_categorized_must_be_subset_of_qis():
    doc = json.loads(json.dumps(VALID_DOC))
    doc["anonymization"]["non_categorized_attributes"] = ["vehicle_model"]
    with pytest.raises(ValidationError):
        load_config(json.dumps(doc))


def test_malformed_document_is_parse_error():
    with pytest.raises(ParseError):
        load_config("{not json")
    with pytest.raises(ParseError):
        load_config("[1,2,3]")


def test_range_rule_min_above_max_rejected():
    doc = json.loads(json.dumps(VALID_DOC))
    doc["reduction"] = [{"type": "range", "attribute": "x", "min": 5, "max": 1}]
    with pytest.raises(ValidationError):
        load_config(json.dumps(doc))


def test_round_trip_stability():
    anon1, red1 = load_config(json.dumps(VALID_DOC))
    anon2, red2 = load_config(json.dumps(to_document(anon1, red1)))
    assert anon1 == anon2
    assert red1 == red2


def test_parse_message_field_mapping():
    msg = parse_message('{"station_id": 4, "vehicle_model": "e-tron 55"}', 7, 123)
    assert msg.seq == 7
    assert msg.arrival_ns == 123
    assert msg.attributes == {"station_id": 4, "vehicle_model": "e-tron 55"}
    assert isinstance(msg.attributes["station_id"], int)


def test_parse_message_empty_line():
    with pytest.raises(ParseError):
        parse_message("", 0, 0)
    with pytest.raises(ParseError):
        parse_message("   \n", 0, 0)


def test_parse_message_rejects_non_finite():
    with pytest.raises(ParseError):
        parse_message('{"x": NaN}', 0, 0)
    with pytest.raises(ParseError):
        parse_message('{"x": Infinity}', 0, 0)


def test_parse_message_rejects_nested_and_bool():
    with pytest.raises(ParseError):
        parse_message('{"x": [1, 2]}', 0, 0)
    with pytest.raises(ParseError):
        parse_message('{"x": {"y": 1}}', 0, 0)
    with pytest.raises(ParseError):
        parse_message('{"x": true}', 0, 0)
    with pytest.raises(ParseError):
        parse_message('{"": 1}', 0, 0)


attribute_names = st.text(min_size=1, max_size=8).filter(lambda s: s.strip())
scalars = st.one_of(
    st.integers(min_value=-10**6, max_value=10**6),
    st.floats(allow_nan=False, allow_infinity=False, width=32),
    st.text(max_size=20),
)


@given(st.dictionaries(attribute_names, scalars, max_size=8))
def test_parse_message_never_violates_invariants(attrs):
    msg = parse_message(json.dumps(attrs), 0, 0)
    assert set(msg.attributes) == set(attrs)
    for name, value in msg.attributes.items():
        assert name
        assert isinstance(value, (int, float, str))
