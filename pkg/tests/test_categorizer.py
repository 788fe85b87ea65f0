import pytest
from hypothesis import given, strategies as st

from streamanon import CategoryDictionary, Message, TypeMismatchError, UnknownCategoryError, encode


def msg(**attrs) -> Message:
    return Message(seq=0, arrival_ns=0, attributes=attrs)


def test_same_value_same_id():
    d = CategoryDictionary()
    first = encode(msg(vehicle_model="e-tron 55"), d, ("vehicle_model",))
    second = encode(msg(vehicle_model="e-tron 55"), d, ("vehicle_model",))
    assert first.attributes["vehicle_model"] == 0
    assert second.attributes["vehicle_model"] == 0


def test_empty_attrs_is_identity():
    d = CategoryDictionary()
    m = msg(vehicle_model="e-tron 55")
    assert encode(m, d, ()) is m
    assert d.size("vehicle_model") == 0


def test_first_seen_order_ids():
    # stream A, B, A, C -> IDs 0, 1, 0, 2
    d = CategoryDictionary()
    ids = [
        encode(msg(m=v), d, ("m",)).attributes["m"]
        for v in ["A", "B", "A", "C"]
    ]
    assert ids == [0, 1, 0, 2]


def test_decode_inverse():
    d = CategoryDictionary()
    encode(msg(vehicle_model="e-tron 55"), d, ("vehicle_model",))
    assert d.decode("vehicle_model", 0) == "e-tron 55"


def test_decode_unknown_raises():
    d = CategoryDictionary()
    encode(msg(vehicle_model="e-tron 55"), d, ("vehicle_model",))
    with pytest.raises(UnknownCategoryError):
        d.decode("vehicle_model", 99)
    with pytest.raises(UnknownCategoryError):
        d.decode("never_seen", 0)


def test_numeric_value_in_categorized_attribute_is_config_error():
    d = CategoryDictionary()
    with pytest.raises(TypeMismatchError):
        encode(msg(vehicle_model=42), d, ("vehicle_model",))


def test_numeric_looking_strings_still_categorized():
    d = CategoryDictionary()
    out = encode(msg(m="42"), d, ("m",))
    assert out.attributes["m"] == 0


def test_absent_attribute_untouched():
    d = CategoryDictionary()
    out = encode(msg(other=1), d, ("m",))
    assert out.attributes == {"other": 1}


def test_max_cardinality_guard():
    d = CategoryDictionary(max_cardinality=2)
    encode(msg(m="a"), d, ("m",))
    encode(msg(m="b"), d, ("m",))
    with pytest.raises(TypeMismatchError):
        encode(msg(m="c"), d, ("m",))


def test_dump_rows():
    d = CategoryDictionary()
    for v in ["x", "y"]:
        encode(msg(m=v), d, ("m",))
    encode(msg(n="z"), d, ("n",))
    assert d.dump() == [("m", 0, "x"), ("m", 1, "y"), ("n", 0, "z")]


@given(st.lists(st.text(max_size=5), max_size=40))
def test_round_trip_over_random_streams(values):
    d = CategoryDictionary()
    for v in values:
        out = encode(msg(m=v), d, ("m",))
        assert d.decode("m", out.attributes["m"]) == v


@given(st.lists(st.text(max_size=5), max_size=40))
def test_id_space_equals_distinct_count_at_every_point(values):
    d = CategoryDictionary()
    seen = set()
    for v in values:
        out = encode(msg(m=v), d, ("m",))
        seen.add(v)
        assert d.size("m") == len(seen)
        assert 0 <= out.attributes["m"] < len(seen)


@given(st.permutations(["a", "b", "c", "d"]))
def test_permuted_arrival_preserves_bijectivity(order):
    d = CategoryDictionary()
    ids = [encode(msg(m=v), d, ("m",)).attributes["m"] for v in order]
    # distinct values in arrival order always receive dense ids 0..n-1
    assert ids == [0, 1, 2, 3]
