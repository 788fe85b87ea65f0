"""Messages, attribute values, and the configuration documents.

A message is a flat, ordered attribute map plus arrival metadata. Attribute
values are finite numbers or strings at ingress; the categorizer later swaps
configured string attributes for integer category IDs. Configuration is one
JSON document with two sections: ``anonymization`` (the clustering parameters
and attribute roles) and ``reduction`` (an ordered rule list).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Union

from .errors import ParseError, ValidationError

#: A message attribute value. ``int`` doubles as a category ID after the
#: categorizer has run; bools are rejected at ingress.
AttributeValue = Union[int, float, str]


@dataclass(frozen=True)
class Message:
    """One streaming record.

    ``seq`` is the 0-based arrival index, strictly increasing per stream.
    ``arrival_ns`` is a monotonic-clock stamp used only for benchmarking.
    """

    seq: int
    arrival_ns: int
    attributes: dict[str, AttributeValue]

    def with_attributes(self, attributes: dict[str, AttributeValue]) -> "Message":
        return replace(self, attributes=attributes)


# ---------------------------------------------------------------------------
# Reduction rules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SuppressRule:
    attribute_names: tuple[str, ...]


@dataclass(frozen=True)
class AllowFilterRule:
    attribute: str
    allowed_values: frozenset[AttributeValue]


@dataclass(frozen=True)
class DenyFilterRule:
    attribute: str
    denied_values: frozenset[AttributeValue]


@dataclass(frozen=True)
class RangeFilterRule:
    attribute: str
    min: float
    max: float


@dataclass(frozen=True)
class ConditionalChangeRule:
    """Set ``target_attribute`` to ``new_value`` when the match condition holds.

    Exactly one of ``equals`` (string equality) or ``min``/``max`` (closed
    numeric range) is configured.
    """

    match_attribute: str
    target_attribute: str
    new_value: AttributeValue
    equals: str | None = None
    min: float | None = None
    max: float | None = None


ReductionRule = Union[
    SuppressRule, AllowFilterRule, DenyFilterRule, RangeFilterRule, ConditionalChangeRule
]


@dataclass(frozen=True)
class ReductionConfig:
    rules: tuple[ReductionRule, ...] = ()


@dataclass(frozen=True)
class AnonConfig:
    """Clustering parameters and attribute roles.

    ``delta`` is measured in arrivals: the maximum number of subsequent
    messages a tuple may be buffered before forced release. ``beta`` bounds
    simultaneously active clusters; ``mu`` is the window length for the
    rolling information-loss threshold.
    """

    k: int
    delta: int
    beta: int
    mu: int
    quasi_identifiers: tuple[str, ...]
    sensitive_attribute: str
    identifier_attribute: str | None = None
    non_categorized_attributes: tuple[str, ...] = ()


# ---------------------------------------------------------------------------
# Validation and (de)serialization
# ---------------------------------------------------------------------------


def _require(cond: bool, fieldname: str, msg: str) -> None:
    if not cond:
        raise ValidationError(fieldname, msg)


def validate_anon_config(cfg: AnonConfig) -> AnonConfig:
    _require(isinstance(cfg.k, int) and cfg.k >= 1, "k", "must be a positive integer")
    _require(isinstance(cfg.delta, int) and cfg.delta >= 1, "delta", "must be a positive integer")
    _require(cfg.delta >= cfg.k, "delta", f"must be >= k (got delta={cfg.delta}, k={cfg.k})")
    _require(isinstance(cfg.beta, int) and cfg.beta >= 1, "beta", "must be a positive integer")
    _require(isinstance(cfg.mu, int) and cfg.mu >= 1, "mu", "must be a positive integer")
    _require(len(cfg.quasi_identifiers) > 0, "quasi_identifiers", "must be non-empty")
    _require(
        len(set(cfg.quasi_identifiers)) == len(cfg.quasi_identifiers),
        "quasi_identifiers",
        "must not contain duplicates",
    )
    _require(
        cfg.sensitive_attribute not in cfg.quasi_identifiers,
        "sensitive_attribute",
        "must not be a quasi-identifier",
    )
    if cfg.identifier_attribute is not None:
        _require(
            cfg.identifier_attribute not in cfg.quasi_identifiers,
            "identifier_attribute",
            "must not be a quasi-identifier",
        )
    for name in cfg.non_categorized_attributes:
        _require(
            name in cfg.quasi_identifiers,
            "non_categorized_attributes",
            f"{name!r} is not a quasi-identifier",
        )
    return cfg


def _check_scalar(value: Any, where: str) -> AttributeValue:
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise ValidationError(where, f"must be a number or string, got {value!r}")
    if isinstance(value, float) and not math.isfinite(value):
        raise ValidationError(where, "must be finite")
    return value


def _parse_rule(doc: Any, index: int) -> ReductionRule:
    where = f"reduction[{index}]"
    if not isinstance(doc, dict) or "type" not in doc:
        raise ValidationError(where, "rule must be an object with a 'type' field")
    kind = doc["type"]
    if kind == "suppress":
        names = doc.get("attributes")
        if not isinstance(names, list) or not all(isinstance(n, str) and n for n in names):
            raise ValidationError(where, "'attributes' must be a list of attribute names")
        return SuppressRule(tuple(names))
    if kind in ("allow", "deny"):
        attr = doc.get("attribute")
        values = doc.get("values")
        if not isinstance(attr, str) or not attr:
            raise ValidationError(where, "'attribute' must be a non-empty string")
        if not isinstance(values, list):
            raise ValidationError(where, "'values' must be a list")
        vals = frozenset(_check_scalar(v, f"{where}.values") for v in values)
        return AllowFilterRule(attr, vals) if kind == "allow" else DenyFilterRule(attr, vals)
    if kind == "range":
        attr = doc.get("attribute")
        if not isinstance(attr, str) or not attr:
            raise ValidationError(where, "'attribute' must be a non-empty string")
        lo, hi = doc.get("min"), doc.get("max")
        for name, bound in (("min", lo), ("max", hi)):
            if isinstance(bound, bool) or not isinstance(bound, (int, float)):
                raise ValidationError(f"{where}.{name}", "must be a number")
            if not math.isfinite(bound):
                raise ValidationError(f"{where}.{name}", "must be finite")
        if lo > hi:
            raise ValidationError(where, f"min {lo} exceeds max {hi}")
        return RangeFilterRule(attr, lo, hi)
    if kind == "conditional":
        match_attr = doc.get("match_attribute")
        target = doc.get("target_attribute")
        if not isinstance(match_attr, str) or not match_attr:
            raise ValidationError(where, "'match_attribute' must be a non-empty string")
        if not isinstance(target, str) or not target:
            raise ValidationError(where, "'target_attribute' must be a non-empty string")
        if "value" not in doc:
            raise ValidationError(where, "missing 'value'")
        new_value = _check_scalar(doc["value"], f"{where}.value")
        has_equals = "equals" in doc
        has_range = "min" in doc or "max" in doc
        if has_equals == has_range:
            raise ValidationError(where, "exactly one of 'equals' or 'min'/'max' is required")
        if has_equals:
            if not isinstance(doc["equals"], str):
                raise ValidationError(f"{where}.equals", "must be a string")
            return ConditionalChangeRule(match_attr, target, new_value, equals=doc["equals"])
        lo, hi = doc.get("min"), doc.get("max")
        for name, bound in (("min", lo), ("max", hi)):
            if isinstance(bound, bool) or not isinstance(bound, (int, float)):
                raise ValidationError(f"{where}.{name}", "must be a number")
        if lo > hi:
            raise ValidationError(where, f"min {lo} exceeds max {hi}")
        return ConditionalChangeRule(match_attr, target, new_value, min=lo, max=hi)
    raise ValidationError(where, f"unknown rule type {kind!r}")


def load_config(text: str) -> tuple[AnonConfig, ReductionConfig]:
    """Parse and validate the combined configuration document.

    Raises ParseError on malformed JSON and ValidationError on any invariant
    violation, naming the field at fault.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed configuration document: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("configuration document must be a JSON object")
    anon_doc = doc.get("anonymization")
    if not isinstance(anon_doc, dict):
        raise ValidationError("anonymization", "missing or not an object")
    for key in ("k", "delta", "beta", "mu"):
        v = anon_doc.get(key)
        if isinstance(v, bool) or not isinstance(v, int):
            raise ValidationError(key, "must be an integer")
    qis = anon_doc.get("quasi_identifiers")
    if not isinstance(qis, list) or not all(isinstance(q, str) and q for q in qis):
        raise ValidationError("quasi_identifiers", "must be a list of attribute names")
    sensitive = anon_doc.get("sensitive_attribute")
    if not isinstance(sensitive, str) or not sensitive:
        raise ValidationError("sensitive_attribute", "must be a non-empty string")
    identifier = anon_doc.get("identifier_attribute")
    if identifier is not None and (not isinstance(identifier, str) or not identifier):
        raise ValidationError("identifier_attribute", "must be a non-empty string when present")
    non_cat = anon_doc.get("non_categorized_attributes", [])
    if not isinstance(non_cat, list) or not all(isinstance(a, str) and a for a in non_cat):
        raise ValidationError("non_categorized_attributes", "must be a list of attribute names")

    anon = validate_anon_config(
        AnonConfig(
            k=anon_doc["k"],
            delta=anon_doc["delta"],
            beta=anon_doc["beta"],
            mu=anon_doc["mu"],
            quasi_identifiers=tuple(qis),
            sensitive_attribute=sensitive,
            identifier_attribute=identifier,
            non_categorized_attributes=tuple(non_cat),
        )
    )

    rules_doc = doc.get("reduction", [])
    if not isinstance(rules_doc, list):
        raise ValidationError("reduction", "must be a list of rules")
    rules = tuple(_parse_rule(rule, i) for i, rule in enumerate(rules_doc))
    return anon, ReductionConfig(rules)


def _rule_to_document(rule: ReductionRule) -> dict[str, Any]:
    if isinstance(rule, SuppressRule):
        return {"type": "suppress", "attributes": list(rule.attribute_names)}
    if isinstance(rule, AllowFilterRule):
        return {"type": "allow", "attribute": rule.attribute,
                "values": sorted(rule.allowed_values, key=repr)}
    if isinstance(rule, DenyFilterRule):
        return {"type": "deny", "attribute": rule.attribute,
                "values": sorted(rule.denied_values, key=repr)}
    if isinstance(rule, RangeFilterRule):
        return {"type": "range", "attribute": rule.attribute, "min": rule.min, "max": rule.max}
    doc: dict[str, Any] = {
        "type": "conditional",
        "match_attribute": rule.match_attribute,
        "target_attribute": rule.target_attribute,
        "value": rule.new_value,
    }
    if rule.equals is not None:
        doc["equals"] = rule.equals
    else:
        doc["min"] = rule.min
        doc["max"] = rule.max
    return doc


def to_document(anon: AnonConfig, red: ReductionConfig) -> dict[str, Any]:
    """Serialize a config pair back to the document shape load_config accepts."""
    anon_doc: dict[str, Any] = {
        "k": anon.k,
        "delta": anon.delta,
        "beta": anon.beta,
        "mu": anon.mu,
        "quasi_identifiers": list(anon.quasi_identifiers),
        "sensitive_attribute": anon.sensitive_attribute,
        "non_categorized_attributes": list(anon.non_categorized_attributes),
    }
    if anon.identifier_attribute is not None:
        anon_doc["identifier_attribute"] = anon.identifier_attribute
    return {"anonymization": anon_doc, "reduction": [_rule_to_document(r) for r in red.rules]}


# ---------------------------------------------------------------------------
# Ingress parsing
# ---------------------------------------------------------------------------


def parse_message(line: str, seq: int, now_ns: int) -> Message:
    """Parse one newline-delimited ingress record into a Message.

    The record must be a flat JSON object mapping non-empty attribute names
    to finite numbers or strings. Raises ParseError otherwise; callers drop
    the record and keep the stream going.
    """
    stripped = line.strip()
    if not stripped:
        raise ParseError("empty record")
    try:
        doc = json.loads(stripped)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed record: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("record must be a JSON object")
    attributes: dict[str, AttributeValue] = {}
    for name, value in doc.items():
        if not name:
            raise ParseError("attribute names must be non-empty")
        if isinstance(value, bool) or not isinstance(value, (int, float, str)):
            raise ParseError(f"attribute {name!r}: values must be numbers or strings")
        if isinstance(value, float) and not math.isfinite(value):
            raise ParseError(f"attribute {name!r}: non-finite number")
        attributes[name] = value
    return Message(seq=seq, arrival_ns=now_ns, attributes=attributes)
