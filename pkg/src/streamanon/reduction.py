"""Information-reduction rules: suppression, filters, conditional changes.

Rules run in declared order; the first filter that rejects a message
short-circuits the pipeline. All numeric comparisons use closed intervals,
and filters never compare across value kinds (a string never equals a
number).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .model import (
    AllowFilterRule,
    AttributeValue,
    ConditionalChangeRule,
    DenyFilterRule,
    Message,
    RangeFilterRule,
    ReductionConfig,
    SuppressRule,
)


class DropKind(Enum):
    FILTER = "filter"
    TYPE_MISMATCH = "type"


@dataclass(frozen=True)
class Drop:
    """The message was rejected by the rule at ``rule_index``."""

    rule_index: int
    kind: DropKind = DropKind.FILTER


def _values_equal(a: AttributeValue, b: AttributeValue) -> bool:
    # no cross-type equality: strings only match strings, numbers numbers
    a_num = isinstance(a, (int, float))
    b_num = isinstance(b, (int, float))
    if a_num != b_num:
        return False
    return a == b


def suppress(msg: Message, names: tuple[str, ...]) -> Message:
    """Remove the named attributes; absent names are a no-op."""
    if not any(n in msg.attributes for n in names):
        return msg
    return msg.with_attributes(
        {k: v for k, v in msg.attributes.items() if k not in names}
    )


def allow_deny_filter(msg: Message, rule: AllowFilterRule | DenyFilterRule) -> bool:
    """Return True when the message passes the filter.

    A message lacking the attribute passes a deny filter but fails an allow
    filter: an allow-list is a positive assertion the message cannot satisfy
    when the field is absent.
    """
    value = msg.attributes.get(rule.attribute)
    if isinstance(rule, DenyFilterRule):
        if value is None and rule.attribute not in msg.attributes:
            return True
        return not any(_values_equal(value, v) for v in rule.denied_values)
    if rule.attribute not in msg.attributes:
        return False
    return any(_values_equal(value, v) for v in rule.allowed_values)


def range_filter(msg: Message, rule: RangeFilterRule) -> bool | DropKind:
    """Return True to pass, or the drop kind when the message is rejected.

    Passes iff the attribute is present, numeric, and within the closed
    interval [min, max]. A present but non-numeric value is a type-mismatch
    drop; an absent attribute is a plain filter drop.
    """
    if rule.attribute not in msg.attributes:
        return DropKind.FILTER
    value = msg.attributes[rule.attribute]
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        return DropKind.TYPE_MISMATCH
    return True if rule.min <= value <= rule.max else DropKind.FILTER


def conditional_change(msg: Message, rule: ConditionalChangeRule) -> Message:
    """Set/overwrite the target attribute when the match condition holds.

    String conditions require exact equality; numeric conditions use the
    closed interval [min, max]. Never drops.
    """
    if rule.match_attribute not in msg.attributes:
        return msg
    value = msg.attributes[rule.match_attribute]
    if rule.equals is not None:
        matched = isinstance(value, str) and value == rule.equals
    else:
        matched = (
            isinstance(value, (int, float))
            and not isinstance(value, bool)
            and rule.min <= value <= rule.max  # type: ignore[operator]
        )
    if not matched:
        return msg
    attributes = dict(msg.attributes)
    attributes[rule.target_attribute] = rule.new_value
    return msg.with_attributes(attributes)


def apply_pipeline(msg: Message, cfg: ReductionConfig) -> Message | Drop:
    """Apply the rule list in order; returns the surviving message or a Drop."""
    for index, rule in enumerate(cfg.rules):
        if isinstance(rule, SuppressRule):
            msg = suppress(msg, rule.attribute_names)
        elif isinstance(rule, (AllowFilterRule, DenyFilterRule)):
            if not allow_deny_filter(msg, rule):
                return Drop(index)
        elif isinstance(rule, RangeFilterRule):
            outcome = range_filter(msg, rule)
            if outcome is not True:
                return Drop(index, outcome)
        else:
            msg = conditional_change(msg, rule)
    return msg
