"""Maps non-numerical quasi-identifier values to stable numeric category IDs.

IDs are assigned densely from 0 in first-seen order, independently per
attribute. The mapping is bijective per attribute and lives in memory for
the duration of one stream.
"""

from __future__ import annotations

from .errors import TypeMismatchError, UnknownCategoryError
from .model import Message

#: Guard against misconfigured high-cardinality fields blowing up memory.
DEFAULT_MAX_CARDINALITY = 100_000


class CategoryDictionary:
    """Per-attribute bijection between text values and category IDs."""

    def __init__(self, max_cardinality: int = DEFAULT_MAX_CARDINALITY):
        self.max_cardinality = max_cardinality
        self._forward: dict[str, dict[str, int]] = {}
        self._reverse: dict[str, dict[int, str]] = {}

    def assign(self, attr: str, value: str) -> int:
        """Return the ID for ``value``, allocating a new one on first sight."""
        table = self._forward.setdefault(attr, {})
        existing = table.get(value)
        if existing is not None:
            return existing
        if len(table) >= self.max_cardinality:
            raise TypeMismatchError(
                f"attribute {attr!r} exceeded {self.max_cardinality} distinct values; "
                "likely misconfigured as categorical"
            )
        category_id = len(table)
        table[value] = category_id
        self._reverse.setdefault(attr, {})[category_id] = value
        return category_id

    def decode(self, attr: str, category_id: int) -> str:
        """Inverse lookup; raises UnknownCategoryError for unassigned IDs."""
        try:
            return self._reverse[attr][category_id]
        except KeyError:
            raise UnknownCategoryError(
                f"no category {category_id} assigned for attribute {attr!r}"
            ) from None

    def size(self, attr: str) -> int:
        return len(self._forward.get(attr, {}))

    def dump(self) -> list[tuple[str, int, str]]:
        """All assignments as (attribute, id, value) rows, in assignment order."""
        rows = []
        for attr in self._forward:
            for value, category_id in self._forward[attr].items():
                rows.append((attr, category_id, value))
        return rows


def encode(msg: Message, dictionary: CategoryDictionary, attrs: tuple[str, ...]) -> Message:
    """Replace each named attribute's text value with its category ID.

    The dictionary is updated in place; attributes not named, or named but
    absent, are untouched. A named attribute holding a number is a
    configuration error and aborts the stream.
    """
    if not attrs:
        return msg
    touched = False
    attributes = dict(msg.attributes)
    for attr in attrs:
        if attr not in attributes:
            continue
        value = attributes[attr]
        if not isinstance(value, str):
            raise TypeMismatchError(
                f"attribute {attr!r} is configured for categorization but holds "
                f"a number ({value!r}); check non_categorized_attributes"
            )
        attributes[attr] = dictionary.assign(attr, value)
        touched = True
    return msg.with_attributes(attributes) if touched else msg
