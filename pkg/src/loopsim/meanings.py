"""Symbol sequences and the distance used by the measure audits."""

from __future__ import annotations

from dataclasses import dataclass

BINARY_ALPHABET = "01"


@dataclass(frozen=True)
class Meaning:
    """A finite symbol sequence emitted by a channel.

    The optional ``tag`` identifies the producing agent; it is only consulted
    by the declared-bonus measure.
    """

    symbols: str = ""
    tag: str | None = None

    def __len__(self) -> int:
        return len(self.symbols)

    @property
    def is_empty(self) -> bool:
        return not self.symbols


EMPTY = Meaning("")


def concat(*meanings: Meaning) -> Meaning:
    """Concatenate symbol sequences. Tags do not survive concatenation."""
    return Meaning("".join(m.symbols for m in meanings))


def edit_distance(a: str, b: str) -> int:
    """Length difference plus symbol mismatches over the shared prefix.

    Coincides with the Hamming distance on equal-length strings; this is the
    metric the Lipschitz audit uses.
    """
    if len(a) > len(b):
        a, b = b, a
    mismatches = sum(x != y for x, y in zip(a, b))
    return (len(b) - len(a)) + mismatches
