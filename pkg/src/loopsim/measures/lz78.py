"""LZ78 dictionary parsing with explicit bit accounting.

Coding convention (binary symbols): the i-th emitted phrase, counting from 1,
spends ceil(log2 i) bits on its prefix index (the first phrase spends none)
plus one bit for its fresh symbol. A trailing phrase that ends mid-dictionary
("incomplete tail") carries no fresh symbol and spends index bits only. The
parse is lossless: decoding reproduces the input exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..meanings import Meaning

# Marker for an incomplete tail phrase.
NO_SYMBOL = None


@dataclass(frozen=True)
class Lz78Parse:
    """Ordered (prefix-index, next-symbol) phrases plus their total coded size."""

    phrases: tuple[tuple[int, str | None], ...]
    coded_bits: int


def index_bits(phrase_number: int) -> int:
    """Bits spent on the prefix index of the phrase_number-th phrase (1-based)."""
    if phrase_number < 1:
        raise ValueError("phrase numbers start at 1")
    return (phrase_number - 1).bit_length()


def lz78_parse(m: Meaning | str) -> Lz78Parse:
    text = m.symbols if isinstance(m, Meaning) else m
    dictionary: dict[str, int] = {"": 0}
    phrases: list[tuple[int, str | None]] = []
    w = ""
    for ch in text:
        wc = w + ch
        if wc in dictionary:
            w = wc
            continue
        phrases.append((dictionary[w], ch))
        dictionary[wc] = len(dictionary)
        w = ""
    if w:
        phrases.append((dictionary[w], NO_SYMBOL))

    bits = 0
    for number, (_, symbol) in enumerate(phrases, start=1):
        bits += index_bits(number)
        if symbol is not None:
            bits += 1
    return Lz78Parse(tuple(phrases), bits)


def lz78_decode(parse: Lz78Parse) -> Meaning:
    table = [""]
    out: list[str] = []
    for prefix_index, symbol in parse.phrases:
        piece = table[prefix_index] + (symbol or "")
        out.append(piece)
        if symbol is not None:
            table.append(piece)
    return Meaning("".join(out))
