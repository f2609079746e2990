"""LZ78 parsing: frozen hand-parses, lossless round trips, oracle agreement."""

import numpy as np

from loopsim.meanings import Meaning
from loopsim.measures import index_bits, lz78_decode, lz78_parse


def reference_parse(text):
    """Independent transcription used as an oracle: returns (phrases, bits).

    Deliberately structured differently from the library implementation: the
    dictionary is a list searched by value, and bits are totalled by a
    separate closed-form pass.
    """
    entries = [""]
    phrases = []
    w = ""
    for ch in text:
        if (w + ch) in entries:
            w = w + ch
            continue
        phrases.append((entries.index(w), ch))
        entries.append(w + ch)
        w = ""
    if w:
        phrases.append((entries.index(w), None))
    bits = 0
    for number, (_, symbol) in enumerate(phrases, start=1):
        if number > 1:
            bits += (number - 1).bit_length()
        if symbol is not None:
            bits += 1
    return phrases, bits


def random_binary(rng, max_len):
    n = int(rng.integers(0, max_len + 1))
    return "".join("1" if b else "0" for b in rng.integers(0, 2, size=n))


class TestBitAccounting:
    def test_empty_string_costs_nothing(self):
        parse = lz78_parse("")
        assert parse.phrases == ()
        assert parse.coded_bits == 0

    def test_single_symbol(self):
        parse = lz78_parse("0")
        assert parse.phrases == ((0, "0"),)
        assert parse.coded_bits == 1

    def test_run_of_32_zeros(self):
        # Hand parse: "0", "00", ..., "0000000" complete, then tail "0000".
        parse = lz78_parse("0" * 32)
        complete = [p for p in parse.phrases if p[1] is not None]
        assert len(complete) == 7
        assert parse.phrases[-1] == (4, None)
        assert parse.coded_bits == 24

    def test_index_bits_are_ceil_log2(self):
        assert [index_bits(i) for i in range(1, 9)] == [0, 1, 2, 2, 3, 3, 3, 3]

    def test_prefix_indices_stay_in_range(self):
        parse = lz78_parse("110100100011010")
        for i, (prefix, _) in enumerate(parse.phrases):
            assert 0 <= prefix <= i


class TestRoundTrip:
    def test_known_string(self):
        m = Meaning("ABABABABA")
        assert lz78_decode(lz78_parse(m)).symbols == m.symbols

    def test_random_strings_round_trip(self):
        rng = np.random.default_rng(7)
        for _ in range(10_000):
            text = random_binary(rng, 512)
            parse = lz78_parse(text)
            assert lz78_decode(parse).symbols == text

    def test_agrees_with_reference_parser(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            text = random_binary(rng, 200)
            parse = lz78_parse(text)
            ref_phrases, ref_bits = reference_parse(text)
            assert list(parse.phrases) == ref_phrases
            assert parse.coded_bits == ref_bits
