from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from mtree.scalar import ScalarMode, format_scalar

EXACT = ScalarMode(True)
FLOAT = ScalarMode(False, 1e-9)


@pytest.mark.parametrize(
    "value, text",
    [(Fraction(3), "3"), (Fraction(1, 2), "0.5"), (Fraction(-3, 8), "-0.375"),
     (Fraction(1, 3), "1/3"), (Fraction(-7, 6), "-7/6"), (Fraction(1, 20), "0.05")],
)
def test_exact_format(value, text):
    assert format_scalar(value) == text
    assert EXACT.parse(text) == value


@given(st.fractions())
def test_exact_text_round_trip(x):
    assert EXACT.parse(format_scalar(x)) == x


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_text_round_trip(x):
    assert FLOAT.parse(format_scalar(x)) == x


def test_decimal_read_exactly():
    assert EXACT.parse("0.1") == Fraction(1, 10)
    assert EXACT.parse("1e-3") == Fraction(1, 1000)


def test_bad_literals():
    for text in ["", "abc", "1/0", "nan?"]:
        with pytest.raises(ValueError):
            EXACT.parse(text)


def test_tolerance_semantics():
    assert FLOAT.eq(1.0, 1.0 + 5e-10)
    assert not FLOAT.eq(1.0, 1.0 + 2e-9)
    assert not FLOAT.lt(1.0, 1.0 + 5e-10)
    assert EXACT.eps == 0 and FLOAT.eps == 1e-9
    with pytest.raises(ValueError):
        ScalarMode(False, -1.0)
    with pytest.raises(ValueError):
        ScalarMode.from_name("decimal")
