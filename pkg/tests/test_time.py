from decimal import Decimal

import pytest

from tracekit.utils.time import ns_to_seconds, ps_to_ns, str_to_ns, us_to_ns


def test_us_to_ns():
    assert us_to_ns(1000) == 1_000_000
    assert us_to_ns("0.5") == 500
    assert us_to_ns(Decimal("1234.567")) == 1_234_567
    assert us_to_ns(0.1) == 100


def test_ps_to_ns_rounds_half_up():
    assert ps_to_ns(2_000_000) == 2000
    assert ps_to_ns(1_499) == 1
    assert ps_to_ns(1_500) == 2
    assert ps_to_ns(Decimal("2500.0")) == 3


def test_ns_to_seconds():
    assert ns_to_seconds(1_500_000_000) == 1.5


def test_str_to_ns():
    assert str_to_ns("500ns") == 500
    assert str_to_ns("5us") == 5_000
    assert str_to_ns("1.5ms") == 1_500_000
    assert str_to_ns("2s") == 2_000_000_000


def test_str_to_ns_rejects_unknown_unit():
    with pytest.raises(ValueError):
        str_to_ns("3 minutes")
