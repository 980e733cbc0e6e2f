import datetime as dt
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from volsent.errors import DegenerateSplit, DuplicateDate, EmptyFile, EmptyIntersection, MalformedRow, NonPositivePrice
from volsent.marketdata import (
    PriceSeries,
    SentimentSeries,
    SplitSpec,
    VolatilitySeries,
    align_calendars,
    chronological_split,
    load_prices,
    squared_log_returns,
)

D = dt.date


def days(n, start=D(2014, 12, 1)):
    return [start + dt.timedelta(days=i) for i in range(n)]


def write(tmp_path, text):
    p = tmp_path / "prices.csv"
    p.write_text(text, encoding="utf-8")
    return p


def test_load_two_rows(tmp_path):
    p = load_prices(write(tmp_path, "date,close\n2014-12-03,100.0\n2014-12-04,101.0\n"))
    assert len(p) == 2
    assert p.dates == (D(2014, 12, 3), D(2014, 12, 4))
    assert list(p.closes) == [100.0, 101.0]


def test_load_sorts_rows(tmp_path):
    p = load_prices(write(tmp_path, "date,close\n2014-12-04,101.0\n2014-12-03,100.0\n"))
    assert p.dates == (D(2014, 12, 3), D(2014, 12, 4))
    assert list(p.closes) == [100.0, 101.0]


@pytest.mark.parametrize("text, exc", [
    ("date,close\n2014-12-03,100\n2014-12-04,-5.0\n", NonPositivePrice),
    ("date,close\n2014-12-03,100\n2014-12-03,101\n", DuplicateDate),
    ("", EmptyFile),
    ("date,close\n", EmptyFile),
    ("date,close\n2014-12-03,abc\n", MalformedRow),
    ("date,close\n2014-13-03,100\n", MalformedRow),
    ("date,close\n2014-12-03,100,7\n", MalformedRow),
    ("when,price\n2014-12-03,100\n", MalformedRow),
])
def test_load_errors(tmp_path, text, exc):
    with pytest.raises(exc):
        load_prices(write(tmp_path, text))


def test_malformed_row_reports_line(tmp_path):
    with pytest.raises(MalformedRow) as info:
        load_prices(write(tmp_path, "date,close\n2014-12-03,100\n2014-12-04,x\n"))
    assert info.value.line == 3


def test_squared_log_returns_examples():
    v = squared_log_returns(PriceSeries(days(2), [100.0, 100.0]))
    assert list(v.values) == [0.0]

    expected = float(mpmath.log(mpmath.mpf(110) / 100) ** 2)
    v = squared_log_returns(PriceSeries(days(2), [100.0, 110.0]))
    assert v.values[0] == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(9.08403e-3, rel=1e-5)

    v = squared_log_returns(PriceSeries(days(3), [100.0, 110.0, 100.0]))
    assert v.values == pytest.approx([expected, expected], rel=1e-12)
    assert v.dates == tuple(days(3)[1:])


closes = st.lists(st.floats(min_value=1e-3, max_value=1e6), min_size=2, max_size=60)


@given(closes)
def test_proxy_nonnegative_and_shorter(cs):
    v = squared_log_returns(PriceSeries(days(len(cs)), cs))
    assert len(v) == len(cs) - 1
    assert np.all(v.values >= 0)


@given(closes, st.floats(min_value=1e-3, max_value=1e3))
def test_proxy_scale_invariant(cs, k):
    a = squared_log_returns(PriceSeries(days(len(cs)), cs)).values
    b = squared_log_returns(PriceSeries(days(len(cs)), np.array(cs) * k)).values
    np.testing.assert_allclose(a, b, rtol=1e-6, atol=1e-12)


def vol(n, start=D(2014, 12, 1)):
    return VolatilitySeries(days(n, start), np.arange(n, dtype=float))


def test_split_fraction():
    train, test = chronological_split(vol(10), SplitSpec(train_fraction=0.8))
    assert (len(train), len(test)) == (8, 2)


def test_split_boundary_date_sp500_calendar():
    # business days around the boundary used for the S&P 500 sample
    dates = [d.astype(object) for d in np.busday_offset(np.datetime64("2014-11-20"), np.arange(20), roll="forward")]
    v = VolatilitySeries(dates, np.ones(20))
    train, test = chronological_split(v, SplitSpec(boundary_date=D(2014, 12, 2)))
    assert train.dates[-1] == D(2014, 12, 2)
    assert test.dates[0] == D(2014, 12, 3)


def test_split_degenerate():
    with pytest.raises(DegenerateSplit):
        chronological_split(vol(10), SplitSpec(train_fraction=1.0))
    with pytest.raises(DegenerateSplit):
        chronological_split(vol(10), SplitSpec(boundary_date=D(2000, 1, 1)))


def test_split_spec_needs_exactly_one_form():
    with pytest.raises(ValueError):
        SplitSpec()
    with pytest.raises(ValueError):
        SplitSpec(boundary_date=D(2014, 1, 1), train_fraction=0.5)


@given(st.integers(2, 80), st.floats(0.01, 0.99))
def test_split_is_partition(n, frac):
    v = vol(n)
    try:
        train, test = chronological_split(v, SplitSpec(train_fraction=frac))
    except DegenerateSplit:
        return
    assert train.dates + test.dates == v.dates
    assert np.array_equal(np.concatenate([train.values, test.values]), v.values)
    assert max(train.dates) < min(test.dates)


def sent(dates):
    return SentimentSeries(dates, np.linspace(0, 1, len(dates)))


def test_align_identity():
    v = vol(5)
    s = sent(v.dates)
    v2, s2 = align_calendars(v, s)
    assert v2 == v and s2 == s


def test_align_subset():
    v = vol(5)
    s = sent(v.dates[2:])
    v2, s2 = align_calendars(v, s)
    assert v2.dates == s2.dates == v.dates[2:]
    assert list(v2.values) == [2.0, 3.0, 4.0]


def test_align_disjoint():
    with pytest.raises(EmptyIntersection):
        align_calendars(vol(5), sent(days(3, D(2020, 1, 1))))


@given(st.sets(st.integers(0, 40), min_size=1), st.sets(st.integers(0, 40), min_size=1))
def test_align_idempotent(a, b):
    if not a & b:
        return
    base = D(2015, 1, 1)
    da = [base + dt.timedelta(days=i) for i in sorted(a)]
    db = [base + dt.timedelta(days=i) for i in sorted(b)]
    v = VolatilitySeries(da, np.arange(len(da), dtype=float))
    s = sent(db)
    once = align_calendars(v, s)
    twice = align_calendars(*once)
    assert once[0] == twice[0] and once[1] == twice[1]
    assert set(once[0].dates) == a_dates(a & b, base)


def a_dates(idx, base):
    return {base + dt.timedelta(days=i) for i in idx}
