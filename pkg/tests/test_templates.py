import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emuinertia import FreqTemplate, eval_deviation, eval_rocof, fit_template
from emuinertia.templates import deviation_limit, read_trace_csv


def test_rocof_values(fig2):
    assert eval_rocof(fig2, 2.5) == 0.0
    tpl = FreqTemplate((0.7, 2.0, -1.0), 3.0)
    assert eval_rocof(tpl, 0.0) == 0.7
    assert eval_rocof(FreqTemplate.linear(1.0, 1.0), 1.0) == pytest.approx(0.3678794412, abs=1e-10)


def test_negative_time_rejected(fig2):
    with pytest.raises(ValueError):
        eval_rocof(fig2, -0.1)
    with pytest.raises(ValueError):
        eval_deviation(fig2, [0.0, -1.0])


def test_invalid_templates():
    with pytest.raises(ValueError):
        FreqTemplate((1.0,), 0.0)
    with pytest.raises(ValueError):
        FreqTemplate((1.0,), -2.0)
    with pytest.raises(ValueError):
        FreqTemplate((), 1.0)
    with pytest.raises(ValueError):
        FreqTemplate((math.nan,), 1.0)


def test_ramp_deviation_closed_form():
    a, b = 1.7, 0.6
    tpl = FreqTemplate.linear(a, b)
    for t in (0.0, 0.3, 2.0, 15.0):
        ref = (a - a * math.exp(-b * t) - a * b * t * math.exp(-b * t)) / b ** 2
        assert eval_deviation(tpl, t) == pytest.approx(ref, rel=1e-9, abs=1e-300)
    assert eval_deviation(tpl, 0.0) == 0.0


def test_deviation_small_time_keeps_relative_accuracy():
    # dw ~ c2 t^3/3 for P = t^2; the naive recurrence loses every digit here
    tpl = FreqTemplate((0.0, 0.0, 1.0), 2.0)
    t = 1e-5
    series = t ** 3 / 3 - 2.0 * t ** 4 / 4 + 4.0 * t ** 5 / 10
    assert eval_deviation(tpl, t) == pytest.approx(series, rel=1e-12)


def test_fig2_settles_at_minus_half(fig2):
    assert eval_deviation(fig2, 200.0) == pytest.approx(-0.5, abs=1e-12)
    assert deviation_limit(fig2) == pytest.approx(-0.5, abs=1e-15)


def test_fig2_shape(fig2):
    t = np.linspace(0.0, 10.0, 2001)
    r = fig2.rocof(t)
    assert r[0] == 0.0
    assert np.all(r[(t > 0) & (t < 2.5)] < 0)
    assert np.all(r[t > 2.5] > 0)
    # minimum of (t^2 - 2.5t) e^{-t} at t = (4.5 - sqrt(10.25))/2
    tmin = (4.5 - math.sqrt(10.25)) / 2
    assert abs(t[np.argmin(r)] - tmin) < 0.01


@settings(max_examples=40, deadline=None)
@given(coeffs=st.lists(st.floats(-10, 10), min_size=1, max_size=5),
       b=st.floats(0.05, 20), t=st.floats(0.01, 30))
def test_deviation_derivative_is_rocof(coeffs, b, t):
    tpl = FreqTemplate(tuple(coeffs), b)
    h = 1e-5 * max(t, 1.0)
    fd = (tpl.deviation(t + h) - tpl.deviation(t - h)) / (2 * h)
    scale = sum(abs(c) * t ** k for k, c in enumerate(coeffs)) * math.exp(-b * t) + 1e-300
    assert abs(fd - tpl.rocof(t)) <= 1e-5 * scale + 1e-12 * sum(map(abs, coeffs))


@settings(max_examples=30)
@given(coeffs=st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=6), b=st.floats(1e-3, 1e3))
def test_dict_round_trip(coeffs, b):
    tpl = FreqTemplate(tuple(coeffs), b)
    assert FreqTemplate.from_dict(tpl.to_dict()) == tpl


def test_is_ramp():
    assert FreqTemplate.linear(2.0, 1.0).is_ramp
    assert not FreqTemplate((0.1, 2.0), 1.0).is_ramp
    assert not FreqTemplate((0.0, 2.0, 0.0), 1.0).is_ramp


def test_fit_recovers_fig2(fig2):
    t = np.linspace(0.0, 8.0, 50)
    res = fit_template(t, fig2.rocof(t), 2, (0.5, 2.0))
    np.testing.assert_allclose(res.template.coeffs, fig2.coeffs, atol=1e-6)
    assert res.template.b == pytest.approx(1.0, abs=1e-6)
    assert res.residual <= 1e-9


def test_fit_from_deviation_samples(fig2):
    t = np.linspace(0.0, 8.0, 60)
    res = fit_template(t, fig2.deviation(t), 2, (0.5, 2.0), kind='deviation')
    np.testing.assert_allclose(res.template.coeffs, fig2.coeffs, atol=1e-6)
    assert res.kind == 'deviation'


def test_fit_nesting(fig2):
    t = np.linspace(0.0, 8.0, 50)
    y = fig2.rocof(t)
    right = fit_template(t, y, 2, (0.5, 2.0))
    low = fit_template(t, y, 1, (0.5, 2.0))
    assert right.residual <= 1e-8
    assert low.residual > right.residual


def test_fit_degenerate_inputs():
    t = np.linspace(0.0, 1.0, 10)
    res = fit_template(t, np.zeros(10), 2)
    assert res.residual == 0.0 and not any(res.template.coeffs)
    with pytest.raises(ValueError):
        fit_template(t[:3], np.ones(3), 2)
    with pytest.raises(ValueError):
        fit_template(t[::-1], np.ones(10), 1)
    with pytest.raises(ValueError):
        fit_template(t, np.ones(10), 1, (2.0, 1.0))


def test_read_trace_csv(tmp_path, fig2):
    t = np.linspace(0.0, 4.0, 9)
    p = tmp_path / 'tr.csv'
    p.write_text('t,deviation\n' + ''.join(f'{a:.17g},{v:.17g}\n' for a, v in zip(t, fig2.deviation(t))))
    tt, vv, kind = read_trace_csv(p)
    assert kind == 'deviation'
    np.testing.assert_array_equal(tt, t)
    bad = tmp_path / 'bad.csv'
    bad.write_text('t,foo\n0,1\n')
    with pytest.raises(ValueError):
        read_trace_csv(bad)
