# Copyright 2026 The vibromix Authors
# SPDX-License-Identifier: Apache-2.0
import math

import pytest

import vibromix


def test_filter_passband_and_stopband():
    f = vibromix.design_bandpass()
    assert f.sections == 4
    assert f.magnitude(vibromix.band_center_hz()) == pytest.approx(1.0, abs=1e-12)
    assert 20 * math.log10(f.magnitude(10.0)) <= -20.0
    assert f.magnitude(80.0) == pytest.approx(math.sqrt(0.5), rel=1e-8)


def test_filter_carries_state_between_calls():
    x = [math.sin(0.3 * k) for k in range(500)]
    whole = vibromix.design_bandpass().process(x)
    parts = vibromix.design_bandpass()
    assert parts.process(x[:123]) + parts.process(x[123:]) == whole


def test_bad_design_raises():
    with pytest.raises(vibromix.DesignError):
        vibromix.design_bandpass(low_cut=80.0, high_cut=5000.0)
    assert issubclass(vibromix.DesignError, vibromix.Error)


def test_energy_of_unit_sine_is_half_duration():
    n = 16000
    x = [math.sin(2 * math.pi * 250 * k / 8000) for k in range(n)]
    zeros = [0.0] * n
    e = vibromix.ase((x, zeros, zeros))
    assert e[0] == pytest.approx(1.0, rel=1e-3)
    assert vibromix.e_ratio((x, zeros, zeros), (x, zeros, zeros)) == pytest.approx(1.0)


def test_lag_recovery():
    import random

    rng = random.Random(3)
    a = [rng.gauss(0, 1) for _ in range(4000)]
    b = [0.0] * 37 + a[:-37]
    lag = vibromix.xcorr_lag(a, b, max_lag_s=0.1)
    assert abs(lag) == 37
    assert vibromix.aligned_r(a, b, lag) == pytest.approx(1.0, abs=1e-12)


def test_gate_and_zcr():
    x = [math.sin(2 * math.pi * 100 * k / 8000 + 0.1) for k in range(8000)]
    assert vibromix.zcr(x) == pytest.approx(200, abs=1)
    assert vibromix.gate([0.05, -0.2, 0.3], 0.1) == [0.0, -0.2, 0.3]
    assert vibromix.rms([-0.5] * 100) == pytest.approx(0.5)


def test_scenario_render_is_deterministic():
    script = vibromix.demo_script(4)
    a = vibromix.render_scenario(script)
    assert set(a) == {"left", "right"}
    assert a == vibromix.render_scenario(script)
    assert len(a["left"][0]) == round(script["duration"] * script.get("rate", 8000))


def test_pipeline_run_and_controls():
    p = vibromix.Pipeline.from_script(vibromix.demo_script(1))
    assert p.latency["total_s"] == pytest.approx(0.008 + 6.91543714 / 8000, abs=1e-9)
    ack = p.update_param({"op": "set_gain", "channel": "left", "value": 15})
    assert ack["type"] == "ack" and ack["clamped"] and ack["value"] == 10.0
    summary = p.run(max_samples=8000)
    assert summary["samples"] == 8000
    assert summary["deadline_misses"] == 0
    assert set(summary["output"]) == {"left", "right"}
    assert summary["params"][0]["op"] == "set_gain"
    with pytest.raises(vibromix.SchemaError):
        p.update_param({"op": "explode"})


def test_protocol_schema_lists_operations():
    schema = vibromix.control_protocol_schema()
    assert "set_gain" in str(schema)
