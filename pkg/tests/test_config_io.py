import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrlab.bounds import BoundCurve, new_bound_1d
from lrlab.config import format_config, parse_config, preset_text, required_keys
from lrlab.constants import HBAR
from lrlab.dynamics import TimeSeries
from lrlab.errors import ConfigError
from lrlab.io import emit_csv, emit_svg, finite_or_none, read_csv

MINIMAL = """
[system]
extent = 6
spin = 1/2
J = 1.0

[time]
stop = 5
count = 11
"""


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.system.spins == (0.5,)
    assert cfg.target == 5 and cfg.observe_site == 5
    assert cfg.thermal.temperature == 0.5 and cfg.thermal.beta is None
    assert cfg.tip.m_tip == (0.0, 0.0, 1.0)
    assert cfg.bounds.threshold == 0.05 and cfg.dynamics.epsilon == 0.01
    for key in ("thermal.temperature_K", "tip.m_tip", "bounds.threshold", "dynamics.epsilon"):
        assert key in cfg.defaults_applied
    assert np.array_equal(cfg.time.grid(), np.linspace(0, 5, 11))


def test_empty_config_lists_required_keys():
    with pytest.raises(ConfigError) as info:
        parse_config("")
    msg = "\n".join(info.value.errors)
    for key in required_keys():
        assert key in msg
    assert set(required_keys()) == {"system.extent", "system.spin", "system.J", "time.stop", "time.count"}


@pytest.mark.parametrize(
    "extra,needle",
    [
        ("[bounds]\nunknown = 1\n", "unknown key bounds.unknown"),
        ("[nonsense]\nx = 1\n", "unknown section"),
        ("[bounds]\nkinds = new_B_1d, wrong\n", "unknown bound kind"),
        ("[tip]\nm_tip = 1, 1, 0\n", "unit vector"),
        ("[bounds]\ntarget = 99\n", "outside lattice"),
        ("[thermal]\ntemperature_K = 1\nbeta = 2\n", "not both"),
        ("[dynamics]\nmethod = guess\n", "method"),
    ],
)
def test_strictness(extra, needle):
    with pytest.raises(ConfigError) as info:
        parse_config(MINIMAL + extra)
    assert any(needle in e for e in info.value.errors), info.value.errors


def test_unknown_key_in_required_section():
    with pytest.raises(ConfigError, match="system.bogus"):
        parse_config(MINIMAL.replace("J = 1.0", "J = 1.0\nbogus = 1"))


def test_all_errors_reported_together():
    text = MINIMAL.replace("spin = 1/2", "spin = 1/3").replace("count = 11", "count = many") + "[bounds]\nfoo = 1\n"
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert len(info.value.errors) == 3


def test_syntax_error_has_line_number():
    with pytest.raises(ConfigError) as info:
        parse_config("[system]\nextent = 4\nthis line is wrong\n")
    assert "line 3" in info.value.errors[0]


def test_beta_without_temperature():
    cfg = parse_config(MINIMAL + "[thermal]\nbeta = 4.0\n")
    assert cfg.thermal.beta == 4.0 and cfg.thermal.temperature is None


@pytest.mark.parametrize("name", ["fig2", "fig3", "fig3_fast"])
def test_presets_parse_and_round_trip(name):
    cfg = parse_config(preset_text(name))
    again = parse_config(format_config(cfg))
    assert again == cfg
    assert format_config(again) == format_config(cfg)


def test_preset_contents():
    fig2 = parse_config(preset_text("fig2"))
    assert fig2.system.extent == (100,) and fig2.system.spins == (0.5, 1.0, 1.5)
    fig3 = parse_config(preset_text("fig3"))
    assert fig3.system.spins == (1.0,) and fig3.system.K == 2.0
    assert fig3.tip.norms == (0.5, 1.0, 2.0, 4.0)
    assert fig3.exact_norms == (1.0, 2.0, 4.0)


@settings(max_examples=30, deadline=None)
@given(
    n=st.integers(2, 30),
    spins=st.lists(st.sampled_from(["1/2", "1", "3/2", "2"]), min_size=1, max_size=3),
    J=st.floats(-5, 5, allow_nan=False),
    stop=st.floats(0.1, 100),
    count=st.integers(2, 5000),
    xi=st.one_of(st.none(), st.floats(0.01, 10)),
    clamp=st.booleans(),
)
def test_round_trip_property(n, spins, J, stop, count, xi, clamp):
    text = (
        f"[system]\nextent = {n}\nspin = {', '.join(spins)}\nJ = {J!r}\n"
        f"[time]\nstop = {stop!r}\ncount = {count}\n"
        f"[bounds]\nclamp = {str(clamp).lower()}\n" + (f"xi = {xi!r}\n" if xi else "")
    )
    cfg = parse_config(text)
    assert parse_config(format_config(cfg)) == cfg


def _curve():
    ts = np.linspace(0, 2, 21)
    return BoundCurve.sample("new_B_1d", ts, lambda t: new_bound_1d(t, 3, 1.0, 0.5), 0.5, {"distance": 3, "s": 0.5})


def test_csv_round_trip_bit_exact(tmp_path):
    curve = _curve()
    path = emit_csv(curve, tmp_path / "c.csv")
    meta, t, v = read_csv(path)
    assert np.array_equal(t, curve.times) and np.array_equal(v, curve.values)
    assert float(meta["hbar_meV_ps"]) == HBAR
    assert meta["kind"] == "new_B_1d" and meta["distance"] == "3"
    raw = path.read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")


def test_csv_deterministic(tmp_path):
    a = emit_csv(_curve(), tmp_path / "a.csv").read_bytes()
    b = emit_csv(_curve(), tmp_path / "b.csv").read_bytes()
    assert a == b


def test_csv_zero_series(tmp_path):
    series = TimeSeries([0.0, 0.5, 1.0], [0.0, 0.0, 0.0], "Sz", {"beta": math.inf})
    text = emit_csv(series, tmp_path / "z.csv").read_text()
    rows = [line for line in text.splitlines() if not line.startswith("#")]
    assert rows == ["t_ps,value", "0,0", "0.5,0", "1,0"]
    assert "# beta=inf" in text


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=30))
def test_csv_round_trip_property(values):
    import tempfile
    from pathlib import Path

    series = TimeSeries(np.arange(len(values), dtype=float), values)
    with tempfile.TemporaryDirectory() as d:
        _, _, v = read_csv(emit_csv(series, Path(d) / "s.csv"))
    assert np.array_equal(v, np.asarray(values))


def test_csv_unwritable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="cannot write"):
        emit_csv(_curve(), blocker / "sub" / "c.csv")


def test_svg(tmp_path):
    c = _curve()
    path = emit_svg([("a", c.times, c.values), ("b", c.times, c.values / 2)], tmp_path / "p.svg", "t", log_y=True)
    text = path.read_text()
    assert text.startswith("<svg") and text.count("<polyline") == 2


def test_finite_or_none():
    assert finite_or_none(math.inf) is None and finite_or_none(None) is None
    assert finite_or_none(np.float64(2.0)) == 2.0
