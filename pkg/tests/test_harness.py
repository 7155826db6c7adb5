import json
import math
import time

import pytest
from hypothesis import given
from hypothesis import strategies as st

from magneto2d.cli import main
from magneto2d.errors import ConfigError
from magneto2d.fields import FieldKind, FieldModel
from magneto2d.integrator import PhaseState, integrate
from magneto2d.output import render_svg
from magneto2d.presets import (
    FIGURES,
    all_presets,
    collar_preset,
    figure_preset,
    preset,
    scattering_presets,
)
from magneto2d.scenario import (
    EXIT_CONFIG,
    EXIT_HYPOTHESIS,
    EXIT_NUMERICAL,
    EXIT_OK,
    Initial,
    Scenario,
    Task,
    TaskKind,
    Tolerances,
    parse_scenario,
    run,
)

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(q=st.tuples(finite, finite), v=st.tuples(finite, finite), t_max=finite,
       tol=st.floats(min_value=1e-300, max_value=1.0))
def test_scenario_round_trip_is_bit_exact(q, v, t_max, tol):
    sc = Scenario(
        name="rt",
        field=FieldModel(FieldKind.RADIAL, "1"),
        initial=Initial(q=list(q), v=list(v)),
        task=Task(TaskKind.SIMULATE, t_max=t_max),
        tolerances=Tolerances(rel_tol=tol),
    )
    again = parse_scenario(sc.to_json())
    assert again == sc
    for a, b in zip(again.initial.q + again.initial.v, list(q) + list(v)):
        assert math.copysign(1, a) == math.copysign(1, b) and a == b
    assert again.task.t_max.hex() == float(t_max).hex()


@pytest.mark.parametrize("name", sorted(all_presets()))
def test_presets_round_trip(name):
    sc = preset(name)
    assert parse_scenario(sc.to_json()) == sc


def test_parse_error_reports_position():
    with pytest.raises(ConfigError) as info:
        parse_scenario('{\n  "name": "x",\n  "field" {}\n}')
    assert (info.value.line, info.value.column) == (3, 11)


def test_unknown_keys_rejected():
    doc = json.loads(figure_preset("fig1").to_json())
    doc["initial"]["speed"] = 1.0
    with pytest.raises(ConfigError):
        parse_scenario(json.dumps(doc))


def test_unknown_figure():
    with pytest.raises(KeyError):
        figure_preset("fig5")


def test_figure_presets_use_caption_fields():
    assert figure_preset("fig3-limitcircle").field.expr == "exp(-r) - 2/r"
    assert "arcsin(q2)" in figure_preset("fig1").field.expr
    assert figure_preset("fig4-escaping").field.expr == "log(abs(1 - r))**2"
    for name in FIGURES:
        assert figure_preset(name).notes


def test_enough_scattering_presets():
    presets = scattering_presets()
    kinds = {sc.field.expr for sc in presets}
    assert len(presets) >= 11
    assert {"0", "1", "3*r"} <= kinds


def test_zero_field_report(tmp_path):
    report = run(preset("scatter-zero"), tmp_path)
    assert report.exit_code == EXIT_OK
    doc = json.loads((tmp_path / "scattering.json").read_text())
    assert doc["omega"] == 0.0
    assert abs(doc["omega_ode"]) < 1e-6


def test_collar_bound_report(tmp_path):
    report = run(collar_preset(), tmp_path)
    assert report.exit_code == EXIT_OK
    cert = json.loads((tmp_path / "certificate.json").read_text())
    assert cert["n_min"] == pytest.approx(cert["delta"] * math.exp(-cert["C_of_T"]), abs=1e-6)
    assert cert["extra"]["simulated_min_n"] > cert["n_min"]


def test_fig4_escaping_hits_boundary(tmp_path):
    report = run(figure_preset("fig4-escaping"), tmp_path)
    assert report.exit_code == EXIT_OK
    assert report.summary["termination"] == "boundary_hit"


def test_hypothesis_violation_exit_code(tmp_path):
    sc = preset("scatter-const-1")
    sc.initial = Initial(v_r=0.5, v_theta=0.2)
    assert run(sc, tmp_path).exit_code == EXIT_HYPOTHESIS


def test_numerical_failure_exit_code(tmp_path):
    sc = Scenario(
        name="wall",
        field=FieldModel(FieldKind.CARTESIAN, "1e-3*sqrt(0.5 - q1)"),
        initial=Initial(q=[0.0, 0.0], v=[1.0, 0.0]),
        task=Task(TaskKind.SIMULATE, t_max=5.0),
    )
    assert run(sc, tmp_path).exit_code == EXIT_NUMERICAL


def test_svg_is_deterministic(tmp_path):
    sc = preset("h1-inverse-gap")
    sc.task.T = 5.0
    run(sc, tmp_path / "a")
    run(sc, tmp_path / "b")
    a = (tmp_path / "a" / "plot.svg").read_bytes()
    assert a == (tmp_path / "b" / "plot.svg").read_bytes()
    assert a.startswith(b"<?xml")


def test_svg_contains_domain_and_path():
    res = integrate(FieldModel(FieldKind.RADIAL, "2"), PhaseState((0, 0), (0.5, 0)), 3.0)
    text = render_svg(res.q, 1.0, title="a<b")
    assert text.count("<path") == 2
    assert "a&lt;b" in text


def test_cli_preset_run(tmp_path, capsys):
    code = main(["scatter", "--preset", "scatter-linear", "--out", str(tmp_path)])
    assert code == EXIT_OK
    for name in ("scattering.json", "trajectory.csv", "plot.svg"):
        assert (tmp_path / name).exists()
    assert '"omega"' in capsys.readouterr().out


def test_cli_config_file_and_overrides(tmp_path):
    sc = preset("h1-inverse-gap")
    cfg = tmp_path / "h1.json"
    cfg.write_text(sc.to_json())
    code = main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o"),
                 "--t-max", "3", "--tol", "1e-9"])
    assert code == EXIT_OK
    rows = (tmp_path / "o" / "trajectory.csv").read_text().splitlines()
    assert float(rows[-1].split(",")[0]) == pytest.approx(3.0)


def test_cli_sweep(tmp_path):
    sc = preset("scatter-const-1")
    sc.sweep = {"H0": 0.5, "p_theta": [0.0, 0.3, 0.6]}
    cfg = tmp_path / "sweep.json"
    cfg.write_text(sc.to_json())
    assert main(["scatter", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_OK
    assert len((tmp_path / "sweep.csv").read_text().splitlines()) == 4


def test_cli_figure_task(tmp_path):
    assert main(["figure", "--preset", "fig4-escaping", "--out", str(tmp_path)]) == EXIT_OK


def test_cli_config_error(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{"name": "x",\n "field": }')
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "line 2" in capsys.readouterr().err


def test_cli_unknown_preset(tmp_path):
    assert main(["simulate", "--preset", "nope", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_cli_lists_presets(capsys):
    assert main(["presets"]) == 0
    assert "fig3-limitcircle" in capsys.readouterr().out


@pytest.mark.parametrize("name", sorted(all_presets()))
def test_every_preset_runs_quickly(name, tmp_path):
    start = time.perf_counter()
    report = run(preset(name), tmp_path)
    assert report.exit_code == EXIT_OK, report.summary
    assert time.perf_counter() - start < 60
