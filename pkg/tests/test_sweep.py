from __future__ import annotations

import numpy as np
import pytest

from regrisk.config import load_sweep_spec
from regrisk.covariance import CovSpec
from regrisk.errors import ConfigError, InvalidSpecError
from regrisk.plot import emit_plot
from regrisk.sweep import (
    MCSettings,
    ModelSpec,
    SweepSpec,
    SweepTable,
    compare_report,
    read_csv,
    run_sweep,
    table_columns,
    write_csv,
)


def cal(q, scale=1.0):
    return CovSpec("toeplitz_plus_identity", q=q, scale=scale, dim=1)


def small_spec(**kw):
    model = ModelSpec(n=40, cov_A=cal(0.5), cov_noise=cal(0.4), lam=0.5)
    base = dict(axis="overparam_ratio", grid=(0.5, 2.0), model=model, mc=MCSettings(trials=4, seed=3))
    base.update(kw)
    return SweepSpec(**base)


def test_spec_validation():
    with pytest.raises(InvalidSpecError):
        small_spec(grid=())
    with pytest.raises(InvalidSpecError):
        small_spec(grid=(2.0, 1.0))
    with pytest.raises(InvalidSpecError):
        small_spec(grid=(-1.0, 1.0))
    with pytest.raises(InvalidSpecError):
        small_spec(axis="q_rows", grid=(0.1,))
    with pytest.raises(InvalidSpecError):
        small_spec(axis="temperature")


def test_infeasible_points_are_marked_not_dropped():
    table = run_sweep(small_spec(), workers=1)
    lo, hi = table.rows
    assert lo["gls_status"] == "INFEASIBLE" and lo.get("gls_risk_theory") is None and lo.get("gls_risk_mc") is None
    assert hi["ls_status"] == "INFEASIBLE"
    assert lo["ls_status"] == "OK" and hi["gls_status"] == "OK"
    assert lo["m"] == 80 and hi["m"] == 20 and hi["ratio"] == 2.0


def test_theory_columns_independent_of_mc(tmp_path):
    a = run_sweep(small_spec(mc=None))
    b = run_sweep(small_spec(mc=MCSettings(trials=3, seed=99)), workers=1)
    for ra, rb in zip(a.rows, b.rows):
        for k, v in ra.items():
            if k.endswith("_theory") or k.endswith("_gamma_hat"):
                assert rb[k] == v


def test_missing_mc_fields_empty_in_csv(tmp_path):
    path = tmp_path / "t.csv"
    run_sweep(small_spec(mc=None, out_csv=str(path)))
    back = read_csv(path)
    assert back.rows[1]["gls_risk_mc"] is None
    assert back.rows[1]["gls_risk_theory"] > 0


def test_csv_byte_identical_across_runs_and_workers(tmp_path):
    paths = []
    for i, w in enumerate((1, 1, 4)):
        p = tmp_path / f"r{i}.csv"
        run_sweep(small_spec(out_csv=str(p)), workers=w)
        paths.append(p.read_bytes())
    assert paths[0] == paths[1] == paths[2]


def test_csv_roundtrip_and_schema(tmp_path):
    table = run_sweep(small_spec(), workers=1)
    p = tmp_path / "t.csv"
    write_csv(table, p)
    header = p.read_text().splitlines()[0].split(",")
    assert header == table_columns(("gls", "ridge", "ls"))
    back = read_csv(p)
    assert back.regimes == ("gls", "ridge", "ls")
    assert back.rows[1]["gls_risk_theory"] == table.rows[1]["gls_risk_theory"]


def test_noiseless_ls_single_point():
    model = ModelSpec(n=30, cov_A=cal(0.5), cov_noise=cal(0.4), sigma=0.0, regimes=("ls",))
    table = run_sweep(SweepSpec(axis="overparam_ratio", grid=(0.5,), model=model, mc=MCSettings(trials=3)), workers=1)
    row = table.rows[0]
    assert row["ls_risk_theory"] == 0.0
    assert abs(row["ls_risk_mc"]) <= 1e-20


def test_lambda_and_q_rows_axes():
    model = ModelSpec(n=40, ratio=2.0, cov_A=cal(0.5), cov_noise=cal(0.4), regimes=("ridge",))
    t = run_sweep(SweepSpec(axis="lambda", grid=(0.1, 1.0), model=model, mc=None))
    assert [r["lambda"] for r in t.rows] == [0.1, 1.0]
    assert t.rows[0]["ridge_risk_theory"] != t.rows[1]["ridge_risk_theory"]
    model = ModelSpec(n=40, ratio=2.0, cov_A=cal(0.5, 0.5), cov_noise=cal(0.4, 0.5),
                      cov_rows=cal(0.0, 0.5), regimes=("gls",))
    t = run_sweep(SweepSpec(axis="q_rows", grid=(0.0, 0.5, 1.0), model=model, mc=None))
    assert [r["q_rows"] for r in t.rows] == [0.0, 0.5, 1.0]
    assert all(r["gls_status"] == "OK" for r in t.rows)


def _synthetic(zs):
    rows = []
    for i, z in enumerate(zs):
        rows.append({"axis_value": float(i), "gls_status": "OK", "gls_risk_theory": 1.0,
                     "gls_risk_mc": 1.0 + z, "gls_risk_se": 1.0, "gls_risk_z": z})
    return SweepTable(axis="overparam_ratio", regimes=("gls",), rows=rows)


def test_compare_report_perfect_match():
    rep = compare_report(_synthetic([0.0, 0.0, 0.0]))
    assert rep.regimes[0].max_abs_z == 0.0
    assert rep.regimes[0].frac_within == 1.0
    assert rep.exit_status == 0


def test_compare_report_outlier():
    rep = compare_report(_synthetic([0.5, -10.0, 1.0]))
    assert rep.exit_status == 1
    r = rep.regimes[0]
    assert r.max_abs_z == 10.0 and r.worst_axis_value == 1.0 and r.worst_quantity == "risk"
    assert any("FAIL" in line for line in rep.lines())


def test_plot_series_and_asymptote(tmp_path):
    table = run_sweep(small_spec(grid=(0.5, 0.8, 1.25, 2.0)), workers=1)
    art = emit_plot(table, tmp_path / "f.svg")
    assert art.line_series == 3 and art.marker_series == 3
    assert art.asymptote == 1.0
    svg = art.svg_path.read_text()
    assert svg.startswith("<?xml") and "prediction risk" in svg
    data = art.data_path.read_text().splitlines()
    assert data[0].startswith("# axis_value gls_risk_theory")
    assert len(data) == 5 and "NaN" in data[1]


def test_plot_two_regimes_and_lines_only(tmp_path):
    spec = small_spec(grid=(2.0, 4.0), model=ModelSpec(n=40, cov_A=cal(0.5), cov_noise=cal(0.4), regimes=("gls", "ridge")))
    art = emit_plot(run_sweep(spec, workers=1), tmp_path / "a.svg")
    assert (art.line_series, art.marker_series) == (2, 2)
    art = emit_plot(run_sweep(small_spec(mc=None)), tmp_path / "b.svg")
    assert art.marker_series == 0 and art.line_series == 3


def test_plot_bytes_deterministic(tmp_path):
    table = run_sweep(small_spec(mc=None))
    a = emit_plot(table, tmp_path / "a.svg").svg_path.read_bytes()
    b = emit_plot(table, tmp_path / "b.svg").svg_path.read_bytes()
    assert a == b


def test_plot_empty_table_rejected(tmp_path):
    with pytest.raises(InvalidSpecError):
        emit_plot(SweepTable(axis="lambda", regimes=("ridge",), rows=[]), tmp_path / "x.svg")


CONFIG = """
[model]
n = 40
regimes = gls, ridge   # inline comment
lambda = 0.25

[cov_features]
kind = toeplitz_plus_identity
q = 0.5

[cov_noise]
q = 0.4
kind = toeplitz_plus_identity

[sweep]
axis = overparam_ratio
grid = 1.5, 2, 4

[mc]
trials = 7
seed = 11
"""


def test_config_parse_and_overrides(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text(CONFIG)
    spec = load_sweep_spec(str(p))
    assert spec.grid == (1.5, 2.0, 4.0)
    assert spec.model.regimes == ("gls", "ridge") and spec.model.lam == 0.25
    assert spec.mc == MCSettings(trials=7, seed=11)
    spec = load_sweep_spec(str(p), ["mc.trials=3", "model.lambda=2", "mc.enabled=no"])
    assert spec.model.lam == 2.0 and spec.mc is None


def test_config_errors_name_the_field(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text(CONFIG)
    with pytest.raises(ConfigError, match=r"\[mc\] trials"):
        load_sweep_spec(str(p), ["mc.trials=many"])
    with pytest.raises(ConfigError, match="unknown keys: colour"):
        load_sweep_spec(str(p), ["model.colour=red"])
    with pytest.raises(ConfigError, match="unknown section"):
        load_sweep_spec(str(p), ["extra.x=1"])
    with pytest.raises(ConfigError, match="must look like"):
        load_sweep_spec(str(p), ["trials=3"])
    p.write_text("[model\nn = 3\n")
    with pytest.raises(ConfigError, match="line: 1"):
        load_sweep_spec(str(p))
    p.write_text("[model]\nn = 10\n")
    with pytest.raises(ConfigError, match=r"\[sweep\] grid"):
        load_sweep_spec(str(p))


def test_config_user_spectrum_relative_path(tmp_path):
    (tmp_path / "spec.csv").write_text("\n".join(str(v) for v in np.linspace(2, 1, 40)) + "\n")
    p = tmp_path / "c.ini"
    p.write_text(CONFIG.replace("kind = toeplitz_plus_identity\nq = 0.5", "kind = user_spectrum\npath = spec.csv"))
    spec = load_sweep_spec(str(p))
    assert spec.model.cov_A.kind == "user_spectrum"
    t = run_sweep(spec.__class__(axis=spec.axis, grid=spec.grid, model=spec.model, mc=None))
    assert t.rows[0]["gls_status"] == "OK"


def test_shipped_configs_parse():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "configs"
    for name in ("fig1.ini", "fig2.ini", "fig3.ini"):
        spec = load_sweep_spec(str(root / name))
        assert spec.mc is not None
    assert load_sweep_spec(str(root / "fig3.ini")).model.cov_rows.scale == 0.5
