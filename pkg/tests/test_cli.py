import csv
import io
from pathlib import Path

import numpy as np
import pytest

from riscap.cli import (EXIT_CONVERGENCE, EXIT_IO, EXIT_OK, EXIT_VALIDATION, cmd_validate,
                        main)
from riscap.scenario_file import ScenarioError, parse_scenario, read_scenario_file

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"

BASE = """\
[arrays]
Nt = 8
Nr = 4

[ris]
count = 1
rows = 6
cols = 6
spacing_over_lambda = 0.5
gamma_db = 0

[angles]
incoming_deg = 30
outgoing_deg = 70
spread_in_deg = 10
spread_out_deg = 10

[link]
rho_db = 10
direct_link = false
carrier_ghz = 2.5

[mc]
n_samples = 200
seed = 3
"""


@pytest.fixture
def scenario(tmp_path):
    p = tmp_path / "s.ini"
    p.write_text(BASE)
    return p


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_parse_units(scenario):
    cfg = parse_scenario(scenario)
    assert cfg.rho == pytest.approx(10.0)
    assert cfg.gamma[0] == pytest.approx(1.0)
    assert cfg.Nt == 8 and cfg.Nr == 4 and cfg.Ns == 36 and cfg.K == 1
    assert not cfg.direct_link and cfg.seed == 3
    grid, w_in, w_out = cfg.geometry[0]
    assert w_in.wavelength == pytest.approx(0.12, rel=1e-3)
    assert grid.spacing == pytest.approx(0.06, rel=1e-3)
    assert np.degrees(np.arccos(w_out.mean_direction[2])) == pytest.approx(70)
    assert np.trace(cfg.covariances.S_t[0]).real == pytest.approx(36)


def test_figure_scenario_file():
    scn = read_scenario_file(SCENARIOS / "single_ris.ini")
    assert scn.wavelength == pytest.approx(0.12, rel=1e-3)
    assert scn.grid.spacing == pytest.approx(0.06, rel=1e-3)
    assert scn.rows * scn.cols == 400


@pytest.mark.parametrize("edit,message", [
    (("gamma_db = 0\n", ""), "missing key 'gamma_db'"),
    (("Nr = 4\n", "Nr = 4\nNx = 1\n"), "unknown key 'Nx'"),
    (("[mc]", "[montecarlo]"), "unknown section"),
    (("rho_db = 10", "rho_db = ten"), "bad value"),
    (("gamma_db = 0", "gamma_db = 0, 3"), "needs 1 value"),
    (("spread_in_deg = 10", "spread_in_deg = -1"), "positive"),
    (("incoming_deg = 30", "incoming_deg = 120"), "[-90, 90]"),
    (("direct_link = false", "direct_link = maybe"), "bad value"),
    (("seed = 3", "seed = -3"), "64-bit"),
])
def test_strict_parse_errors(tmp_path, edit, message):
    p = tmp_path / "bad.ini"
    p.write_text(BASE.replace(*edit))
    with pytest.raises(ScenarioError) as exc:
        read_scenario_file(p)
    assert message in str(exc.value)
    assert f"{p}:" in str(exc.value)


def test_error_line_numbers(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text(BASE.replace("rho_db = 10", "rho_db = ten"))
    with pytest.raises(ScenarioError, match=r"bad\.ini:19:"):
        read_scenario_file(p)
    p.write_text(BASE.replace("[link]\n", "[link]\nfoo = 1\n"))
    with pytest.raises(ScenarioError, match=r"bad\.ini:19: unknown key 'foo'"):
        read_scenario_file(p)


def test_missing_section(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text(BASE.split("[link]")[0])
    with pytest.raises(ScenarioError, match=r"missing section \[link\]"):
        read_scenario_file(p)


def test_optional_sections_default(tmp_path):
    p = tmp_path / "s.ini"
    p.write_text(BASE.split("[mc]")[0])
    scn = read_scenario_file(p)
    assert scn.n_samples == 2000 and scn.seed == 0 and scn.method == "alternating"


def test_spectrum_command(scenario, tmp_path):
    out = tmp_path / "cdf.csv"
    dump = tmp_path / "ev.csv"
    assert main(["spectrum", "--scenario", str(scenario), "--out", str(out),
                 "--dump", str(dump)]) == EXIT_OK
    rows = _rows(out)
    assert rows[0] == ["threshold", "cdf_exact", "cdf_analytic"]
    ce = [float(r[1]) for r in rows[1:]]
    ca = [float(r[2]) for r in rows[1:]]
    assert ce[-1] == 1.0 and ca[-1] == 1.0
    assert all(a <= b for a, b in zip(ce, ce[1:]))
    assert _rows(dump)[0] == ["index", "m1", "m2", "eigenvalue", "source"]


@pytest.mark.filterwarnings("ignore:angular density")
def test_spectrum_wide_spread_steps_near_one(tmp_path):
    p = tmp_path / "wide.ini"
    p.write_text(BASE.replace("incoming_deg = 30", "incoming_deg = 0")
                 .replace("spread_in_deg = 10", "spread_in_deg = 1000"))
    out = tmp_path / "cdf.csv"
    assert main(["spectrum", "--scenario", str(p), "--out", str(out),
                 "--thresholds", "401"]) == EXIT_OK
    rows = [(float(a), float(b)) for a, b, _ in _rows(out)[1:]]
    # an isotropic half-wavelength grid is close to white: the bulk of the
    # eigenvalues sits between 0.5 and 1.5
    lo = max(f for t, f in rows if t <= 0.5)
    hi = min(f for t, f in rows if t >= 1.5)
    assert hi - lo > 0.6


def test_fig3_command(scenario, tmp_path):
    out = tmp_path / "fig3.csv"
    assert main(["fig3", "--scenario", str(scenario), "--out", str(out), "--sigmas", "5,60",
                 "--ns", "36", "--mc", "--samples", "100"]) == EXIT_OK
    rows = _rows(out)
    assert rows[0] == ["sigma_deg", "Ns", "C_unopt", "C_opt", "C_uncorrelated", "C_mc_opt"]
    for r in rows[1:]:
        assert float(r[3]) >= float(r[2]) - 1e-9
        assert r[5] != ""
    out2 = tmp_path / "fig3b.csv"
    assert main(["fig3", "--scenario", str(scenario), "--out", str(out2), "--sigmas", "60",
                 "--ns", "36", "--no-mc"]) == EXIT_OK
    assert _rows(out2)[1][5] == ""


def test_fig4_command(scenario, tmp_path):
    out = tmp_path / "fig4.csv"
    assert main(["fig4", "--scenario", str(scenario), "--out", str(out), "--theta1",
                 "20,50", "--sigmas", "5"]) == EXIT_OK
    rows = _rows(out)
    assert rows[0] == ["theta1_deg", "sigma_deg", "C_unopt", "C_opt"]
    assert [r[0] for r in rows[1:]] == ["20", "50"]


def test_validate_command(scenario, tmp_path, capsys):
    out = tmp_path / "v.csv"
    assert main(["validate", "--scenario", str(scenario), "--samples", "500",
                 "--out", str(out)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "C_replica" in text and "relative gap" in text
    assert main(["validate", "--scenario", str(scenario), "--samples", "100",
                 "--max-gap", "1e-9"]) == EXIT_VALIDATION


def test_validate_white_direct_link(tmp_path):
    p = tmp_path / "white.ini"
    p.write_text(BASE.replace("count = 1", "count = 0").replace("gamma_db = 0", "gamma_db =")
                 .replace("incoming_deg = 30", "incoming_deg =")
                 .replace("outgoing_deg = 70", "outgoing_deg =")
                 .replace("spread_in_deg = 10", "spread_in_deg =")
                 .replace("spread_out_deg = 10", "spread_out_deg =")
                 .replace("direct_link = false", "direct_link = true"))
    buf = io.StringIO()
    assert cmd_validate(read_scenario_file(p), n_samples=2000, max_gap=0.03, stream=buf)


def test_validate_zero_snr(scenario, tmp_path):
    p = tmp_path / "zero.ini"
    p.write_text(BASE.replace("rho_db = 10", "rho_db = -inf"))
    buf = io.StringIO()
    assert cmd_validate(read_scenario_file(p), n_samples=10, stream=buf)
    assert "C_replica = 0.00000000" in buf.getvalue()
    assert "C_mc      = 0.00000000" in buf.getvalue()


def test_optimize_and_trace_commands(scenario, tmp_path):
    out = tmp_path / "opt.csv"
    assert main(["optimize", "--scenario", str(scenario), "--out", str(out)]) == EXIT_OK
    rows = _rows(out)
    assert rows[0] == ["outer_iter", "C_nats_per_Nt", "grad_norm", "inner_iters"]
    C = [float(r[1]) for r in rows[1:]]
    assert all(b >= a - 1e-9 for a, b in zip(C, C[1:]))
    out = tmp_path / "trace.csv"
    assert main(["fixed-point-trace", "--scenario", str(scenario), "--out", str(out)]) == 0
    assert _rows(out)[0][:4] == ["iteration", "residual", "t_d", "r_d"]


def test_exit_codes(scenario, tmp_path, capsys):
    assert main(["spectrum", "--scenario", str(tmp_path / "none.ini"),
                 "--out", str(tmp_path / "x.csv")]) == EXIT_IO
    assert main(["spectrum", "--scenario", str(scenario),
                 "--out", str(tmp_path / "no" / "dir" / "x.csv")]) == EXIT_IO
    bad = tmp_path / "bad.ini"
    bad.write_text(BASE.replace("Nt = 8", "Nt = 0"))
    assert main(["spectrum", "--scenario", str(bad), "--out", str(tmp_path / "x.csv")]) \
        == EXIT_VALIDATION
    assert main(["fig3", "--scenario", str(scenario), "--out", str(tmp_path / "x.csv"),
                 "--ns", "50"]) == EXIT_VALIDATION
    out = tmp_path / "t.csv"
    assert main(["fixed-point-trace", "--scenario", str(scenario), "--out", str(out),
                 "--tolerance", "1e-30"]) == EXIT_CONVERGENCE
    assert not out.exists()
    assert "error:" in capsys.readouterr().err


def test_outputs_byte_identical(scenario, tmp_path):
    for cmd, extra in (("fig3", ["--sigmas", "10", "--ns", "36", "--mc", "--samples", "64"]),
                       ("spectrum", []), ("optimize", [])):
        a, b = tmp_path / f"{cmd}_a.csv", tmp_path / f"{cmd}_b.csv"
        for path in (a, b):
            assert main([cmd, "--scenario", str(scenario), "--out", str(path)] + extra) == 0
        assert a.read_bytes() == b.read_bytes()
