import numpy as np
import pytest

from spdcsim import cli, multiplex
from spdcsim.report import ReproduceError, run_reproduce
from spdcsim.scenario import load_scenario, parse_scenario

MC_STAGES = ("counting", "franson", "spectrum")


@pytest.fixture(scope="module")
def default_report(tmp_path_factory):
    out = tmp_path_factory.mktemp("rep")
    return run_reproduce(load_scenario(), out), out


def _row(report, quantity):
    return next(r for r in report.rows if r.quantity == quantity)


def test_report_files(default_report):
    report, out = default_report
    for name in ("report.txt", "report.csv", "dispersion.csv", "spectrum.csv", "spectrum_fit.csv",
                 "ensemble.csv", "jsi_matrix.csv", "jsi_grid.csv", "franson_fits.txt", "franson_scan_8.csv"):
        assert (out / name).is_file(), name
    lines = (out / "report.csv").read_text().splitlines()
    assert lines[0] == "stage,quantity,anchor,reference,computed,unit,tolerance,status"
    assert len(lines) == len(report.rows) + 1
    assert all(r.anchor for r in report.rows)


def test_report_stage_order(default_report):
    stages = [r.stage for r in default_report[0].rows]
    order = ["dispersion", "design", "spectrum", "rates", "counting", "correlate", "franson"]
    assert stages == sorted(stages, key=order.index)


def test_rerun_byte_identical(default_report, tmp_path):
    _, out = default_report
    run_reproduce(load_scenario(), tmp_path)
    for f in sorted(out.iterdir()):
        assert (tmp_path / f.name).read_bytes() == f.read_bytes(), f.name


def test_planted_area_fault(default_report, tmp_path):
    report, _ = default_report
    bad = run_reproduce(parse_scenario("[source]\nmode_area = 126.0\n"), tmp_path)
    row, ref = _row(bad, "pair rate, closed form"), _row(report, "pair rate, closed form")
    assert not row.passed
    assert ref.computed / row.computed == pytest.approx(100.0, rel=1e-12)


def test_seed_changes_values_not_status(default_report, tmp_path):
    report, _ = default_report
    status = [r.status for r in report.rows]
    changed = set()
    for k in range(20):
        sc = parse_scenario(f"seed = {1000 + k}\n")
        other = run_reproduce(sc, tmp_path / str(k))
        assert [r.status for r in other.rows] == status
        changed |= {r.quantity for r, o in zip(report.rows, other.rows)
                    if r.stage in MC_STAGES and r.computed != o.computed}
    assert "estimator bias over 100 seeds" in changed
    assert "min channel visibility" in changed


def test_stage_errors_are_tagged(monkeypatch, tmp_path):
    def boom(*args, **kwargs):
        raise ValueError("spectrum does not cover")

    monkeypatch.setattr(multiplex, "jsi_matrix", boom)
    # a floor no other test uses, so the memoized matrix is not reused
    sc = parse_scenario("[channels]\naccidental_floor = 3.3e-4\n")
    with pytest.raises(ReproduceError, match="stage 'correlate'"):
        run_reproduce(sc, tmp_path)


# ---- CLI ---------------------------------------------------------------------------

def test_cli_spectrum_fwhm(capsys):
    assert cli.main(["spectrum", "--fwhm"]) == 0
    value = float(capsys.readouterr().out.split()[1])
    assert value == pytest.approx(200.0, abs=10.0)


def test_cli_rates(capsys):
    assert cli.main(["rates", "--closed", "--numeric"]) == 0
    out = capsys.readouterr().out
    assert "closed form" in out and "quadrature" in out and "ratio" in out


def test_cli_correlate_grid(tmp_path, capsys):
    path = tmp_path / "m.csv"
    assert cli.main(["correlate", "--grid-step", "10", "--csv", str(path)]) == 0
    rows = [r.split(",") for r in path.read_text().splitlines()]
    n = len(rows) - 1
    assert n >= 8 and all(len(r) == n + 1 for r in rows)
    assert np.all(np.array(rows[1:], dtype=float)[:, 1:] >= 0)


def test_cli_other_subcommands(tmp_path, capsys):
    assert cli.main(["dispersion", "--model", "bulk", "--zero-gvd"]) == 0
    assert cli.main(["design"]) == 0
    assert cli.main(["franson", "--visibility", "0.97", "--csv", str(tmp_path / "f.csv")]) == 0
    out = capsys.readouterr().out
    assert "zero-GVD wavelength" in out and "4.00000 um" in out and "V = " in out


def test_cli_config_error_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[source]\npump_powr = 2\n")
    assert cli.main(["rates", "--scenario", str(bad)]) == 2
    assert "pump_powr" in capsys.readouterr().err


def test_cli_usage_error_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["spectrum", "--bogus"])
    assert exc.value.code == 2
    assert cli.main(["spectrum"]) == 2


def test_cli_reproduce_exit_status(tmp_path, capsys, default_report):
    code = cli.main(["reproduce", "--out", str(tmp_path)])
    assert code == (0 if default_report[0].passed else 1)


def test_cli_help_documents_units(capsys):
    with pytest.raises(SystemExit):
        cli.main(["correlate", "--help"])
    out = capsys.readouterr().out
    assert "nm" in out and "--grid-step" in out
