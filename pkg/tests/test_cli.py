import json

import pytest
from click.testing import CliRunner

from sessionstats.cli import main


@pytest.fixture(scope="module")
def synth_csv(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "cohort.csv"
    res = CliRunner().invoke(main, ["synth", "--stocks", "3", "--days", "500", "--seed", "4", "--output", str(out)])
    assert res.exit_code == 0, res.output
    return out


def _lines(output):
    return [json.loads(line) for line in output.splitlines() if line.strip()]


def test_synth_writes_csv_and_spec(synth_csv):
    header, first = synth_csv.read_text().splitlines()[:2]
    assert header == "ticker,date,open,close,split_factor"
    assert first.startswith("S0000,1988-01-04,50.0,")
    spec = json.loads(synth_csv.with_name("cohort.csv.spec.json").read_text())
    assert spec["seed"] == 4 and spec["params"]["n_stocks"] == 3


def test_synth_is_deterministic(synth_csv, tmp_path):
    out = tmp_path / "again.csv"
    CliRunner().invoke(main, ["synth", "--stocks", "3", "--days", "500", "--seed", "4", "--output", str(out)])
    assert out.read_bytes() == synth_csv.read_bytes()


def test_ingest(synth_csv, tmp_path):
    res = CliRunner().invoke(main, ["ingest", "--input", str(synth_csv), "--from", "1988-06-01",
                                    "--output", str(tmp_path / "adj.csv"), "--dump-returns", str(tmp_path / "ret")])
    assert res.exit_code == 0, res.output
    recs = _lines(res.output)
    assert [r["ticker"] for r in recs] == ["S0000", "S0001", "S0002"]
    assert all(r["first"] >= "1988-06-01" and r["skipped"] == 0 for r in recs)
    assert (tmp_path / "ret" / "S0001_returns.csv").exists()
    assert len((tmp_path / "adj.csv").read_text().splitlines()) == 1 + sum(r["bars"] for r in recs)


def test_tails(synth_csv):
    res = CliRunner().invoke(main, ["tails", "--input", str(synth_csv)])
    assert res.exit_code == 0, res.output
    recs = _lines(res.output)
    assert len(recs) == 3 * 3 * 3
    assert {r["family"] for r in recs} == {"power_law", "exponential", "power_law_cutoff"}


def test_dfa(synth_csv, tmp_path):
    res = CliRunner().invoke(main, ["dfa", "--input", str(synth_csv), "--dump-dfa", str(tmp_path)])
    assert res.exit_code == 0, res.output
    recs = [r for r in _lines(res.output) if "alpha" in r]
    assert {r["series"] for r in recs} == {"return", "volatility"}
    assert (tmp_path / "S0000_volatility_total.csv").exists()


def test_xcorr(synth_csv):
    res = CliRunner().invoke(main, ["xcorr", "--input", str(synth_csv), "--max-lag", "10"])
    assert res.exit_code == 0, res.output
    recs = _lines(res.output)
    assert len(recs) == 9
    assert all(len(r["lags"]) == 21 for r in recs)


def test_analyze_and_report(synth_csv, tmp_path):
    out = tmp_path / "run"
    res = CliRunner().invoke(main, ["analyze", "--input", str(synth_csv), "--out", str(out), "--subsets", "1"])
    assert res.exit_code == 0, res.output
    data = json.loads((out / "report.json").read_text())
    assert data["metadata"]["n_success"] == 3 and data["metadata"]["config"]["subsets"] == 1
    again = tmp_path / "again"
    res = CliRunner().invoke(main, ["report", "--report", str(out / "report.json"), "--out", str(again)])
    assert res.exit_code == 0, res.output
    for name in ("report.json", "table1.csv", "yearly_xcorr.csv"):
        assert (again / name).read_bytes() == (out / name).read_bytes()


def test_config_file_and_override(synth_csv, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"inputs = {synth_csv}\nsubsets = 1\nmax_lag = 5\nout_dir = {tmp_path / 'cfgout'}\n")
    res = CliRunner().invoke(main, ["analyze", "--config", str(cfg), "--max-lag", "7"])
    assert res.exit_code == 0, res.output
    conf = json.loads((tmp_path / "cfgout" / "report.json").read_text())["metadata"]["config"]
    assert conf["max_lag"] == 7 and conf["subsets"] == 1


@pytest.mark.parametrize("args", [
    ["analyze", "--input", "/no/such.csv", "--out", "x"],
    ["tails"],
    ["analyze", "--input", "{csv}"],
    ["dfa", "--input", "{csv}", "--from", "2040-01-01"],
    ["xcorr", "--input", "{csv}", "--from", "2001-01-02", "--to", "2001-01-01"],
    ["analyze", "--input", "{csv}", "--out", "{tmp}/o", "--dfa-order", "9"],
])
def test_config_errors_exit_nonzero(synth_csv, tmp_path, args):
    args = [a.format(csv=synth_csv, tmp=tmp_path) for a in args]
    res = CliRunner().invoke(main, args)
    assert res.exit_code == 2
    assert "error:" in res.output


def test_bad_date_is_usage_error(synth_csv):
    res = CliRunner().invoke(main, ["ingest", "--input", str(synth_csv), "--from", "June"])
    assert res.exit_code == 2 and "ISO date" in res.output


def test_malformed_csv_exits_nonzero(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("date,open,close\n2001-01-02,1,1\n")
    res = CliRunner().invoke(main, ["ingest", "--input", str(bad)])
    assert res.exit_code == 2
