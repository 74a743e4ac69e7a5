import csv
import json
import subprocess
import sys


from cftpp import __version__
from cftpp.cli import main

GEO = {"districts": [{"id": "A", "country": "GN", "weight": 1.0},
                     {"id": "B", "country": "SL", "weight": 1.0}],
       "contiguity": [["A", "B"]], "total_nodes": 150,
       "seed_cases": [{"district": "A", "count": 2}]}
PROBS = '{"within": 0.08, "cross_country": 0.02}'


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_simulate_poisson_is_deterministic(tmp_path):
    args = ["simulate-poisson", "--kind", "constant", "--rate", "2", "--horizon", "10", "--seed", "42"]
    assert main(args + ["--out", str(tmp_path / "a.csv")]) == 0
    assert main(args + ["--out", str(tmp_path / "b.csv")]) == 0
    a = (tmp_path / "a.csv").read_bytes()
    assert a == (tmp_path / "b.csv").read_bytes()
    assert 5 <= len(_rows(tmp_path / "a.csv")) <= 40


def test_simulate_poisson_record(tmp_path):
    rbf = '{"kind": "rbf", "components": [{"phi": 2, "alpha": 1, "tau": 3}]}'
    assert main(["simulate-poisson", "--kind", "rbf", "--intensity", rbf, "--horizon", "6", "--seed", "1",
                 "--out", str(tmp_path / "e.csv"), "--record", str(tmp_path / "r.json")]) == 0
    rec = json.loads((tmp_path / "r.json").read_text())
    assert len(rec["accepted"]) == len(_rows(tmp_path / "e.csv"))


def test_overwrite_needs_force(tmp_path):
    out = tmp_path / "a.csv"
    out.write_text("keep")
    args = ["simulate-poisson", "--rate", "1", "--horizon", "5", "--seed", "1", "--out", str(out)]
    assert main(args) == 1
    assert out.read_text() == "keep"
    assert main(args + ["--force"]) == 0
    assert out.read_text().startswith("t")


def test_force_keeps_unrelated_files(tmp_path):
    (tmp_path / "notes.txt").write_text("mine")
    obs = tmp_path / "obs.csv"
    obs.write_text("t\n1.0\n")
    assert main(["cf-poisson", "--factual", '{"kind": "constant", "rate": 1}',
                 "--counterfactual", '{"kind": "constant", "rate": 1}', "--observed", str(obs),
                 "--lambda-max", "2", "--horizon", "5", "--seed", "1", "--out", str(tmp_path), "--force"]) == 0
    assert (tmp_path / "notes.txt").read_text() == "mine"


def test_hawkes_identity_round_trip(tmp_path):
    ev = tmp_path / "h.csv"
    assert main(["simulate-hawkes", "--params", "1,0.5,1", "--horizon", "8", "--seed", "5", "--out", str(ev)]) == 0
    obs = [float(r["t"]) for r in _rows(ev)]
    assert main(["cf-hawkes", "--factual", "1,0.5,1", "--counterfactual", "1,0.5,1", "--observed", str(ev),
                 "--horizon", "8", "--replicates", "3", "--seed", "9", "--out", str(tmp_path / "cf")]) == 0
    rows = _rows(tmp_path / "cf" / "counterfactual.csv")
    for c in range(3):
        assert [float(r["t"]) for r in rows if r["replicate"] == str(c)] == obs
    assert {r["origin"] for r in rows} <= {"kept"}


def test_cf_poisson_identity(tmp_path):
    ev = tmp_path / "p.csv"
    assert main(["simulate-poisson", "--rate", "3", "--horizon", "5", "--seed", "2", "--out", str(ev)]) == 0
    lam = '{"kind": "constant", "rate": 3}'
    assert main(["cf-poisson", "--factual", lam, "--counterfactual", lam, "--observed", str(ev),
                 "--lambda-max", "4", "--horizon", "5", "--seed", "3", "--replicates", "2",
                 "--out", str(tmp_path / "cf")]) == 0
    obs = [r["t"] for r in _rows(ev)]
    rows = _rows(tmp_path / "cf" / "counterfactual.csv")
    assert [r["t"] for r in rows if r["replicate"] == "0"] == obs


def test_exit_codes(tmp_path, capsys):
    assert main([]) == 1
    assert main(["simulate-poisson", "--rate", "1", "--horizon", "5", "--out", str(tmp_path / "x.csv")]) == 1
    assert main(["simulate-poisson", "--rate", "1", "--horizon", "5", "--seed", "-3",
                 "--out", str(tmp_path / "x.csv")]) == 1
    # dominating rate below the intensity
    assert main(["simulate-poisson", "--rate", "5", "--lambda-max", "1", "--horizon", "5", "--seed", "1",
                 "--out", str(tmp_path / "y.csv")]) == 2
    assert main(["cf-hawkes", "--factual", "1,0.5,1", "--counterfactual", "1,0.5,1",
                 "--observed", str(tmp_path / "missing.csv"), "--horizon", "5", "--seed", "1",
                 "--out", str(tmp_path / "o")]) == 2
    assert main(["--version"]) == 0
    assert __version__ in capsys.readouterr().out


def test_entry_point_runs():
    r = subprocess.run([sys.executable, "-m", "cftpp.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "experiment" in r.stdout


def test_sir_identity_reproduces_observed(tmp_path):
    geo = tmp_path / "geo.json"
    geo.write_text(json.dumps(GEO))
    sim = tmp_path / "sim"
    assert main(["sir", "simulate", "--geography", str(geo), "--probs", PROBS, "--beta", "0.2",
                 "--horizon", "60", "--seed", "4", "--out", str(sim)]) == 0
    cf = tmp_path / "cf"
    assert main(["sir", "counterfactual", "--observed", str(sim), "--beta", "0.2", "--replicates", "3",
                 "--seed", "5", "--out", str(cf)]) == 0
    for c in range(3):
        assert (cf / f"cf_{c}.csv").read_bytes() == (sim / "outbreak.csv").read_bytes()
    assert all(float(r["reduction"]) == 0 for r in _rows(cf / "summary.csv"))
    vac = '{"kind": "vaccination", "coverage": 1.0, "efficacy": 1.0}'
    assert main(["sir", "counterfactual", "--observed", str(sim), "--beta", "0.2", "--intervention", vac,
                 "--seed", "5", "--replicates", "2", "--out", str(tmp_path / "vac")]) == 0
    assert all(r["cf_infected"] == "2" for r in _rows(tmp_path / "vac" / "summary.csv"))
    assert main(["sir", "counterfactual", "--observed", str(tmp_path), "--seed", "1",
                 "--out", str(tmp_path / "bad")]) == 1


def test_sir_r0_and_calibrate(tmp_path):
    geo = tmp_path / "geo.json"
    geo.write_text(json.dumps(GEO))
    assert main(["sir", "r0", "--geography", str(geo), "--probs", PROBS, "--runs", "50", "--seed", "1",
                 "--out", str(tmp_path / "r0.csv")]) == 0
    assert {r["country"] for r in _rows(tmp_path / "r0.csv")} == {"GN", "SL"}
    assert main(["sir", "calibrate", "--geography", str(geo), "--grid", '{"cross_country": [0.0, 0.02]}',
                 "--targets", '{"GN": 0, "SL": 0}', "--runs", "30", "--seed", "1",
                 "--out", str(tmp_path / "cal")]) == 0
    assert len(_rows(tmp_path / "cal" / "calibration.csv")) == 2
    assert json.loads((tmp_path / "cal" / "best_probs.json").read_text())["within"] == 0.01


def test_experiment_run(tmp_path):
    cfg = {"process": "hawkes", "factual": {"kind": "hawkes", "mu": 1, "alpha": 0.5, "omega": 1},
           "intervention": {"kind": "explicit", "counterfactual": {"kind": "hawkes", "mu": 1, "alpha": 0.2,
                                                                   "omega": 1}},
           "horizon": 4, "n_observed": 12, "n_counterfactual": 3, "n_resamples": 100}
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    assert main(["experiment", "run", str(path), "--out", str(tmp_path / "a")]) == 1
    assert main(["experiment", "run", str(path), "--seed", "3", "--out", str(tmp_path / "a"), "--figures"]) == 0
    assert main(["experiment", "run", str(path), "--seed", "3", "--threads", "2", "--out", str(tmp_path / "b")]) == 0
    for name in ("summary.csv", "groups.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert (tmp_path / "a" / "figures" / "trajectories.png").stat().st_size > 0
    assert main(["experiment", "run", "no_such_config", "--out", str(tmp_path / "c")]) == 1


def test_experiment_bundled_name():
    import cftpp.cli as cli
    src = cli._scenario_source("fig2a_hawkes_up")
    cfg = json.loads(open(src).read())
    assert cfg["intervention"]["counterfactual"]["alpha"] == 1.44
    assert cli._scenario_source("fig2a_hawkes_up.json") == src


def test_validate_command(capsys):
    assert main(["validate", "--seed", "7"]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 6 and all(line.startswith("PASS") for line in out)
