import json

import numpy as np
import pytest

from thinpart import io
from thinpart.catalog import cylinder_spectrum
from thinpart.cli import EXIT_CLAIM, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main
from thinpart.errors import InvalidArgument
from thinpart.scenarios import SCENARIOS, ScenarioReport, list_scenarios, run_scenario


def test_grid_csv_roundtrip(tmp_path):
    a = np.random.default_rng(0).standard_normal((3, 8))
    io.write_grid_csv(tmp_path / "a.csv", a)
    assert np.array_equal(io.read_grid_csv(tmp_path / "a.csv"), a)


def test_pgm_one_shade_per_label(tmp_path):
    labels = np.repeat((np.arange(12) // 4)[None, :], 3, axis=0)
    paths = io.export_plot_data(labels, tmp_path / "labels.csv")
    assert [p.suffix for p in paths] == [".csv", ".pgm"]
    img = io.read_pgm(tmp_path / "labels.pgm")
    assert img.shape == labels.shape
    assert len(np.unique(img)) == 3


def test_export_spectrum_and_bad_objects(tmp_path):
    (p,) = io.export_plot_data(cylinder_spectrum(0.2, count=3), tmp_path / "s.csv")
    assert p.read_text().splitlines()[0].startswith("index,value_over_pi2")
    with pytest.raises(InvalidArgument):
        io.export_plot_data(np.zeros(4), tmp_path / "x.csv")


def test_config_rejects_unknown_keys(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("b: 0.3\nbogus: 1\n")
    with pytest.raises(InvalidArgument):
        io.load_config(cfg)
    cfg.write_text("kind: annulus\nb: 0.1\nh2: [1.0, 0.2]\nbc_top: D\n")
    dom = io.domain_from_config(io.load_config(cfg))
    assert dom.kind == "annulus" and dom.h2 == (1.0, 0.2) and dom.bc == "ND"


def test_manifest_checksums(tmp_path):
    p = io.write_rows_csv(tmp_path / "sub" / "r.csv", [["a", 1]])
    m = json.loads(io.write_manifest(tmp_path, [p]).read_text())
    assert m["artifacts"][0]["path"] == "sub/r.csv"
    assert m["artifacts"][0]["sha256"] == io.sha256(p)


def test_list_scenarios_stable():
    ids = [s[0] for s in list_scenarios()]
    assert ids == ["lemma-C2", "thm-cylinder", "prop-2-3", "k-thresholds", "annulus-condthin"]
    assert ids == [s[0] for s in list_scenarios()]
    assert len({s[2] for s in list_scenarios()}) == len(ids)


def test_unknown_scenario():
    with pytest.raises(InvalidArgument):
        run_scenario("nope")


def test_report_pass_logic():
    rep = ScenarioReport("x", {})
    assert not rep.passed
    rep.close("a", 1.0, 1.005, 0.01, "[analytic]")
    assert rep.passed
    rep.check("b", True, False, "exact", "[analytic]", False)
    assert not rep.passed
    assert all(c.oracle for c in rep.claims)


def test_scenario_report_is_reproducible(tmp_path):
    a = run_scenario("lemma-C2", {"ntheta": 256, "nt": 26}, out_dir=tmp_path / "a")
    b = run_scenario("lemma-C2", {"ntheta": 256, "nt": 26}, out_dir=tmp_path / "b")
    assert a.passed
    ra = (tmp_path / "a" / "lemma-C2" / "report.json").read_bytes()
    rb = (tmp_path / "b" / "lemma-C2" / "report.json").read_bytes()
    assert ra == rb
    for name in ("eigvec_6.csv", "witness_6_domains.pgm"):
        assert (tmp_path / "a" / "lemma-C2" / name).read_bytes() == \
            (tmp_path / "b" / "lemma-C2" / name).read_bytes()


def test_cli_spectrum_and_manifest(tmp_path, capsys):
    assert main(["spectrum", "--b", "0.2", "--count", "3", "--out-dir", str(tmp_path)]) == EXIT_OK
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert [a["path"] for a in m["artifacts"]] == ["spectrum.csv"]
    assert "4/1" in capsys.readouterr().out


def test_cli_config_with_flag_override(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("b: 0.5\nntheta: 32\nnt: 4\ncount: 3\n")
    assert main(["solve", "--config", str(cfg), "--b", "0.2", "--out-dir", str(tmp_path)]) == EXIT_OK
    rows = (tmp_path / "eigenvalues.csv").read_text().splitlines()
    assert len(rows) == 4


def test_cli_nodal_and_partition(tmp_path):
    assert main(["nodal", "--b", "0.3", "--degree", "2", "--ntheta", "128", "--nt", "12",
                 "--index", "6", "--out-dir", str(tmp_path / "n")]) == EXIT_OK
    assert (tmp_path / "n" / "witness_6.pgm").exists()
    assert main(["partition", "--b", "0.2", "--ntheta", "48", "--nt", "6", "--k", "3",
                 "--max-sweeps", "5", "--out-dir", str(tmp_path / "p")]) == EXIT_OK
    rep = json.loads((tmp_path / "p" / "report.json").read_text())
    assert rep["k"] == 3 and "Lambda" in rep


def test_cli_exit_codes(tmp_path):
    assert main(["verify", "nope", "--out-dir", str(tmp_path)]) == EXIT_USAGE
    assert main(["solve", "--b", "-1", "--out-dir", str(tmp_path)]) == EXIT_USAGE
    assert main(["solve", "--b", "0.2", "--ntheta", "128", "--nt", "8", "--tol", "1e-30",
                 "--out-dir", str(tmp_path)]) == EXIT_NUMERIC
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == EXIT_USAGE
    # a deliberately wrong width makes the lemma claim b <= 1/3 fail
    assert main(["verify", "lemma-C2", "--b", "0.4", "--ntheta", "128", "--nt", "12",
                 "--out-dir", str(tmp_path)]) == EXIT_CLAIM


def test_cli_verify_annulus(tmp_path):
    assert main(["verify", "annulus-condthin", "--ntheta", "128", "--nt", "12",
                 "--out-dir", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "annulus-condthin" / "report.json").exists()
    assert set(SCENARIOS) >= {"annulus-condthin"}
