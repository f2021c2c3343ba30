import json

import numpy as np
import pytest

from whitham.cli import main
from whitham.polyring import Polynomial
from whitham.spectral import SpectralTriple


@pytest.fixture(scope="module")
def good_file(tmp_path_factory, g0_triple):
    p = tmp_path_factory.mktemp("cli") / "good_g0.json"
    p.write_text(json.dumps(g0_triple.to_json_dict()), encoding="utf-8")
    return p


@pytest.fixture(scope="module")
def circle_root_file(tmp_path_factory):
    # simple root on the unit circle: P.2 fails but everything parses
    P = Polynomial([-1j, 1]) * Polynomial([-0.5, 1]) * Polynomial([1, -0.5])
    rng = np.random.default_rng(0)
    from whitham.polyring import random_real_section

    t = SpectralTriple(1, P, random_real_section(rng, 4), random_real_section(rng, 4))
    p = tmp_path_factory.mktemp("cli") / "circle_root.json"
    p.write_text(json.dumps(t.to_json_dict()), encoding="utf-8")
    return p


def test_validate_pass_exit0(good_file, tmp_path):
    out = tmp_path / "report.json"
    code = main(["validate", str(good_file), "--out", str(out), "--quad-order", "40"])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["verdict"] == "pass"


def test_validate_fail_exit1(circle_root_file, tmp_path):
    out = tmp_path / "report.json"
    code = main(["validate", str(circle_root_file), "--out", str(out)])
    assert code == 1
    report = json.loads(out.read_text())
    assert report["verdict"] == "fail"
    names = [c["name"] for c in report["checks"] if not c["passed"]]
    assert "P2_no_circle_roots" in names


def test_parse_error_exit2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    assert main(["validate", str(bad)]) == 2
    missing_key = tmp_path / "missing.json"
    missing_key.write_text('{"genus": 0}', encoding="utf-8")
    assert main(["validate", str(missing_key)]) == 2
    assert main(["validate", str(tmp_path / "nope.json")]) == 2


def test_usage_error_exit2():
    assert main(["not-a-command"]) == 2
    assert main([]) == 2


def test_byte_identical_reports(good_file, tmp_path):
    out1 = tmp_path / "r1.json"
    out2 = tmp_path / "r2.json"
    assert main(["validate", str(good_file), "--out", str(out1)]) == 0
    assert main(["validate", str(good_file), "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_classify_command(good_file, tmp_path):
    out = tmp_path / "c.json"
    assert main(["classify", str(good_file), "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["case"] == "a"
    assert data["deformable"] is True


def test_tangent_command(good_file, tmp_path):
    out = tmp_path / "t.json"
    assert main(["tangent", str(good_file), "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["deformable"] is True
    assert len(data["vectors"]) == 2
    assert data["gram_determinant"] > 1e-8
    for v in data["vectors"]:
        assert v["residuals"]["empd1"] < 1e-9


def test_tangent_not_deformable_exit1(tmp_path):
    from whitham.polyring import random_real_section

    rng = np.random.default_rng(1)
    G = Polynomial([-1j, 1]) * Polynomial([-0.4, 1]) * Polynomial([1, -0.4])
    t = SpectralTriple(
        2,
        Polynomial([-0.5, 1]) * Polynomial([1, -0.5]) * Polynomial([-0.3j, 1])
        * Polynomial([1, 0.3j]) * Polynomial([0.25, 1]) * Polynomial([1, 0.25]),
        G * random_real_section(rng, 2),
        G * random_real_section(rng, 2) * 1j,
    )
    f = tmp_path / "case_d.json"
    f.write_text(json.dumps(t.to_json_dict()), encoding="utf-8")
    out = tmp_path / "t.json"
    assert main(["tangent", str(f), "--out", str(out)]) == 1
    assert json.loads(out.read_text())["deformable"] is False


def test_oracle_command(tmp_path):
    out = tmp_path / "o.json"
    assert main(["oracle", "--seed", "7", "--count", "25", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["verdict"] == "pass"
    assert data["seed"] == 7
    assert data["bezout_vs_dense_max_error"] <= 1e-8


def test_plot_command(good_file, tmp_path):
    out = tmp_path / "plot.svg"
    assert main(["plot", str(good_file), "--out", str(out)]) == 0
    svg = out.read_text()
    assert svg.startswith("<svg") and "</svg>" in svg


def test_flow_command_jsonl_and_csv(good_file, tmp_path):
    out = tmp_path / "flow.jsonl"
    code = main(
        ["flow", str(good_file), "--steps", "2", "--dt", "0.005",
         "--out", str(out), "--quad-order", "32"]
    )
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert json.loads(lines[-1])["status"] == "completed"
    samples = [json.loads(l) for l in lines[:-1]]
    assert len(samples) == 3
    # schema round-trip: every emitted triple re-parses to an equal value
    for s in samples:
        t = SpectralTriple.from_json_dict(s["triple"])
        assert t.to_json_dict() == s["triple"]
    csv_out = tmp_path / "flow.csv"
    code = main(
        ["flow", str(good_file), "--steps", "1", "--dt", "0.005",
         "--out", str(csv_out), "--format", "csv", "--quad-order", "32"]
    )
    assert code == 0
    rows = csv_out.read_text().strip().splitlines()
    assert rows[0] == "t,tau_re,tau_im,residual"
    assert len(rows) == 3


def test_validate_directory_batch(good_file, circle_root_file, tmp_path):
    d = tmp_path / "batch"
    d.mkdir()
    (d / "a_good.json").write_text(good_file.read_text(), encoding="utf-8")
    (d / "b_bad.json").write_text(circle_root_file.read_text(), encoding="utf-8")
    out = tmp_path / "batch.json"
    code = main(["validate", str(d), "--out", str(out), "--quad-order", "32"])
    assert code == 1
    results = json.loads(out.read_text())["results"]
    assert [r["verdict"] for r in results] == ["pass", "fail"]
