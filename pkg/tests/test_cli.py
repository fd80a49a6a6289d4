import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from nclp import cli
from nclp.errors import ConfigError


def run(tmp_path, command, config=None, *extra):
    args = [command, "--out", str(tmp_path / "out")]
    if config is not None:
        path = tmp_path / "cfg.json"
        path.write_text(config if isinstance(config, str) else json.dumps(config))
        args += ["--config", str(path)]
    code = cli.main(args + list(extra))
    out = tmp_path / "out"
    return code, out.read_text() if out.exists() else None


def rows(text):
    body = "\n".join(line for line in text.splitlines() if not line.startswith("#"))
    return list(csv.DictReader(io.StringIO(body)))


def test_rng_is_philox_and_reproducible():
    a = cli.instance_rng(3, 7).standard_normal(4)
    b = np.random.Generator(np.random.Philox(np.random.SeedSequence([3, 7]))).standard_normal(4)
    np.testing.assert_array_equal(a, b)
    assert "Philox" in cli.RNG_NAME


def test_norms_n1_row_matches_schatten(tmp_path):
    code, text = run(tmp_path, "norms", {"instances": 4, "n": 1, "m": 3, "p": [3.0, 1.5]})
    assert code == 0
    for r in rows(text):
        assert float(r["spcq"]) == pytest.approx(float(r["schatten"]), rel=1e-6)


def test_zero_instances_header_only(tmp_path):
    code, text = run(tmp_path, "norms", {"instances": 0})
    assert code == 0
    assert all(line.startswith("#") for line in text.splitlines())
    assert '"instances": 0' in text


def test_config_embedded_with_defaults(tmp_path):
    code, text = run(tmp_path, "norms", {"instances": 1})
    cfg_line = next(line for line in text.splitlines() if line.startswith("# config: "))
    cfg = json.loads(cfg_line[len("# config: "):])
    assert cfg["theta"] == 0.5 and cfg["solver"]["eps_stop"] == 1e-12
    assert "# rng: numpy.random.Philox" in text


def test_same_seed_byte_identical(tmp_path):
    cfg = {"instances": 3, "p": [1.5, 4.0]}
    _, a = run(tmp_path, "norms", cfg, "--seed", "11")
    _, b = run(tmp_path, "norms", cfg, "--seed", "11")
    _, c = run(tmp_path, "norms", cfg, "--seed", "12")
    assert a == b and a != c


def test_jobs_do_not_change_output(tmp_path):
    cfg = {"instances": 4, "n": [1, 2], "m": [1, 2]}
    _, a = run(tmp_path, "khintchine", cfg, "--jobs", "1")
    _, b = run(tmp_path, "khintchine", cfg, "--jobs", "2")
    assert a == b


def test_khintchine_car_p2(tmp_path):
    code, text = run(tmp_path, "khintchine", {"instances": 6, "p": 2})
    assert code == 0
    data = rows(text)
    assert data[-1]["id"] == "summary"
    for r in data[:-1]:
        assert abs(float(r["lhs"]) - float(r["l2"])) <= 1e-9


def test_khintchine_summary_ratios(tmp_path):
    code, text = run(tmp_path, "khintchine", {"instances": 5, "p": [3, 4]})
    data = rows(text)
    ratios = [float(r["ratio_lower"]) for r in data[:-1]]
    assert float(data[-1]["ratio_lower"]) == max(ratios)
    assert float(data[-1]["min_ratio_lower"]) == min(ratios)
    assert min(ratios) >= 1 - 1e-8


def test_free_depth_sweep_columns(tmp_path):
    cfg = {"instances": 2, "kind": "free", "n": 1, "m": 1, "p": 3, "depths": [2, 3, 4]}
    code, text = run(tmp_path, "khintchine", cfg)
    assert code == 0
    r = rows(text)[0]
    for d in (2, 3, 4):
        assert float(r[f"lhs_depth{d}"]) > 0
    assert r["depth_converged"] in ("true", "false")


@pytest.mark.parametrize("config,fragment", [
    ({"lam": []}, "empty"),
    ({"bogus": 1}, "bogus"),
    ({"kind": "car", "p": 1.0}, "khintchine.p"),
    ({"kind": "bosonic"}, "kind"),
    ({"instances": -1}, "instances"),
    ({"depths": [2, 3]}, "free"),
    ('{"instances": 3,\n "n": }', "line 2"),
])
def test_config_errors(tmp_path, capsys, config, fragment):
    code, _ = run(tmp_path, "khintchine", config)
    assert code == 2
    assert fragment in capsys.readouterr().err


def test_resource_cap_exit_code(tmp_path):
    code, _ = run(tmp_path, "khintchine", {"n": 5, "instances": 1})
    assert code == 4


def test_assertion_failure_exit_code(tmp_path, capsys):
    # no honest config fails a check, so inject one failure into a real report
    original = cli.RUNNERS["cb"]

    def failing(cfg, seed=0, jobs=1):
        rep = original(cfg, seed, jobs)
        rep.failures.append("forced")
        return rep

    cli.RUNNERS["cb"] = failing
    try:
        code, text = run(tmp_path, "cb", {"p": 2, "q": 2, "levels": 0})
    finally:
        cli.RUNNERS["cb"] = original
    assert code == 3
    err = capsys.readouterr().err
    assert json.loads(err.strip().splitlines()[-1])["failures"] == ["forced"]
    assert text is not None


def test_interp_calibration_rows(tmp_path):
    cfg = {"theta": [0.3, 0.5], "p": [1, 2], "instances": 2, "cq": {"instances": 1}}
    code, text = run(tmp_path, "interp", cfg)
    assert code == 0
    calib = [r for r in rows(text) if r["check"] == "calibration"]
    assert len(calib) == 4
    for r in calib:
        th, p = float(r["theta"]), float(r["p"])
        ref = (1 / (p * th) + 1 / (p * (1 - th))) ** (1 / p)
        assert float(r["value"]) == pytest.approx(ref, rel=1e-6)


def test_decompose_basis_file_diagonal(tmp_path):
    basis_path = tmp_path / "basis.json"
    cols = np.vstack([np.eye(3), np.eye(3)]).T.tolist()
    basis_path.write_text(json.dumps({"basis": cols}))
    cfg = {"d0": 3, "d1": 3, "basis_file": str(basis_path)}
    code, text = run(tmp_path, "decompose", cfg, "--format", "json")
    assert code == 0
    doc = json.loads(text)
    np.testing.assert_allclose(doc["decompositions"][0]["delta"], [1.0, 1.0, 1.0], atol=1e-10)


def test_decompose_bad_basis(tmp_path):
    code, _ = run(tmp_path, "decompose", {"d0": 2, "d1": 2, "basis": [[1, 0, 1]]})
    assert code == 2


def test_cb_identity_table(tmp_path):
    code, text = run(tmp_path, "cb", {"n": 4, "levels": 0})
    assert code == 0
    data = rows(text)
    assert len(data) == 25
    for r in data:
        p, q = float(r["p"]), float(r["q"])
        inv = lambda s: 0.0 if math.isinf(s) else 1 / s
        assert float(r["closed_form"]) == pytest.approx(4 ** (abs(inv(p) - inv(q)) / 2), rel=1e-14)


def test_all_json(tmp_path):
    cfg = {
        "norms": {"instances": 1},
        "khintchine": {"instances": 1},
        "interp": {"theta": 0.5, "p": 2, "instances": 1, "cq": {"instances": 1}},
        "decompose": {"instances": 1},
        "cb": {"p": [2, 4], "q": [2], "levels": 1, "restarts": 2},
        "seed": 4,
    }
    code, text = run(tmp_path, "all", cfg, "--format", "json")
    assert code == 0
    doc = json.loads(text)
    assert [r["command"] for r in doc["reports"]] == ["norms", "khintchine", "interp", "decompose", "cb"]
    assert all(r["seed"] == 4 for r in doc["reports"])


def test_all_rejects_unknown_section():
    with pytest.raises(ConfigError):
        cli.load_config('{"nroms": {}}', "all")


def test_module_entry_point(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"instances": 0}))
    proc = subprocess.run([sys.executable, "-m", "nclp", "norms", "--config", str(cfg)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("# nclp norms")
