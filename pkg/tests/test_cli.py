import json
import subprocess
import sys

import numpy as np
import pytest

from selfaffine import bundled_example
from selfaffine.cli import main

from conftest import SQRT3

BUNDLED = [
    "sierpinski.json", "sierpinski-skewed.json", "sierpinski-corner.json",
    "bernoulli-half.json", "bernoulli-golden.json", "mixed-linear.json",
]


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    doc = json.loads(out)
    assert not err.lstrip().startswith("{")
    return code, doc


@pytest.fixture
def expanding(tmp_path):
    path = tmp_path / "expanding.json"
    path.write_text(json.dumps({"dim": 1, "maps": [{"A": [[1.5]], "b": [0.0], "p": 1.0}]}))
    return path


@pytest.fixture
def malformed(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"dim": 1, "maps": [')
    return path


def test_validate_ok(capsys):
    code, doc = run(capsys, "validate", bundled_example("sierpinski.json"))
    assert code == 0 and doc["passed"]
    assert doc["norms"] == pytest.approx([0.5, 0.5, 0.5], rel=1e-12)


def test_validate_expanding(capsys, expanding):
    code, doc = run(capsys, "validate", expanding)
    assert code == 2 and not doc["passed"]


def test_validate_malformed(capsys, malformed):
    code, doc = run(capsys, "validate", malformed)
    assert code == 1 and doc["error"] == "parse"


def test_missing_file_is_parse_error(capsys, tmp_path):
    code, doc = run(capsys, "validate", tmp_path / "nope.json")
    assert code == 1


def test_usage_error_is_parse_exit(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["moments"])
    assert exc.value.code == 1
    assert json.loads(capsys.readouterr().out)["error"] == "usage"


def test_moments_fast_and_general(capsys):
    path = bundled_example("sierpinski.json")
    code, fast = run(capsys, "moments", path, "--path=fast")
    assert code == 0 and fast["path"] == "EqualLinearFastPath"
    assert fast["cov"][0][1] == 0.0
    code, general = run(capsys, "moments", path, "--path=general")
    assert code == 0 and general["path"] == "GeneralKroneckerPath"
    assert np.max(np.abs(np.array(fast["cov"]) - np.array(general["cov"]))) <= 1e-10
    np.testing.assert_allclose(fast["mean"], [0.5, SQRT3 / 6], atol=1e-12)


def test_moments_iterate(capsys):
    code, doc = run(capsys, "moments", bundled_example("mixed-linear.json"), "--path=iterate", "--tol=1e-13")
    assert code == 0 and doc["path"] == "FixedPointIteration" and doc["iterations"] > 0


def test_moments_iterate_no_convergence(capsys):
    code, doc = run(capsys, "moments", bundled_example("bernoulli-golden.json"), "--path=iterate", "--max-iter=3")
    assert code == 3


def test_moments_fast_on_mixed_is_precondition(capsys):
    code, doc = run(capsys, "moments", bundled_example("mixed-linear.json"), "--path=fast")
    assert code == 3 and doc["error"] == "precondition"


def test_moments_invalid_model(capsys, expanding):
    code, doc = run(capsys, "moments", expanding)
    assert code == 2 and doc["validation"]["passed"] is False


def test_sample_deterministic_bytes():
    argv = [sys.executable, "-m", "selfaffine.cli", "sample", bundled_example("sierpinski-skewed.json"),
            "--n", "100000", "--seed", "42"]
    first = subprocess.run(argv, capture_output=True, check=True).stdout
    second = subprocess.run(argv, capture_output=True, check=True).stdout
    assert first == second
    doc = json.loads(first)
    assert doc["n"] == 100000 and doc["seed"] == 42 and doc["burn_in"] == 100


def test_sample_shards(capsys):
    code, doc = run(capsys, "sample", bundled_example("sierpinski.json"), "--n", "10000", "--shards", "4")
    assert code == 0 and doc["n"] == 10000 and doc["shards"] == 4


def test_sample_bad_n(capsys):
    code, doc = run(capsys, "sample", bundled_example("sierpinski.json"), "--n", "1")
    assert code == 3


@pytest.mark.parametrize("name", BUNDLED)
def test_compare_bundled_agree(capsys, name):
    code, doc = run(capsys, "compare", bundled_example(name), "--n", "1000000", "--seed", "42")
    assert code == 0 and doc["verdict"] == "Agree"
    assert doc["max_abs_diff_exact_vs_iterated"] <= 1e-8
    assert all(abs(z) <= 5 for z in doc["zscores_exact_vs_empirical"])


def test_compare_bernoulli_half_variance_field(capsys):
    code, doc = run(capsys, "compare", bundled_example("bernoulli-half.json"))
    assert code == 0
    assert doc["exact"]["cov"] == [[0.3333333333333333]]


def test_compare_against_stale_report(capsys, tmp_path):
    source = json.loads(open(bundled_example("sierpinski-skewed.json")).read())
    original = tmp_path / "model.json"
    original.write_text(json.dumps(source))
    code, report = run(capsys, "moments", original)
    stale = tmp_path / "stale.json"
    stale.write_text(json.dumps(report))

    # weights still sum to one but an offset moved since the report was cached
    source["maps"][1]["b"][0] += 0.01
    edited = tmp_path / "edited.json"
    edited.write_text(json.dumps(source))
    code, doc = run(capsys, "compare", edited, "--reference", stale, "--n", "0")
    assert code == 4 and doc["verdict"] == "Disagree"
    assert doc["empirical"] is None

    code, doc = run(capsys, "compare", original, "--reference", stale, "--n", "0")
    assert code == 0


def test_compare_unreadable_reference(capsys, tmp_path):
    bad = tmp_path / "ref.json"
    bad.write_text("{}")
    code, doc = run(capsys, "compare", bundled_example("sierpinski.json"), "--reference", bad, "--n", "0")
    assert code == 1


def test_render(capsys, tmp_path):
    out = tmp_path / "tri.pgm"
    code, doc = run(capsys, "render", bundled_example("sierpinski.json"), "--n", "20000",
                    "--width", "64", "--height", "48", "--out", out)
    assert code == 0 and doc["in_bbox"] + doc["dropped"] == 20000
    data = out.read_bytes()
    assert data.startswith(b"P5\n64 48\n255\n") and len(data) == len(b"P5\n64 48\n255\n") + 64 * 48


def test_render_1d_is_precondition(capsys, tmp_path):
    code, doc = run(capsys, "render", bundled_example("bernoulli-half.json"), "--out", tmp_path / "x.pgm")
    assert code == 3
