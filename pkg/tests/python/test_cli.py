from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from conftest import reference_toml
from wavecraft.app.cli import main
from wavecraft.utils import io


def _run(*args: str):  # noqa: ANN202
    return CliRunner().invoke(main, list(args))


def test_spectrum_writes_artifacts(write_config, tmp_path: Path) -> None:  # noqa: ANN001
    out = tmp_path / "out"
    result = _run("spectrum", "--config", str(write_config(reference_toml())), "--out", str(out))
    assert result.exit_code == 0, result.output

    assert (out / "spectrum.csv").read_text(encoding="utf-8").startswith("# schema_version: 1\nj,k,gamma_j,lambda_jk,resonant,subspace\n")
    rows = io.read_csv(out / "spectrum.csv")
    assert len(rows) == 9 * 17
    row = next(r for r in rows if (r["j"], r["k"]) == ("2", "2"))
    assert row == {"j": "2", "k": "2", "gamma_j": "4.7123889803846897", "lambda_jk": "5", "resonant": "false", "subspace": "E2"}

    arithmetic = io.read_json(out / "arithmetic.json")
    assert arithmetic["schema_version"] == 1
    assert arithmetic["profile"]["R_coef"] == "1/2"
    assert (arithmetic["profile"]["a"], arithmetic["profile"]["b"]) == (2, 1)
    assert arithmetic["constants"]["mu0"] == 6.5
    assert arithmetic["constants"]["beta_minus"] == 5.0
    assert arithmetic["eigenvalues_between_mu_beta"] == [5.0]
    assert arithmetic["dims"]["E2"] == 2
    assert arithmetic["box_guard"]["ok"]
    assert arithmetic["gap_audit"]["ok"]
    assert arithmetic["resonant_pairs"][:2] == [[1, 1], [2, 3]]
    assert list((out / "logs").glob("wavecraft_*.log"))


def test_spectrum_is_byte_identical_across_runs(write_config, tmp_path: Path) -> None:  # noqa: ANN001
    config = str(write_config(reference_toml()))
    for name in ("a", "b"):
        assert _run("spectrum", "--config", config, "--out", str(tmp_path / name)).exit_code == 0
    for artifact in ("spectrum.csv", "arithmetic.json"):
        assert (tmp_path / "a" / artifact).read_bytes() == (tmp_path / "b" / artifact).read_bytes()


def test_mu_on_the_spectrum_exits_with_code_2(write_config, tmp_path: Path) -> None:  # noqa: ANN001
    text = reference_toml().replace("mu = 1.5", "mu = 1.0")
    result = _run("spectrum", "--config", str(write_config(text)), "--out", str(tmp_path / "out"))
    assert result.exit_code == 2
    assert "within delta_min of eigenvalue 1" in result.output


def test_bad_config_exits_with_code_2(write_config, tmp_path: Path) -> None:  # noqa: ANN001
    text = reference_toml().replace("seed = 7\n", "")
    result = _run("spectrum", "--config", str(write_config(text)), "--out", str(tmp_path / "out"))
    assert result.exit_code == 2
    assert "seed" in result.output


def test_sample_without_a_solve(write_config, tmp_path: Path) -> None:  # noqa: ANN001
    result = _run("sample", "--config", str(write_config(reference_toml())), "--out", str(tmp_path / "out"), "--solution-id", "0")
    assert result.exit_code == 1
    assert "run 'solve' first" in result.output


def test_sample_of_a_recorded_solution(write_config, tmp_path: Path) -> None:  # noqa: ANN001
    out = tmp_path / "out"
    io.write_json(out / "solutions.json", {"solutions": [{"id": 0, "coefficients": np.zeros(9 * 33)}]})
    config = str(write_config(reference_toml()))

    result = _run("sample", "--config", config, "--out", str(out), "--solution-id", "0")
    assert result.exit_code == 0, result.output
    rows = io.read_csv(out / "sample_0.csv")
    assert len(rows) == 37 * 41
    assert all(float(row["u"]) == 0.0 for row in rows)

    missing = _run("sample", "--config", config, "--out", str(out), "--solution-id", "3")
    assert missing.exit_code == 1
    assert "unknown solution id 3 (known: 0)" in missing.output


def test_sample_rejects_a_foreign_truncation(write_config, tmp_path: Path) -> None:  # noqa: ANN001
    out = tmp_path / "out"
    io.write_json(out / "solutions.json", {"solutions": [{"id": 0, "coefficients": np.zeros(10)}]})
    result = _run("sample", "--config", str(write_config(reference_toml())), "--out", str(out), "--solution-id", "0")
    assert result.exit_code == 2
    assert "10 coefficients" in result.output


@pytest.mark.slow
def test_verify_passes_on_the_reference_problem(write_config, tmp_path: Path) -> None:  # noqa: ANN001
    out = tmp_path / "out"
    result = _run("verify", "--config", str(write_config(reference_toml())), "--out", str(out))
    assert result.exit_code == 0, result.output
    report = io.read_json(out / "verify.json")
    assert report["ok"]
    assert report["failed"] == []
    assert len(report["suites"]) == 10


@pytest.mark.slow
def test_verify_flags_a_nonlinearity_without_slope_margin(write_config, tmp_path: Path) -> None:  # noqa: ANN001
    out = tmp_path / "out"
    text = reference_toml().replace("eta = 0.5", "eta = 6.5")
    result = _run("verify", "--config", str(write_config(text)), "--out", str(out))
    assert result.exit_code == 1
    report = io.read_json(out / "verify.json")
    assert not report["ok"]
    assert "nonlinearity" in report["failed"]
    assert not report["suites"]["nonlinearity"]["details"]["checks"]["slope_bound"]


def test_solve_refuses_a_steep_nonlinearity(write_config, tmp_path: Path) -> None:  # noqa: ANN001
    config = write_config(reference_toml("linear", "{ c = 7.0 }"))
    result = _run("solve", "--config", str(config), "--out", str(tmp_path / "out"))
    assert result.exit_code == 2
    assert "slope_bound" in result.output


@pytest.mark.slow
def test_solve_writes_solutions(write_config, tmp_path: Path) -> None:  # noqa: ANN001
    config = str(write_config(reference_toml()))
    first, second = tmp_path / "a", tmp_path / "b"
    result = _run("solve", "--config", config, "--out", str(first))
    assert result.exit_code == 0, result.output
    assert _run("solve", "--config", config, "--out", str(second)).exit_code == 0
    assert (first / "solutions.json").read_bytes() == (second / "solutions.json").read_bytes()

    report = io.read_json(first / "solutions.json")
    assert report["status"]["geometry"] == "ok"
    assert report["status"]["min_in_ball"] == "ok"
    assert report["status"]["mountain_pass_plus"] == "ok"
    kinds = [s["kind"] for s in report["solutions"]]
    assert kinds[0] == "min_in_ball" and "global_max" in kinds and "mountain_pass" in kinds
    assert report["solutions"][0]["trivial"]
    assert report["unconverged"] == []
    for solution in report["solutions"]:
        assert solution["status"] == "ok"
        assert solution["reduced_grad_norm"] <= 1e-6
        assert solution["residual_decays"]
        assert (first / f"sample_{solution['id']}.csv").exists()
    assert report["solutions"][0]["notch_residual"] == 0.0

    # The trivial minimum, one ring maximum and one ring saddle, modulo time shifts and u -> -u.
    assert report["distinct_count"] >= 3
    assert report["nontrivial_count"] >= 2
    chain = report["level_chain"]
    assert chain["holds"]
    assert chain["c_plus"] is not None
    assert chain["strict_upper"]
    assert (first / "landscape.csv").exists()
