import json
import os

import numpy as np
import pytest

from slowphase.cli import main
from slowphase.config import RunConfig
from slowphase.export import export_artifacts
from slowphase.pipeline import (
    load_cycle,
    load_manifold,
    load_response,
    load_spectrum,
    run_pipeline,
)
from slowphase.store import sha256_file


ORACLE_CFG = """
model.name = oracle
cycle.guess = 1.3, 0.0
cycle.relax_time = 20.0
cycle.grid_N = 128
manifold.order = 4
validation.samples = 10
output.directory = {out}
"""


def _write_cfg(tmp_path, out_name="out"):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(ORACLE_CFG.format(out=tmp_path / out_name))
    return str(cfg), str(tmp_path / out_name)


def test_pipeline_artifacts_and_manifest(oracle_run):
    out = oracle_run.config.out_dir
    manifest = json.load(open(os.path.join(out, "manifest.json")))
    assert manifest["failed_stage"] is None
    assert manifest["version"]
    assert manifest["period"] == pytest.approx(2 * np.pi, abs=1e-9)
    # every inventoried file exists and its checksum matches
    for name, digest in manifest["files"].items():
        path = os.path.join(out, name)
        assert os.path.exists(path)
        assert sha256_file(path) == digest
    # the manifest multiplier table comes from the refined exponents
    assert manifest["multipliers"][1][0] == pytest.approx(np.exp(-4 * np.pi), rel=1e-8)


def test_artifact_reload_round_trip(oracle_run):
    out = oracle_run.config.out_dir
    result = oracle_run.result
    cycle = load_cycle(out)
    assert cycle.period == result.cycle.period
    assert np.array_equal(cycle.series.coef, result.cycle.series.coef)
    spectrum = load_spectrum(out)
    assert np.array_equal(spectrum.multipliers, result.spectrum.multipliers)
    manifold = load_manifold(out)
    assert manifold.nominal_order == result.manifold.nominal_order
    for n in range(manifold.total_order + 1):
        assert np.array_equal(
            manifold.order_series(n).coef, result.manifold.order_series(n).coef
        )
    response = load_response(out)
    assert response.order == result.response.order
    assert response.solvability_residual == result.response.solvability_residual


def test_staged_subcommands_resume(tmp_path):
    cfg, out = _write_cfg(tmp_path)
    assert main(["cycle", "--config", cfg]) == 0
    assert os.path.exists(os.path.join(out, "cycle.json"))
    assert not os.path.exists(os.path.join(out, "spectrum.json"))
    cycle_digest = sha256_file(os.path.join(out, "cycle_coeff.csv"))

    assert main(["floquet", "--config", cfg]) == 0
    assert os.path.exists(os.path.join(out, "spectrum.json"))
    # the cycle stage was reused, not recomputed
    assert sha256_file(os.path.join(out, "cycle_coeff.csv")) == cycle_digest

    assert main(["manifold", "--config", cfg]) == 0
    assert os.path.exists(os.path.join(out, "manifold.json"))
    assert main(["response", "--config", cfg]) == 0
    assert main(["validate", "--config", cfg]) == 0
    manifest = json.load(open(os.path.join(out, "manifest.json")))
    assert manifest["validation"]["order0_residual"] < 1e-10

    assert main(["export", "--config", cfg, "--what", "all", "--format", "csv"]) == 0
    assert os.path.exists(os.path.join(out, "exports", "curve_cycle.csv"))


def test_determinism_byte_identical(tmp_path):
    """Two runs with the same config produce identical artifact bytes."""
    outs = []
    for name in ("a", "b"):
        cfg, out = _write_cfg(tmp_path / name if False else tmp_path, out_name=name)
        # fresh config file per run directory
        cfg_path = tmp_path / f"{name}.cfg"
        cfg_path.write_text(ORACLE_CFG.format(out=tmp_path / name))
        assert main(["run", "--config", str(cfg_path)]) == 0
        assert main([
            "export", "--config", str(cfg_path), "--what", "all", "--format", "csv",
        ]) == 0
        outs.append(tmp_path / name)
    a_files = sorted(os.listdir(outs[0] / "exports"))
    b_files = sorted(os.listdir(outs[1] / "exports"))
    assert a_files == b_files
    for name in a_files:
        assert (outs[0] / "exports" / name).read_bytes() == (
            outs[1] / "exports" / name
        ).read_bytes(), name
    # the primary CSV artifacts are byte-identical too
    for name in sorted(os.listdir(outs[0])):
        if name.endswith(".csv"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_exit_code_missing_config(tmp_path):
    assert main(["run", "--config", str(tmp_path / "absent.cfg")]) == 4


def test_exit_code_bad_config(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("cycle.grid_N = 999\n")
    assert main(["run", "--config", str(cfg)]) == 4


def test_exit_code_validation_failure(tmp_path):
    cfg = tmp_path / "strict.cfg"
    cfg.write_text(
        ORACLE_CFG.format(out=tmp_path / "out")
        + "validation.tolerances = 1e-30\n"
    )
    assert main(["run", "--config", cfg.as_posix()]) == 2


def test_exit_code_numerical_abort(tmp_path):
    # a state far outside the basin blows up during relaxation
    cfg = tmp_path / "blowup.cfg"
    cfg.write_text(
        "model.name = ei\n"
        "cycle.guess = 0.1, 1000.0, 0.0, 0.0, 0.0, 0.0\n"
        "cycle.relax_time = 100.0\n"
        "cycle.grid_N = 128\n"
        f"output.directory = {tmp_path / 'out'}\n"
    )
    assert main(["run", "--config", str(cfg)]) == 3


def test_exit_code_unresolved_grid(tmp_path):
    # a grid too coarse for the orbit's spectrum aborts with a clear message
    cfg = tmp_path / "coarse.cfg"
    cfg.write_text(
        "model.name = ei\n"
        "cycle.grid_N = 128\n"
        f"output.directory = {tmp_path / 'out'}\n"
    )
    assert main(["run", "--config", str(cfg)]) == 3


def test_resonance_abort_keeps_partial_artifacts(tmp_path, monkeypatch):
    """A flagged resonance halts the pipeline with the offending index."""
    import slowphase.pipeline as pipeline_mod
    from slowphase.cycle import ResonanceReport

    def fake_check(spectrum, order, tol):
        return ResonanceReport(
            order=order, tol=tol,
            entries=[((2,), 0, 0.0)], flagged=[((2,), 0, 0.0)],
            manifold_divisors={}, phase_divisors={}, amplitude_divisors={},
        )

    monkeypatch.setattr(pipeline_mod, "check_resonances", fake_check)
    config = RunConfig(
        model="oracle", guess=(1.3, 0.0), relax_time=20.0, grid_size=128,
        order=3, out_dir=str(tmp_path / "out"),
    )
    from slowphase.errors import ResonanceError

    with pytest.raises(ResonanceError):
        run_pipeline(config)
    manifest = json.load(open(tmp_path / "out" / "manifest.json"))
    assert manifest["failed_stage"] == "floquet"
    assert "multi-index" in manifest["error"]
    assert os.path.exists(tmp_path / "out" / "cycle.json")


def test_export_plotdata_format(oracle_run):
    result = oracle_run.result
    files = export_artifacts(result, "all", "plotdata")
    (path,) = files
    with open(path) as fh:
        header = fh.readline().strip()
        first = fh.readline().strip().split(",")
    assert header == "theta,sigma,component,value"
    assert first[2].startswith(("K.", "Z.", "I."))


def test_export_selector_validation(oracle_run):
    from slowphase.errors import ConfigError

    with pytest.raises(ConfigError):
        export_artifacts(oracle_run.result, "bogus", "csv")
    with pytest.raises(ConfigError):
        export_artifacts(oracle_run.result, "all", "bogus")
