import json

import pytest

from wrightiv.config import ExperimentConfig, default_config, derive_seed, load_config
from wrightiv.exceptions import SchemaError
from wrightiv.montecarlo import fit_dataset, run_montecarlo
from wrightiv.structural import simulate_dataset


def test_defaults_and_precedence(tmp_path):
    cfg = ExperimentConfig.from_dict()
    assert cfg.n == 2000 and cfg.k_steps == 2 and cfg.level == 0.95
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"dgp": {"n": 300}, "estimator": {"k_steps": 3}}))
    from_file = load_config(path)
    assert from_file.n == 300 and from_file.k_steps == 3
    flagged = from_file.override(n=150, k_steps=None)
    assert flagged.n == 150 and flagged.k_steps == 3


@pytest.mark.parametrize("doc", [
    {"dgp": {"nn": 3}},
    {"estimator": {"mode": "both"}},
    {"estimator": {"omega_kind": "hac"}},
    {"estimator": {"clr_draws": 50}},
    {"estimator": {"level": 1.5}},
    {"replications": {"count": 0}},
    {"dgp": {"params": {"alpha1": 1.0, "beta1": 0.5}}},
    {"estimator": "gmm"},
])
def test_schema_errors(doc):
    with pytest.raises(SchemaError):
        ExperimentConfig.from_dict(doc)


def test_invalid_json_reports_line(tmp_path):
    path = tmp_path / "c.json"
    path.write_text('{\n  "dgp": {\n    "n": ,\n  }\n}\n')
    with pytest.raises(SchemaError) as info:
        load_config(path)
    assert info.value.line == 3
    with pytest.raises(OSError):
        load_config(tmp_path / "missing.json")


def test_default_config_is_a_copy():
    doc = default_config()
    doc["dgp"]["n"] = 5
    assert default_config()["dgp"]["n"] == 2000


def test_seed_derivation():
    assert derive_seed(0, 1) == derive_seed(0, 1)
    assert len({derive_seed(b, i) for b in range(3) for i in range(50)}) == 150


def _small_cfg(**rep):
    doc = {"dgp": {"n": 200}, "replications": {"count": 6, "base_seed": 3, **rep}}
    return ExperimentConfig.from_dict(doc)


def test_count_one_reduces_to_single_estimate():
    cfg = _small_cfg(count=1)
    report = run_montecarlo(cfg)
    rec = report.replications[0]
    data = simulate_dataset(cfg.params, cfg.shifters, cfg.n, derive_seed(3, 0))
    assert rec["theta_hat"] == fit_dataset(data, cfg).theta_hat.tolist()
    assert report.summary["replications"] == 1


def test_report_fields_and_ranges():
    cfg = _small_cfg(clr=True)
    cfg = cfg.override(clr_draws=100)
    report = run_montecarlo(cfg)
    s = report.summary
    assert s["replications"] == len(report.replications) == 6
    assert s["failures"] == 0
    for key in ("wald_joint_coverage", "ar_coverage", "clr_coverage", "cue_within_3se_rate"):
        assert 0.0 <= s[key] <= 1.0
    for entry in s["parameters"].values():
        assert 0.0 <= entry["wald_coverage"] <= 1.0
        assert entry["rmse"] >= abs(entry["bias"])
    doc = json.loads(report.to_json())
    assert "timing" not in doc
    assert "timing" in json.loads(report.to_json(include_timing=True))


def test_threads_do_not_change_output():
    cfg = _small_cfg()
    assert run_montecarlo(cfg, threads=1).to_json() == run_montecarlo(cfg, threads=4).to_json()


def test_failures_recorded_not_raised():
    # supply shifter identically zero: every replication fails identification
    doc = {"dgp": {"n": 50, "shifters": {"dim_zd": 1, "dim_zs": 1, "dim_w": 2,
                                         "k1_loadings_zs": [0.0], "sd_zs": [0.0]}},
           "replications": {"count": 2, "cue": False}}
    report = run_montecarlo(ExperimentConfig.from_dict(doc))
    assert report.summary["failures"] == 2
    assert all(r["error"].startswith("IdentificationError") for r in report.replications)
