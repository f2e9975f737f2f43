import hashlib
from pathlib import Path

import numpy as np
import pytest

from sstboot.cli import main, read_config_file, resolve, ConfigError
from sstboot.fileio import read_series_csv
from sstboot.simgen import gen_ahm, gen_null

SMALL = ["--n", "1024", "--d", "64"]


def digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_simulate_null_rows(tmp_path):
    assert main(["simulate", "null", "--n", "2048", "--seed", "1", "--out-dir", str(tmp_path)]) == 0
    lines = (tmp_path / "simulated.csv").read_text().splitlines()
    assert lines[0] == "time_s,value" and len(lines) == 2049
    assert (tmp_path / "run_manifest.txt").exists()


def test_simulate_ahm_truth_columns(tmp_path):
    assert main(["--seed", "1", "--out-dir", str(tmp_path), "simulate", "ahm", "--n", "2048"]) == 0
    header = (tmp_path / "simulated.csv").read_text().splitlines()[0]
    assert header == "time_s,value,am,if_hz,phase"
    data = np.loadtxt(tmp_path / "simulated.csv", delimiter=",", skiprows=1)
    tr = gen_ahm(2048, 1)
    np.testing.assert_array_equal(data[:, 2], tr.am)


def test_simulate_seeds_differ(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["simulate", "null", "--n", "256", "--seed", "1", "--out-dir", str(a)])
    main(["simulate", "null", "--n", "256", "--seed", "2", "--out-dir", str(b)])
    assert digest(a / "simulated.csv") != digest(b / "simulated.csv")


def test_analyze_writes_five_artifacts_deterministically(tmp_path):
    runs = []
    for k in range(2):
        out = tmp_path / f"r{k}"
        assert main(["analyze", "--simulate", "ahm", "--seed", "7", "--out-dir", str(out), *SMALL]) == 0
        runs.append(out)
    names = ["stft.csv", "sst.csv", "ridge.csv", "recon.csv", "sst.png"]
    for name in names:
        assert digest(runs[0] / name) == digest(runs[1] / name), name
    assert sorted(p.name for p in runs[0].iterdir()) == sorted(names + ["run_manifest.txt"])


def test_exported_series_reingests(tmp_path):
    main(["simulate", "null", "--n", "2048", "--seed", "4", "--out-dir", str(tmp_path)])
    back = read_series_csv(tmp_path / "simulated.csv", rate_hz=2048**0.5)
    np.testing.assert_allclose(back.samples, gen_null(2048, 4).samples, atol=1e-12)
    out = tmp_path / "an"
    rc = main(["analyze", "--input", str(tmp_path / "simulated.csv"), "--rate", "45.254833995939045",
               "--d", "64", "--out-dir", str(out)])
    assert rc == 0 and (out / "recon.csv").exists()


def test_missing_rate_exits_2(tmp_path, capsys):
    p = tmp_path / "x.csv"
    p.write_text("\n".join(str(v) for v in range(100)))
    assert main(["analyze", "--input", str(p), "--out-dir", str(tmp_path)]) == 2
    assert "rate_hz" in capsys.readouterr().err


def test_bad_values_exit_2(tmp_path, capsys):
    assert main(["analyze", "--simulate", "ahm", "--n", "100"]) == 2
    assert "n:" in capsys.readouterr().err
    assert main(["bootstrap", "--simulate", "null", "--n-boot", "10"]) == 2
    assert "n_boot" in capsys.readouterr().err
    assert main(["analyze", "--simulate", "null", "--d", "abc"]) == 2
    assert "d:" in capsys.readouterr().err
    assert main(["analyze"]) == 2


def test_numeric_failure_exits_3(tmp_path, capsys):
    rc = main(["analyze", "--simulate", "null", "--n", "256", "--beta", "0.01", "--out-dir", str(tmp_path)])
    assert rc == 3
    assert "stage 'analysis'" in capsys.readouterr().err


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nd = 96\nn_boot = 50\nseed = 3\n")
    cmd, c, src = resolve(["--config", str(cfg), "bootstrap", "--simulate", "null", "--seed", "9"])
    assert cmd == "bootstrap"
    assert (c.d, c.n_boot, c.seed, c.b) == (96, 50, 9, 2)
    assert (src["d"], src["seed"], src["b"]) == ("config", "flag", "default")


def test_config_file_errors(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("nonsense = 1\n")
    with pytest.raises(ConfigError) as err:
        read_config_file(p)
    assert err.value.field == "nonsense"
    assert main(["--config", str(tmp_path / "missing.cfg"), "analyze", "--simulate", "null"]) == 2


def test_manifest_echoes_defaults(tmp_path):
    main(["analyze", "--simulate", "null", "--out-dir", str(tmp_path), *SMALL])
    text = (tmp_path / "run_manifest.txt").read_text()
    assert "beta_s = 1.0  # default" in text
    assert "d = 64  # flag" in text
    assert "window_m = 32  # derived" in text


def test_bootstrap_and_threshold_outputs(tmp_path):
    common = ["--simulate", "null", "--seed", "2", "--n-boot", "40", "--n-freqs", "16", *SMALL]
    assert main(["bootstrap", "--assume-null", "--out-dir", str(tmp_path / "b"), *common]) == 0
    assert main(["threshold", "--assume-null", "--out-dir", str(tmp_path / "t"), *common]) == 0
    bands = np.loadtxt(tmp_path / "b" / "bands.csv", delimiter=",", skiprows=1)
    assert bands.shape == (1024 * 64, 4) and np.all(bands[:, 2] <= bands[:, 3])
    thr = np.loadtxt(tmp_path / "t" / "threshold.csv", delimiter=",", skiprows=1)
    assert thr.shape == (1024 * 64, 3) and np.all(thr[:, 2] >= 0)
    assert (tmp_path / "t" / "sst_thresholded.png").exists()
    assert (tmp_path / "b" / "tvar_model.txt").read_text().startswith("2,4,legendre")


def test_bootstrap_non_null_and_jobs_independence(tmp_path):
    common = ["--simulate", "ahm", "--seed", "5", "--n-boot", "40", "--n-freqs", "16", *SMALL]
    assert main(["bootstrap", "--jobs", "1", "--out-dir", str(tmp_path / "j1"), *common]) == 0
    assert main(["bootstrap", "--jobs", "2", "--out-dir", str(tmp_path / "j2"), *common]) == 0
    assert digest(tmp_path / "j1" / "bands.csv") == digest(tmp_path / "j2" / "bands.csv")
