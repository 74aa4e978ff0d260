import json

import numpy as np
import pytest

from gasforecast.cli import main
from gasforecast.pipeline import ConfigError, ExperimentConfig, load_config, run, synthetic_frame
from gasforecast.series import load_frame, save_frame

from conftest import write_text


@pytest.fixture
def raw_dumps(tmp_path):
    r = np.random.default_rng(0)
    tx = ["block_number,timestamp,gas_price_gwei,is_contract"]
    blocks = ["block_number,timestamp,base_fee_gwei,gas_used,size_gas,size_bytes"]
    for b in range(400):
        ts = 1_600_000_000 + 13 * b
        blocks.append(f"{b},{ts},{30 + b % 7},{1000 + b},{30000},{5000}")
        for k in range(int(r.integers(0, 4))):
            tx.append(f"{b},{ts},{40 + 10 * np.sin(b / 30) + r.normal():.4f},{k % 2}")
    tx.append("oops,1,2,0")
    return write_text(tmp_path / "tx.csv", tx), write_text(tmp_path / "blocks.csv", blocks)


@pytest.fixture
def frame_file(tmp_path):
    path = tmp_path / "frame.csv"
    save_frame(synthetic_frame(days=3, seed=4), path)
    return path


def write_config(tmp_path, frame_file, name="cfg.json", **over):
    cfg = {"seed": 3, "output_dir": "run", "data": {"frame": str(frame_file)},
           "strategy": {"strategy": "hybrid", "horizon": 2, "n": 12,
                        "network_options": {"units": [4]}, "epochs": 2, "batch_size": 64}}
    cfg.update(over)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def test_ingest_and_frame(raw_dumps, tmp_path, capsys):
    tx, blocks = raw_dumps
    out = tmp_path / "features.csv"
    assert main(["ingest", "--transactions", str(tx), "--blocks", str(blocks), "-o", str(out)]) == 0
    assert "rejected=1" in capsys.readouterr().out
    assert len(out.read_text().splitlines()) - 1 == len(blocks.read_text().splitlines()) - 1
    fr = tmp_path / "frame.csv"
    assert main(["frame", "--features", str(out), "-o", str(fr)]) == 0
    frame = load_frame(fr)
    assert frame.step == 300 and "min_gas_price" in frame.variables
    assert main(["baseline", "--features", str(out)]) == 0
    assert main(["baseline", "--features", str(out), "--method", "gse", "--candidate", "1e9"]) == 0
    assert capsys.readouterr().out.splitlines()[-1] == "1.0"


def test_usage_and_data_exit_codes(tmp_path, capsys):
    assert main(["ingest", "--transactions", "x.csv"]) == 1
    assert main(["nosuch"]) == 1
    assert main(["ingest", "--transactions", str(tmp_path / "none.csv"), "--blocks",
                 str(tmp_path / "none.csv"), "-o", str(tmp_path / "o.csv")]) == 2
    assert "no such file" in capsys.readouterr().err


def test_coherence_self_summary(frame_file, tmp_path, capsys):
    out = tmp_path / "grid.csv"
    plot = tmp_path / "c.png"
    assert main(["coherence", "--frame", str(frame_file), "--x", "min_gas_price",
                 "--y", "min_gas_price", "-o", str(out), "--plot", str(plot)]) == 0
    rows = [ln.split("\t") for ln in capsys.readouterr().out.splitlines()[1:]]
    assert all(float(r[2]) > 0.999 for r in rows)
    n = len(load_frame(frame_file))
    from gasforecast.wavelets import default_scales
    assert len(out.read_text().splitlines()) - 2 == n * len(default_scales(n))
    assert plot.read_bytes()[:4] == b"\x89PNG"
    assert main(["coherence", "--frame", str(frame_file), "--x", "nope", "--y",
                 "min_gas_price", "-o", str(out)]) == 1


def test_denoise_and_mp(frame_file, tmp_path, capsys):
    assert main(["denoise", "--frame", str(frame_file), "--lam", "1", "3", "10",
                 "--wavelet", "bior3.3", "-o", str(tmp_path / "d.csv"),
                 "--plot", str(tmp_path / "d.png")]) == 0
    rmse = [float(l.split("\t")[1]) for l in capsys.readouterr().out.splitlines()[1:]]
    assert rmse == sorted(rmse, reverse=True)
    assert main(["mp", "--frame", str(frame_file), "--window", "48", "-o",
                 str(tmp_path / "p.csv"), "--plot", str(tmp_path / "p.png")]) == 0
    assert main(["mp", "--frame", str(frame_file), "--window", "48", "--rolling", "--step", "288",
                 "-o", str(tmp_path / "snaps")]) == 0
    assert "snapshots=3" in capsys.readouterr().out
    assert len(list((tmp_path / "snaps").iterdir())) == 3


def test_run_evaluate_and_reproduce(frame_file, tmp_path, capsys):
    cfg = write_config(tmp_path, frame_file)
    assert main(["run", str(cfg)]) == 0
    run_dir = tmp_path / "run"
    first = json.loads((run_dir / "manifest.json").read_text())
    report = (run_dir / "lookahead_report.tsv").read_text()
    assert first["status"] == "ok" and first["seed"] == 3
    for f in ("config.json", "table.tsv", "figures/metrics_by_lookahead.png",
              "models/all/member_01.ckpt", "models/all/forecasts.tsv"):
        assert f in first["files"]
    capsys.readouterr()
    assert main(["evaluate", str(run_dir)]) == 0
    assert capsys.readouterr().out == report
    # the echoed config reproduces the run
    echo = tmp_path / "echo.json"
    echo.write_text((run_dir / "config.json").read_text())
    assert main(["run", str(echo)]) == 0
    again = json.loads((run_dir / "manifest.json").read_text())
    assert again["files"] == first["files"]


def test_h1_report_has_one_row(frame_file, tmp_path):
    cfg = write_config(tmp_path, frame_file, strategy={"strategy": "recursive", "horizon": 1,
                                                       "n": 12, "network_options": {"units": [3]},
                                                       "epochs": 1}, figures=False)
    res = run(load_config(cfg))
    assert res.report.horizon == 1
    lines = (res.directory / "lookahead_report.tsv").read_text().splitlines()
    assert [l.split("\t")[0] for l in lines[1:]] == ["1", "avg5", "avg10"]


def test_walk_forward_run(frame_file, tmp_path):
    cfg = write_config(tmp_path, frame_file, walk_forward={"train_span": 400, "stride": 200},
                       figures=False)
    res = run(load_config(cfg))
    # 864 rows: (864 - 400) // 200 + 1 windows
    assert len(res.reports) == 3
    assert res.report.extra == {"spans": 3}
    assert (res.directory / "models" / "w002" / "member_00.ckpt").is_file()
    h1 = np.mean([r.per_lookahead[0].rmse for r in res.reports])
    assert res.report.per_lookahead[0].rmse == pytest.approx(h1, abs=1e-12)


def test_failure_marks_stage(frame_file, tmp_path, capsys):
    cfg = write_config(tmp_path, frame_file, strategy={"strategy": "hybrid", "horizon": 2,
                                                       "n": 5000})
    assert main(["run", str(cfg)]) == 2
    manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
    assert manifest["status"] == "failed" and manifest["failed_stage"] == "prepare:all"
    assert "config.json" in manifest["files"]


def test_config_validation(frame_file, tmp_path):
    with pytest.raises(ConfigError, match="seed"):
        ExperimentConfig.from_dict({"output_dir": "x", "data": {"frame": str(frame_file)},
                                    "strategy": {}})
    with pytest.raises(ConfigError, match="does not exist"):
        ExperimentConfig.from_dict({"seed": 1, "output_dir": "x", "data": {"frame": "missing.csv"},
                                    "strategy": {}})
    with pytest.raises(ConfigError, match="unknown config key"):
        ExperimentConfig.from_dict({"seed": 1, "outdir": "x"})
    with pytest.raises(ConfigError, match="strategy"):
        ExperimentConfig.from_dict({"seed": 1, "output_dir": "x", "data": {"frame": str(frame_file)},
                                    "strategy": {"horizon": 0}})
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["run", str(bad)]) == 1
