import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from conftest import simulate_ar
from vibdenoise.cli import main
from vibdenoise.metrics import DenoiseReport, report
from vibdenoise.persistence import load_checkpoint, load_dataset, read_history_csv, read_table, write_table
from vibdenoise.training import predict, split_dataset

SMALL_CONFIG = """\
signal.duration = 1.024
noise.variance = 0.1
noise.seed = 3
model.seq_len = 16
model.d_model = 8
model.n_heads = 2
model.d_ff = 8
train.epochs = 4
train.batch_size = 8
train.seed = 2
"""


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text(SMALL_CONFIG)
    return path


def run(*argv):
    return main([str(a) for a in argv])


def test_help_on_every_subcommand():
    for cmd in ("synth", "ar-denoise", "train", "denoise", "eval", "gradcheck", "export-plot", "sweep"):
        proc = subprocess.run([sys.executable, "-m", "vibdenoise.cli", cmd, "--help"], capture_output=True, text=True)
        assert proc.returncode == 0 and "usage" in proc.stdout


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as info:
        main(["train"])
    assert info.value.code == 2


def test_synth_default_and_determinism(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run("synth", "--out", a, "--seed", 5) == 0
    assert run("synth", "--out", b, "--seed", 5) == 0
    assert a.read_bytes() == b.read_bytes()
    table = read_table(a)
    assert len(table["t"]) == 1000
    assert list(table) == ["t", "clean", "noisy"]


def test_synth_variance_column(tmp_path, config):
    path = tmp_path / "s.csv"
    cfg = tmp_path / "long.cfg"
    cfg.write_text("signal.duration = 100\nnoise.variance = 0.1\n")
    assert run("synth", "--config", cfg, "--out", path) == 0
    t = read_table(path)
    assert 0.095 <= np.var(t["noisy"] - t["clean"]) <= 0.105


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("model.seq_len = 8\nmodel.colour = red\n")
    assert run("synth", "--config", bad, "--out", tmp_path / "x.csv") == 3
    assert "line 2" in capsys.readouterr().err


def test_ar_denoise_zero_iterations(tmp_path):
    sig = tmp_path / "s.csv"
    run("synth", "--out", sig)
    out, model = tmp_path / "o.csv", tmp_path / "m.txt"
    assert run("ar-denoise", "--in", sig, "--iterations", 0, "--out", out, "--model-out", model) == 0
    t = read_table(out)
    np.testing.assert_array_equal(t["denoised"], t["noisy"])
    assert model.read_text() == ""


def test_ar_denoise_recovers_ar2_order(tmp_path):
    orders = []
    for seed in range(7):
        x = simulate_ar([0.6, -0.3], 5000, seed)
        sig = tmp_path / f"ar{seed}.csv"
        write_table(sig, ["t", "noisy"], [np.arange(x.size) / 1000.0, x])
        model = tmp_path / f"m{seed}.txt"
        assert run("ar-denoise", "--in", sig, "--p-max", 10, "--out", tmp_path / "o.csv", "--model-out", model) == 0
        orders.append(int(model.read_text().split(",")[0]))
    assert sum(o == 2 for o in orders) > len(orders) / 2


def test_bic_no_larger_than_aic_on_white_noise(tmp_path):
    wins = 0
    for seed in range(20):
        x = np.random.default_rng(seed).normal(size=2000)
        sig = tmp_path / "w.csv"
        write_table(sig, ["t", "noisy"], [np.arange(x.size), x])
        found = {}
        for crit in ("aic", "bic"):
            model = tmp_path / f"{crit}.txt"
            run("ar-denoise", "--in", sig, "--p-max", 8, "--criterion", crit, "--out", tmp_path / "o.csv",
                "--model-out", model)
            found[crit] = int(model.read_text().split(",")[0])
        wins += found["bic"] <= found["aic"]
    assert wins >= 18


def test_gradcheck_command(capsys):
    assert run("gradcheck", "--seed", 0, 1) == 0
    first = capsys.readouterr().out
    assert "PASS" in first
    assert run("gradcheck", "--seed", 0, 1) == 0
    assert capsys.readouterr().out == first


def test_gradcheck_negative_control(capsys):
    assert run("gradcheck", "--seed", 0, "--corrupt", "block0.ffn.W1") == 4
    assert "FAIL" in capsys.readouterr().out


@pytest.fixture
def pipeline(tmp_path, config):
    files = {name: tmp_path / name for name in ("sig.csv", "data.bin", "ck.vcln", "hist.csv", "den.csv", "rep.csv")}
    assert run("synth", "--config", config, "--out", files["sig.csv"], "--dataset-out", files["data.bin"]) == 0
    assert run("train", "--config", config, "--data", files["data.bin"], "--checkpoint-out", files["ck.vcln"],
               "--history-out", files["hist.csv"]) == 0
    assert run("denoise", "--checkpoint", files["ck.vcln"], "--in", files["sig.csv"], "--out", files["den.csv"]) == 0
    assert run("eval", "--checkpoint", files["ck.vcln"], "--data", files["data.bin"], "--out", files["rep.csv"]) == 0
    return files


def test_pipeline_outputs(pipeline, config):
    assert len(read_history_csv(pipeline["hist.csv"])) == 4
    den = read_table(pipeline["den.csv"])
    assert len(den["t"]) == len(read_table(pipeline["sig.csv"])["t"])


def test_pipeline_eval_matches_metrics_module(pipeline):
    params, cfg = load_checkpoint(pipeline["ck.vcln"])
    ds = load_dataset(pipeline["data.bin"])
    rep = DenoiseReport.from_csv(pipeline["rep.csv"].read_text())
    ref = report(ds.clean, ds.noisy, predict(params, cfg, ds))
    assert rep.aggregates() == pytest.approx(ref.aggregates(), abs=1e-12)


def test_eval_val_split_reproduces_history(pipeline, config, capsys):
    assert run("eval", "--checkpoint", pipeline["ck.vcln"], "--data", pipeline["data.bin"],
               "--config", config, "--split", "val") == 0
    loss = float(capsys.readouterr().out.split("loss=")[1].split()[0])
    assert abs(loss - read_history_csv(pipeline["hist.csv"])[-1][1]) <= 1e-12


def test_denoise_twice_identical(pipeline, tmp_path):
    again = tmp_path / "again.csv"
    run("denoise", "--checkpoint", pipeline["ck.vcln"], "--in", pipeline["sig.csv"], "--out", again)
    assert again.read_bytes() == pipeline["den.csv"].read_bytes()


def test_denoise_tail_handled(pipeline, tmp_path):
    # 1024 samples are a multiple of 16; trim to force an end-aligned tail window
    table = read_table(pipeline["sig.csv"])
    short = tmp_path / "short.csv"
    write_table(short, ["t", "noisy"], [table["t"][:1000], table["noisy"][:1000]])
    out = tmp_path / "short_den.csv"
    assert run("denoise", "--checkpoint", pipeline["ck.vcln"], "--in", short, "--out", out) == 0
    den = read_table(out)["denoised"]
    full = read_table(pipeline["den.csv"])["denoised"]
    assert den.size == 1000
    np.testing.assert_array_equal(den[:992], full[:992])


def test_corrupted_checkpoint_exit_code(pipeline, capsys):
    blob = bytearray(pipeline["ck.vcln"].read_bytes())
    blob[40] ^= 0x10
    pipeline["ck.vcln"].write_bytes(bytes(blob))
    assert run("eval", "--checkpoint", pipeline["ck.vcln"], "--data", pipeline["data.bin"]) == 5


def test_export_plot(pipeline, tmp_path):
    svg = tmp_path / "p.svg"
    assert run("export-plot", "--in", pipeline["den.csv"], "--out", svg) == 0
    root = ET.fromstring(svg.read_bytes())
    ns = {"s": "http://www.w3.org/2000/svg"}
    legend = root.find("s:g[@class='legend']", ns)
    assert len(legend.findall("s:text", ns)) == 2  # noisy, denoised
    svg2 = tmp_path / "p2.svg"
    run("export-plot", "--in", pipeline["den.csv"], "--out", svg2)
    assert svg.read_bytes() == svg2.read_bytes()
    both = tmp_path / "both.svg"
    run("export-plot", "--in", pipeline["sig.csv"], pipeline["den.csv"], "--out", both)
    assert len(ET.fromstring(both.read_bytes()).find("s:g[@class='legend']", ns).findall("s:text", ns)) == 4


def test_sweep(tmp_path, config):
    out = tmp_path / "sweep"
    assert run("sweep", "--config", config, "--variance", 0.1, 0.2, "--out-dir", out, "--p-max", 4) == 0
    summary = (out / "sweep_summary.csv").read_text().splitlines()
    assert len(summary) == 5
    assert (out / "var0.2_window0.svg").exists()
