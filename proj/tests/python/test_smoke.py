import os
import subprocess
from fractions import Fraction

import numpy as np
import pytest

import gsformer


def test_analytic_costs():
    assert gsformer.analytic_ssa(243, 256, 3) == 10_077_696
    assert gsformer.analytic_skt(243, 256, 3) == 47_236_608
    assert gsformer.analytic_stt(243, 256, 3, 3) == 93_934_080
    ratio = Fraction(gsformer.analytic_skt(243, 256, 3), gsformer.analytic_stt(243, 256, 3, 3))
    assert ratio < Fraction(3, 5)


def test_skip_partition():
    assert gsformer.skip_partition(7, 3) == [[0, 3, 6], [1, 4], [2, 5]]


def test_model_forward_and_checkpoint(tmp_path):
    config = {"T": 27, "D": 16, "heads": 2, "C": 8}
    model = gsformer.Model(config, seed=3)
    assert model.param_count() == gsformer.param_count(config)
    frames = np.random.default_rng(0).uniform(-1, 1, size=(27, 17, 2))
    sequence, target = model.forward(frames)
    assert sequence.shape == (27, 17, 3)
    assert target.shape == (17, 3)

    path = tmp_path / "m.ckpt"
    model.save(path)
    again = gsformer.Model.load(path)
    np.testing.assert_array_equal(again.forward(frames)[1], target)
    assert again.config["D"] == 16


def test_run_config_accepted():
    config = gsformer.default_config()
    config["model"]["D"] = 32
    model = gsformer.Model(config)
    assert model.config["D"] == 32
    assert model.param_count() == gsformer.param_count(config["model"])


def test_bad_config_raises():
    with pytest.raises(gsformer.GsfError, match="model.heads"):
        gsformer.Model({"D": 16, "heads": 3})


def test_metrics_on_synthetic_data():
    (inputs, targets), = gsformer.synth_generate(seed=1, count=1, frames=20, noise=0.0)
    assert inputs.shape == (20, 17, 2)
    assert targets.shape == (20, 17, 3)
    assert gsformer.mpjpe(targets, targets) == 0.0
    shifted = targets + np.array([3.0, 4.0, 0.0])
    assert gsformer.mpjpe(shifted, targets) == pytest.approx(5.0)
    value, degenerate = gsformer.p_mpjpe(shifted, targets)
    assert value == pytest.approx(0.0, abs=1e-9)
    assert not degenerate


def test_cost_report_and_cli():
    report = gsformer.cost_report({"T": 27, "D": 32, "heads": 4})
    assert report["empirical_total"] > 0
    code, out, err = gsformer.run_cli(["flops", "-T", "243", "-D", "256", "-m", "3"])
    assert code == 0 and "47236608" in out
    code, _, err = gsformer.run_cli(["--bogus"])
    assert code == 2 and err.startswith("error[E2]")


@pytest.mark.skipif("GSF_CLI" not in os.environ, reason="command-line binary not provided")
def test_binary_print_config():
    result = subprocess.run([os.environ["GSF_CLI"], "--print-config"], capture_output=True, text=True, check=True)
    assert '"model"' in result.stdout
