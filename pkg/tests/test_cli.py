import numpy as np
import pytest

from nfwchan import dataio
from nfwchan.bench import read_csv
from nfwchan.cli import main
from nfwchan.denoiser import load_checkpoint


def run(argv):
    return main([str(a) for a in argv])


GEOM = ["--antennas", "8", "--subcarriers", "4", "--paths", "2"]


class TestGenData:
    def test_writes_dataset(self, tmp_path, capsys):
        out = tmp_path / "train.nfwc"
        assert run(["gen-data", *GEOM, "--count", 12, "--seed", 1, "--out", out]) == 0
        batch, _ = dataio.read_complex_batch(out, dataio.MAGIC_CHANNELS)
        assert batch.shape == (12, 8, 4)
        assert "12" in capsys.readouterr().out

    def test_config_file_overrides_flags(self, tmp_path):
        cfg_file = tmp_path / "sys.cfg"
        cfg_file.write_text("num_antennas = 6\nnum_subcarriers = 3\nnum_paths = 2\n")
        out = tmp_path / "d.nfwc"
        run(["gen-data", "--config", cfg_file, *GEOM, "--count", 2, "--out", out])
        batch, _ = dataio.read_complex_batch(out)
        assert batch.shape == (2, 6, 3)


class TestTrainEstimate:
    def test_train_then_estimate(self, tmp_path, capsys):
        data = tmp_path / "train.nfwc"
        run(["gen-data", *GEOM, "--count", 48, "--out", data])
        ckpt = tmp_path / "model.nfwn"
        hist = tmp_path / "hist.csv"
        assert run(["train", "--data", data, "--epochs", 2, "--batch", 16,
                    "--hidden", 4, "--blocks", 1, "--steps", 10,
                    "--out", ckpt, "--history", hist]) == 0
        params, scale, info = load_checkpoint(ckpt)
        assert info[0] == 10 and scale > 0
        assert len(hist.read_text().strip().splitlines()) == 1 + 2

        capsys.readouterr()
        assert run(["estimate", *GEOM, "--estimators", "ls,diffusion",
                    "--snr", 10, "--trials", 2, "--checkpoint", ckpt]) == 0
        out = capsys.readouterr().out
        assert "ls:" in out and "diffusion:" in out


class TestCorr:
    def test_antenna_csv(self, tmp_path):
        out = tmp_path / "corr.csv"
        assert run(["corr", "--antennas", "16", "--kind", "antenna", "--lag", 2,
                    "--stride", 8, "--draws", 2000, "--out", out]) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0].startswith("kind,")
        assert len(lines) > 1

    def test_subcarrier_stdout(self, capsys):
        assert run(["corr", "--antennas", "8", "--kind", "subcarrier", "--lag", 1,
                    "--stride", 4, "--draws", 2000]) == 0
        assert "subcarrier," in capsys.readouterr().out


class TestSweepReport:
    def test_sweep_and_report(self, tmp_path, capsys):
        out = tmp_path / "sweep.csv"
        assert run(["sweep", *GEOM, "--variable", "snr", "--grid", 0, 10,
                    "--trials", 3, "--estimators", "ls", "--out", out]) == 0
        meta, rows = read_csv(out)
        assert len(rows) == 2
        capsys.readouterr()
        assert run(["report", out]) == 0
        printed = capsys.readouterr().out
        assert "mean NMSE" in printed and "ls" in printed

    def test_unknown_estimator_fails(self, tmp_path):
        with pytest.raises(ValueError):
            run(["sweep", *GEOM, "--grid", 0, "--estimators", "magic",
                 "--out", tmp_path / "x.csv"])


def test_requires_subcommand(capsys):
    with pytest.raises(SystemExit):
        main([])
