import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from piezobeam.cli import main
from piezobeam.operator import load_matrix

DOCS = Path(__file__).resolve().parents[1] / "docs"

BASE = """
[params]
m = 0.5

[kernel]
kind = exponential
k = 1.0

[grid]
n_x = 16
n_s = 4

[sim]
t_final = 2.0
record_every = 2
initial = sine

[scan]
lambda_min = 1.0
lambda_max = 40.0
points = 9

[output]
directory = {out}
"""


def write_cfg(tmp_path, body=None, name="run.cfg", **overrides):
    text = body if body is not None else BASE.format(out=tmp_path / "out")
    for key, value in overrides.items():
        section, _, k = key.partition("__")
        text = _set_key(text, section, k, value)
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _set_key(text, section, key, value):
    lines = text.splitlines()
    out, in_section, done = [], False, False
    for line in lines:
        stripped = line.strip()
        if stripped.startswith("["):
            if in_section and not done:
                out.append(f"{key} = {value}")
                done = True
            in_section = stripped == f"[{section}]"
        elif in_section and stripped.split("=")[0].strip() == key:
            line = f"{key} = {value}"
            done = True
        out.append(line)
    if not done:
        out.append(f"[{section}]" if f"[{section}]" not in text else "")
        out.append(f"{key} = {value}")
    return "\n".join(out)


def read_csv(path):
    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    rows = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    return header, rows


class TestValidate:
    def test_prototype_config_passes(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path)
        assert main(["validate", cfg]) == 0
        assert "holds = True" in capsys.readouterr().out

    def test_mixing_out_of_range_fails(self, tmp_path):
        cfg = write_cfg(tmp_path, params__m="1.5")
        assert main(["validate", cfg]) == 3

    def test_nonmonotone_tabulated_kernel_fails(self, tmp_path):
        body = BASE.format(out=tmp_path / "out").replace(
            "kind = exponential\nk = 1.0",
            "kind = tabulated\ns = 0, 1, 2, 4\nsigma = 1.0, 1.2, 0.5, 0.1\nd_sigma = 1.0")
        cfg = write_cfg(tmp_path, body=body)
        assert main(["validate", cfg]) == 3

    def test_unknown_key_is_parse_error(self, tmp_path):
        cfg = write_cfg(tmp_path, params__bogus="1")
        assert main(["validate", cfg]) == 2

    def test_bad_number_reports_line(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, grid__n_x="many")
        assert main(["validate", cfg]) == 2
        err = capsys.readouterr().err
        assert ".cfg:" in err  # file:line prefix

    def test_missing_file(self, tmp_path):
        assert main(["validate", str(tmp_path / "nope.cfg")]) == 2

    def test_inline_comments_are_stripped(self, tmp_path):
        cfg = write_cfg(tmp_path, kernel__kind="exponential   # prototype",
                        kernel__k="2.0  ; decay rate")
        assert main(["validate", cfg]) == 0


class TestSimulate:
    def test_outputs_and_schema(self, tmp_path):
        cfg = write_cfg(tmp_path)
        assert main(["simulate", cfg]) == 0
        out = tmp_path / "out"
        header, rows = read_csv(out / "energy.csv")
        assert header == ["t", "e1", "e2", "e3", "total", "flux_diss",
                          "memory_diss", "identity_residual"]
        totals = rows[:, 4]
        assert np.all(np.diff(totals) <= 1e-12 * totals[0])
        assert (out / "trajectory.csv").exists()
        summary = json.loads((out / "summary.json").read_text())
        jsonschema = pytest.importorskip("jsonschema")
        schema = json.loads((DOCS / "summary.schema.json").read_text())
        jsonschema.validate(summary, schema)
        assert summary["regime_hint"] == "mixed instantaneous/hereditary heat flux"

    def test_zero_initial_data_gives_zero_energy(self, tmp_path):
        cfg = write_cfg(tmp_path, sim__u_amp="0", sim__v_amp="0", sim__y_amp="0",
                        sim__z_amp="0", sim__w_amp="0")
        assert main(["simulate", cfg]) == 0
        _, rows = read_csv(tmp_path / "out" / "energy.csv")
        assert not rows[:, 1:].any()
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["decay_fit"] is None

    def test_reruns_are_byte_identical(self, tmp_path):
        cfg = write_cfg(tmp_path, sim__initial="random", sim__seed="9")
        assert main(["simulate", cfg, "--output", str(tmp_path / "a")]) == 0
        assert main(["simulate", cfg, "--output", str(tmp_path / "b")]) == 0
        for name in ("energy.csv", "trajectory.csv", "summary.json"):
            assert (tmp_path / "a" / name).read_bytes() == \
                   (tmp_path / "b" / name).read_bytes()

    def test_fourier_limit_hint(self, tmp_path):
        cfg = write_cfg(tmp_path, params__m="0.0", grid__n_s="0")
        assert main(["simulate", cfg]) == 0
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["regime_hint"] == "Fourier limit"


class TestSpectrumScanClassify:
    def test_spectrum_outputs(self, tmp_path):
        cfg = write_cfg(tmp_path)
        assert main(["spectrum", cfg, "--dump-operator"]) == 0
        out = tmp_path / "out"
        header, rows = read_csv(out / "eigs.csv")
        assert header == ["re", "im"]
        assert np.all(rows[:, 0] <= 1e-10)
        assert (out / "eigs.svg").exists()
        a = load_matrix(out / "a_matrix.txt")
        assert a.shape == (rows.shape[0], rows.shape[0])

    def test_scan_outputs(self, tmp_path):
        cfg = write_cfg(tmp_path)
        assert main(["scan", cfg]) == 0
        header, rows = read_csv(tmp_path / "out" / "scan.csv")
        assert header == ["lambda", "norm", "norm_over_lambda_sq"]
        np.testing.assert_allclose(rows[:, 2], rows[:, 1] / rows[:, 0] ** 2,
                                   rtol=1e-12)
        assert (tmp_path / "out" / "scan.svg").exists()
        first = (tmp_path / "out" / "scan.csv").read_bytes()
        assert main(["scan", cfg]) == 0
        assert (tmp_path / "out" / "scan.csv").read_bytes() == first

    def test_classify_desk_mixed_law(self, tmp_path):
        cfg = write_cfg(tmp_path, grid__n_x="32", grid__n_s="8",
                        scan__lambda_max="200.0", scan__points="21")
        assert main(["classify", cfg]) == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        jsonschema = pytest.importorskip("jsonschema")
        schema = json.loads((DOCS / "report.schema.json").read_text())
        jsonschema.validate(report, schema)
        assert report["regime"] == "Exponential"
        assert report["eigenvalues"]["max_real_part"] <= 1e-10

    def test_report_writes_everything(self, tmp_path):
        cfg = write_cfg(tmp_path, scan__lambda_max="50.0")
        assert main(["report", cfg]) == 0
        out = tmp_path / "out"
        for name in ("energy.csv", "trajectory.csv", "summary.json",
                     "eigs.csv", "scan.csv", "report.json",
                     "energy.svg", "scan.svg", "eigs.svg"):
            assert (out / name).exists(), name


def test_console_entry_point(tmp_path):
    cfg = write_cfg(tmp_path)
    proc = subprocess.run([sys.executable, "-m", "piezobeam.cli", "validate", cfg],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
