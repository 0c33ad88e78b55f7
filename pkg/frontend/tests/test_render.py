import hashlib
import os
import shutil

import pytest

from fvdplot import PlotInputError, render
from fvdplot.cli import main

DATA = os.path.join(os.path.dirname(__file__), "data")

KINDS = [
    ("decay", "decay"),
    ("rates", "rates-beta"),
    ("rates", "rates-gap"),
    ("phase-diagram", "phase"),
    ("anneal", "anneal"),
    ("two-atom", "two-atom"),
]


def dir_checksums(path):
    sums = {}
    for name in sorted(os.listdir(path)):
        full = os.path.join(path, name)
        if os.path.isfile(full):
            sums[name] = hashlib.sha256(open(full, "rb").read()).hexdigest()
    return sums


@pytest.mark.parametrize("kind,fixture", KINDS)
def test_renders_from_golden(tmp_path, kind, fixture):
    out = str(tmp_path / f"{fixture}.svg")
    render(kind, os.path.join(DATA, fixture), out, deterministic=True)
    blob = open(out, "rb").read()
    assert blob.startswith(b"<?xml")
    assert len(blob) > 2000


@pytest.mark.parametrize("kind,fixture", KINDS)
def test_inputs_unmodified(tmp_path, kind, fixture):
    src = os.path.join(DATA, fixture)
    before = dir_checksums(src)
    render(kind, src, str(tmp_path / "x.svg"), deterministic=True)
    assert dir_checksums(src) == before


@pytest.mark.parametrize("kind,fixture", KINDS)
def test_deterministic_byte_identical(tmp_path, kind, fixture):
    a = str(tmp_path / "a.svg")
    b = str(tmp_path / "b.svg")
    src = os.path.join(DATA, fixture)
    render(kind, src, a, deterministic=True)
    render(kind, src, b, deterministic=True)
    assert open(a, "rb").read() == open(b, "rb").read()


def test_pdf_output(tmp_path):
    out = str(tmp_path / "decay.pdf")
    render("decay", os.path.join(DATA, "decay"), out)
    assert open(out, "rb").read()[:5] == b"%PDF-"


def test_cli_roundtrip(tmp_path, capsys):
    out = str(tmp_path / "fig.svg")
    code = main(["decay", "--in", os.path.join(DATA, "decay"), "--out", out,
                 "--deterministic"])
    assert code == 0
    assert os.path.exists(out)


def test_cli_error_exit_code(tmp_path, capsys):
    code = main(["decay", "--in", str(tmp_path), "--out",
                 str(tmp_path / "x.svg")])
    assert code == 2
    assert "not found" in capsys.readouterr().err


def test_empty_csv_rejected(tmp_path):
    src = tmp_path / "run"
    src.mkdir()
    (src / "trajectory.csv").write_text("t_us,omega_t_over_2pi,neel\n")
    out = str(tmp_path / "x.svg")
    with pytest.raises(PlotInputError, match="no data rows"):
        render("decay", str(src), out)
    assert not os.path.exists(out)


def test_missing_column_named(tmp_path):
    src = tmp_path / "run"
    src.mkdir()
    shutil.copy(os.path.join(DATA, "decay", "fits.json"), src / "fits.json")
    (src / "trajectory.csv").write_text("t_us,wrong\n0.0,1.0\n")
    with pytest.raises(PlotInputError, match="neel"):
        render("decay", str(src), str(tmp_path / "x.svg"))


def test_unknown_kind(tmp_path):
    with pytest.raises(PlotInputError, match="unknown figure kind"):
        render("pie-chart", str(tmp_path), str(tmp_path / "x.svg"))


def test_rates_requires_known_x_column(tmp_path):
    src = tmp_path / "run"
    src.mkdir()
    (src / "grid.csv").write_text("foo,gamma_over_omega\n1.0,0.5\n")
    (src / "fits.json").write_text("{}")
    with pytest.raises(PlotInputError, match="beta_inv or gap_over_omega"):
        render("rates", str(src), str(tmp_path / "x.svg"))
