"""The narrative demos stay importable and the quick one runs end to end."""

import py_compile
import runpy
from pathlib import Path

import pytest

DEMOS = sorted((Path(__file__).resolve().parent.parent / "demos").glob("*.py"))


@pytest.mark.parametrize("path", DEMOS, ids=[p.name for p in DEMOS])
def test_compiles(path):
    py_compile.compile(str(path), doraise=True)


def test_airy_demo_runs(capsys):
    runpy.run_path(str(DEMOS[0]), run_name="__main__")
    out = capsys.readouterr().out
    assert "True" in out and "predicted" in out
