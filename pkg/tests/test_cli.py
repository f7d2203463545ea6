"""The command-line client (in-process service transport)."""

import json

import numpy as np
import pytest
from click.testing import CliRunner

from fragscript.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def invoke(runner, *args):
    result = runner.invoke(main, list(args), catch_exceptions=False)
    return result


def test_check_table_output(runner):
    result = invoke(runner, "check", "-e", "a=-2;b=sqrt(a);a=b+1;")
    assert result.exit_code == 0
    assert "F^6(bot) = F^7(bot)" in result.output
    lines = [l for l in result.output.splitlines() if l.startswith("a ")]
    assert "complex" in lines[0]
    assert "well typed: yes" in result.output


def test_graph_dot_output(runner, tmp_path):
    out = tmp_path / "g.dot"
    result = invoke(runner, "graph", "-e", "1/2+1/2*sin(|#|-seconds())",
                    "-o", str(out))
    assert result.exit_code == 0
    dot = out.read_text()
    assert dot.count("lightblue") == 3
    assert dot.count("orange") == 6


def test_graph_ast_dump(runner):
    result = invoke(runner, "graph", "--ast", "-e", "a = 1")
    assert result.exit_code == 0
    body = json.loads(result.output)
    assert body["statements"][0]["kind"] == "Assign"


def test_compile_writes_bundle(runner, tmp_path):
    out = tmp_path / "wave.artifact.json"
    result = invoke(runner, "compile", "-e", "1/2+1/2*sin(|#|-seconds())",
                    "-o", str(out))
    assert result.exit_code == 0
    bundle = json.loads(out.read_text())
    assert set(bundle) == {"glsl", "uniforms", "textures", "typeKey"}


def test_builtins_listing(runner):
    result = invoke(runner, "builtins")
    assert result.exit_code == 0
    assert "sqrt/1" in result.output
    assert "seconds/0" in result.output and "impure" in result.output


def test_builtins_table_matches_golden(runner):
    import pathlib
    golden = pathlib.Path(__file__).parent / "data" / "builtins_table.txt"
    result = invoke(runner, "builtins")
    assert result.output == golden.read_text()


def test_run_outputs_are_deterministic(runner, tmp_path):
    args = ["run", "-e", "1/2+1/2*sin(|#|-seconds())", "--size", "8", "8",
            "--clock", "1.25"]
    a_png, a_f32 = tmp_path / "a.png", tmp_path / "a.f32"
    b_png, b_f32 = tmp_path / "b.png", tmp_path / "b.f32"
    r1 = invoke(runner, *args, "-o", str(a_png), "--floats", str(a_f32))
    r2 = invoke(runner, *args, "-o", str(b_png), "--floats", str(b_f32))
    assert r1.exit_code == 0 and r2.exit_code == 0
    assert a_png.read_bytes() == b_png.read_bytes()
    assert a_f32.read_bytes() == b_f32.read_bytes()


def test_run_cpu_backend_matches_sim(runner, tmp_path):
    sim = tmp_path / "sim.f32"
    cpu = tmp_path / "cpu.f32"
    base = ["run", "-e", "1/2+1/2*sin(|#|-seconds())", "--size", "8", "8"]
    assert invoke(runner, *base, "--floats", str(sim)).exit_code == 0
    assert invoke(runner, *base, "--backend", "cpu", "--floats", str(cpu)).exit_code == 0
    a = np.frombuffer(sim.read_bytes(), dtype="<f4")
    b = np.frombuffer(cpu.read_bytes(), dtype="<f4")
    assert np.abs(a - b).max() <= 1e-5


def test_user_errors_exit_one(runner):
    result = invoke(runner, "check", "-e", "a = (")
    assert result.exit_code == 1
    result = invoke(runner, "run")
    assert result.exit_code == 1
    result = invoke(runner, "run", "-e", "x", "--backend", "harness")
    assert result.exit_code == 1  # no harness url


def test_corpus_single_entry(runner):
    result = invoke(runner, "corpus", "--name", "wave")
    assert result.exit_code == 0
    assert "PASS wave" in result.output
