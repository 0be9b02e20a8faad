import json
import subprocess
import sys

import pytest

from icsg.benchmarks import fig_b1, robot
from icsg.cli import main, run_check
from icsg.model import dump_model, load_model, perturb

B1 = '<<p1>> Pmax=? [ F<=2 "goal" ]'
ONE_SHOT = '<<p1:p2>>max=? ( R{"r1"}[ C<=2 ] + R{"r2"}[ C<=2 ] )'
A2 = '<<p1:p2>>max=? ( P[ F<=2 "g1" ] + P[ F<=2 "g2" ] )'


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def b1_file(tmp_path):
    p = tmp_path / "b1.json"
    dump_model(fig_b1(), p)
    return str(p)


def test_zero_sum_check(capsys, b1_file):
    code, out, _ = run(capsys, "check", b1_file, "--prop", B1, "--json")
    assert code == 0
    d = json.loads(out)
    assert d["value"] == 0.6 and d["mode"] == "ICSG-adversarial"


def test_nonzero_sum_check_by_benchmark_name(capsys):
    code, out, _ = run(capsys, "check", "one_shot", "--prop", ONE_SHOT, "--epsilon-ne", "0.05", "--json")
    assert code == 0 and json.loads(out)["value"] == [1.0, 1.0]


def test_no_rne_exit_code(capsys):
    code, out, err = run(capsys, "check", "fig_a2", "--prop", A2, "--json")
    assert code == 2
    d = json.loads(out)
    assert d["no_rne"]["state_name"] == "s0" and "no robust equilibrium" in err


@pytest.mark.parametrize("argv", [
    ["check", "no_such_file.json", "--prop", B1],
    ["check", "fig_b1", "--prop", "<<p1>> Pmax=? [ G x ]"],
    ["check", "fig_b1", "--prop", '<<p9>> Pmax=? [ F "goal" ]'],
    ["gen", "robot", "--param", "l=x", "-o", "/dev/null"],
    ["perturb", "fig_b1", "--eps", "0.1", "-o", "/dev/null"],
])
def test_errors_exit_one(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1 and err.startswith("icsg: error:")


def test_json_is_deterministic_apart_from_wall_time(capsys, b1_file):
    outs = []
    for _ in range(2):
        _, out, _ = run(capsys, "check", b1_file, "--prop", B1, "--json", "--values")
        d = json.loads(out)
        d["diagnostics"].pop("wall_time")
        outs.append(json.dumps(d, sort_keys=True))
    assert outs[0] == outs[1]


def test_values_dump():
    res = run_check(fig_b1(), B1, values=True)
    assert res.values == {"s0": 0.6, "s1": 0.0, "s2": 1.0}
    nz = run_check("one_shot", ONE_SHOT, epsilon_ne=0.05, values=True)
    assert nz.values["tAA"] == [1.0, 1.0]


def test_strategy_bundle(capsys, tmp_path, b1_file):
    out = tmp_path / "strat.json"
    code, _, _ = run(capsys, "check", b1_file, "--prop", B1, "--strategy", str(out))
    assert code == 0
    bundle = json.loads(out.read_text())
    assert bundle["time_varying"]
    first = next(e for e in bundle["entries"] if e["state"] == "s0" and e["step"] == 0)
    assert first["players"]["p1"] == {"a": 1.0}
    assert first["nature"]["a,a"] == {"s0": 0.2, "s1": 0.3, "s2": 0.5}


def test_nz_strategy_bundle():
    res = run_check("one_shot", ONE_SHOT, epsilon_ne=0.05, strategy=True)
    e = next(e for e in res.strategy["entries"] if e["state"] == "s0")
    assert e["players"] == {"p1": {"A": 1.0}, "p2": {"A": 1.0}}
    assert e["nature"]["B,B"] == {"xBB": 0.2, "yBB": 0.8}


def test_gen_and_perturb_round_trip(capsys, tmp_path):
    g = tmp_path / "robot.json"
    p = tmp_path / "robot_p.json"
    assert run(capsys, "gen", "robot", "--param", "l=2", "-o", str(g))[0] == 0
    assert load_model(g) == robot(2)
    assert run(capsys, "perturb", str(g), "--eps", "0.05", "-o", str(p))[0] == 0
    assert load_model(p) == perturb(robot(2), 0.05)
    # re-reading and re-writing gives the same file
    q = tmp_path / "again.json"
    dump_model(load_model(p), q)
    assert q.read_text() == p.read_text()


def test_text_output(capsys, b1_file):
    code, out, _ = run(capsys, "check", b1_file, "--prop", B1)
    assert code == 0 and "value: 0.6" in out


def test_oracle_subcommand(capsys):
    code, out, _ = run(capsys, "oracle", "fig_b1", "--prop", B1)
    assert code == 0 and float(out) == pytest.approx(0.6)


def test_console_entry_point(b1_file):
    r = subprocess.run([sys.executable, "-m", "icsg", "check", b1_file, "--prop", B1, "--json"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["value"] == 0.6
