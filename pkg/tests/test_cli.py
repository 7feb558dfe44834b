import json
import re
import subprocess
import sys
from pathlib import Path

import pytest

from canforge.can import Flag, gabriel_quiver
from canforge.catalog import system
from canforge.cli import (
    EXIT_INPUT,
    EXIT_OK,
    EXIT_UNCERTIFIED,
    InputError,
    JobSpec,
    dump_report,
    jobspec_from_dict,
    load_jobspec,
    main,
    parse_flag_option,
    render_dot,
    resolve_flags,
    run_job,
)

JOBS = Path(__file__).resolve().parents[1] / "scripts" / "jobs"


def write(tmp_path, text, name="job.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


# -- job specs --------------------------------------------------------------


def test_defaults():
    spec = jobspec_from_dict({"factors": ["x", "y"]})
    assert spec == JobSpec(factors=["x", "y"])
    assert spec.wants("quiver") and spec.wants("ext")


@pytest.mark.parametrize(
    "data, fragment",
    [({"factors": []}, "nonempty"), ({"factors": ["x"], "orders": [4, 5]}, "three"),
     ({"factors": ["x"], "orders": [5, 4, 6]}, "increasing"),
     ({"factors": ["x"], "orders": [4, 5, 60]}, "max order"),
     ({"factors": ["x"], "analyses": ["nope"]}, "unknown"),
     ({"factors": ["x"], "colour": 1}, "unknown keys"),
     ({"factors": ["x"], "quiver_orders": [4]}, "two orders"),
     ({"factors": [1]}, "string")],
)
def test_bad_specs(data, fragment):
    with pytest.raises(InputError, match=fragment):
        jobspec_from_dict(data)


@pytest.mark.parametrize(
    "selector, count",
    [("all", 13), ("all-maximal", 6), ([[1], [1, 2]], 1), ([], 1), ({"permutation": [3, 1, 2]}, 1)],
)
def test_resolve_flags(selector, count):
    assert len(resolve_flags(selector, 3)) == count


@pytest.mark.parametrize("selector", ["some", [[1], [1]], {"permutation": [1, 2]}, {"perm": [1]}])
def test_resolve_flags_errors(selector):
    with pytest.raises(InputError):
        resolve_flags(selector, 3)


@pytest.mark.parametrize(
    "text, parsed",
    [("all", "all"), ("perm=3,1,2", {"permutation": [3, 1, 2]}), ("1;1,2", [[1], [1, 2]]),
     ("empty", [])],
)
def test_parse_flag_option(text, parsed):
    assert parse_flag_option(text) == parsed


def test_example_jobs_load():
    for path in sorted(JOBS.glob("*.toml")):
        load_jobspec(path)


# -- exit codes -------------------------------------------------------------


def test_certified_run(tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(JOBS / "conifold.toml"), "--out", str(out)]) == EXIT_OK
    report = json.loads((out / "report.json").read_text())
    assert report["summary"] == {"flags": 3, "uncertified": [], "exit_code": 0}
    assert sorted(p.name for p in out.glob("*.dot")) == ["quiver_0.dot", "quiver_1.dot",
                                                         "quiver_2.dot"]


def test_growing_ext_is_uncertified(tmp_path):
    assert main(["run", str(JOBS / "double_line.toml"), "--out", str(tmp_path)]) == EXIT_UNCERTIFIED
    report = json.loads((tmp_path / "report.json").read_text())
    (entry,) = report["flags"]
    assert entry["rigidity"]["ext1_total"]["verdict"] == "Growing(slope 1)"
    assert entry["rigidity"]["blocks"][0]["fl_torsion_experimental"] == 0
    assert any("Growing" in r for r in report["summary"]["uncertified"])


@pytest.mark.parametrize(
    "text",
    ['factors = ["x", "y"', 'factors = ["x**2"]', 'factors = ["1+x"]',
     'field = "Q(a): a^2-1"\nfactors = ["x"]', 'field = "F7"\nfactors = ["x"]',
     'factors = ["x", "y"]\nflags = [[1, 2]]'],
)
def test_input_errors(tmp_path, text, capsys):
    assert main(["run", str(write(tmp_path, text))]) == EXIT_INPUT
    assert capsys.readouterr().err.startswith("canforge: input error:")


def test_missing_file(tmp_path):
    assert main(["run", str(tmp_path / "absent.toml")]) == EXIT_INPUT


def test_bad_jobs_count(tmp_path):
    assert main(["run", str(JOBS / "conifold.toml"), "--jobs", "0"]) == EXIT_INPUT


def test_shortcut_commands(capsys):
    assert main(["classify", "--factors", "x", "y", "x+y"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["classification"]["ct"] is True
    assert all(e["ct"]["value"] for e in report["flags"])
    assert main(["charts", "--factors", "x", "y^2-x^3", "--flag", "perm=2,1"]) == EXIT_OK
    (entry,) = json.loads(capsys.readouterr().out)["flags"]
    assert entry["charts"]["levels"][1][0]["gap_factors"] == [2]


def test_gaussian_split_report(capsys):
    assert main(["run", str(JOBS / "gaussian_split.toml")]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    (rep,) = report["factor_formal"]
    assert rep["status"] == "split"
    assert report["classification"]["refinement"]["factor_count"] == 2


# -- DOT --------------------------------------------------------------------


def edges(dot):
    return re.findall(r"^\s+(\w+) -> (\w+)", dot, re.M)


def test_conifold_dot():
    dot = render_dot(gabriel_quiver(system("conifold"), Flag(2, (frozenset({1}),))))
    assert dot.count("[label=") - len(edges(dot)) == 2  # two labelled nodes
    assert sorted(edges(dot)) == sorted([("R", "T__I1_")] * 2 + [("T__I1_", "R")] * 2)


def test_empty_flag_dot_has_only_loops():
    dot = render_dot(gabriel_quiver(system("conifold"), Flag(2, ())))
    assert edges(dot) == [("R", "R")] * 4


# -- determinism ------------------------------------------------------------


def test_report_has_sorted_keys_and_no_timestamps():
    spec = jobspec_from_dict({"factors": ["x", "y"], "analyses": ["classify", "charts"]})
    text = dump_report(run_job(spec)[0])
    assert text == json.dumps(json.loads(text), sort_keys=True, indent=2) + "\n"
    assert not re.search(r"time|date", text, re.I)


def test_worker_count_does_not_change_output():
    spec = jobspec_from_dict({"factors": ["x", "y", "x+y"], "flags": "all",
                              "analyses": ["classify", "charts", "quiver"],
                              "quiver_orders": [3, 4]})
    one, dots1 = run_job(spec, jobs=1)
    two, dots2 = run_job(spec, jobs=3)
    assert dump_report(one) == dump_report(two) and dots1 == dots2


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "canforge.cli", "classify", "--factors", "x"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["classification"]["smooth"] is True
