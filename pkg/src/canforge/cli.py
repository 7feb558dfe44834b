"""canforge command line: run a TOML job, or use the classify/charts/quiver shortcuts.

Exit codes: 0 when every verdict is certified, 2 when some verdict is
Growing, Inconclusive or experimental, 1 on input errors.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .arith import ParseError, parse_field
from .can import (
    QUIVER_ORDERS,
    Flag,
    Quiver,
    blowup_charts,
    build_flag_module,
    classify_base,
    classify_contractions,
    ct_for_flag,
    enumerate_flags,
    flag_of_permutation,
    gabriel_quiver,
    keydb_types,
    rigidity_report,
    singular_points,
)
from .factor import factorization_report
from .mf import FactorSystem

ANALYSES = ("classify", "charts", "quiver", "ext", "factor-formal", "full-report")
DEFAULT_MAX_ORDER = 10
EXIT_OK, EXIT_INPUT, EXIT_UNCERTIFIED = 0, 1, 2


class InputError(ValueError):
    pass


@dataclass
class JobSpec:
    field: str = "Q"
    factors: list[str] = dc_field(default_factory=list)
    flags: object = "all-maximal"  # "all" | "all-maximal" | chain | {"permutation": [...]}
    orders: list[int] = dc_field(default_factory=lambda: [4, 5, 6])
    quiver_orders: list[int] = dc_field(default_factory=lambda: list(QUIVER_ORDERS))
    analyses: list[str] = dc_field(default_factory=lambda: ["full-report"])
    formal_order: int = 8
    max_order: int = DEFAULT_MAX_ORDER

    def validate(self):
        if not self.factors:
            raise InputError("factors: list must be nonempty")
        if not all(isinstance(f, str) for f in self.factors):
            raise InputError("factors: every entry must be a string")
        for key in ("orders", "quiver_orders"):
            ladder = getattr(self, key)
            if not isinstance(ladder, list) or not all(isinstance(N, int) for N in ladder):
                raise InputError(f"{key}: expected a list of integers")
            if any(b <= a for a, b in zip(ladder, ladder[1:])) or not ladder or ladder[0] < 1:
                raise InputError(f"{key}: must be increasing positive integers")
            if ladder[-1] > self.max_order:
                raise InputError(f"{key}: order {ladder[-1]} exceeds max order {self.max_order}")
        if len(self.orders) < 3:
            raise InputError("orders: at least three orders are needed for a verdict")
        if len(self.quiver_orders) < 2:
            raise InputError("quiver_orders: at least two orders are needed")
        bad = [a for a in self.analyses if a not in ANALYSES]
        if bad:
            raise InputError(f"analyses: unknown {bad}; choose from {list(ANALYSES)}")

    def wants(self, name: str) -> bool:
        return name in self.analyses or "full-report" in self.analyses

    def to_json(self) -> dict:
        return {"field": self.field, "factors": list(self.factors), "flags": self.flags,
                "orders": self.orders, "quiver_orders": self.quiver_orders,
                "analyses": self.analyses, "formal_order": self.formal_order}


_KEYS = {"field", "factors", "flags", "orders", "quiver_orders", "analyses", "formal_order"}


def load_jobspec(path: str | Path, max_order: int = DEFAULT_MAX_ORDER) -> JobSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise InputError(f"{path}: TOML syntax error: {exc}") from None
    return jobspec_from_dict(data, max_order)


def jobspec_from_dict(data: dict, max_order: int = DEFAULT_MAX_ORDER) -> JobSpec:
    unknown = sorted(set(data) - _KEYS)
    if unknown:
        raise InputError(f"unknown keys {unknown}; allowed {sorted(_KEYS)}")
    spec = JobSpec(max_order=max_order)
    for k in _KEYS & set(data):
        setattr(spec, k, data[k])
    if not isinstance(spec.field, str):
        raise InputError("field: expected a string such as \"Q\" or \"Q(i): t^2+1\"")
    if not isinstance(spec.analyses, list):
        raise InputError("analyses: expected a list of strings")
    spec.validate()
    return spec


def resolve_flags(selector, n: int) -> list[Flag]:
    if selector == "all":
        return enumerate_flags(n)
    if selector == "all-maximal":
        return enumerate_flags(n, maximal_only=True)
    try:
        if isinstance(selector, dict) and set(selector) == {"permutation"}:
            flag = flag_of_permutation(list(selector["permutation"]))
            if flag.n != n:
                raise InputError(f"flags: permutation has {flag.n} letters but there are "
                                 f"{n} factors")
            return [flag]
        if isinstance(selector, list):
            return [Flag(n, [frozenset(I) for I in selector])]
    except (ValueError, TypeError) as exc:
        raise InputError(f"flags: {exc}") from None
    raise InputError('flags: expected "all", "all-maximal", a chain like [[1],[1,2]] '
                     "or {permutation = [...]}")


def build_system(spec: JobSpec) -> FactorSystem:
    try:
        K = parse_field(spec.field)
    except (ParseError, ValueError) as exc:
        raise InputError(f"field: {exc}") from None
    try:
        return FactorSystem.parse(spec.factors, K)
    except ParseError as exc:
        raise InputError(f"factors: {exc}") from None
    except ValueError as exc:
        raise InputError(f"factors: {exc}") from None


# ---------------------------------------------------------------------------
# Orchestration
# ---------------------------------------------------------------------------


def _flag_job(args) -> dict:
    spec, sysm, flag = args
    out: dict = {"flag": flag.to_json(), "maximal": flag.maximal}
    out["module"] = build_flag_module(sysm, flag).to_json()
    if spec.wants("charts") or spec.wants("classify"):
        if flag.m:
            out["charts"] = blowup_charts(sysm, flag).to_json()
        out["singular_points"] = [[p.to_json() for p in lvl]
                                  for lvl in singular_points(sysm, flag)]
        out["contractions"] = [c.to_json() for c in classify_contractions(sysm, flag)]
        if flag.maximal:
            top = sorted(p["local_type"] for p in out["singular_points"][-1])
            out["ct"] = {"value": ct_for_flag(sysm, flag),
                         "provenance": {"criterion": "chart scan: top level smooth",
                                        "orders": [], "field": str(sysm.field)}}
            out["keydb_consistent"] = top == sorted(keydb_types(sysm))
    if spec.wants("quiver"):
        out["quiver"] = gabriel_quiver(sysm, flag, spec.quiver_orders).to_json()
    if spec.wants("ext"):
        out["rigidity"] = rigidity_report(sysm, flag, spec.orders).to_json()
    return out


def _uncertified(report: dict) -> list[str]:
    reasons = []
    for entry in report.get("flags", []):
        tag = json.dumps(entry["flag"])
        q = entry.get("quiver")
        if q and q["status"] != "certified":
            reasons.append(f"quiver {tag}: {q['status']}")
        rig = entry.get("rigidity")
        if rig:
            if not rig["ext1_total"]["verdict"].startswith("Stabilized"):
                reasons.append(f"ext {tag}: {rig['ext1_total']['verdict']}")
            if any("fl_torsion_experimental" in b for b in rig["blocks"]):
                reasons.append(f"ext {tag}: experimental fl_torsion")
    for rep in report.get("factor_formal", []):
        if rep["status"] == "unsupported":
            reasons.append(f"factor-formal: {rep['detail']}")
    return reasons


def run_job(spec: JobSpec, jobs: int = 1) -> tuple[dict, dict[str, str]]:
    """Compute the report and DOT texts; deterministic for any ``jobs``."""
    sysm = build_system(spec)
    flags = resolve_flags(spec.flags, sysm.n)
    report: dict = {"input": spec.to_json(),
                    "system": {"factors": [str(p) for p in sysm.factors],
                               "field": str(sysm.field),
                               "associate_classes": [list(c) for c in sysm.associate_classes],
                               "trust": list(sysm.trust),
                               "hypersurface": str(sysm.hypersurface())}}
    if spec.wants("classify"):
        report["classification"] = classify_base(sysm, refine=True,
                                                 order=spec.formal_order).to_json()
    if spec.wants("factor-formal"):
        report["factor_formal"] = [factorization_report(p, spec.formal_order, sysm.field)
                                   for p in sysm.factors if p.ord() == 2]
    tasks = [(spec, sysm, F) for F in flags]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            entries = list(pool.map(_flag_job, tasks))
    else:
        entries = [_flag_job(t) for t in tasks]
    report["flags"] = entries
    reasons = _uncertified(report)
    report["summary"] = {"flags": len(entries), "uncertified": reasons,
                         "exit_code": EXIT_UNCERTIFIED if reasons else EXIT_OK}
    dots = {}
    for k, entry in enumerate(entries):
        if "quiver" in entry:
            dots[f"quiver_{k}.dot"] = render_dot_json(entry["quiver"], f"flag_{k}")
    return report, dots


def dump_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# DOT
# ---------------------------------------------------------------------------


def _node_id(label: str, used: set[str]) -> str:
    base = re.sub(r"[^A-Za-z0-9_]", "_", label) or "v"
    if base[0].isdigit():
        base = "v_" + base
    name, k = base, 1
    while name in used:
        k += 1
        name = f"{base}_{k}"
    used.add(name)
    return name


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def render_dot_json(q: dict, name: str = "quiver") -> str:
    labels = q["labels"]
    arrows, loops = q["arrows"], q["loops"]
    ann = {(labels.index(a["source"]), labels.index(a["target"])): a["labels"]
           for a in q.get("annotations", [])}
    used: set[str] = set()
    ids = [_node_id(lbl, used) for lbl in labels]
    lines = [f"digraph {_quote(name)} {{"]
    for i, lbl in enumerate(labels):
        lines.append(f"  {ids[i]} [label={_quote(lbl)}];")
    for i in range(len(labels)):
        for j in range(len(labels)):
            count = loops[i] if i == j else arrows[i][j]
            names = ann.get((i, j), [])
            for t in range(count):
                text = names[t] if t < len(names) else ("loop" if i == j else "")
                attr = f" [label={_quote(text)}]" if text else ""
                lines.append(f"  {ids[i]} -> {ids[j]}{attr};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def render_dot(q: Quiver, name: str = "quiver") -> str:
    """Graphviz digraph: one node per summand, one edge per arrow or loop."""
    return render_dot_json(q.to_json(), name)


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------


def cmd_run(spec: JobSpec, out_dir: str | Path | None = None, jobs: int = 1,
            stream=None) -> int:
    report, dots = run_job(spec, jobs)
    text = dump_report(report)
    if out_dir is None:
        (stream or sys.stdout).write(text)
    else:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(text)
        for fname, dot in dots.items():
            (out / fname).write_text(dot)
    return report["summary"]["exit_code"]


def parse_flag_option(text: str):
    """'all', 'all-maximal', 'perm=3,1,2' or a chain '1;1,2'."""
    text = text.strip()
    if text in ("all", "all-maximal"):
        return text
    try:
        if text.startswith("perm="):
            return {"permutation": [int(a) for a in text[5:].split(",")]}
        if text in ("", "empty"):
            return []
        return [[int(a) for a in part.split(",")] for part in text.split(";")]
    except ValueError:
        raise InputError(f"--flag: cannot parse {text!r}") from None


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="canforge", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run a TOML job file")
    r.add_argument("spec")
    r.add_argument("--out", default=None, help="output directory (default: print JSON)")
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--max-order", type=int, default=DEFAULT_MAX_ORDER)
    for name, analyses in (("classify", ["classify"]), ("charts", ["charts"]),
                           ("quiver", ["quiver"])):
        s = sub.add_parser(name, help=f"shortcut for analyses = {analyses}")
        s.add_argument("--factors", nargs="+", required=True, help="factor polynomials in x, y")
        s.add_argument("--flag", default="all-maximal",
                       help="all | all-maximal | perm=3,1,2 | chain like '1;1,2'")
        s.add_argument("--field", default="Q")
        s.add_argument("--out", default=None)
        s.add_argument("--jobs", type=int, default=1)
        s.add_argument("--max-order", type=int, default=DEFAULT_MAX_ORDER)
        s.set_defaults(analyses=analyses)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.cmd == "run":
            spec = load_jobspec(args.spec, args.max_order)
        else:
            spec = jobspec_from_dict({"field": args.field, "factors": list(args.factors),
                                      "flags": parse_flag_option(args.flag),
                                      "analyses": args.analyses}, args.max_order)
        if args.jobs < 1:
            raise InputError("--jobs must be at least 1")
        return cmd_run(spec, args.out, args.jobs)
    except InputError as exc:
        print(f"canforge: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
