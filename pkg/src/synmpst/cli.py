"""Command-line workbench: check, lts, wb, simulate, explore, bench.

Exit codes are a stable contract: 0 on success, 1 on a semantic failure
(type error, well-behavedness violation, unsound exploration, failed bench
row), 2 on usage, I/O, parse or resource errors.
"""
from __future__ import annotations

import argparse
import json
import os
import re
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .lts import (DEFAULT_STATE_CAP, CapExceededError, build_lts, lts_to_dot,
                  lts_to_json)
from .mlts import Mlts, as_mlts, check_well_behaved, violations_to_json
from .parser import ProtocolFile, parse_file, parse_mlts
from .runtime import explore, render_message_sequence, run, trace_to_json_lines
from .terms import Session, roles_of
from .typecheck import type_session

EXIT_OK = 0
EXIT_SEMANTIC = 1
EXIT_USAGE = 2

_EXPECT_RE = re.compile(r"//\s*expect:\s*(well-typed|ill-typed)")
_CLASSIFIER_RE = re.compile(r"//\s*classifier:\s*(\S+)")


class CliFailure(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code


def _state_cap(args) -> int:
    if args.state_cap is not None:
        return args.state_cap
    env = os.environ.get("SYNMPST_STATE_CAP")
    if env:
        try:
            return int(env)
        except ValueError:
            raise CliFailure(f"SYNMPST_STATE_CAP is not an integer: {env!r}")
    return DEFAULT_STATE_CAP


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise CliFailure(f"cannot read {path}: {e.strerror or e}")


def _parse_protocol(path: str, *, allow_unresolved: bool = False) -> ProtocolFile:
    result = parse_file(_read(path), path, allow_unresolved_globals=allow_unresolved)
    if isinstance(result, list):
        raise CliFailure("\n".join(str(d) for d in result))
    if result.diagnostics:
        raise CliFailure("\n".join(str(d) for d in result.diagnostics))
    return result


def _parse_mlts_file(path: str) -> Mlts:
    result = parse_mlts(_read(path), path)
    if isinstance(result, list):
        raise CliFailure("\n".join(str(d) for d in result))
    return result


@dataclass
class _Classifier:
    mlts: Mlts
    origin: str
    verified: bool   # global types are well-behaved by construction


def _classifier_for(pf: ProtocolFile, global_name: str, cap: int,
                    external: Optional[Mlts], external_origin: str,
                    allow_unverified: bool) -> _Classifier:
    if external is not None:
        violations = [] if allow_unverified else check_well_behaved(external)
        if violations:
            raise CliFailure(
                f"{external_origin} is not well-behaved "
                f"({len(violations)} violation(s)); pass --allow-unverified to check anyway",
                EXIT_SEMANTIC)
        return _Classifier(external, external_origin, verified=True)
    if global_name not in pf.globals:
        raise CliFailure(f"{pf.path}: unknown global {global_name} "
                         "(declare it or supply --mlts)")
    try:
        lts = build_lts(pf.globals[global_name], cap)
    except CapExceededError as e:
        raise CliFailure(f"{pf.path}: global {global_name}: {e}")
    return _Classifier(as_mlts(lts), f"global {global_name}", verified=True)


def _file_external(path: str, text: str) -> Optional[str]:
    match = _CLASSIFIER_RE.search(text)
    if match is None:
        return None
    return str((Path(path).parent / match.group(1)))


def _check_file(path: str, cap: int, mlts_path: Optional[str],
                allow_unverified: bool) -> tuple[list[dict], bool]:
    text = _read(path)
    directive = _file_external(path, text)
    external_path = mlts_path or directive
    external = _parse_mlts_file(external_path) if external_path else None
    pf_result = parse_file(text, path, allow_unresolved_globals=external is not None)
    if isinstance(pf_result, list):
        raise CliFailure("\n".join(str(d) for d in pf_result))
    if pf_result.diagnostics:
        raise CliFailure("\n".join(str(d) for d in pf_result.diagnostics))

    reports: list[dict] = []
    all_ok = True
    for name, decl in pf_result.sessions.items():
        use_external = external is not None and (mlts_path is not None
                                                 or decl.global_name not in pf_result.globals)
        classifier = _classifier_for(
            pf_result, decl.global_name, cap,
            external if use_external else None, external_path or "", allow_unverified)
        required = frozenset()
        if decl.global_name in pf_result.globals and not use_external:
            required = roles_of(pf_result.globals[decl.global_name])
        outcome = type_session(classifier.mlts, pf_result.session(name), required)
        if isinstance(outcome, dict):
            reports.append({"session": name, "verdict": "well-typed",
                            "roles": sorted(outcome), "errors": []})
        else:
            all_ok = False
            reports.append({"session": name, "verdict": "ill-typed", "roles": [],
                            "errors": [e.to_json_obj() for e in outcome]})
    return reports, all_ok


def cmd_check(args) -> int:
    cap = _state_cap(args)
    out: list[dict] = []
    ok = True
    for path in args.files:
        reports, file_ok = _check_file(path, cap, args.mlts, args.allow_unverified)
        ok = ok and file_ok
        out.append({"path": path, "sessions": reports})
    if args.format == "json":
        print(json.dumps(out, indent=2))
    else:
        for entry in out:
            for report in entry["sessions"]:
                name = f"{entry['path']}: session {report['session']}"
                if report["verdict"] == "well-typed":
                    roles = ", ".join(report["roles"])
                    print(f"{name}: {len(report['roles'])} roles well-typed ({roles})")
                else:
                    print(f"{name}: ill-typed")
                    for err in report["errors"]:
                        premise = f" (premise {err['premise']})" if err["premise"] else ""
                        where = f" [{err['span']}]" if err["span"] else ""
                        print(f"  {err['kind']}{premise}: {err['message']}{where}")
    return EXIT_OK if ok else EXIT_SEMANTIC


def cmd_lts(args) -> int:
    cap = _state_cap(args)
    pf = _parse_protocol(args.file)
    names = [args.global_name] if args.global_name else list(pf.globals)
    if not names:
        raise CliFailure(f"{args.file}: no global types declared")
    chunks = []
    for name in names:
        if name not in pf.globals:
            raise CliFailure(f"{args.file}: unknown global {name}")
        try:
            lts = build_lts(pf.globals[name], cap)
        except CapExceededError as e:
            raise CliFailure(f"global {name}: {e}")
        if args.format == "dot":
            chunks.append(lts_to_dot(lts))
        elif args.format == "json":
            chunks.append(lts_to_json(lts))
        else:
            m = as_mlts(lts)
            lines = [f"global {name}: {len(m.labels)} states, {len(m.transitions)} transitions"]
            for s in m.states:
                marker = "*" if s == m.initial else " "
                lines.append(f" {marker} s{s} = {m.labels[s]}")
                for a, t in m.transitions_from(s):
                    lines.append(f"      --{a}--> s{t}")
            chunks.append("\n".join(lines) + "\n")
    print("".join(chunks), end="")
    return EXIT_OK


def cmd_wb(args) -> int:
    cap = _state_cap(args)
    results = []
    if args.file.endswith(".json"):
        m = _parse_mlts_file(args.file)
        results.append((args.file, check_well_behaved(m)))
    else:
        pf = _parse_protocol(args.file)
        if not pf.globals:
            raise CliFailure(f"{args.file}: no global types declared")
        for name, term in pf.globals.items():
            try:
                lts = build_lts(term, cap)
            except CapExceededError as e:
                raise CliFailure(f"global {name}: {e}")
            results.append((f"{args.file}:{name}", check_well_behaved(as_mlts(lts))))
    any_violation = any(v for _, v in results)
    if args.format == "json":
        doc = [{"subject": subject,
                "well_behaved": not violations,
                "violations": json.loads(violations_to_json(violations))}
               for subject, violations in results]
        print(json.dumps(doc, indent=2))
    else:
        for subject, violations in results:
            print(f"{subject}: well-behaved: {'no' if violations else 'yes'}")
            for v in violations:
                print(f"  {v}")
    return EXIT_SEMANTIC if any_violation else EXIT_OK


def _pick_session(pf: ProtocolFile, wanted: Optional[str]) -> tuple[str, Session]:
    if not pf.sessions:
        raise CliFailure(f"{pf.path}: no sessions declared")
    name = wanted or next(iter(pf.sessions))
    if name not in pf.sessions:
        raise CliFailure(f"{pf.path}: unknown session {name}")
    return name, pf.session(name)


def cmd_simulate(args) -> int:
    pf = _parse_protocol(args.file, allow_unresolved=True)
    name, sess = _pick_session(pf, args.session)
    trace = run(sess, args.seed, args.max_steps)
    if args.format == "json":
        print(trace_to_json_lines(trace), end="")
    else:
        print(f"session {name}, seed {args.seed}: {len(trace.actions)} actions")
        print(render_message_sequence(trace), end="")
    return EXIT_OK


def cmd_explore(args) -> int:
    cap = _state_cap(args)
    text = _read(args.file)
    external_path = args.mlts or _file_external(args.file, text)
    external = _parse_mlts_file(external_path) if external_path else None
    pf_result = parse_file(text, args.file, allow_unresolved_globals=external is not None)
    if isinstance(pf_result, list) or pf_result.diagnostics:
        diags = pf_result if isinstance(pf_result, list) else list(pf_result.diagnostics)
        raise CliFailure("\n".join(str(d) for d in diags))
    name, sess = _pick_session(pf_result, args.session)
    decl = pf_result.sessions[name]
    use_external = external is not None and (args.mlts is not None
                                             or decl.global_name not in pf_result.globals)
    classifier = _classifier_for(pf_result, decl.global_name, cap,
                                 external if use_external else None,
                                 external_path or "", args.allow_unverified)
    report = explore(classifier.mlts, sess, args.max_depth)
    doc = {
        "session": name,
        "configs_visited": report.configs_visited,
        "depth_reached": report.depth_reached,
        "complete": report.complete,
        "stuck_non_final": len(report.stuck_non_final),
        "tau_cycles": len(report.tau_cycles),
        "preservation_breaks": len(report.preservation_breaks),
        "verdict": "sound at this depth" if report.sound_at_depth else "violations found",
    }
    if args.format == "json":
        print(json.dumps(doc, indent=2))
    else:
        print(f"session {name}: explored {doc['configs_visited']} configurations "
              f"to depth {doc['depth_reached']}"
              + ("" if report.complete else " (bounded)"))
        print(f"  stuck non-final: {doc['stuck_non_final']}, tau cycles: {doc['tau_cycles']}, "
              f"preservation breaks: {doc['preservation_breaks']}")
        print(f"  verdict: {doc['verdict']}")
    return EXIT_OK if report.sound_at_depth else EXIT_SEMANTIC


def cmd_bench(args) -> int:
    cap = _state_cap(args)
    directory = Path(args.dir)
    if not directory.is_dir():
        raise CliFailure(f"not a directory: {args.dir}")
    rows: list[tuple[str, str, str, bool]] = []

    for path in sorted(directory.glob("*.mlts.json")):
        started = time.perf_counter()
        try:
            violations = check_well_behaved(_parse_mlts_file(str(path)))
            detail = "well-behaved" if not violations else f"{len(violations)} violations"
            passed = not violations
        except CliFailure as e:
            detail, passed = str(e), False
        elapsed = time.perf_counter() - started
        rows.append((path.name, "wb", f"{detail} ({elapsed:.2f}s)", passed))

    for path in sorted(directory.glob("*.smpst")):
        started = time.perf_counter()
        text = _read(str(path))
        expect_match = _EXPECT_RE.search(text)
        expectation = expect_match.group(1) if expect_match else "well-typed"
        try:
            reports, all_ok = _check_file(str(path), cap, None, False)
            verdicts = {r["verdict"] for r in reports} or {"well-typed"}
            passed = verdicts == {expectation}
            detail = f"{len(reports)} session(s) {'/'.join(sorted(verdicts))}, expected {expectation}"
            if passed and expectation == "well-typed":
                sound = _explore_file(str(path), text, cap, args.max_depth)
                passed = sound
                detail += ", explore " + ("sound" if sound else "UNSOUND")
        except CliFailure as e:
            detail, passed = f"error: {e}", False
        elapsed = time.perf_counter() - started
        rows.append((path.name, "check+explore", f"{detail} ({elapsed:.2f}s)", passed))

    width = max((len(r[0]) for r in rows), default=4)
    all_pass = all(r[3] for r in rows)
    for name, kind, detail, passed in rows:
        print(f"{'PASS' if passed else 'FAIL'}  {name:<{width}}  {kind:<14} {detail}")
    print(f"{'all rows pass' if all_pass else 'SOME ROWS FAILED'} ({len(rows)} rows)")
    return EXIT_OK if all_pass else EXIT_SEMANTIC


def _explore_file(path: str, text: str, cap: int, max_depth: int) -> bool:
    external_path = _file_external(path, text)
    external = _parse_mlts_file(external_path) if external_path else None
    pf = parse_file(text, path, allow_unresolved_globals=external is not None)
    assert isinstance(pf, ProtocolFile)
    for name, decl in pf.sessions.items():
        use_external = external is not None and decl.global_name not in pf.globals
        classifier = _classifier_for(pf, decl.global_name, cap,
                                     external if use_external else None,
                                     external_path or "", False)
        report = explore(classifier.mlts, pf.session(name), max_depth)
        if not report.sound_at_depth:
            return False
    return True


def _build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synmpst",
        description="Type-check, verify and execute multiparty protocols against "
                    "global-type LTSs and explicit MLTSs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt_choices=("text", "json")):
        p.add_argument("--state-cap", type=int, default=None,
                       help=f"LTS state cap (default {DEFAULT_STATE_CAP}, "
                            "env SYNMPST_STATE_CAP)")
        p.add_argument("--format", choices=fmt_choices, default=fmt_choices[0])

    p = sub.add_parser("check", help="type-check every session in the given files")
    p.add_argument("files", nargs="+")
    p.add_argument("--mlts", help="check sessions against this MLTS JSON file")
    p.add_argument("--allow-unverified", action="store_true",
                   help="skip the well-behavedness gate for --mlts classifiers")
    common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("lts", help="print the LTS of a file's global types")
    p.add_argument("file")
    p.add_argument("--global", dest="global_name", default=None)
    common(p, ("text", "dot", "json"))
    p.set_defaults(func=cmd_lts)

    p = sub.add_parser("wb", help="check well-behavedness of an MLTS or of globals")
    p.add_argument("file", help=".smpst protocol file or .json MLTS")
    common(p)
    p.set_defaults(func=cmd_wb)

    p = sub.add_parser("simulate", help="run one session under a seeded scheduler")
    p.add_argument("file")
    p.add_argument("--session", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-steps", type=int, default=1000)
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("explore", help="exhaustively execute a session against its classifier")
    p.add_argument("file")
    p.add_argument("--session", default=None)
    p.add_argument("--mlts", help="classifier MLTS JSON file")
    p.add_argument("--allow-unverified", action="store_true")
    p.add_argument("--max-depth", type=int, default=200)
    common(p)
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("bench", help="run check+wb+explore over a corpus directory")
    p.add_argument("dir")
    p.add_argument("--max-depth", type=int, default=200)
    common(p)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_arg_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliFailure as e:
        print(f"synmpst: error: {e}", file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
