"""Command-line surface.

Subcommands: parse, synth, verify, invariant-check, reduce, oracle,
simulate, km.  Exit codes: 0 definitive answer, 2 unknown/inconclusive,
1 usage or input error.  Output is deterministic; `--format record`
prints a line-delimited key: value block.
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import ranking
from .affine import emit_affine, parse_affine
from .boolprog import (
    RANK_Y,
    RANK_Y_TERM,
    bp_halts,
    emit_bp,
    parse_bp,
    reduce_bool_to_loop,
)
from .invariants import (
    check_downward,
    check_hull,
    check_polyhedral,
    emit_dcs,
    karp_miller,
    parse_dcs,
)
from .loops import BUDGET_EXCEEDED, SlcpLoop, emit_loop, explore, parse_loop
from .polyhedron import InputError, emit_poly, parse_poly
from .rationals import format_rat, rat
from .vas import (
    Cover,
    DEFAULT_STATE_CAP,
    OracleInconclusive,
    OracleYes,
    Positive,
    Reach,
    emit_lrs,
    emit_net,
    parse_lrs,
    parse_net,
    reduce_lrs_to_verification,
    reduce_vas_positivity,
    reduce_vas_reachability,
    vas_bfs,
)

OK, UNKNOWN, USAGE = 0, 2, 1


class CommandResult:
    """Verdict kind, human summary, ordered payload, exit code."""

    def __init__(self, kind, summary, payload=(), code=OK, artifact=None):
        self.kind = kind
        self.summary = summary
        self.payload = list(payload)
        self.code = code
        self.artifact = artifact  # multiline text printed verbatim (plain mode)

    def render(self, fmt: str) -> str:
        if fmt == "record":
            lines = [f"kind: {self.kind}", f"exit: {self.code}"]
            lines += [f"{k}: {v}" for k, v in self.payload]
            if self.artifact is not None:
                for ln in self.artifact.rstrip("\n").splitlines():
                    lines.append(f"| {ln}")
            return "\n".join(lines) + "\n"
        lines = [] if not self.summary else [f"{self.kind}: {self.summary}"]
        lines += [f"{k}: {v}" for k, v in self.payload]
        out = "\n".join(lines) + "\n" if lines else ""
        if self.artifact is not None:
            out += self.artifact
            if not out.endswith("\n"):
                out += "\n"
        return out


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _vec(text: str):
    try:
        return tuple(int(v.strip()) for v in text.split(","))
    except ValueError:
        raise InputError(f"bad integer vector {text!r}") from None


def _state(text: str, names):
    """Full state: either 'name:value,...' (others default 0) or a bare
    comma list in variable order."""
    if ":" in text:
        vals = [Fraction(0)] * len(names)
        index = {nm: i for i, nm in enumerate(names)}
        for chunk in text.split(","):
            name, _, value = chunk.strip().partition(":")
            if name not in index:
                raise InputError(f"unknown variable {name!r}")
            vals[index[name]] = rat(value.strip())
        return tuple(vals)
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != len(names):
        raise InputError(f"state needs {len(names)} values")
    return tuple(rat(p) for p in parts)


def _box(text: str, n: int):
    """'lo..hi' for all coordinates, or a comma list of per-variable
    lo..hi ranges."""
    parts = [p.strip() for p in text.split(",")]
    if len(parts) == 1:
        parts = parts * n
    if len(parts) != n:
        raise InputError(f"box needs 1 or {n} ranges")
    out = []
    for p in parts:
        lo, sep, hi = p.partition("..")
        if not sep:
            raise InputError(f"bad range {p!r}; expected lo..hi")
        try:
            out.append((int(lo), int(hi)))
        except ValueError:
            raise InputError(f"bad range {p!r}") from None
    return out


def _fmt_point(point):
    return ",".join(format_rat(rat(v)) for v in point)


def _fmt_cert(cert):
    return ",".join(format_rat(m) for m in cert.multipliers)


def _cert_payload(certs):
    return [
        (f"certificate{i + 1}", _fmt_cert(c)) for i, c in enumerate(certs)
    ]


def _oracle_cap() -> int:
    raw = os.environ.get("LASSORANK_ORACLE_CAP", "")
    if not raw:
        return DEFAULT_STATE_CAP
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"bad LASSORANK_ORACLE_CAP value {raw!r}") from None


def _load_loop(path: str) -> SlcpLoop:
    if not path.endswith(".slcp"):
        raise InputError("expected a .slcp loop file")
    return parse_loop(_read(path))


def _load_invariant(loop: SlcpLoop, arg: str):
    """An invariant argument: 'hull' or a .poly/.dcs file path."""
    if arg == "hull":
        inv = ranking.reachable_hull_invariant(loop)
        if inv is None:
            return None
        return inv
    if arg.endswith(".poly"):
        poly, names = parse_poly(_read(arg))
        if tuple(names) != loop.var_names:
            raise InputError("invariant variables do not match the loop")
        return poly
    if arg.endswith(".dcs"):
        return parse_dcs(_read(arg))
    raise InputError("invariant must be 'hull', a .poly or a .dcs file")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_parse(args) -> CommandResult:
    path = args.file
    ext = Path(path).suffix
    text = _read(path)
    if ext == ".slcp":
        out = emit_loop(parse_loop(text))
    elif ext == ".bp":
        out = emit_bp(parse_bp(text))
    elif ext == ".vas":
        out = emit_net(parse_net(text))
    elif ext == ".lrs":
        out = emit_lrs(parse_lrs(text))
    elif ext == ".poly":
        poly, names = parse_poly(text)
        out = emit_poly(poly, names)
    elif ext == ".dcs":
        out = emit_dcs(parse_dcs(text))
    else:
        raise InputError(f"unknown file extension {ext!r}")
    return CommandResult("Parsed", "", [], OK, artifact=out)


def _with_invariant_guard(loop: SlcpLoop, inv) -> SlcpLoop:
    poly = inv.polyhedron() if hasattr(inv, "polyhedron") else inv
    return SlcpLoop(
        var_names=loop.var_names,
        precondition=loop.precondition,
        guard=loop.guard.conjoin(poly),
        update=loop.update,
        interpretation=loop.interpretation,
    )


def _check_invariant(loop, inv):
    from .invariants import DownwardClosedSet, HullInvariant
    from .polyhedron import Polyhedron

    if isinstance(inv, Polyhedron):
        return check_polyhedral(loop, inv)
    if isinstance(inv, DownwardClosedSet):
        return check_downward(loop, inv)
    if isinstance(inv, HullInvariant):
        return check_hull(loop, inv)
    raise InputError("unsupported invariant class")


def _cmd_synth(args) -> CommandResult:
    loop = _load_loop(args.file)
    target = loop
    payload = []
    if args.invariant:
        inv = _load_invariant(loop, args.invariant)
        if inv is None:
            return CommandResult(
                "Unknown", "hull pipeline not applicable to this loop", [], UNKNOWN
            )
        from .invariants import DownwardClosedSet

        if isinstance(inv, DownwardClosedSet):
            raise InputError("synthesis over a downward-closed set is not supported")
        report = _check_invariant(loop, inv)
        if not report.ok:
            return CommandResult(
                "InvariantInvalid",
                "the invariant is not inductive",
                _report_payload(report),
                UNKNOWN,
            )
        target = _with_invariant_guard(loop, inv)
        payload.append(("invariant", args.invariant))
    verdict = ranking.synth_universal(target)
    if isinstance(verdict, ranking.HasLRF):
        payload.append(("rf", emit_affine(verdict.f, loop.var_names)))
        if verdict.note:
            payload.append(("note", verdict.note))
        payload += _cert_payload(verdict.certificates)
        return CommandResult(
            "Found", f"f = {verdict.f.describe(loop.var_names)}", payload, OK
        )
    if isinstance(verdict, ranking.VacuouslyAny):
        return CommandResult(
            "VacuouslyAny", "no transitions: any function ranks them", payload, OK
        )
    payload.append(("note", verdict.note))
    return CommandResult("NoneExists", "no linear ranking function", payload, OK)


def _report_payload(report):
    payload = [
        ("initiation", "pass" if report.initiation else "fail"),
        ("consecution", "pass" if report.consecution else "fail"),
    ]
    if report.initiation_witness is not None:
        payload.append(("initiation-witness", _fmt_point(report.initiation_witness)))
    if report.consecution_witness is not None:
        x, x2 = report.consecution_witness
        payload.append(("consecution-witness", f"{_fmt_point(x)} -> {_fmt_point(x2)}"))
    if report.note:
        payload.append(("note", report.note))
    return payload


def _cmd_verify(args) -> CommandResult:
    loop = _load_loop(args.file)
    f = parse_affine(args.rf, loop.var_names)
    if not args.invariant:
        verdict = ranking.verify_universal(loop, f)
        if isinstance(verdict, ranking.HasLRF):
            payload = _cert_payload(verdict.certificates)
            if verdict.note:
                payload.append(("note", verdict.note))
            return CommandResult("Yes", "f is a ranking function", payload, OK)
        if isinstance(verdict, ranking.VacuouslyYes):
            return CommandResult("VacuouslyYes", "no transitions at all", [], OK)
        x, x2 = verdict.counterexample
        payload = [("counterexample", f"{_fmt_point(x)} -> {_fmt_point(x2)}")]
        if verdict.note:
            payload.append(("note", verdict.note))
        return CommandResult("No", "f is not a ranking function", payload, OK)
    inv = _load_invariant(loop, args.invariant)
    if inv is None:
        return CommandResult(
            "Unknown", "hull pipeline not applicable to this loop", [], UNKNOWN
        )
    verdict = ranking.verify_supported(loop, f, inv)
    if isinstance(verdict, ranking.SupportedYes):
        payload = _cert_payload(verdict.certificates)
        if verdict.evidence:
            payload.append(("evidence", verdict.evidence))
        if verdict.note:
            payload.append(("note", verdict.note))
        return CommandResult(
            "Yes", "f ranks all transitions from the invariant", payload, OK
        )
    if isinstance(verdict, ranking.SupportedNo):
        x, x2 = verdict.counterexample
        payload = [("counterexample", f"{_fmt_point(x)} -> {_fmt_point(x2)}")]
        if verdict.note:
            payload.append(("note", verdict.note))
        return CommandResult("No", "f fails inside the invariant", payload, OK)
    if isinstance(verdict, ranking.InvariantInvalid):
        return CommandResult(
            "InvariantInvalid",
            verdict.reason,
            _report_payload(verdict.report) if verdict.report else [],
            UNKNOWN,
        )
    return CommandResult("Unknown", verdict.reason, [], UNKNOWN)


def _cmd_invariant_check(args) -> CommandResult:
    loop = _load_loop(args.file)
    inv = _load_invariant(loop, args.invariant)
    if inv is None:
        return CommandResult(
            "Unknown", "hull pipeline not applicable to this loop", [], UNKNOWN
        )
    report = _check_invariant(loop, inv)
    kind = "Valid" if report.ok else "Invalid"
    summary = "inductive invariant" if report.ok else "not an inductive invariant"
    return CommandResult(kind, summary, _report_payload(report), OK)


_GADGETS = {"none": None, "y": RANK_Y, "y-term": RANK_Y_TERM}


def _loop_result(kind, loop, f) -> CommandResult:
    # Plain output must stay a parseable .slcp file, so the summary and the
    # suggested ranking function are emitted as comment lines.
    header = f"# reduced to a {loop.n}-variable loop\n"
    if f is not None:
        header += f"# suggested-rf: {emit_affine(f, loop.var_names)}\n"
    return CommandResult(kind, "", [], OK, artifact=header + emit_loop(loop))


def _cmd_reduce(args) -> CommandResult:
    if args.what == "bool2loop":
        prog = parse_bp(_read(args.file))
        loop, _, f = reduce_bool_to_loop(prog, _GADGETS[args.gadget])
        return _loop_result("Reduced", loop, f)
    if args.what == "vas2loop":
        net = parse_net(_read(args.file))
        if args.init is None:
            raise InputError("--init is required for vas2loop")
        if args.mode == "positivity":
            loop, _, f = reduce_vas_positivity(net, _vec(args.init))
        else:
            if args.target is None:
                raise InputError("--target is required for reachability")
            loop, _, f = reduce_vas_reachability(
                net, _vec(args.init), _vec(args.target), apply_sentinel=args.sentinel
            )
        return _loop_result("Reduced", loop, f)
    inst = parse_lrs(_read(args.file))
    loop, _, f = reduce_lrs_to_verification(inst)
    return _loop_result("Reduced", loop, f)


def _cmd_oracle(args) -> CommandResult:
    if args.what == "bp-halts":
        verdict = bp_halts(parse_bp(_read(args.file)))
        return CommandResult(verdict, f"program verdict: {verdict}", [], OK)
    net = parse_net(_read(args.file))
    if args.init is None:
        raise InputError("--init is required for the vas oracle")
    s0 = _vec(args.init)
    if args.query == "positive":
        coord = args.coord if args.coord is not None else net.dim
        query = Positive(coord - 1)
    elif args.query == "cover":
        if args.target is None:
            raise InputError("--target is required for cover queries")
        query = Cover(_vec(args.target))
    else:
        if args.target is None:
            raise InputError("--target is required for reach queries")
        query = Reach(_vec(args.target))
    res = vas_bfs(net, s0, query, state_cap=_oracle_cap())
    if isinstance(res, OracleYes):
        payload = [
            ("path", ",".join(str(k) for k in res.path)),
            ("state", ",".join(str(v) for v in res.state)),
        ]
        return CommandResult("Yes", "query holds; witness path attached", payload, OK)
    if isinstance(res, OracleInconclusive):
        return CommandResult(
            "Inconclusive", "state cap reached", [("explored", str(res.explored))],
            UNKNOWN,
        )
    return CommandResult(
        "No", "query fails on the full reachable set",
        [("explored", str(res.explored))], OK
    )


def _cmd_simulate(args) -> CommandResult:
    loop = _load_loop(args.file)
    state = _state(args.init, loop.var_names)
    box = _box(args.box, loop.n)
    report = explore(loop, state, box, args.steps)
    payload = [("visited", str(len(report.visited)))]
    if report.cycle is not None:
        payload.append(("stem", " ; ".join(_fmt_point(s) for s in report.stem or ())))
        payload.append(("cycle", " ; ".join(_fmt_point(s) for s in report.cycle)))
    code = UNKNOWN if report.status == BUDGET_EXCEEDED else OK
    return CommandResult(report.status, f"exploration: {report.status}", payload, code)


def _cmd_km(args) -> CommandResult:
    net = parse_net(_read(args.file))
    if args.init is None:
        raise InputError("--init is required for km")
    dset = karp_miller(net, _vec(args.init), node_cap=_oracle_cap())
    return CommandResult(
        "Computed", f"coverability set with {len(dset.generators)} generators",
        [], OK, artifact=emit_dcs(dset)
    )


# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="lassorank")
    top.add_argument("--format", choices=("plain", "record"), default="plain")
    top.add_argument("--seed", type=int, default=0,
                     help="seed for randomized suites (accepted everywhere)")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse")
    p.add_argument("file")
    p.set_defaults(func=_cmd_parse)

    p = sub.add_parser("synth")
    p.add_argument("file")
    p.add_argument("--invariant")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("verify")
    p.add_argument("file")
    p.add_argument("--rf", required=True)
    p.add_argument("--invariant")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("invariant-check")
    p.add_argument("file")
    p.add_argument("--invariant", required=True)
    p.set_defaults(func=_cmd_invariant_check)

    p = sub.add_parser("reduce")
    p.add_argument("what", choices=("bool2loop", "vas2loop", "lrs2verif"))
    p.add_argument("file")
    p.add_argument("--gadget", choices=tuple(_GADGETS), default="none")
    p.add_argument("--mode", choices=("positivity", "reachability"),
                   default="positivity")
    p.add_argument("--init")
    p.add_argument("--target")
    p.add_argument("--sentinel", action="store_true")
    p.set_defaults(func=_cmd_reduce)

    p = sub.add_parser("oracle")
    p.add_argument("what", choices=("bp-halts", "vas"))
    p.add_argument("file")
    p.add_argument("--query", choices=("cover", "reach", "positive"),
                   default="positive")
    p.add_argument("--init")
    p.add_argument("--target")
    p.add_argument("--coord", type=int, help="1-based coordinate for 'positive'")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("simulate")
    p.add_argument("file")
    p.add_argument("--init", required=True)
    p.add_argument("--box", required=True)
    p.add_argument("--steps", type=int, required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("km")
    p.add_argument("file")
    p.add_argument("--init", required=True)
    p.set_defaults(func=_cmd_km)
    return top


def run(argv) -> CommandResult:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):  # --help; argparse printed it already
            raise
        return CommandResult("Usage", "usage error", [], USAGE)
    try:
        return args.func(args)
    except InputError as exc:
        return CommandResult("InputError", f"error: {exc}", [], USAGE)


def main(argv=None) -> int:
    result = run(sys.argv[1:] if argv is None else argv)
    fmt = "plain"
    seen = sys.argv[1:] if argv is None else argv
    if "--format" in seen:
        fmt = seen[seen.index("--format") + 1]
    sys.stdout.write(result.render(fmt))
    return result.code


if __name__ == "__main__":
    sys.exit(main())
