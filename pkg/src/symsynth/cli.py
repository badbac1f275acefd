"""Command-line front end.

Exit codes: 0 ok/realizable/pass/true, 1 unrealizable/violation/false,
2 unknown verdict, 3 usage or format error, 4 internal verification failure.
"""

from __future__ import annotations

import argparse
import random
import sys
from dataclasses import dataclass
from pathlib import Path

from .automata import machine_lasso, model_check
from .compression import CompressionScheme, compress_formula, compress_word
from .ltl import Formula, atoms, eval_lasso, format_formula, parse_formula
from .machines import (
    CompletionError, MooreMachine, extract_process, machine_from_json, machine_to_dot,
    machine_to_json, reps_divisibility_check, symmetric_completion, symmetric_product,
    symmetry_check,
)
from .sat import SolverError, default_solver
from .symmetry import Architecture, FormatError, parse_lasso, parse_prop
from .synth import Realizable, Unknown, Unrealizable, VerificationError, synth_symmetric

__all__ = ["SpecFile", "main", "parse_spec_file", "run_cli"]

OK, FAIL, UNKNOWN, USAGE, INTERNAL = 0, 1, 2, 3, 4


@dataclass(frozen=True)
class SpecFile:
    n: int
    local_inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    formula: Formula

    @property
    def architecture(self) -> Architecture:
        return Architecture.rotation(self.n, self.local_inputs, self.outputs)


def _names(value: str, line: int, col: int) -> tuple[str, ...]:
    names = tuple(x.strip() for x in value.split(",") if x.strip())
    for name in names:
        try:
            parsed = parse_prop(name)
        except FormatError:
            parsed = None
        if parsed is None or parsed[1] is not None:
            raise FormatError(f"{name!r} is not a plain identifier", line, col)
    if len(set(names)) != len(names):
        raise FormatError("duplicate names", line, col)
    return names


def parse_spec_file(text: str) -> SpecFile:
    """Header lines ``n:``, ``local_inputs:``, ``outputs:`` then ``spec:`` with one formula
    (which may continue over the following lines).  ``#`` starts a comment line."""
    fields: dict[str, tuple[str, int, int]] = {}
    spec_lines: list[tuple[str, int, int]] = []
    in_spec = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if in_spec:
            spec_lines.append((raw, lineno, 1))
            continue
        key, sep, value = raw.partition(":")
        key = key.strip()
        if not sep:
            raise FormatError("expected 'key: value'", lineno, 1)
        if key not in ("n", "local_inputs", "outputs", "spec"):
            raise FormatError(f"unknown field {key!r}", lineno, raw.index(key) + 1)
        if key in fields:
            raise FormatError(f"duplicate field {key!r}", lineno, raw.index(key) + 1)
        col = len(raw) - len(raw[raw.index(":") + 1:].lstrip()) + 1
        fields[key] = (value.strip(), lineno, col)
        if key == "spec":
            in_spec = True
            spec_lines.append((value, lineno, raw.index(":") + 2))
    for key in ("n", "local_inputs", "outputs", "spec"):
        if key not in fields:
            raise FormatError(f"missing field {key!r}")
    value, line, col = fields["n"]
    try:
        n = int(value)
    except ValueError:
        raise FormatError(f"n must be an integer, got {value!r}", line, col) from None
    if n < 1:
        raise FormatError("n must be at least 1", line, col)
    local_inputs = _names(*fields["local_inputs"])
    outputs = _names(*fields["outputs"])
    clash = set(local_inputs) & set(outputs)
    if clash:
        raise FormatError(f"names used as both input and output: {sorted(clash)}", fields["outputs"][1])
    arch = Architecture.rotation(n, local_inputs, outputs)
    body = "\n".join(part for part, _, _ in spec_lines)
    if not body.strip():
        raise FormatError("empty specification", fields["spec"][1], fields["spec"][2])
    try:
        phi = parse_formula(body, arch)
    except FormatError as exc:
        raise _relocate(exc, body, spec_lines) from None
    return SpecFile(n, local_inputs, outputs, phi)


def _relocate(exc: FormatError, body: str, spec_lines) -> FormatError:
    """Map a column in the joined formula text back to file line/column."""
    msg = str(exc).split(": ", 1)[-1] if exc.column is not None else str(exc)
    if exc.column is None:
        return FormatError(msg, spec_lines[0][1])
    offset = exc.column - 1
    for part, lineno, col in spec_lines:
        if offset <= len(part):
            return FormatError(msg, lineno, col + offset)
        offset -= len(part) + 1
    last = spec_lines[-1]
    return FormatError(msg, last[1], last[2] + len(last[0]))


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="symsynth", description="Synthesis and analysis of rotation-symmetric systems.")
    p.add_argument("--seed", type=int, default=0, help="seed for sampling (default 0)")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="decide symmetric realizability and emit a process machine")
    s.add_argument("spec")
    s.add_argument("--max-bound", type=int, default=8)
    s.add_argument("--unreal-bound", type=int, default=4)
    s.add_argument("--out")
    s.add_argument("--dot")
    s.add_argument("--sat-solver", metavar="PATH")

    s = sub.add_parser("verify", help="model check a machine (or the product of a process) against a spec")
    s.add_argument("machine")
    s.add_argument("--spec", required=True)
    s.add_argument("--samples", type=int, default=0, help="extra random lassos replayed through eval")

    for name in ("product", "complete", "check-sym", "check-reps"):
        s = sub.add_parser(name)
        s.add_argument("machine")
        s.add_argument("-n", type=int, required=True)
        if name in ("product", "complete"):
            s.add_argument("--out")
            s.add_argument("--dot")
    s = sub.add_parser("extract")
    s.add_argument("machine")
    s.add_argument("--out")
    s.add_argument("--dot")

    s = sub.add_parser("eval", help="evaluate a formula on a lasso word 'prefix | loop'")
    s.add_argument("--word", required=True)
    s.add_argument("--formula", required=True)

    s = sub.add_parser("compress-word")
    s.add_argument("--word", required=True)
    s.add_argument("--signals", required=True, help="comma-separated, in slot order")
    s.add_argument("--chi", default="chi")

    s = sub.add_parser("compress-formula")
    s.add_argument("--formula", required=True)
    s.add_argument("--signals", required=True)
    s.add_argument("--chi", default="chi")
    return p


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from None


def _load_machine(path: str) -> MooreMachine:
    try:
        return machine_from_json(_read(path))
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None


def _emit(m: MooreMachine, args, out) -> None:
    text = machine_to_json(m)
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        out.write(text)
    if getattr(args, "dot", None):
        Path(args.dot).write_text(machine_to_dot(m))


def _signals(text: str) -> CompressionScheme:
    return CompressionScheme.of([s.strip() for s in text.split(",") if s.strip()])


def _cmd_synth(args, out, err) -> int:
    spec = parse_spec_file(_read(args.spec))
    solver = default_solver(args.sat_solver)
    verdict = synth_symmetric(spec.architecture, spec.formula, args.max_bound, args.unreal_bound, solver)
    if isinstance(verdict, Realizable):
        err.write(
            f"realizable: bound {verdict.bound}, process with {verdict.process.num_states} states, "
            f"global machine with {verdict.global_machine.num_states} states\n"
        )
        _emit(verdict.process, args, out)
        return OK
    if isinstance(verdict, Unrealizable):
        err.write(f"unrealizable: environment strategy with {verdict.counter.num_states} states (bound {verdict.bound})\n")
        out.write(verdict.counter.describe() + "\n")
        return FAIL
    assert isinstance(verdict, Unknown)
    err.write(f"unknown: no implementation up to {verdict.max_bound} states, "
              f"no environment strategy up to {verdict.unreal_bound} states\n")
    return UNKNOWN


def _cmd_verify(args, out, err) -> int:
    spec = parse_spec_file(_read(args.spec))
    m = _load_machine(args.machine)
    if all(parse_prop(o)[1] is None for o in m.outputs) and m.outputs:
        m = symmetric_product(m, spec.n)
    cex = model_check(m, spec.formula)
    if cex is not None:
        out.write(f"violation\n{cex}\n")
        return FAIL
    rng = random.Random(args.seed)
    width = 1 << len(m.inputs)
    for _ in range(args.samples):
        prefix = [rng.randrange(width) for _ in range(rng.randint(0, 4))]
        loop = [rng.randrange(width) for _ in range(rng.randint(1, 4))]
        if not eval_lasso(machine_lasso(m, prefix, loop), spec.formula):
            raise VerificationError("sampled lasso", f"prefix {prefix} loop {loop}")
    out.write("ok\n")
    return OK


def _cmd_check(args, out, err) -> int:
    m = _load_machine(args.machine)
    check = symmetry_check if args.cmd == "check-sym" else reps_divisibility_check
    bad = check(m, args.n)
    if bad is None:
        out.write("pass\n")
        return OK
    out.write(f"violation: {bad}\n")
    return FAIL


def _cmd_complete(args, out, err) -> int:
    m = _load_machine(args.machine)
    try:
        c = symmetric_completion(m, args.n)
    except CompletionError as exc:
        out.write(f"violation: {exc.violation}\n")
        return FAIL
    _emit(c, args, out)
    return OK


def _dispatch(args, out, err) -> int:
    cmd = args.cmd
    if cmd == "synth":
        return _cmd_synth(args, out, err)
    if cmd == "verify":
        return _cmd_verify(args, out, err)
    if cmd in ("check-sym", "check-reps"):
        return _cmd_check(args, out, err)
    if cmd == "complete":
        return _cmd_complete(args, out, err)
    if cmd == "product":
        _emit(symmetric_product(_load_machine(args.machine), args.n), args, out)
        return OK
    if cmd == "extract":
        _emit(extract_process(_load_machine(args.machine)), args, out)
        return OK
    if cmd == "eval":
        phi = parse_formula(args.formula)
        n = max([a.index + 1 for a in atoms(phi)] + [parse_lasso(args.word).loop[0].n])
        w = parse_lasso(args.word, n)
        value = eval_lasso(w, phi)
        out.write("true\n" if value else "false\n")
        return OK if value else FAIL
    if cmd == "compress-word":
        s = _signals(args.signals)
        s = CompressionScheme(s.signals, args.chi)
        out.write(str(compress_word(parse_lasso(args.word), s)) + "\n")
        return OK
    if cmd == "compress-formula":
        s = _signals(args.signals)
        s = CompressionScheme(s.signals, args.chi)
        out.write(format_formula(compress_formula(parse_formula(args.formula), s)) + "\n")
        return OK
    raise _UsageError(f"unknown command {cmd!r}")


def run_cli(argv: list[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = _build_parser().parse_args(argv)
        random.seed(args.seed)
        return _dispatch(args, out, err)
    except _UsageError as exc:
        err.write(f"{exc}\n")
        return USAGE
    except FormatError as exc:
        err.write(f"error: {exc}\n")
        return USAGE
    except VerificationError as exc:
        err.write(f"internal error: {exc}\n")
        return INTERNAL
    except SolverError as exc:
        err.write(f"solver error: {exc}\n")
        return INTERNAL
    except ValueError as exc:
        err.write(f"error: {exc}\n")
        return USAGE


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
