"""Command-line driver: ``qumin run|check|repl``.

Exit statuses: 0 success, 1 parse error, 2 type error, 3 constraint
violation, 4 runtime error, 5 I/O or module resolution failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Callable, Iterable, List, Optional, TextIO

from . import syntax as S
from .errors import ParseError, QuminError
from .interp import Interpreter, SOURCE_SUFFIX
from .values import show

EXIT_OK = 0
EXIT_IO = 5
PROMPT = "> "
CONTINUATION = ". "


def format_diagnostic(err: QuminError, default_file: str = "<input>") -> str:
    """``file:line:col: error: message`` (position omitted when unknown)."""
    filename, source = getattr(err, "origin", None) or (default_file, None)
    where = filename
    if err.span is not None and source is not None:
        line, col = S.line_col(source, err.span[0])
        where = f"{filename}:{line}:{col}"
    return f"{where}: error: {err}"


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_u64, default=None,
                        help="seed for measurement sampling (default: OS entropy)")
    common.add_argument("--path", action="append", default=[], metavar="DIR",
                        help="extra module search directory (repeatable)")
    parser = argparse.ArgumentParser(prog="qumin", description="Run Qumin programs.")
    verbs = parser.add_subparsers(dest="verb", required=True)
    run = verbs.add_parser("run", parents=[common], help="run a program")
    run.add_argument("file")
    check = verbs.add_parser("check", parents=[common], help="typecheck a quantum library")
    check.add_argument("file")
    repl = verbs.add_parser("repl", parents=[common], help="interactive session")
    repl.add_argument("file", nargs="?", help="program to run before the session starts")
    return parser


def _search_path(entry: Optional[Path], extra: Iterable[str]) -> List[Path]:
    # QUMIN_PATH is appended by the interpreter itself
    dirs = [entry.parent] if entry is not None else [Path.cwd()]
    return dirs + [Path(d) for d in extra]


def _read(path: Path, err: TextIO) -> Optional[str]:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        err.write(f"{path}: error: cannot read file: {exc.strerror}\n")
        return None


def cmd_run(args: argparse.Namespace, out: TextIO, err: TextIO) -> int:
    path = Path(args.file)
    source = _read(path, err)
    if source is None:
        return EXIT_IO
    interp = Interpreter(seed=args.seed, out=out.write, search_path=_search_path(path, args.path))
    try:
        interp.run_source(source, str(path))
    except QuminError as exc:
        out.flush()
        err.write(format_diagnostic(exc, str(path)) + "\n")
        return exc.exit_code
    return EXIT_OK


def cmd_check(args: argparse.Namespace, out: TextIO, err: TextIO) -> int:
    path = Path(args.file)
    source = _read(path, err)
    if source is None:
        return EXIT_IO
    interp = Interpreter(seed=args.seed, out=out.write, search_path=_search_path(path, args.path))
    try:
        table = interp.check_library(source, str(path))
    except QuminError as exc:
        err.write(format_diagnostic(exc, str(path)) + "\n")
        return exc.exit_code
    for name, sig in table.items():
        out.write(f"{name} : {sig.as_type()}\n")
    out.write(f"{path}: ok, {len(table)} routine(s)\n")
    return EXIT_OK


class Repl:
    """Line-oriented session over a persistent interpreter.

    A line that ends inside an unfinished expression (unbalanced brackets or
    a parse failure at end of input) is continued on the next line.
    """

    def __init__(self, interp: Interpreter, write: Callable[[str], object]):
        self.interp = interp
        self.write = write
        self.buffer: List[str] = []

    @property
    def prompt(self) -> str:
        return CONTINUATION if self.buffer else PROMPT

    def feed(self, line: str) -> bool:
        """Process one input line; False means the session should end."""
        stripped = line.strip()
        if not self.buffer and stripped.startswith(":"):
            return self._command(stripped)
        self.buffer.append(line)
        source = "\n".join(self.buffer)
        if not source.strip():
            self.buffer = []
            return True
        try:
            node = S.parse_expr(source)
        except ParseError as exc:
            if _incomplete(source, exc) and stripped:
                return True
            self.buffer = []
            exc.origin = ("<repl>", source)
            self.write(format_diagnostic(exc) + "\n")
            return True
        self.buffer = []
        try:
            value = self.interp.eval_source(source)
        except QuminError as exc:
            self.write(format_diagnostic(exc, "<repl>") + "\n")
            return True
        if not isinstance(node, (S.Assignment, S.Load)) and value is not None:
            self.write(show(value) + "\n")
        return True

    def _command(self, text: str) -> bool:
        verb, _, arg = text.partition(" ")
        arg = arg.strip()
        if verb in (":quit", ":q", ":exit"):
            return False
        if verb in (":load", ":qload"):
            if not arg:
                self.write(f"error: {verb} needs a module name\n")
                return True
            name = arg[:-len(SOURCE_SUFFIX)] if arg.endswith(SOURCE_SUFFIX) else arg
            try:
                self.interp.load_module(name, quantum=(verb == ":qload"))
            except QuminError as exc:
                self.write(format_diagnostic(exc, "<repl>") + "\n")
            return True
        if verb == ":help":
            self.write(":load NAME  :qload NAME  :quit\n")
            return True
        self.write(f"error: unknown command {verb}\n")
        return True


def _incomplete(source: str, exc: ParseError) -> bool:
    opens = sum(source.count(c) for c in "([{")
    closes = sum(source.count(c) for c in ")]}")
    if opens > closes:
        return True
    return exc.span is not None and exc.span[0] >= len(source.rstrip())


def cmd_repl(args: argparse.Namespace, inp: TextIO, out: TextIO, err: TextIO) -> int:
    entry = Path(args.file) if args.file else None
    interp = Interpreter(seed=args.seed, out=out.write, search_path=_search_path(entry, args.path))
    if entry is not None:
        source = _read(entry, err)
        if source is None:
            return EXIT_IO
        try:
            interp.run_source(source, str(entry))
        except QuminError as exc:
            err.write(format_diagnostic(exc, str(entry)) + "\n")
    session = Repl(interp, out.write)
    interactive = inp.isatty()
    while True:
        if interactive:
            out.write(session.prompt)
            out.flush()
        line = inp.readline()
        if not line:
            break
        if not session.feed(line.rstrip("\n")):
            break
    return EXIT_OK


def main(argv: Optional[List[str]] = None, stdin: Optional[TextIO] = None,
         stdout: Optional[TextIO] = None, stderr: Optional[TextIO] = None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    if args.verb == "run":
        return cmd_run(args, stdout, stderr)
    if args.verb == "check":
        return cmd_check(args, stdout, stderr)
    return cmd_repl(args, stdin, stdout, stderr)


if __name__ == "__main__":
    sys.exit(main())
