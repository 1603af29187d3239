"""Command line front end: ``mlc parse|run|eq|dict|code``.

Exit status: 0 success, 1 negative answer (not equal, not found),
2 parse/expansion/code error, 3 I/O error, 4 fuel exhausted or
undecided, 5 heap exhausted.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from mlc.distributive import reduce_spine
from mlc.lang import ExpandError, ParseError, expand, parse, prelude, to_mlc
from mlc.machine import CycleDetected, HeapMachine, OutOfMemory
from mlc.serial import (MalformedCode, NfDictionary, OpenTerm, code_of_cl,
                        n_equal, serialize_nf, stream_code, to_cl)
from mlc.term import (FuelExhausted, Term, format_position, free_vars,
                      normalize_oracle, size)

EXIT_OK, EXIT_NO, EXIT_SYNTAX, EXIT_IO, EXIT_FUEL, EXIT_MEMORY = range(6)

DEFAULT_FUEL = 10**7


class _Fail(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status


def _err(msg: str) -> None:
    print(f"mlc: {msg}", file=sys.stderr)


def _positive(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text}") from None
    if n <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text}")
    return n


def _read(path: str) -> str:
    try:
        if path == "-":
            return sys.stdin.read()
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise _Fail(EXIT_IO, f"{path}: {exc.strerror or exc}") from None


def _load(path: str, args, allow_free: bool = False) -> Term:
    """Parse and expand ``path``; with ``allow_free`` undefined identifiers
    stay as free variables instead of being an error."""
    src = _read(path)
    base = None if args.no_prelude else prelude()
    free: set = set()
    try:
        program = parse(src)
        while True:
            try:
                return expand(program, base, free)
            except ExpandError as exc:
                if not allow_free or exc.name in free:
                    raise
                free.add(exc.name)
    except (ParseError, ExpandError) as exc:
        raise _Fail(EXIT_SYNTAX, f"{path}:{exc}") from None


# ---------------------------------------------------------------------------
# engines

def _normalize(t: Term, args) -> Term:
    engine = args.engine
    if engine == "oracle":
        return normalize_oracle(t, args.fuel)
    if engine == "spine":
        trace = None
        if args.trace:
            def trace(k, rule, pos, m):
                print(f"{k} {rule.value} {format_position(pos)} {size(m)}",
                      file=sys.stderr)
        return reduce_spine(t, args.fuel, eta=True, trace=trace)
    m = HeapMachine(args.heap)
    m.load(t)
    trace = None
    if args.trace:
        def trace(k, out):
            print(f"{k} {out.kind} {out.rule or '-'} {out.addr} {out.touches}",
                  file=sys.stderr)
    return m.run(args.fuel, trace)


def _code_text(t: Term) -> str:
    if free_vars(t):
        raise OpenTerm("free variables " + ", ".join(sorted(free_vars(t))))
    return code_of_cl(to_cl(t))


# ---------------------------------------------------------------------------
# subcommands

def cmd_parse(args) -> int:
    print(to_mlc(_load(args.file, args)))
    return EXIT_OK


def cmd_run(args) -> int:
    if args.io:
        return _run_io(args)
    t = _load(args.file, args, allow_free=True)
    nf = _normalize(t, args)
    print(to_mlc(nf))
    if args.code:
        print(_code_text(nf))
    return EXIT_OK


def _run_io(args) -> int:
    from mlc.btio import LazyInput, output_stream
    program = _load(args.file, args, allow_free=True)
    bits = (ch for line in sys.stdin for ch in line if ch in "01")
    stream = output_stream(program, LazyInput(bits), args.fuel)
    written = 0
    for b in stream:
        sys.stdout.write(b)
        written += 1
        if args.bits is not None and written >= args.bits:
            break
    sys.stdout.write("\n")
    if stream.exhausted:
        _err(f"fuel exhausted after {written} bits")
        return EXIT_FUEL
    return EXIT_OK


def cmd_code(args) -> int:
    t = _load(args.file, args)
    if args.bits is not None:
        print(stream_code(t, args.bits, args.fuel))
    else:
        print(serialize_nf(t, args.fuel))
    return EXIT_OK


def cmd_eq(args) -> int:
    a = _load(args.file_a, args)
    b = _load(args.file_b, args)
    verdict = n_equal(a, b, args.bits, args.fuel)
    if verdict is None:
        print("inconclusive")
        return EXIT_FUEL
    print("equal" if verdict else "different")
    return EXIT_OK if verdict else EXIT_NO


def cmd_dict(args) -> int:
    if args.dict is None:
        raise _Fail(EXIT_IO, "--dict PATH is required")
    try:
        d = NfDictionary(args.dict)
    except OSError as exc:
        raise _Fail(EXIT_IO, f"{args.dict}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise _Fail(EXIT_IO, str(exc)) from None
    if args.action == "add":
        t = _load(args.target, args)
        source = _read(args.target)
        try:
            entry = d.put(t, args.meta, args.fuel, source=source)
        except OSError as exc:
            raise _Fail(EXIT_IO, f"{args.dict}: {exc.strerror or exc}") from None
        print(entry.code)
        return EXIT_OK
    entry = d.get(args.target.strip())
    if entry is None:
        _err("no entry")
        return EXIT_NO
    print(f"code\t{entry.code}")
    print(f"nf\t{entry.nf}")
    print(f"meta\t{entry.meta}")
    print("source")
    print(entry.source.rstrip("\n"))
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--fuel", type=_positive, default=DEFAULT_FUEL)
    common.add_argument("--no-prelude", action="store_true",
                        help="do not put the standard macros in scope")

    p = argparse.ArgumentParser(prog="mlc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("parse", parents=[common], help="print the expanded term")
    sp.add_argument("file")
    sp.set_defaults(func=cmd_parse)

    sp = sub.add_parser("run", parents=[common], help="normalize a program")
    sp.add_argument("file")
    sp.add_argument("--engine", choices=("oracle", "spine", "machine"),
                    default="machine")
    sp.add_argument("--heap", type=_positive, default=1 << 20,
                    help="machine heap size in blocks")
    sp.add_argument("--code", action="store_true",
                    help="also print the prefix code of the result")
    sp.add_argument("--trace", action="store_true",
                    help="step trace on the error stream")
    sp.add_argument("--io", action="store_true",
                    help="apply the program to code bits read from stdin "
                         "and stream the output code")
    sp.add_argument("--bits", type=_positive, help="output bit cap for --io")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("code", parents=[common], help="prefix code of the normal form")
    sp.add_argument("file")
    sp.add_argument("--bits", type=_positive,
                    help="stream only this many leading bits")
    sp.set_defaults(func=cmd_code)

    sp = sub.add_parser("eq", parents=[common], help="compare the first N code bits")
    sp.add_argument("file_a")
    sp.add_argument("file_b")
    sp.add_argument("--bits", type=int, required=True)
    sp.set_defaults(func=cmd_eq)

    sp = sub.add_parser("dict", parents=[common], help="normal form dictionary")
    sp.add_argument("action", choices=("add", "get"))
    sp.add_argument("target", help="source file for add, code for get")
    sp.add_argument("--dict", metavar="PATH")
    sp.add_argument("--meta", default="")
    sp.set_defaults(func=cmd_dict)
    return p


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_SYNTAX if exc.code else EXIT_OK
    try:
        return args.func(args)
    except _Fail as exc:
        _err(str(exc))
        return exc.status
    except FuelExhausted as exc:
        _err(str(exc))
        return EXIT_FUEL
    except CycleDetected as exc:
        _err(f"cyclic graph: {exc}")
        return EXIT_FUEL
    except OutOfMemory as exc:
        _err(f"out of memory: {exc}")
        return EXIT_MEMORY
    except (MalformedCode, OpenTerm) as exc:
        _err(str(exc))
        return EXIT_SYNTAX
    except BrokenPipeError:
        return EXIT_IO
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
