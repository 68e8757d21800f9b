"""Command-line entry point.

Exit status: 0 on success, 1 on a domain error (validation, protocol,
malformed frames, trace mismatch), 2 on usage or I/O errors.
"""

import argparse
import sys
from pathlib import Path

from .errors import ConfigError, QcmError
from .metadata import parse_record
from .scenario import BUNDLED, load_scenario
from .sim import Simulation, TraceMode
from .wire import Direction, decode_stream, describe, encode_multipart, fragment, hexdump, parse_hexdump

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2


def _err(msg):
    print("qcmflow: " + msg, file=sys.stderr)


def cmd_run(scenario, mode=None, out=None):
    if not Path(scenario).exists() and scenario not in BUNDLED:
        _err("scenario file not found: %s" % scenario)
        return EXIT_USAGE
    try:
        sc = load_scenario(scenario)
    except OSError as exc:
        _err("cannot read scenario %s: %s" % (scenario, exc))
        return EXIT_USAGE
    except ConfigError as exc:
        _err("%s: %s" % (scenario, exc))
        return EXIT_DOMAIN
    trace_mode = TraceMode(mode) if mode else sc.trace_mode
    try:
        text = Simulation(sc.topology, sc.t_end, sc.seed, trace_mode).run().text()
    except QcmError as exc:
        _err("%s: %s" % (scenario, exc))
        return EXIT_DOMAIN
    sys.stdout.write(text)
    if out:
        try:
            Path(out).write_text(text)
        except OSError as exc:
            _err("cannot write %s: %s" % (out, exc))
            return EXIT_USAGE
    return EXIT_OK


def _read_input(path):
    if path is None or path == "-":
        return sys.stdin.read()
    return Path(path).read_text()


def cmd_decode(path=None, inline=None):
    try:
        text = inline if inline is not None else _read_input(path)
    except OSError as exc:
        _err("cannot read %s: %s" % (path, exc))
        return EXIT_USAGE
    try:
        messages = decode_stream(parse_hexdump(text))
    except QcmError as exc:
        _err("decode failed: %s" % exc)
        return EXIT_DOMAIN
    lines = []
    for i, m in enumerate(messages):
        if i:
            lines.append("")
        lines.append("# message %d" % i)
        lines.extend(describe(m))
    sys.stdout.write("".join(line + "\n" for line in lines))
    return EXIT_OK


def parse_record_blocks(text):
    """Records in canonical text form, separated by blank lines or ``#`` lines."""
    blocks, current = [], []
    for line in text.splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            if current:
                blocks.append(current)
                current = []
            continue
        current.append(line)
    if current:
        blocks.append(current)
    return [parse_record(b) for b in blocks]


def cmd_encode(spec, direction, xid):
    try:
        text = _read_input(spec)
    except OSError as exc:
        _err("cannot read %s: %s" % (spec, exc))
        return EXIT_USAGE
    try:
        records = parse_record_blocks(text)
        frames = [encode_multipart(m) for m in fragment(records, xid, Direction[direction.upper()])]
    except (QcmError, ValueError) as exc:
        _err("encode failed: %s" % exc)
        return EXIT_DOMAIN
    sys.stdout.write("\n\n".join(hexdump(f) for f in frames) + "\n")
    return EXIT_OK


def cmd_diff_trace(actual, golden):
    try:
        a = Path(actual).read_bytes()
        g = Path(golden).read_bytes()
    except OSError as exc:
        _err("cannot read trace: %s" % exc)
        return EXIT_USAGE
    if a == g:
        return EXIT_OK
    a_lines = a.decode("utf-8", "replace").split("\n")
    g_lines = g.decode("utf-8", "replace").split("\n")
    for n in range(max(len(a_lines), len(g_lines))):
        la = a_lines[n] if n < len(a_lines) else "<end of file>"
        lg = g_lines[n] if n < len(g_lines) else "<end of file>"
        if la != lg:
            print("traces differ at line %d" % (n + 1))
            print("  actual: %s" % la)
            print("  golden: %s" % lg)
            break
    else:
        print("traces differ in line endings or trailing bytes")
    return EXIT_DOMAIN


def build_parser():
    p = argparse.ArgumentParser(prog="qcmflow", description="QCM metadata over OpenFlow: codec and simulator")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario and print its trace")
    r.add_argument("--scenario", required=True, help="scenario JSON path, or a bundled name (fig8)")
    r.add_argument("--mode", choices=[m.value for m in TraceMode], help="trace naming mode")
    r.add_argument("--out", help="also write the trace to this file")

    d = sub.add_parser("decode", help="decode hex-dumped QCM multipart frames")
    d.add_argument("--in", dest="path", help="hex dump file (default: standard input)")
    d.add_argument("--hex", dest="inline", help="hex dump given inline")

    e = sub.add_parser("encode", help="encode records into hex-dumped multipart frames")
    e.add_argument("--spec", required=True, help="record text file ('-' for standard input)")
    e.add_argument("--direction", required=True, choices=["request", "reply"])
    e.add_argument("--xid", required=True, type=int)

    t = sub.add_parser("diff-trace", help="compare a trace against a golden file")
    t.add_argument("actual")
    t.add_argument("golden")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args.scenario, args.mode, args.out)
    if args.command == "decode":
        return cmd_decode(args.path, args.inline)
    if args.command == "encode":
        if not 0 <= args.xid <= 0xFFFFFFFF:
            _err("--xid must fit in 32 bits")
            return EXIT_USAGE
        return cmd_encode(args.spec, args.direction, args.xid)
    return cmd_diff_trace(args.actual, args.golden)


if __name__ == "__main__":
    sys.exit(main())
