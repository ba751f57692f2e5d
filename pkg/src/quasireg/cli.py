"""Command-line surface for the sequence generators and analyzers.

Subcommands: analyze, gen-lowdisc, gen-2qr, gen-epsqr, and the pinwheel
trio (check, solve, gen).  Conventions shared by all of them:

* distributions come from a JSON file ``{"symbols": [...], "probs":
  ["1/2", ...]}`` or a CSV of ``name,prob`` rows; probabilities are exact
  rationals (strings like "1/3", integers, or decimal strings),
* sequences are written as text — concatenated characters when every
  symbol name is a single character, otherwise one name per line — and
  flushed in 64 KiB blocks,
* identical arguments and seed produce byte-identical output;
  QUASIREG_SEED in the environment overrides any --seed,
* exit codes: 0 success (negative results like UNSCHEDULABLE are still
  success), 1 argument/parse errors, 2 precondition violations (bad
  inputs, unreadable files), 3 broken internal contracts (a generator
  emitted something its own verifier rejects).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from fractions import Fraction

import numpy as np

from .seqcore import (ContractError, Dist, StreamAnalyzer, _as_fraction)
from .lowdisc import lowdisc_stream
from .binary2qr import ConnectError, assemble_2qr
from .epsqr import assemble_epsqr
from . import pinwheel as pw

__all__ = ["run", "main"]

WRITE_BLOCK = 64 * 1024
STREAM_CHUNK = 1 << 16


class _ParseError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with 2; we use 1
        raise _ParseError(message)


# ---------------------------------------------------------------------------
# file formats


def load_dist(path: str) -> Dist:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    body = text.lstrip()
    if body.startswith("{"):
        obj = json.loads(body)
        if "probs" not in obj:
            raise ValueError(f"{path}: JSON distribution needs a 'probs' list")
        names = obj.get("symbols")
        return Dist.make(obj["probs"], names)
    names, probs = [], []
    for ln, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise ValueError(f"{path}:{ln}: expected 'name,prob'")
        if ln == 1 and parts == ["symbol", "prob"]:
            continue  # header
        names.append(parts[0])
        probs.append(parts[1])
    if not probs:
        raise ValueError(f"{path}: no distribution rows found")
    return Dist.make(probs, names)


def _name_table(dist: Dist) -> tuple[list[str], bool]:
    names = [dist.name_of(i) for i in range(dist.k)]
    return names, all(len(x) == 1 for x in names)


def read_sequence(path: str, dist: Dist):
    """Yield chunks of symbol ids from a sequence file."""
    names, compact = _name_table(dist)
    lookup = {nm: i for i, nm in enumerate(names)}
    with open(path, "r", encoding="utf-8") as fh:
        if compact:
            while True:
                block = fh.read(1 << 20)
                if not block:
                    break
                ids = []
                for chcar in block:
                    if chcar in ("\n", "\r"):
                        continue
                    if chcar not in lookup:
                        raise ValueError(f"unknown symbol {chcar!r} in {path}")
                    ids.append(lookup[chcar])
                if ids:
                    yield np.asarray(ids, dtype=np.int64)
        else:
            buf = []
            for line in fh:
                nm = line.strip()
                if not nm:
                    continue
                if nm not in lookup:
                    raise ValueError(f"unknown symbol {nm!r} in {path}")
                buf.append(lookup[nm])
                if len(buf) >= STREAM_CHUNK:
                    yield np.asarray(buf, dtype=np.int64)
                    buf = []
            if buf:
                yield np.asarray(buf, dtype=np.int64)


class _Sink:
    """Buffered text writer flushing in WRITE_BLOCK chunks."""

    def __init__(self, path: str | None):
        self._own = path is not None and path != "-"
        self._fh = open(path, "w", encoding="utf-8") if self._own else sys.stdout
        self._buf: list[str] = []
        self._size = 0

    def write(self, text: str) -> None:
        self._buf.append(text)
        self._size += len(text)
        if self._size >= WRITE_BLOCK:
            self.flush()

    def flush(self) -> None:
        if self._buf:
            self._fh.write("".join(self._buf))
            self._buf, self._size = [], 0
        self._fh.flush()

    def close(self) -> None:
        self.flush()
        if self._own:
            self._fh.close()


def _emit_stream(chunks, n: int, dist: Dist, sink: _Sink,
                 analyzer: StreamAnalyzer | None) -> None:
    names, compact = _name_table(dist)
    sep = "" if compact else "\n"
    left = n
    for ch in chunks:
        ch = np.asarray(ch)[: left]
        if analyzer is not None:
            analyzer.update(ch)
        text = sep.join(names[i] for i in ch.tolist())
        sink.write(text + sep if not compact else text)
        left -= ch.size
        if left <= 0:
            break
    if compact:
        sink.write("\n")
    sink.flush()


# ---------------------------------------------------------------------------
# stats


def _per_symbol_qr(analyzer: StreamAnalyzer) -> dict[str, float]:
    out = {}
    gs = analyzer.gap_statistics()
    for s in range(analyzer.dist.k):
        g = gs.per.get(s)
        if g is None or g.min_gap is None:
            out[analyzer.dist.name_of(s)] = 1.0
        else:
            out[analyzer.dist.name_of(s)] = g.max_gap / g.min_gap
    return out


def _stats_payload(command: str, params: dict, analyzer: StreamAnalyzer,
                   t0: float, extra: dict | None = None) -> dict:
    payload = {
        "command": command,
        "params": params,
        "observed_qr": _per_symbol_qr(analyzer),
        "density_error": {
            analyzer.dist.name_of(s): float(e)
            for s, e in analyzer.density_errors().items()
        },
        "discrepancy_max": float(analyzer.max_discrepancy()),
        "runtime_ms": int((time.monotonic() - t0) * 1000),
    }
    if extra:
        payload.update(extra)
    return payload


def _write_stats(path: str | None, payload: dict) -> None:
    if not path:
        return
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_analyze(args, t0: float) -> int:
    dist = load_dist(args.dist)
    analyzer = StreamAnalyzer(dist)
    for ch in read_sequence(args.seq, dist):
        analyzer.update(ch)
    if analyzer.n == 0:
        raise ValueError(f"{args.seq}: empty sequence")
    payload = _stats_payload(
        "analyze", {"dist": args.dist, "seq": args.seq}, analyzer, t0,
        extra={
            "length": analyzer.n,
            "density": {
                dist.name_of(s): int(analyzer.counts[s]) / analyzer.n
                for s in range(dist.k)
            },
        })
    sink = _Sink(args.out)
    sink.write(json.dumps(payload, indent=2) + "\n")
    sink.close()
    return 0


def _gen_common(args, t0: float, command: str, chunks, dist: Dist,
                check, params: dict, extra: dict | None = None) -> int:
    analyzer = StreamAnalyzer(dist)
    sink = _Sink(args.out)
    try:
        _emit_stream(chunks, args.n, dist, sink, analyzer)
    finally:
        sink.close() if args.out else sink.flush()
    _write_stats(args.stats, _stats_payload(command, params, analyzer, t0, extra))
    if args.check and check is not None:
        err = check(analyzer)
        if err:
            print(f"contract violated: {err}", file=sys.stderr)
            return 3
    return 0


def _cmd_gen_lowdisc(args, t0: float) -> int:
    dist = load_dist(args.dist)
    params = {"dist": args.dist, "n": args.n}

    def check(analyzer):
        d = analyzer.max_discrepancy()
        return None if d <= 1 else f"prefix discrepancy {d} exceeds 1"

    return _gen_common(args, t0, "gen-lowdisc", lowdisc_stream(dist, STREAM_CHUNK),
                       dist, check, params)


def _cmd_gen_2qr(args, t0: float) -> int:
    dist = load_dist(args.dist)
    asm = assemble_2qr(dist, pacing=args.pacing)
    params = {"dist": args.dist, "n": args.n, "pacing": args.pacing}

    def check(analyzer):
        gs = analyzer.gap_statistics()
        for s, g in gs.per.items():
            if g.min_gap is not None and g.max_gap > 2 * g.min_gap:
                return (f"symbol {dist.name_of(s)} gap ratio "
                        f"{g.max_gap}/{g.min_gap} exceeds 2")
        return None

    return _gen_common(args, t0, "gen-2qr", asm.stream(STREAM_CHUNK),
                       dist, check, params)


def _cmd_gen_epsqr(args, t0: float) -> int:
    dist = load_dist(args.dist)
    eps = _as_fraction(args.eps)
    asm = assemble_epsqr(dist, eps, profile=args.profile, seed=args.seed,
                         N=args.bucket_cap)
    params = {"dist": args.dist, "n": args.n, "eps": str(eps),
              "profile": args.profile, "seed": args.seed,
              "bucket_cap": args.bucket_cap}

    def check(analyzer):
        bound = 1 + eps
        for name, qr in _per_symbol_qr(analyzer).items():
            if Fraction(qr).limit_denominator(10**9) > bound:
                return f"symbol {name} QR_1 {qr:.4f} exceeds 1+eps = {float(bound):.4f}"
        return None

    return _gen_common(args, t0, "gen-epsqr", asm.chunks(), dist, check,
                       params, extra={"report": asm.report()})


def _parse_periods(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise ValueError(f"cannot parse period vector {text!r}")


def _cmd_pinwheel_check(args, t0: float) -> int:
    v = _parse_periods(args.v)
    with open(args.schedule, "r", encoding="utf-8") as fh:
        word = [int(x) for x in fh.read().split()]
    if not word:
        raise ValueError(f"{args.schedule}: empty schedule")
    res = pw.verify_schedule(v, word, mode=args.mode)
    if res is None:
        print("OK")
    else:
        print(f"VIOLATION task={res.task} start={res.start}")
    return 0


def _cmd_pinwheel_solve(args, t0: float) -> int:
    v = _parse_periods(args.v)
    res = pw.solve_exact(v, cap=args.cap)
    if res == pw.UNSCHEDULABLE:
        print(pw.UNSCHEDULABLE)
    else:
        print(" ".join(str(x) for x in res))
    return 0


def _cmd_pinwheel_gen(args, t0: float) -> int:
    v = _parse_periods(args.v)
    stream = pw.generate_dense(v, _as_fraction(args.eps), seed=args.seed)
    sink = _Sink(args.out)
    maxgap = {k: 0 for k in range(1, len(v) + 1)}
    last = {k: 0 for k in range(1, len(v) + 1)}
    written = 0
    try:
        for ch in stream.chunks():
            ch = ch[: args.n - written]
            for k in range(1, len(v) + 1):
                pos = np.flatnonzero(ch == k) + 1 + written
                if pos.size:
                    first = int(pos[0]) - last[k]
                    inner = int(np.diff(pos).max()) if pos.size > 1 else 0
                    maxgap[k] = max(maxgap[k], first, inner)
                    last[k] = int(pos[-1])
            sink.write("\n".join(str(int(x)) for x in ch.tolist()) + "\n")
            written += ch.size
            if written >= args.n:
                break
    finally:
        sink.close() if args.out else sink.flush()
    _write_stats(args.stats, {
        "command": "pinwheel-gen",
        "params": {"v": v, "eps": str(_as_fraction(args.eps)),
                   "n": args.n, "seed": args.seed},
        "max_gap": {str(k): maxgap[k] for k in maxgap},
        "periods": {str(k): v[k - 1] for k in range(1, len(v) + 1)},
        "eps_effective": str(stream.eps_eff),
        "runtime_ms": int((time.monotonic() - t0) * 1000),
    })
    return 0


# ---------------------------------------------------------------------------
# wiring


def _build_parser() -> _Parser:
    p = _Parser(prog="quasireg",
                description="Symbol streams with exact densities and "
                            "bounded gap ratios")
    sub = p.add_subparsers(dest="command", required=True)

    def add_gen_args(sp, seed=False, eps=False):
        sp.add_argument("--dist", required=True, help="distribution file (JSON or CSV)")
        sp.add_argument("--n", type=int, required=True, help="prefix length")
        sp.add_argument("--out", default=None, help="output path (default stdout)")
        sp.add_argument("--stats", default=None, help="write stats JSON here")
        sp.add_argument("--check", action="store_true",
                        help="self-verify the emitted prefix; exit 3 on breach")
        if seed:
            sp.add_argument("--seed", type=int, default=0)
        if eps:
            sp.add_argument("--eps", required=True, help="gap-ratio margin")

    sp = sub.add_parser("analyze", help="gap/density/discrepancy report")
    sp.add_argument("--dist", required=True)
    sp.add_argument("--seq", required=True, help="sequence file to analyze")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=_cmd_analyze)

    sp = sub.add_parser("gen-lowdisc", help="low-discrepancy stream")
    add_gen_args(sp)
    sp.set_defaults(func=_cmd_gen_lowdisc)

    sp = sub.add_parser("gen-2qr", help="gap-ratio <= 2 stream")
    add_gen_args(sp)
    sp.add_argument("--pacing", choices=("balanced", "classic"), default="balanced")
    sp.set_defaults(func=_cmd_gen_2qr)

    sp = sub.add_parser("gen-epsqr", help="gap-ratio -> 1 stream (spread dists)")
    add_gen_args(sp, seed=True, eps=True)
    sp.add_argument("--profile", choices=("desk", "theory"), default="desk")
    sp.add_argument("--bucket-cap", type=int, default=64,
                    help="bucket size above which block coloring is used")
    sp.set_defaults(func=_cmd_gen_epsqr)

    pin = sub.add_parser("pinwheel", help="pinwheel scheduling tools")
    psub = pin.add_subparsers(dest="pin_command", required=True)

    sp = psub.add_parser("check", help="verify a schedule")
    sp.add_argument("--v", required=True, help="periods, e.g. 2,4,8")
    sp.add_argument("--schedule", required=True)
    sp.add_argument("--mode", choices=("periodic", "prefix"), default="periodic")
    sp.set_defaults(func=_cmd_pinwheel_check)

    sp = psub.add_parser("solve", help="exact solver for small instances")
    sp.add_argument("--v", required=True)
    sp.add_argument("--cap", type=int, default=pw.STATE_CAP)
    sp.set_defaults(func=_cmd_pinwheel_solve)

    sp = psub.add_parser("gen", help="schedule generator for dense instances")
    sp.add_argument("--v", required=True)
    sp.add_argument("--eps", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None)
    sp.add_argument("--stats", default=None)
    sp.set_defaults(func=_cmd_pinwheel_gen)

    return p


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _ParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    env_seed = os.environ.get("QUASIREG_SEED")
    if env_seed is not None and hasattr(args, "seed"):
        try:
            args.seed = int(env_seed)
        except ValueError:
            print(f"error: QUASIREG_SEED={env_seed!r} is not an integer",
                  file=sys.stderr)
            return 1
    t0 = time.monotonic()
    try:
        return args.func(args, t0)
    except (ContractError, ConnectError) as e:
        print(f"contract failure: {e}", file=sys.stderr)
        return 3
    except (ValueError, TypeError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
