"""Command line front end: ``encode``, ``index``, ``query``, ``evaluate``, ``bench``.

Exit codes: 0 success, 1 usage, 2 I/O, 3 data or format errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import logging
import math
import sys
import time

from . import __version__
from .barcodes import (DownsampleSpec, GaborDescriptor, RadonConfig, RadonDescriptor,
                       parse_tag)
from .gabor import DEFAULT_F_MAX, DEFAULT_SIGMA_F, GaborBankConfig
from .imaging import load_image
from .index import load_index, save_index
from .irma import EvalRecord, load_branch_table, rank_by_suitability
from .pipeline import (DataError, build_from_encoded, encode_rows, evaluate, read_manifest,
                       run_bench)

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DATA = 0, 1, 2, 3

log = logging.getLogger("gaborbarcode")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- descriptor flags

_GBC_FLAGS = ("u", "v", "s", "t", "f_max", "sigma_f", "gamma", "eta_aspect", "phi", "d1", "d2", "pool")
_RBC_FLAGS = ("angles", "bins")


def _add_descriptor_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("descriptor")
    g.add_argument("--kind", choices=("gbc", "rbc"), default=None, help="descriptor family (default gbc)")
    g.add_argument("--u", type=int, help="Gabor scales (default 5)")
    g.add_argument("--v", type=int, help="Gabor orientations (default 8)")
    g.add_argument("--s", type=int, help="window rows, odd (default 23)")
    g.add_argument("--t", type=int, help="window cols, odd (default: same as --s)")
    g.add_argument("--f-max", type=float, help=f"highest frequency, cycles/pixel (default {DEFAULT_F_MAX})")
    g.add_argument("--sigma-f", type=float, help=f"sigma * f product (default {DEFAULT_SIGMA_F})")
    g.add_argument("--gamma", type=float, help="spatial aspect ratio (default 1)")
    g.add_argument("--eta-aspect", type=float, help="kernel normalization aspect (default 1)")
    g.add_argument("--phi", type=float, help="phase offset in radians (default 0)")
    g.add_argument("--d1", type=int, help="column downsampling factor (default 4)")
    g.add_argument("--d2", type=int, help="row downsampling factor (default 4)")
    g.add_argument("--pool", choices=("decimate", "mean"), help="downsampling mode (default decimate)")
    g.add_argument("--angles", type=int, help="RBC projection count (default 4)")
    g.add_argument("--bins", type=int, help="RBC samples per projection (default 128)")
    g.add_argument("--side", type=int, help="normalized image side, power of two (default 32)")


def _descriptor_given(args) -> bool:
    return any(getattr(args, n) is not None for n in _GBC_FLAGS + _RBC_FLAGS + ("kind", "side"))


def descriptor_from_args(args):
    kind = args.kind or ("rbc" if any(getattr(args, n) is not None for n in _RBC_FLAGS) else "gbc")
    side = args.side if args.side is not None else 32
    if kind == "rbc":
        stray = [n for n in _GBC_FLAGS if getattr(args, n) is not None]
        if stray:
            raise UsageError(f"Gabor flags {stray} do not apply to --kind rbc")
        return RadonDescriptor(RadonConfig(args.angles or 4, args.bins or 128), side)
    stray = [n for n in _RBC_FLAGS if getattr(args, n) is not None]
    if stray:
        raise UsageError(f"Radon flags {stray} do not apply to --kind gbc")
    s = args.s if args.s is not None else 23
    bank_kw = {k: getattr(args, k) for k in ("f_max", "sigma_f", "gamma", "eta_aspect", "phi")
               if getattr(args, k) is not None}
    bank = GaborBankConfig(args.u or 5, args.v or 8, s, args.t if args.t is not None else s, **bank_kw)
    ds_kw = {k: getattr(args, k) for k in ("d1", "d2") if getattr(args, k) is not None}
    if args.pool:
        ds_kw["mode"] = args.pool
    return GaborDescriptor(bank, DownsampleSpec(**ds_kw), side).validate()


# ---------------------------------------------------------------- commands

def cmd_encode(args) -> int:
    desc = descriptor_from_args(args)
    code = desc.encode(load_image(args.image))
    fmt = "text" if args.text else args.format
    if fmt == "binary":
        payload = code.words.tobytes()
        if args.out:
            with open(args.out, "wb") as fh:
                fh.write(payload)
        else:
            sys.stdout.buffer.write(payload)
            sys.stdout.flush()
        return EXIT_OK
    bits = "".join("01"[b] for b in code.bits)
    if fmt == "text":
        line = code.to_text()
    elif fmt == "csv":
        line = f"{args.image},{code.config_tag},{bits}"
    else:
        line = bits
    _emit(line + "\n", args.out)
    return EXIT_OK


def cmd_index(args) -> int:
    desc = descriptor_from_args(args)
    base = None
    if args.append:
        base = load_index(args.out)
        if base.config_tag != desc.tag:
            raise DataError(f"cannot append {desc.tag} barcodes to a {base.config_tag} index")
    rows = read_manifest(args.manifest, args.root)
    if not rows:
        raise DataError(f"{args.manifest}: manifest has no rows")
    t0 = time.perf_counter()
    encoded, failed = encode_rows(desc, rows, args.threads)
    for f in failed:
        log.warning("row %s (%s) failed: %s", f.row.image_id, f.row.path, f.error)
    if failed and not args.skip_bad:
        err = failed[0].error
        raise err if isinstance(err, (OSError, ValueError)) else DataError(str(err))
    if not encoded:
        raise DataError("no rows could be encoded")
    index = build_from_encoded(encoded, base)
    save_index(index, args.out)
    dt = time.perf_counter() - t0
    print(f"indexed {len(encoded)} images ({len(failed)} skipped) as {index.config_tag} "
          f"in {dt:.2f}s ({len(encoded) / dt if dt > 0 else float('inf'):.1f} img/s) -> {args.out}",
          file=sys.stderr)
    return EXIT_OK


def cmd_query(args) -> int:
    index = load_index(args.index)
    stored = parse_tag(index.config_tag)
    if _descriptor_given(args):
        requested = descriptor_from_args(args)
        if requested.tag != index.config_tag:
            raise DataError(f"descriptor {requested.tag} does not match index {index.config_tag}")
    probe = stored.encode(load_image(args.image))
    for rank, (image_id, sim) in enumerate(index.query(probe, args.k), start=1):
        label = index[image_id].label
        print(f"{rank}\t{image_id}\t{sim:.6f}" + (f"\t{label}" if label is not None else ""))
    return EXIT_OK


def _replay_records(path) -> list[EvalRecord]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or rec[0].startswith("#"):
                continue
            if lineno == 1 and rec[0].strip().lower() in ("method", "method_name", "barcode"):
                continue
            try:
                out.append(EvalRecord(rec[0].strip(), float(rec[1]), int(rec[2])))
            except (IndexError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: expected method,E_total,L_code") from exc
    return out


def _eta_table(records, e_max, l_max) -> list[list[str]]:
    ranked = rank_by_suitability(records, e_max, l_max)
    return [[str(i), r.method_name, f"{r.e_total:g}", str(r.l_code), f"{r.eta_suitability:.8f}"]
            for i, r in enumerate(ranked, start=1)]


def cmd_evaluate(args) -> int:
    if not args.replay and (args.index is None or args.manifest is None):
        raise UsageError("evaluate needs INDEX and MANIFEST, or --replay")
    records = _replay_records(args.replay) if args.replay else []
    out = io.StringIO()
    if args.index is not None:
        if args.manifest is None:
            raise UsageError("evaluate needs a test MANIFEST alongside INDEX")
        index = load_index(args.index)
        desc = parse_tag(index.config_tag)
        table = load_branch_table(args.branch_table) if args.branch_table else None
        rows = read_manifest(args.manifest, args.root)
        report = evaluate(index, desc, rows, table, args.threads, args.skip_bad)
        summary = report.summary_rows()
        if report.e_total > 0 and args.emax is not None and args.lmax is not None and not records:
            eta = EvalRecord(index.config_tag, report.e_total, index.code_length)
            summary.append(("eta", f"{args.emax * args.lmax / (eta.e_total * eta.l_code):.8f}"))
        if args.format == "csv":
            w = csv.writer(out, lineterminator="\n")
            w.writerow(["metric", "value"])
            w.writerows(summary)
        else:
            width = max(len(k) for k, _ in summary)
            for k, v in summary:
                out.write(f"{k:<{width}}  {v}\n")
        if args.per_image:
            with open(args.per_image, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh)
                w.writerow(["image_id", "hit_id", "similarity", "query_code", "hit_code", "error"])
                for r in report.results:
                    w.writerow([r.image_id, r.hit_id, f"{r.similarity:.6f}", r.query_label,
                                r.hit_label, f"{r.error:.9f}"])
        if records and report.e_total > 0:
            records.append(EvalRecord(index.config_tag, report.e_total, index.code_length))
    if records:
        rows = _eta_table(records, args.emax, args.lmax)
        header = ["rank", "method", "E_total", "L_code", "eta"]
        if out.tell():
            out.write("\n")
        _write_table(out, header, rows, args.format)
    _emit(out.getvalue(), args.out)
    return EXIT_OK


def _bench_cells(args):
    gbc_lists = [args.u, args.v, args.s]
    cells = []
    if any(gbc_lists) or args.t:
        if not all(gbc_lists):
            raise UsageError("a Gabor grid needs --u, --v and --s values")
        ts = args.t or [None]
        for u, v, s, t in itertools.product(args.u, args.v, args.s, ts):
            t = s if t is None else t
            name = f"GBC({u},{v},{s},{t})"

            def factory(u=u, v=v, s=s, t=t):
                bank = GaborBankConfig(u, v, s, t, f_max=args.f_max, sigma_f=args.sigma_f)
                desc = GaborDescriptor(bank, DownsampleSpec(args.d1, args.d2, args.pool), args.side)
                return desc.validate()

            cells.append((name, factory))
    for n in args.angles or []:
        cells.append((f"RBC({n},{args.bins})",
                      lambda n=n: RadonDescriptor(RadonConfig(n, args.bins), args.side)))
    if not cells:
        raise UsageError("empty grid: give --u/--v/--s values and/or --angles")
    return cells


def cmd_bench(args) -> int:
    cells = _bench_cells(args)
    train = read_manifest(args.train, args.root)
    test = read_manifest(args.test, args.root)
    table = load_branch_table(args.branch_table) if args.branch_table else None
    rows = run_bench(cells, train, test, table, args.threads)
    header = ["rank", "barcode", "E_total", "L_code", "first_hit_exact", "eta", "status"]

    def fmt(rank, r):
        return [str(rank), r.name,
                "" if r.e_total is None else f"{r.e_total:.6f}",
                "" if r.l_code is None else str(r.l_code),
                "" if r.exact_rate is None else f"{r.exact_rate:.4f}",
                "" if r.eta is None else f"{r.eta:.8f}",
                r.error or "ok"]

    ok = [r for r in rows if r.error is None]
    bad = [r for r in rows if r.error is not None]
    by_error = sorted(ok, key=lambda r: r.e_total) + bad
    by_eta = sorted(ok, key=lambda r: -(r.eta if r.eta is not None else -math.inf)) + bad
    out = io.StringIO()
    if args.format == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["ranking"] + header)
        for ranking, ordered in (("E_total", by_error), ("eta", by_eta)):
            for i, r in enumerate(ordered, start=1):
                w.writerow([ranking] + fmt(i, r))
    else:
        out.write("ranked by E_total\n")
        _write_table(out, header, [fmt(i, r) for i, r in enumerate(by_error, 1)], "text")
        out.write("\nranked by eta\n")
        _write_table(out, header, [fmt(i, r) for i, r in enumerate(by_eta, 1)], "text")
    _emit(out.getvalue(), args.out)
    return EXIT_OK if ok else EXIT_DATA


# ---------------------------------------------------------------- output helpers

def _write_table(out, header, rows, fmt) -> None:
    if fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return
    widths = [max(len(str(c)) for c in col) for col in zip(header, *rows)]
    for row in [header] + rows:
        out.write("  ".join(str(c).ljust(w) for c, w in zip(row, widths)).rstrip() + "\n")


def _emit(text: str, path) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gaborbarcode", description="Gabor/Radon barcodes for image retrieval.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-q", "--quiet", action="store_true", help="only print errors")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("encode", help="print the barcode of one image")
    e.add_argument("image")
    _add_descriptor_flags(e)
    e.add_argument("--text", action="store_true", help="emit '<config_tag>:<bits>'")
    e.add_argument("--format", choices=("bits", "text", "csv", "binary"), default="bits")
    e.add_argument("--out", help="write to this file instead of stdout")
    e.set_defaults(func=cmd_encode)

    i = sub.add_parser("index", help="encode a manifest into an index file")
    i.add_argument("manifest", help="CSV: image_id,path[,irma_code]")
    _add_descriptor_flags(i)
    i.add_argument("--out", required=True, help="index file to write")
    i.add_argument("--append", action="store_true", help="extend the existing index at --out")
    i.add_argument("--skip-bad", action="store_true", help="skip unreadable rows instead of aborting")
    i.add_argument("--root", help="base directory for relative image paths")
    i.add_argument("--threads", type=int, default=1)
    i.set_defaults(func=cmd_index)

    q = sub.add_parser("query", help="rank index entries against one image")
    q.add_argument("index")
    q.add_argument("image")
    q.add_argument("-k", type=int, default=5)
    _add_descriptor_flags(q)
    q.set_defaults(func=cmd_query)

    v = sub.add_parser("evaluate", help="first-hit IRMA error of a labeled test manifest")
    v.add_argument("index", nargs="?")
    v.add_argument("manifest", nargs="?")
    v.add_argument("--branch-table", help="text file, one line of integers per axis")
    v.add_argument("--emax", type=float, help="E_max for eta (default: max over compared runs)")
    v.add_argument("--lmax", type=int, help="L_max for eta (default: max over compared runs)")
    v.add_argument("--replay", help="CSV of method,E_total,L_code rows to rank by eta")
    v.add_argument("--per-image", help="write per-query results to this CSV")
    v.add_argument("--format", choices=("text", "csv"), default="text")
    v.add_argument("--out")
    v.add_argument("--root")
    v.add_argument("--skip-bad", action="store_true")
    v.add_argument("--threads", type=int, default=1)
    v.set_defaults(func=cmd_evaluate)

    b = sub.add_parser("bench", help="sweep descriptor parameters over a labeled dataset")
    b.add_argument("--train", required=True, help="manifest of images to index")
    b.add_argument("--test", required=True, help="manifest of labeled query images")
    b.add_argument("--u", type=int, nargs="+")
    b.add_argument("--v", type=int, nargs="+")
    b.add_argument("--s", type=int, nargs="+")
    b.add_argument("--t", type=int, nargs="+", help="window cols (default: equal to s)")
    b.add_argument("--angles", type=int, nargs="+", help="RBC projection counts")
    b.add_argument("--bins", type=int, default=128)
    b.add_argument("--f-max", type=float, default=DEFAULT_F_MAX)
    b.add_argument("--sigma-f", type=float, default=DEFAULT_SIGMA_F)
    b.add_argument("--d1", type=int, default=4)
    b.add_argument("--d2", type=int, default=4)
    b.add_argument("--pool", choices=("decimate", "mean"), default="decimate")
    b.add_argument("--side", type=int, default=32)
    b.add_argument("--branch-table")
    b.add_argument("--format", choices=("text", "csv"), default="text")
    b.add_argument("--out")
    b.add_argument("--root")
    b.add_argument("--threads", type=int, default=1)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"gaborbarcode: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"gaborbarcode: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, ZeroDivisionError, KeyError) as exc:
        print(f"gaborbarcode: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
