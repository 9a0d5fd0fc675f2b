"""Batch encoding, first-hit evaluation and parameter sweeps.

Everything here is deterministic: worker pools only change wall time,
never the order or value of results.
"""
from __future__ import annotations

import csv
import logging
import math
import os
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from .barcodes import Barcode
from .imaging import GrayImage, ImageError, load_image
from .index import BarcodeIndex, IndexEntry
from .irma import (AXIS_NAMES, BranchTable, EvalRecord, IrmaCode, axis_errors,
                   build_branch_table, parse_irma, rank_by_suitability)

log = logging.getLogger(__name__)


class DataError(ValueError):
    """Bad manifest rows, missing labels and similar dataset problems."""


@dataclass(frozen=True)
class ManifestRow:
    image_id: str
    path: Path
    label: IrmaCode | None = None


def read_manifest(path: str | os.PathLike, root: str | os.PathLike | None = None) -> list[ManifestRow]:
    """Parse an ``image_id,path[,irma_code]`` CSV.

    A header row starting with ``image_id`` is skipped.  Relative image
    paths resolve against ``root`` or else the manifest's directory.
    """
    path = Path(path)
    base = Path(root) if root is not None else path.parent
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or not any(c.strip() for c in rec) or rec[0].lstrip().startswith("#"):
                continue
            if lineno == 1 and rec[0].strip().lower() == "image_id":
                continue
            if len(rec) < 2:
                raise DataError(f"{path}:{lineno}: expected image_id,path[,irma_code]")
            image_id, img = rec[0].strip(), rec[1].strip()
            code = rec[2].strip() if len(rec) > 2 else ""
            try:
                label = parse_irma(code) if code else None
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
            img_path = Path(img)
            rows.append(ManifestRow(image_id, img_path if img_path.is_absolute() else base / img_path, label))
    ids = [r.image_id for r in rows]
    if len(set(ids)) != len(ids):
        raise DataError(f"{path}: duplicate image_id values")
    return rows


def parallel_map(fn: Callable, items: Sequence, threads: int = 1) -> list:
    """Ordered map over ``items``; exceptions are returned in place of results."""

    def guarded(item):
        try:
            return fn(item)
        except Exception as exc:  # noqa: BLE001 - surfaced per item to the caller
            return exc

    if threads <= 1 or len(items) <= 1:
        return [guarded(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(guarded, items))


@dataclass
class Encoded:
    row: ManifestRow
    barcode: Barcode
    seconds: float


@dataclass
class Failure:
    row: ManifestRow
    error: Exception


def load_rows(rows: Sequence[ManifestRow], threads: int = 1) -> list[GrayImage | Exception]:
    return parallel_map(lambda r: load_image(r.path), rows, threads)


def encode_images(descriptor, rows: Sequence[ManifestRow], images: Sequence[GrayImage | Exception],
                  threads: int = 1) -> tuple[list[Encoded], list[Failure]]:
    def work(pair):
        row, image = pair
        if isinstance(image, Exception):
            raise image
        t0 = time.perf_counter()
        code = descriptor.encode(image)
        return Encoded(row, code, time.perf_counter() - t0)

    done, failed = [], []
    for row, res in zip(rows, parallel_map(work, list(zip(rows, images)), threads)):
        if isinstance(res, Exception):
            failed.append(Failure(row, res))
        else:
            done.append(res)
    return done, failed


def encode_rows(descriptor, rows: Sequence[ManifestRow], threads: int = 1):
    return encode_images(descriptor, rows, load_rows(rows, threads), threads)


def build_from_encoded(encoded: Sequence[Encoded], base: BarcodeIndex | None = None) -> BarcodeIndex:
    entries = [IndexEntry(e.row.image_id, e.barcode, e.row.label) for e in encoded]
    return base.with_entries(entries) if base is not None else BarcodeIndex(entries)


# ---------------------------------------------------------------- evaluation

@dataclass
class QueryResult:
    image_id: str
    hit_id: str
    similarity: float
    query_label: IrmaCode
    hit_label: IrmaCode
    axis_errors: tuple[float, ...]
    extract_seconds: float
    query_seconds: float

    @property
    def error(self) -> float:
        return math.fsum(self.axis_errors)

    @property
    def exact(self) -> bool:
        return self.query_label == self.hit_label


@dataclass
class EvaluationReport:
    config_tag: str
    code_length: int
    table: BranchTable
    results: list[QueryResult]
    failures: list[Failure] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.results)

    @property
    def e_total(self) -> float:
        return math.fsum(r.error for r in self.results)

    @property
    def axis_totals(self) -> tuple[float, ...]:
        return tuple(math.fsum(r.axis_errors[j] for r in self.results) for j in range(4))

    @property
    def exact_match_rate(self) -> float:
        return sum(r.exact for r in self.results) / self.n if self.results else float("nan")

    @property
    def median_extract_seconds(self) -> float:
        return statistics.median(r.extract_seconds for r in self.results) if self.results else float("nan")

    @property
    def median_query_seconds(self) -> float:
        return statistics.median(r.query_seconds for r in self.results) if self.results else float("nan")

    def summary_rows(self) -> list[tuple[str, str]]:
        rows = [
            ("config_tag", self.config_tag),
            ("L_code", str(self.code_length)),
            ("queries", str(self.n)),
            ("E_total", f"{self.e_total:.6f}"),
        ]
        rows += [(f"E_axis_{name}", f"{v:.6f}") for name, v in zip(AXIS_NAMES, self.axis_totals)]
        rows += [
            ("first_hit_exact_rate", f"{self.exact_match_rate:.6f}"),
            ("median_extract_s", f"{self.median_extract_seconds:.6f}"),
            ("median_query_s", f"{self.median_query_seconds:.6f}"),
            ("branch_table", self.table.source),
            ("failed_rows", str(len(self.failures))),
        ]
        return rows


def require_labels(index: BarcodeIndex, rows: Sequence[ManifestRow]) -> None:
    missing = [e.image_id for e in index if e.label is None]
    if missing:
        raise DataError(f"index entries without IRMA labels: {missing[:5]}")
    missing = [r.image_id for r in rows if r.label is None]
    if missing:
        raise DataError(f"test rows without IRMA labels: {missing[:5]}")


def evaluate_encoded(index: BarcodeIndex, encoded: Sequence[Encoded],
                     table: BranchTable | None = None, failures=(), threads: int = 1) -> EvaluationReport:
    """First-hit retrieval for every encoded test image, scored with the IRMA error."""
    require_labels(index, [e.row for e in encoded])
    if table is None:
        table = build_branch_table(e.label for e in index)

    def work(enc: Encoded) -> QueryResult:
        t0 = time.perf_counter()
        hit_id, sim = index.query(enc.barcode, 1)[0]
        dt = time.perf_counter() - t0
        hit_label = index[hit_id].label
        return QueryResult(enc.row.image_id, hit_id, sim, enc.row.label, hit_label,
                           axis_errors(enc.row.label, hit_label, table), enc.seconds, dt)

    results = parallel_map(work, list(encoded), threads)
    for r in results:
        if isinstance(r, Exception):
            raise r
    return EvaluationReport(index.config_tag, index.code_length, table, results, list(failures))


def evaluate(index: BarcodeIndex, descriptor, rows: Sequence[ManifestRow],
             table: BranchTable | None = None, threads: int = 1, skip_bad: bool = False) -> EvaluationReport:
    if descriptor.tag != index.config_tag:
        raise DataError(f"descriptor {descriptor.tag} does not match index {index.config_tag}")
    require_labels(index, rows)
    encoded, failed = encode_rows(descriptor, rows, threads)
    if failed and not skip_bad:
        raise failed[0].error
    return evaluate_encoded(index, encoded, table, failed, threads)


# ---------------------------------------------------------------- sweeps

@dataclass
class BenchRow:
    name: str
    l_code: int | None = None
    e_total: float | None = None
    exact_rate: float | None = None
    eta: float | None = None
    error: str | None = None


def run_bench(cells: Sequence[tuple[str, Callable[[], object]]], train: Sequence[ManifestRow],
              test: Sequence[ManifestRow], table: BranchTable | None = None,
              threads: int = 1) -> list[BenchRow]:
    """Encode, index and evaluate each grid cell; failed cells keep their error text.

    ``cells`` pairs a display name with a zero-argument descriptor factory
    so that invalid parameter combinations fail inside their own cell.
    """
    train_images = load_rows(train, threads)
    test_images = load_rows(test, threads)
    out = []
    for name, factory in cells:
        try:
            desc = factory()
            enc_train, bad_train = encode_images(desc, train, train_images, threads)
            enc_test, bad_test = encode_images(desc, test, test_images, threads)
            if bad_train or bad_test:
                raise (bad_train or bad_test)[0].error
            index = build_from_encoded(enc_train)
            report = evaluate_encoded(index, enc_test, table, threads=threads)
            out.append(BenchRow(desc.tag, index.code_length, report.e_total, report.exact_match_rate))
        except (ValueError, OSError, ImageError) as exc:
            log.warning("bench cell %s failed: %s", name, exc)
            out.append(BenchRow(name, error=f"{type(exc).__name__}: {exc}"))
    scored = [r for r in out if r.error is None and r.e_total > 0]
    if scored:
        ranked = rank_by_suitability([EvalRecord(r.name, r.e_total, r.l_code) for r in scored])
        etas = {r.method_name: r.eta_suitability for r in ranked}
        for r in scored:
            r.eta = etas[r.name]
    return out
