"""File parsers and tabular writers.

Run files are the usual six-column whitespace format
``request Q0 item rank score tag``; qrels are ``request iter item grade``;
rating files are ``user,item,rating`` CSVs. Within a request, the ranking
order is score-descending with item-id ascending as the tiebreak; the rank
column is validated but never trusted.
"""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from typing import IO, Iterable, Mapping, NamedTuple, Sequence

from .core import JudgmentSet, JudgmentSource, RankedList
from .errors import ParseError, ValidationError

logger = logging.getLogger(__name__)


class RunFileRecord(NamedTuple):
    request_id: str
    item_id: str
    rank: int
    score: float
    system_tag: str


class QrelsRecord(NamedTuple):
    request_id: str
    item_id: str
    grade: int


def _read_lines(path: str | Path) -> Iterable[tuple[int, str]]:
    with open(path, "r", encoding="utf-8") as fh:
        for number, raw in enumerate(fh, start=1):
            line = raw.strip()
            if line:
                yield number, line


def parse_run_file(
    path: str | Path,
    corpus_size: int,
    system_tag: str | None = None,
) -> dict[str, RankedList]:
    """Parse a run file into per-request rankings.

    ``corpus_size`` is attached to every ranking; it is configuration, not
    file content. Rank columns that disagree with the score ordering are
    reported as a warning because the scores are authoritative.
    """
    if corpus_size < 1:
        raise ValidationError(f"corpus_size must be positive, got {corpus_size}")
    spath = str(path)
    records: dict[str, list[RunFileRecord]] = {}
    seen: set[tuple[str, str]] = set()
    for number, line in _read_lines(path):
        fields = line.split()
        if len(fields) != 6:
            raise ParseError(
                f"expected 6 whitespace-separated fields, got {len(fields)}",
                path=spath,
                line=number,
            )
        request_id, _q0, item_id, rank_text, score_text, tag = fields
        try:
            rank = int(rank_text)
            score = float(score_text)
        except ValueError as exc:
            raise ParseError(f"bad rank/score: {exc}", path=spath, line=number) from exc
        key = (request_id, item_id)
        if key in seen:
            raise ParseError(
                f"duplicate item {item_id!r} for request {request_id!r}",
                path=spath,
                line=number,
            )
        seen.add(key)
        records.setdefault(request_id, []).append(
            RunFileRecord(request_id, item_id, rank, score, tag)
        )

    out: dict[str, RankedList] = {}
    rank_mismatches = 0
    for request_id, recs in records.items():
        recs.sort(key=lambda r: (-r.score, r.item_id))
        for position, rec in enumerate(recs, start=1):
            if rec.rank != position:
                rank_mismatches += 1
        tag = system_tag if system_tag is not None else recs[0].system_tag
        out[request_id] = RankedList(
            request_id=request_id,
            items=tuple(rec.item_id for rec in recs),
            corpus_size=corpus_size,
            system_tag=tag,
        )
    if rank_mismatches:
        logger.warning(
            "%s: %d rank fields disagree with score order; scores are authoritative",
            spath,
            rank_mismatches,
        )
    return out


def parse_qrels(
    path: str | Path, binarize_threshold: int = 1
) -> dict[str, JudgmentSet]:
    """Parse qrels; items with grade >= threshold count as relevant.

    The default threshold of 1 matches conventional binary qrels; graded
    rating exports typically use 4. Duplicate (request, item) lines keep
    the last grade with a warning. Requests where nothing clears the
    threshold yield an empty, unevaluable judgment set so that callers can
    count and skip them.
    """
    spath = str(path)
    grades: dict[str, dict[str, int]] = {}
    duplicates = 0
    for number, line in _read_lines(path):
        fields = line.split()
        if len(fields) != 4:
            raise ParseError(
                f"expected 4 whitespace-separated fields, got {len(fields)}",
                path=spath,
                line=number,
            )
        request_id, _iteration, item_id, grade_text = fields
        try:
            record = QrelsRecord(request_id, item_id, int(grade_text))
        except ValueError as exc:
            raise ParseError(f"bad grade: {exc}", path=spath, line=number) from exc
        per_request = grades.setdefault(record.request_id, {})
        if record.item_id in per_request:
            duplicates += 1
        per_request[record.item_id] = record.grade
    if duplicates:
        logger.warning("%s: %d duplicate judgments; last grade wins", spath, duplicates)
    source = (
        JudgmentSource.BINARY if binarize_threshold <= 1 else JudgmentSource.BINARIZED_FROM_GRADES
    )
    return {
        request_id: JudgmentSet(
            request_id=request_id,
            relevant_ids=frozenset(
                item for item, grade in items.items() if grade >= binarize_threshold
            ),
            source=source,
        )
        for request_id, items in grades.items()
    }


def parse_ratings_csv(path: str | Path, threshold: float = 4.0) -> dict[str, JudgmentSet]:
    """Parse a ``user,item,rating`` CSV into per-user judgment sets."""
    spath = str(path)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty ratings file", path=spath, line=1)
        if [h.strip().lower() for h in header] != ["user", "item", "rating"]:
            raise ParseError(
                f"expected header user,item,rating, got {','.join(header)}",
                path=spath,
                line=1,
            )
        relevant: dict[str, set[str]] = {}
        for number, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise ParseError(
                    f"expected 3 comma-separated fields, got {len(row)}",
                    path=spath,
                    line=number,
                )
            user, item, rating_text = (field.strip() for field in row)
            try:
                rating = float(rating_text)
            except ValueError as exc:
                raise ParseError(f"bad rating: {exc}", path=spath, line=number) from exc
            bucket = relevant.setdefault(user, set())
            if rating >= threshold:
                bucket.add(item)
    return {
        user: JudgmentSet(
            request_id=user,
            relevant_ids=frozenset(items),
            source=JudgmentSource.BINARIZED_FROM_GRADES,
        )
        for user, items in relevant.items()
    }


def _format_cell(value: object) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format(value, ".6g")
    return str(value)


def write_table(
    rows: Iterable[Mapping[str, object]],
    columns: Sequence[str],
    destination: str | Path | IO[str],
    fmt: str = "tsv",
) -> None:
    """Write rows as TSV (floats at 6 significant digits) or lossless JSON."""
    if fmt not in ("tsv", "json"):
        raise ValidationError(f"unknown format {fmt!r}; use tsv or json")
    own = isinstance(destination, (str, Path))
    fh: IO[str] = open(destination, "w", encoding="utf-8") if own else destination
    try:
        materialized = [dict(row) for row in rows]
        for row in materialized:
            missing = [c for c in columns if c not in row]
            if missing:
                raise ValidationError(f"row is missing columns {missing}")
        if fmt == "tsv":
            fh.write("\t".join(columns) + "\n")
            for row in materialized:
                fh.write("\t".join(_format_cell(row[c]) for c in columns) + "\n")
        else:
            payload = [{c: row[c] for c in columns} for row in materialized]
            json.dump(payload, fh, indent=2, sort_keys=False)
            fh.write("\n")
    finally:
        if own:
            fh.close()
