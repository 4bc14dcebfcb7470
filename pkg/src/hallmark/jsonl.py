"""Readers and writers for the UTF-8 JSONL dataset formats.

Input datasets use the keys ``model_input`` (question) and
``model_output_text`` (answer). Prediction files carry ``hard_labels`` as
``[[start, end], ...]`` and ``soft_labels`` as
``[{"start": ..., "end": ..., "prob": ...}, ...]``; those key names and
shapes are a fixed wire contract.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable

from .core import GoldRecord, PredictionRecord, QAItem, SpanLabel
from .errors import JsonlParseError, SchemaError


def _iter_records(path: str | Path) -> Iterable[tuple[int, dict]]:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise JsonlParseError(str(path), line_no, exc.msg) from exc
            if not isinstance(obj, dict):
                raise SchemaError(str(path), line_no, "record is not a JSON object")
            yield line_no, obj


def _require(obj: dict, key: str, path: str | Path, line_no: int) -> Any:
    if key not in obj:
        raise SchemaError(str(path), line_no, f"missing required key {key!r}")
    return obj[key]


def _parse_hard_labels(raw: Any, path: str | Path, line_no: int) -> tuple[SpanLabel, ...]:
    try:
        return tuple(SpanLabel(int(s), int(e)) for s, e in raw)
    except (TypeError, ValueError) as exc:
        raise SchemaError(str(path), line_no, f"malformed hard_labels: {exc}") from exc


def _parse_soft_labels(raw: Any, path: str | Path, line_no: int) -> tuple[SpanLabel, ...]:
    try:
        return tuple(
            SpanLabel(int(d["start"]), int(d["end"]), float(d["prob"])) for d in raw
        )
    except (TypeError, KeyError, ValueError) as exc:
        raise SchemaError(str(path), line_no, f"malformed soft_labels: {exc}") from exc


def read_items(path: str | Path) -> list[QAItem]:
    """Read a dataset of QA pairs awaiting annotation."""
    items = []
    for line_no, obj in _iter_records(path):
        items.append(
            QAItem(
                id=str(_require(obj, "id", path, line_no)),
                lang=str(_require(obj, "lang", path, line_no)),
                question=str(_require(obj, "model_input", path, line_no)),
                answer=str(_require(obj, "model_output_text", path, line_no)),
            )
        )
    return items


def read_gold(path: str | Path) -> list[GoldRecord]:
    """Read reference annotations (answer text plus hard and soft labels)."""
    records = []
    for line_no, obj in _iter_records(path):
        records.append(
            GoldRecord(
                id=str(_require(obj, "id", path, line_no)),
                lang=str(_require(obj, "lang", path, line_no)),
                answer=str(_require(obj, "model_output_text", path, line_no)),
                hard_labels=_parse_hard_labels(obj.get("hard_labels", []), path, line_no),
                soft_labels=_parse_soft_labels(obj.get("soft_labels", []), path, line_no),
            )
        )
    return records


def read_predictions(path: str | Path) -> list[PredictionRecord]:
    """Read a prediction file produced by :func:`write_predictions`."""
    records = []
    for line_no, obj in _iter_records(path):
        answer = obj.get("model_output_text")
        records.append(
            PredictionRecord(
                id=str(_require(obj, "id", path, line_no)),
                lang=str(_require(obj, "lang", path, line_no)),
                hard_labels=_parse_hard_labels(
                    _require(obj, "hard_labels", path, line_no), path, line_no
                ),
                soft_labels=_parse_soft_labels(
                    _require(obj, "soft_labels", path, line_no), path, line_no
                ),
                runs_used=int(obj.get("runs_used", 0)),
                answer=str(answer) if answer is not None else None,
            )
        )
    return records


def prediction_to_dict(record: PredictionRecord) -> dict:
    """Serialize one record to the JSONL wire shape."""
    obj: dict[str, Any] = {
        "id": record.id,
        "lang": record.lang,
        "hard_labels": [[s.start, s.end] for s in record.hard_labels],
        "soft_labels": [
            {"start": s.start, "end": s.end, "prob": s.prob} for s in record.soft_labels
        ],
        "runs_used": record.runs_used,
    }
    if record.answer is not None:
        obj["model_output_text"] = record.answer
    return obj


def write_predictions(records: Iterable[PredictionRecord], path: str | Path) -> None:
    """Write one compact JSON object per line, UTF-8, unescaped non-ASCII."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(prediction_to_dict(record), ensure_ascii=False, separators=(",", ":")))
            fh.write("\n")
