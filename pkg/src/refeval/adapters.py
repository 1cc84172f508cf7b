"""Parsers that turn heterogeneous model output into prediction sets.

Two ingestion paths: the line-delimited prediction interchange (boxes, points,
or an explicit rejection per record) and the retrieval-index decoder format
``<g>referring</g><o><objM>...<objN></o>`` in which each ``<objK>`` token
names an input bounding box by index.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .types import Box, EvalError, Point, PredictionSet, normalize_prediction

_OBJ_TOKEN = re.compile(r"<obj(\d+)>")


@dataclass(frozen=True)
class RetrievalOutput:
    """A decoded retrieval answer: the referring text and ordered box indices."""

    referring_text: str
    indices: tuple[int, ...]


def parse_retrieval_output(text: str) -> RetrievalOutput:
    """Decode one ``<g>...</g><o>...</o>`` answer.

    The four delimiters must appear in order; incidental text outside the two
    delimited spans is ignored. The index span must be a run of ``<objK>``
    tokens with decimal K and no separators (an empty span is a rejection);
    a lenient mode would only mask model formatting bugs.
    """
    g_open = text.find("<g>")
    g_close = text.find("</g>", g_open + 3) if g_open != -1 else -1
    o_open = text.find("<o>", g_close + 4) if g_close != -1 else -1
    o_close = text.find("</o>", o_open + 3) if o_open != -1 else -1
    if -1 in (g_open, g_close, o_open, o_close):
        raise EvalError(
            "MALFORMED_OUTPUT",
            f"expected <g>...</g><o>...</o>, got {text!r}",
        )
    referring = text[g_open + 3 : g_close]
    span = text[o_open + 3 : o_close]
    indices: list[int] = []
    pos = 0
    while pos < len(span):
        m = _OBJ_TOKEN.match(span, pos)
        if m is None:
            if span.startswith("<obj", pos):
                raise EvalError("BAD_INDEX_TOKEN", f"bad object token at {span[pos:]!r}")
            raise EvalError(
                "MALFORMED_OUTPUT", f"unexpected content in index span at {span[pos:]!r}"
            )
        indices.append(int(m.group(1)))
        pos = m.end()
    return RetrievalOutput(referring_text=referring, indices=tuple(indices))


def render_retrieval_output(output: RetrievalOutput) -> str:
    """Format a RetrievalOutput back into the decoder's token stream."""
    tokens = "".join(f"<obj{k}>" for k in output.indices)
    return f"<g>{output.referring_text}</g><o>{tokens}</o>"


def resolve_indices(
    output: RetrievalOutput, input_boxes: Sequence[Box], referring_id: str
) -> PredictionSet:
    """Map retrieval indices to the input boxes they name.

    Duplicate indices keep their first occurrence (a decoder may stutter;
    double-counting would corrupt precision); an empty index list is a
    rejection.
    """
    boxes: list[Box] = []
    seen: set[int] = set()
    for idx in output.indices:
        if not 0 <= idx < len(input_boxes):
            raise EvalError(
                "INDEX_OUT_OF_RANGE",
                f"index {idx} outside input box list of length {len(input_boxes)}",
            )
        if idx in seen:
            continue
        seen.add(idx)
        boxes.append(input_boxes[idx])
    if not boxes:
        return PredictionSet.rejection(referring_id)
    return PredictionSet.of_boxes(referring_id, boxes)


_PAYLOAD_KEYS = ("boxes", "points", "rejection", "raw")


def _schema_error(line_no: int, detail: str) -> EvalError:
    return EvalError("SCHEMA_ERROR", f"line {line_no}: {detail}")


def _as_floats(values, line_no: int, arity: int, what: str) -> tuple[float, ...]:
    if (
        not isinstance(values, (list, tuple))
        or len(values) != arity
        or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in values)
    ):
        raise _schema_error(line_no, f"{what} must be a list of {arity} numbers, got {values!r}")
    return tuple(float(v) for v in values)


def parse_box_predictions(
    content: str | Iterable[str],
    *,
    input_boxes_by_referring: Mapping[str, Sequence[Box]] | None = None,
) -> list[PredictionSet]:
    """Parse line-delimited prediction records into normalized PredictionSets.

    Each line is a JSON object with ``referring_id`` and exactly one of
    ``boxes``, ``points``, ``rejection: true``, or ``raw`` (a retrieval-format
    string, only accepted when ``input_boxes_by_referring`` supplies the
    per-referring input box lists to resolve against). All format problems
    raise SCHEMA_ERROR with the offending line number.
    """
    lines = content.splitlines() if isinstance(content, str) else content
    out: list[PredictionSet] = []
    for line_no, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            raise _schema_error(line_no, f"invalid JSON ({e.msg})") from e
        if not isinstance(record, dict):
            raise _schema_error(line_no, "record must be a JSON object")
        referring_id = record.get("referring_id")
        if not isinstance(referring_id, str) or not referring_id:
            raise _schema_error(line_no, "missing or non-string referring_id")
        present = [k for k in _PAYLOAD_KEYS if k in record]
        if len(present) != 1:
            raise _schema_error(
                line_no,
                f"record must carry exactly one of {_PAYLOAD_KEYS}, found {present or 'none'}",
            )
        unknown = set(record) - {"referring_id", *_PAYLOAD_KEYS}
        if unknown:
            raise _schema_error(line_no, f"unknown fields {sorted(unknown)}")
        key = present[0]
        try:
            if key == "boxes":
                if not isinstance(record["boxes"], list):
                    raise _schema_error(line_no, "boxes must be a list")
                boxes = [Box(*_as_floats(b, line_no, 4, "box")) for b in record["boxes"]]
                pred = PredictionSet.of_boxes(referring_id, boxes)
            elif key == "points":
                if not isinstance(record["points"], list):
                    raise _schema_error(line_no, "points must be a list")
                points = [Point(*_as_floats(p, line_no, 2, "point")) for p in record["points"]]
                pred = PredictionSet.of_points(referring_id, points)
            elif key == "rejection":
                if record["rejection"] is not True:
                    raise _schema_error(line_no, "rejection must be true when present")
                pred = PredictionSet.rejection(referring_id)
            else:
                if input_boxes_by_referring is None:
                    raise _schema_error(
                        line_no, "raw retrieval records need the dataset's input boxes"
                    )
                if not isinstance(record["raw"], str):
                    raise _schema_error(line_no, "raw must be a string")
                if referring_id not in input_boxes_by_referring:
                    raise EvalError(
                        "UNKNOWN_REFERRING_ID",
                        f"line {line_no}: raw record references unknown referring "
                        f"{referring_id!r}",
                    )
                pred = resolve_indices(
                    parse_retrieval_output(record["raw"]),
                    input_boxes_by_referring[referring_id],
                    referring_id,
                )
            out.append(normalize_prediction(pred))
        except EvalError as e:
            if e.code in ("SCHEMA_ERROR", "UNKNOWN_REFERRING_ID"):
                raise
            raise EvalError(e.code, f"line {line_no}: {e.args[0]}") from e
    return out
