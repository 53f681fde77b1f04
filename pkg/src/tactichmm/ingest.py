"""Reading session action logs and encoding them against an action alphabet.

Two input layouts are accepted, both UTF-8:

* CSV with header ``session_id,timestamp,action``
* JSON lines, one object per line with the same three keys

Timestamps are ISO-8601; a trailing ``Z`` is read as UTC and naive
timestamps are taken to be UTC as well.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable, Optional, Union

from .errors import EncodingError, LogFormatError
from .model import ActionAlphabet, EncodedCorpus, Sequence

logger = logging.getLogger(__name__)

FIELDS = ("session_id", "timestamp", "action")
FORMATS = ("csv", "jsonl")
UNKNOWN_MODES = ("strict", "drop")


@dataclass(frozen=True)
class RawEvent:
    session_id: str
    timestamp: str
    action: str
    line: Optional[int] = None

    @property
    def time(self) -> datetime:
        return parse_timestamp(self.timestamp)


def parse_timestamp(text: str) -> datetime:
    s = text.strip()
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    ts = datetime.fromisoformat(s)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts


def _event(values: dict, line: int) -> RawEvent:
    for key in FIELDS:
        value = values.get(key)
        if value is None:
            raise LogFormatError(f"missing field {key!r}", line)
        if not isinstance(value, str):
            raise LogFormatError(f"field {key!r} must be a string, got {value!r}", line)
    sid, stamp, action = (values[k].strip() for k in FIELDS)
    if not sid:
        raise LogFormatError("empty session_id", line)
    if not action:
        raise LogFormatError("empty action", line)
    try:
        parse_timestamp(stamp)
    except ValueError:
        raise LogFormatError(f"unparseable timestamp {stamp!r}", line) from None
    return RawEvent(sid, stamp, action, line)


def _as_text(source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8-sig")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8-sig") if isinstance(data, bytes) else data


def _parse_csv(text: str) -> list:
    reader = csv.reader(io.StringIO(text))
    header = None
    events = []
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if header is None:
            header = [c.strip() for c in row]
            missing = [f for f in FIELDS if f not in header]
            if missing:
                raise LogFormatError(f"header must contain {','.join(FIELDS)}; missing {missing}", line)
            continue
        if len(row) != len(header):
            raise LogFormatError(f"expected {len(header)} fields, found {len(row)}", line)
        events.append(_event(dict(zip(header, row)), line))
    return events


def _parse_jsonl(text: str) -> list:
    events = []
    for line, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise LogFormatError(f"invalid JSON ({exc.msg})", line) from None
        if not isinstance(obj, dict):
            raise LogFormatError("each line must be a JSON object", line)
        events.append(_event(obj, line))
    return events


def parse(source: Union[bytes, str, io.IOBase], format: str = "csv") -> list:
    """Parse a log into :class:`RawEvent` objects in file order.

    ``source`` may be bytes, text, or a binary/text file object.  Empty input
    yields an empty list.
    """
    if format not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {format!r}")
    text = _as_text(source)
    if format == "csv":
        return _parse_csv(text)
    return _parse_jsonl(text)


def read_log(path, format: Optional[str] = None) -> list:
    """Parse a log file; the format defaults to the file extension."""
    path = str(path)
    if format is None:
        format = "jsonl" if path.endswith((".jsonl", ".ndjson", ".json")) else "csv"
    with open(path, "rb") as fh:
        return parse(fh, format)


def build_alphabet(events: Iterable[RawEvent]) -> ActionAlphabet:
    """Distinct action names in order of first appearance."""
    seen = {}
    for ev in events:
        seen.setdefault(ev.action, None)
    if not seen:
        raise ValueError("cannot build an alphabet from zero events")
    return ActionAlphabet(tuple(seen))


def encode(events: Iterable[RawEvent], alphabet: ActionAlphabet, unknown: str = "strict") -> EncodedCorpus:
    """Group events into sessions ordered by time and encode each session.

    Sessions keep their order of first appearance; within a session events
    are sorted by timestamp with file order breaking ties.  With
    ``unknown="drop"`` actions missing from the alphabet are skipped and
    sessions left empty are omitted.
    """
    if unknown not in UNKNOWN_MODES:
        raise ValueError(f"unknown-action handling must be one of {UNKNOWN_MODES}, got {unknown!r}")
    sessions = {}
    n_dropped = 0
    for order, ev in enumerate(events):
        bucket = sessions.setdefault(ev.session_id, [])
        if ev.action not in alphabet.symbols:
            if unknown == "strict":
                where = f" (line {ev.line})" if ev.line is not None else ""
                raise EncodingError(
                    f"unknown action {ev.action!r}{where} in session {ev.session_id!r}; "
                    f"alphabet is {list(alphabet.symbols)}"
                )
            n_dropped += 1
            continue
        bucket.append((ev.time, order, alphabet.index(ev.action)))
    if n_dropped:
        logger.warning("dropped %d events with actions outside the alphabet", n_dropped)

    seqs = []
    for sid, items in sessions.items():
        if not items:
            logger.warning("session %r has no events left after dropping unknown actions; omitted", sid)
            continue
        items.sort(key=lambda x: (x[0], x[1]))
        seqs.append(Sequence(sid, [code for _, _, code in items]))
    if not seqs:
        raise EncodingError("no events left to encode")
    return EncodedCorpus(alphabet, tuple(seqs))


def decode(corpus: EncodedCorpus) -> dict:
    """Action names per session, the inverse of :func:`encode`."""
    return corpus.decode()


def load_corpus(path, format=None, alphabet: Optional[ActionAlphabet] = None, unknown: str = "strict"):
    events = read_log(path, format)
    if not events:
        raise LogFormatError(f"{path}: log contains no events")
    if alphabet is None:
        alphabet = build_alphabet(events)
    return encode(events, alphabet, unknown)


def write_csv(corpus: EncodedCorpus, fh, start: str = "2020-01-01T00:00:00Z") -> None:
    """Write a corpus in the CSV log layout, one second between consecutive events."""
    base = parse_timestamp(start)
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(FIELDS)
    for seq in corpus.sequences:
        for t, code in enumerate(seq.observations):
            stamp = datetime.fromtimestamp(base.timestamp() + t, tz=timezone.utc)
            writer.writerow((seq.session_id, stamp.strftime("%Y-%m-%dT%H:%M:%SZ"), corpus.alphabet.symbols[code]))
