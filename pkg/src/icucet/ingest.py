"""CSV ingestion and cohort selection.

Stays are small and parsed into :class:`StayRecord` objects. Events can run
to millions of rows, so they are parsed in a single streaming pass into
columnar :class:`EventBlock` chunks; :func:`parse_events` offers the same
stream one :class:`EventRecord` at a time.
"""

import csv
import enum
import io
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from .errors import (
    BadEnum,
    BadSignalToken,
    BadTimestamp,
    BadValue,
    DuplicateStayId,
    MissingColumn,
    NegativeAge,
)

logger = logging.getLogger(__name__)

STAY_COLUMNS = ("stay_id", "subject_id", "hadm_id", "intime", "anchor_age", "anchor_year", "gender")
EVENT_COLUMNS = ("stay_id", "charttime", "signal", "value")

_TS_RE = re.compile(r"^(\d{4})-(\d{2})-(\d{2})[ T](\d{2}):(\d{2})(?::(\d{2}))?$")


class SignalKind(enum.IntEnum):
    SPO2 = 0
    SBP = 1
    MAP = 2
    HR = 3
    RR = 4
    CREATININE = 5
    LACTATE = 6
    PH = 7
    GCS = 8
    SEDATION = 9

    @property
    def token(self):
        return self.name.lower()

    @classmethod
    def parse(cls, token):
        try:
            return cls[token.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown signal token {token!r}") from None


VITALS = (SignalKind.SPO2, SignalKind.SBP, SignalKind.MAP, SignalKind.HR, SignalKind.RR)
LABS = (SignalKind.CREATININE, SignalKind.LACTATE, SignalKind.PH)
_TOKEN_TO_CODE = {s.token: int(s) for s in SignalKind}


@dataclass(frozen=True)
class StayRecord:
    stay_id: str
    subject_id: str
    hadm_id: str
    intime: datetime
    anchor_age: int
    anchor_year: int
    gender: str  # "F" or "M"


class EventRecord(NamedTuple):
    stay_id: str
    charttime: datetime
    signal: SignalKind
    value: float


@dataclass
class EventBlock:
    """A columnar chunk of events. ``first_row`` is the CSV row of element 0."""

    stay_id: np.ndarray  # str
    charttime: np.ndarray  # datetime64[s]
    signal: np.ndarray  # int8 SignalKind codes
    value: np.ndarray  # float64
    first_row: int = 2

    def __len__(self):
        return len(self.value)

    def records(self) -> Iterator[EventRecord]:
        times = self.charttime.astype("datetime64[s]").astype(datetime)
        for sid, t, s, v in zip(self.stay_id.tolist(), times, self.signal.tolist(), self.value.tolist()):
            yield EventRecord(sid, t, SignalKind(s), v)


@dataclass
class StayEvents:
    """Events of one stay, sorted ascending by charttime."""

    charttime: np.ndarray
    signal: np.ndarray
    value: np.ndarray

    def __len__(self):
        return len(self.value)

    def hours_since(self, t0):
        return (self.charttime - np.datetime64(t0, "s")) / np.timedelta64(3600, "s")


@dataclass
class Cohort:
    stays: list
    events: dict  # stay_id -> StayEvents
    summary: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.stays)

    def event_blocks(self) -> Iterator[EventBlock]:
        for s in self.stays:
            ev = self.events[s.stay_id]
            yield EventBlock(np.full(len(ev), s.stay_id, dtype=object), ev.charttime, ev.signal, ev.value)


def parse_timestamp(text):
    m = _TS_RE.match(text.strip())
    if not m:
        raise ValueError(f"bad timestamp {text!r}")
    y, mo, d, h, mi, s = m.groups()
    return datetime(int(y), int(mo), int(d), int(h), int(mi), int(s or 0))


def format_timestamp(t):
    return np.datetime_as_string(np.datetime64(t, "s"), unit="s").replace("T", " ")


def _text_stream(reader):
    if isinstance(reader, (bytes, bytearray)):
        reader = io.BytesIO(reader)
    if isinstance(reader, io.TextIOBase):
        return reader
    return io.TextIOWrapper(reader, encoding="utf-8-sig", newline="")


def _header_index(header, required):
    cols = [c.strip().lower() for c in header]
    missing = [c for c in required if c not in cols]
    if missing:
        raise MissingColumn(f"missing column(s): {', '.join(missing)}")
    return [cols.index(c) for c in required]


def parse_stays(reader) -> list:
    """Parse a stays table. Rows are numbered from 2 (the header is row 1)."""
    rows = csv.reader(_text_stream(reader))
    header = next(rows, None)
    if header is None:
        raise MissingColumn("empty stays table")
    idx = _header_index(header, STAY_COLUMNS)
    out, seen = [], set()
    for row in rows:
        if not row:
            continue
        line = rows.line_num
        if len(row) < len(header):
            raise BadValue(line, "too few fields")
        sid, subj, hadm, intime, age, year, gender = (row[i].strip() for i in idx)
        try:
            t = parse_timestamp(intime)
        except ValueError:
            raise BadTimestamp(line, f"intime {intime!r}") from None
        try:
            age_i, year_i = int(age), int(year)
        except ValueError:
            raise BadValue(line, f"anchor_age/anchor_year not integers: {age!r}, {year!r}") from None
        if age_i < 0:
            raise BadValue(line, f"negative anchor_age {age_i}")
        g = gender.upper()
        if g not in ("F", "M"):
            raise BadEnum(line, f"gender {gender!r}")
        if sid in seen:
            raise DuplicateStayId(f"row {line}: stay_id {sid!r} already seen")
        seen.add(sid)
        out.append(StayRecord(sid, subj, hadm, t, age_i, year_i, g))
    return out


def _first_bad(values, check):
    for i, v in enumerate(values):
        if not check(v):
            return i
    return None


def _float_ok(v):
    try:
        return np.isfinite(float(v))
    except ValueError:
        return False


def _ts_ok(v):
    try:
        parse_timestamp(v)
        return True
    except ValueError:
        return False


def _make_block(ids, times, sigs, vals, lines):
    n = len(ids)
    codes = np.empty(n, dtype=np.int8)
    tokens, inv = np.unique(np.char.lower(np.char.strip(np.asarray(sigs, dtype=str))), return_inverse=True)
    lut = np.empty(len(tokens), dtype=np.int8)
    for j, tok in enumerate(tokens.tolist()):
        if tok not in _TOKEN_TO_CODE:
            raise BadSignalToken(lines[int(np.argmax(inv == j))], f"signal {tok!r}")
        lut[j] = _TOKEN_TO_CODE[tok]
    codes[:] = lut[inv]

    try:
        value = np.asarray(vals, dtype=np.float64)
    except ValueError:
        value = None
    if value is None or not np.isfinite(value).all():
        i = _first_bad(vals, _float_ok)
        raise BadValue(lines[i], f"value {vals[i]!r}")
    sed = codes == SignalKind.SEDATION
    if sed.any() and not (value[sed] == 1.0).all():
        i = int(np.flatnonzero(sed & (value != 1.0))[0])
        raise BadValue(lines[i], "sedation events must carry value 1")

    tarr = np.char.strip(np.asarray(times, dtype=str))
    lens = np.char.str_len(tarr)
    try:
        ok_len = bool(((lens == 16) | (lens == 19)).all())
        charttime = np.asarray(tarr, dtype="datetime64[s]") if ok_len else None
    except ValueError:
        charttime = None
    if charttime is None:
        i = _first_bad(times, _ts_ok)
        raise BadTimestamp(lines[i], f"charttime {times[i]!r}")
    return EventBlock(np.asarray(ids, dtype=object), charttime, codes, value, lines[0])


def parse_event_blocks(reader, block_rows=200_000) -> Iterator[EventBlock]:
    """Stream an events table as columnar blocks of at most ``block_rows`` rows."""
    rows = csv.reader(_text_stream(reader))
    header = next(rows, None)
    if header is None:
        raise MissingColumn("empty events table")
    i_id, i_t, i_s, i_v = _header_index(header, EVENT_COLUMNS)
    width = max(i_id, i_t, i_s, i_v) + 1
    ids, times, sigs, vals, lines = [], [], [], [], []
    for row in rows:
        if not row:
            continue
        if len(row) < width:
            raise BadValue(rows.line_num, "too few fields")
        ids.append(row[i_id].strip())
        times.append(row[i_t])
        sigs.append(row[i_s])
        vals.append(row[i_v])
        lines.append(rows.line_num)
        if len(ids) >= block_rows:
            yield _make_block(ids, times, sigs, vals, lines)
            ids, times, sigs, vals, lines = [], [], [], [], []
    if ids:
        yield _make_block(ids, times, sigs, vals, lines)


def parse_events(reader) -> Iterator[EventRecord]:
    """Stream an events table one record at a time, in file order."""
    for block in parse_event_blocks(reader, block_rows=10_000):
        yield from block.records()


def _blocks_of(events) -> Iterator[EventBlock]:
    buf = []
    for item in events:
        if isinstance(item, EventBlock):
            if buf:
                yield _records_to_block(buf)
                buf = []
            yield item
        else:
            buf.append(item)
            if len(buf) >= 50_000:
                yield _records_to_block(buf)
                buf = []
    if buf:
        yield _records_to_block(buf)


def _records_to_block(recs):
    return EventBlock(
        np.array([r.stay_id for r in recs], dtype=object),
        np.array([np.datetime64(r.charttime, "s") for r in recs], dtype="datetime64[s]"),
        np.array([int(r.signal) for r in recs], dtype=np.int8),
        np.array([float(r.value) for r in recs], dtype=np.float64),
    )


def stay_sort_key(stay_id):
    return (0, int(stay_id), "") if stay_id.isdigit() else (1, 0, stay_id)


def select_cohort(stays, events: Iterable) -> Cohort:
    """Apply the cohort rules and group events per retained stay.

    A stay is kept when it is the earliest-intime stay of its hospital
    admission (ties by stay_id), its estimated age is at least 18, and it
    has at least one vital-sign and one laboratory event at any time.
    ``events`` may yield :class:`EventRecord` or :class:`EventBlock` items.
    Exclusions are counted in ``Cohort.summary``.
    """
    from .featurize import compute_age

    stays = list(stays)
    index = {s.stay_id: i for i, s in enumerate(stays)}
    n = len(stays)

    first = {}
    for i, s in enumerate(stays):
        cur = first.get(s.hadm_id)
        if cur is None or (s.intime, s.stay_id) < (stays[cur].intime, stays[cur].stay_id):
            first[s.hadm_id] = i
    is_first = np.zeros(n, dtype=bool)
    is_first[list(first.values())] = True

    adult = np.zeros(n, dtype=bool)
    for i, s in enumerate(stays):
        try:
            adult[i] = compute_age(s.anchor_age, s.anchor_year, s.intime) >= 18.0
        except NegativeAge:
            adult[i] = False

    vital_codes = np.array([int(v) for v in VITALS])
    lab_codes = np.array([int(v) for v in LABS])
    has_vital = np.zeros(n, dtype=bool)
    has_lab = np.zeros(n, dtype=bool)
    parts = []
    unknown = 0
    for block in _blocks_of(events):
        if not len(block):
            continue
        uniq, inv = np.unique(block.stay_id.astype(str), return_inverse=True)
        lut = np.array([index.get(u, -1) for u in uniq.tolist()], dtype=np.int64)
        sidx = lut[inv]
        known = sidx >= 0
        unknown += int((~known).sum())
        sidx, t, sig, val = sidx[known], block.charttime[known], block.signal[known], block.value[known]
        has_vital[sidx[np.isin(sig, vital_codes)]] = True
        has_lab[sidx[np.isin(sig, lab_codes)]] = True
        parts.append((sidx, t, sig, val))

    reasons = {}
    keep = np.ones(n, dtype=bool)
    for name, ok in (("not_first_stay", is_first), ("underage", adult), ("no_vital_events", has_vital), ("no_lab_events", has_lab)):
        fail = keep & ~ok
        reasons[name] = int(fail.sum())
        keep &= ok

    if parts:
        sidx = np.concatenate([p[0] for p in parts])
        t = np.concatenate([p[1] for p in parts])
        sig = np.concatenate([p[2] for p in parts])
        val = np.concatenate([p[3] for p in parts])
    else:
        sidx = np.zeros(0, dtype=np.int64)
        t = np.zeros(0, dtype="datetime64[s]")
        sig = np.zeros(0, dtype=np.int8)
        val = np.zeros(0)
    retained_ev = keep[sidx]
    dropped_events = int((~retained_ev).sum())
    sidx, t, sig, val = sidx[retained_ev], t[retained_ev], sig[retained_ev], val[retained_ev]
    order = np.lexsort((t, sidx))
    sidx, t, sig, val = sidx[order], t[order], sig[order], val[order]

    kept = sorted((i for i in range(n) if keep[i]), key=lambda i: stay_sort_key(stays[i].stay_id))
    bounds_lo = np.searchsorted(sidx, kept, side="left")
    bounds_hi = np.searchsorted(sidx, kept, side="right")
    ev = {}
    for i, lo, hi in zip(kept, bounds_lo, bounds_hi):
        ev[stays[i].stay_id] = StayEvents(t[lo:hi], sig[lo:hi], val[lo:hi])

    summary = {"input_stays": n, **reasons, "retained_stays": len(kept),
               "events_dropped_excluded_stay": dropped_events, "events_unknown_stay": unknown}
    for k, v in summary.items():
        logger.info("cohort %s=%d", k, v)
    return Cohort([stays[i] for i in kept], ev, summary)


def read_cohort(stays_path, events_path) -> Cohort:
    with open(stays_path, "rb") as f:
        stays = parse_stays(f)
    with open(events_path, "rb") as f:
        return select_cohort(stays, parse_event_blocks(f))


def write_stays(stays, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(STAY_COLUMNS)
    for s in stays:
        w.writerow([s.stay_id, s.subject_id, s.hadm_id, format_timestamp(s.intime), s.anchor_age, s.anchor_year, s.gender])


def write_events(cohort, fh):
    fh.write(",".join(EVENT_COLUMNS) + "\n")
    tokens = np.array([s.token for s in SignalKind], dtype=object)
    for s in cohort.stays:
        ev = cohort.events[s.stay_id]
        if not len(ev):
            continue
        ts = np.datetime_as_string(ev.charttime, unit="s")
        fh.writelines(
            f"{s.stay_id},{t.replace('T', ' ')},{tok},{v!r}\n"
            for t, tok, v in zip(ts.tolist(), tokens[ev.signal].tolist(), ev.value.tolist())
        )
