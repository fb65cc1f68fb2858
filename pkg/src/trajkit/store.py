"""Plain-file workspace and document formats.

Layout under the workspace root::

    fixes/<object_id>.csv        object_id,timestamp,lat,lon,device_id
    events/<object_id>.csv       object_id,timestamp,kind,reporter
    regions/regions.jsonl        {"id": ..., "ring": "lat,lon;lat,lon;..."}
    trajectories/<object_id>.traj
    records/patients.jsonl, records/staff.jsonl
    models/<name>.model

All writes go to a temporary file in the target directory and are renamed
into place, so a crash never leaves a half-written document.
"""

from __future__ import annotations

import csv
import io
import json
import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import timedelta
from pathlib import Path
from typing import Any, Iterable, Iterator

from filelock import FileLock, Timeout

from .errors import EmptyFileError, SchemaError, WorkspaceError
from .geo import GeoPoint, Region, format_timestamp, parse_timestamp
from .mission import EventKind, MissionEvent
from .model import Move, Stop, Trajectory
from .profile import StereotypedModel, parse_model, serialize_model
from .records import Entry, PatientRecord, RecordStore, StaffMember
from .segmentation import Anomaly, GpsFix, validate_fix_stream

SCHEMA_VERSION = 1
FIX_HEADER = ["object_id", "timestamp", "lat", "lon", "device_id"]
EVENT_HEADER = ["object_id", "timestamp", "kind", "reporter"]
LAYOUT = ("fixes", "events", "trajectories", "regions", "records", "models")
ENV_VAR = "TRAJKIT_WORKSPACE"


def atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    try:
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


def _fmt_float(x: float) -> str:
    return repr(float(x))


# --------------------------------------------------------------------------
# CSV documents
# --------------------------------------------------------------------------

def _read_csv(text: str, header: list[str], what: str) -> list[tuple[int, dict[str, str]]]:
    if not text.strip():
        raise EmptyFileError(f"empty {what} file")
    reader = csv.reader(io.StringIO(text))
    try:
        first = next(reader)
    except StopIteration:
        raise EmptyFileError(f"empty {what} file") from None
    if [h.strip() for h in first] != header:
        raise SchemaError(f"expected header {','.join(header)}", 1)
    rows = []
    for row in reader:
        lineno = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise SchemaError(f"expected {len(header)} fields, got {len(row)}", lineno)
        rows.append((lineno, dict(zip(header, (c.strip() for c in row)))))
    if not rows:
        raise EmptyFileError(f"{what} file has a header but no rows")
    return rows


def parse_fix_csv(text: str) -> list[GpsFix]:
    fixes = []
    for lineno, row in _read_csv(text, FIX_HEADER, "fix"):
        if not row["object_id"]:
            raise SchemaError("empty object_id", lineno)
        try:
            ts = parse_timestamp(row["timestamp"])
        except ValueError as exc:
            raise SchemaError(f"bad timestamp {row['timestamp']!r}: {exc}", lineno) from None
        try:
            pos = GeoPoint(float(row["lat"]), float(row["lon"]))
        except ValueError as exc:
            raise SchemaError(f"bad position: {exc}", lineno) from None
        fixes.append(GpsFix(row["object_id"], ts, pos, row["device_id"] or None))
    return fixes


def format_fix_csv(fixes: Iterable[GpsFix]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(FIX_HEADER)
    for f in fixes:
        w.writerow([f.object_id, format_timestamp(f.timestamp), _fmt_float(f.position.lat),
                    _fmt_float(f.position.lon), f.source_device or ""])
    return out.getvalue()


def parse_event_csv(text: str) -> list[MissionEvent]:
    events = []
    for lineno, row in _read_csv(text, EVENT_HEADER, "event"):
        if not row["object_id"]:
            raise SchemaError("empty object_id", lineno)
        try:
            ts = parse_timestamp(row["timestamp"])
        except ValueError as exc:
            raise SchemaError(f"bad timestamp {row['timestamp']!r}: {exc}", lineno) from None
        try:
            kind = EventKind(row["kind"])
        except ValueError:
            raise SchemaError(f"unknown event kind {row['kind']!r}", lineno) from None
        events.append(MissionEvent(row["object_id"], ts, kind, row["reporter"]))
    return events


def format_event_csv(events: Iterable[MissionEvent]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(EVENT_HEADER)
    for e in events:
        w.writerow([e.object_id, format_timestamp(e.timestamp), e.kind.value, e.reporter])
    return out.getvalue()


# --------------------------------------------------------------------------
# regions
# --------------------------------------------------------------------------

def format_ring(ring: Iterable[GeoPoint]) -> str:
    return ";".join(f"{_fmt_float(p.lat)},{_fmt_float(p.lon)}" for p in ring)


def parse_ring(text: str) -> tuple[GeoPoint, ...]:
    points = []
    for pair in text.split(";"):
        lat, lon = pair.split(",")
        points.append(GeoPoint(float(lat), float(lon)))
    return tuple(points)


def parse_region_file(text: str) -> list[Region]:
    regions = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            regions.append(Region(str(rec["id"]), parse_ring(rec["ring"])))
        except (ValueError, KeyError, TypeError, AttributeError) as exc:
            raise SchemaError(f"bad region record: {exc}", lineno) from None
    if not regions:
        raise EmptyFileError("empty region file")
    return regions


def format_region_file(regions: Iterable[Region]) -> str:
    return "".join(json.dumps({"id": r.id, "ring": format_ring(r.ring)}) + "\n" for r in regions)


# --------------------------------------------------------------------------
# trajectories
# --------------------------------------------------------------------------

def _point(p: GeoPoint) -> list[float]:
    return [p.lat, p.lon]


def trajectory_to_document(t: Trajectory, provenance: dict[str, Any] | None = None) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "id": t.id,
        "object_id": t.object_id,
        "begin": format_timestamp(t.begin),
        "end": format_timestamp(t.end),
        "duration": t.duration.total_seconds(),
        "stops": [
            {"id": s.id, "begin": format_timestamp(s.begin), "end": format_timestamp(s.end),
             "position": _point(s.position), "source": s.source.value}
            for s in t.stops
        ],
        "moves": [
            {"id": m.id, "begin": format_timestamp(m.begin), "end": format_timestamp(m.end),
             "begin_position": _point(m.begin_position), "end_position": _point(m.end_position),
             "path": [[format_timestamp(ts), p.lat, p.lon] for ts, p in m.path]}
            for m in t.moves
        ],
        "provenance": provenance or {},
    }


def trajectory_from_document(doc: dict[str, Any]) -> tuple[Trajectory, dict[str, Any]]:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported trajectory schema_version {doc.get('schema_version')!r}")
    try:
        oid = doc["object_id"]
        stops = [Stop(s["id"], oid, parse_timestamp(s["begin"]), parse_timestamp(s["end"]),
                      GeoPoint(*s["position"]), s["source"]) for s in doc["stops"]]
        moves = [Move(m["id"], oid, parse_timestamp(m["begin"]), parse_timestamp(m["end"]),
                      GeoPoint(*m["begin_position"]), GeoPoint(*m["end_position"]),
                      tuple((parse_timestamp(ts), GeoPoint(lat, lon)) for ts, lat, lon in m["path"]))
                 for m in doc["moves"]]
        t = Trajectory(doc["id"], oid, parse_timestamp(doc["begin"]), parse_timestamp(doc["end"]),
                       timedelta(seconds=doc["duration"]), tuple(stops), tuple(moves))
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed trajectory document: {exc!r}") from None
    return t, doc.get("provenance", {})


def dump_trajectory(t: Trajectory, provenance: dict[str, Any] | None = None) -> str:
    return json.dumps(trajectory_to_document(t, provenance), indent=2, ensure_ascii=False) + "\n"


def load_trajectory(text: str) -> tuple[Trajectory, dict[str, Any]]:
    try:
        doc = json.loads(text)
    except ValueError as exc:
        raise SchemaError(f"trajectory file is not JSON: {exc}") from None
    return trajectory_from_document(doc)


# --------------------------------------------------------------------------
# records
# --------------------------------------------------------------------------

def _entry(e: Entry) -> dict[str, str]:
    return {"timestamp": format_timestamp(e.timestamp), "author": e.author, "text": e.text}


def patient_to_dict(r: PatientRecord) -> dict[str, Any]:
    return {
        "patient_id": r.patient_id,
        "name": r.name,
        "demographics": dict(r.demographics),
        "prescriptions": [_entry(e) for e in r.prescriptions],
        "examinations": [_entry(e) for e in r.examinations],
    }


def patient_from_dict(d: dict[str, Any]) -> PatientRecord:
    def entries(key: str) -> tuple[Entry, ...]:
        return tuple(Entry(parse_timestamp(e["timestamp"]), e["author"], e["text"]) for e in d.get(key, []))

    return PatientRecord(d["patient_id"], d["name"], dict(d.get("demographics", {})),
                         entries("prescriptions"), entries("examinations"))


def staff_to_dict(m: StaffMember) -> dict[str, Any]:
    return {"staff_id": m.staff_id, "role": m.role.value, "name": m.name, "pda_id": m.pda_id}


def _jsonl(records: Iterable[dict[str, Any]]) -> str:
    return "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in records)


def _read_jsonl(text: str, what: str) -> list[dict[str, Any]]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            try:
                out.append(json.loads(line))
            except ValueError as exc:
                raise SchemaError(f"bad {what} record: {exc}", lineno) from None
    return out


def dump_records(store: RecordStore) -> tuple[str, str]:
    """(patients.jsonl, staff.jsonl) text for a record store."""
    return (_jsonl(patient_to_dict(p) for p in store.patients),
            _jsonl(staff_to_dict(s) for s in store.staff))


def load_records(patients_text: str, staff_text: str) -> RecordStore:
    try:
        staff = [StaffMember(d["staff_id"], d["role"], d["name"], d.get("pda_id"))
                 for d in _read_jsonl(staff_text, "staff")]
        patients = [patient_from_dict(d) for d in _read_jsonl(patients_text, "patient")]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed record: {exc!r}") from None
    return RecordStore(patients, staff)


# --------------------------------------------------------------------------
# workspace
# --------------------------------------------------------------------------

@dataclass
class IngestResult:
    count: int
    objects: list[str] = field(default_factory=list)
    anomalies: dict[str, list[Anomaly]] = field(default_factory=dict)


def resolve_root(flag: str | None) -> Path:
    if flag:
        return Path(flag)
    env = os.environ.get(ENV_VAR)
    return Path(env) if env else Path.cwd()


class Workspace:
    def __init__(self, root: str | Path):
        self.root = Path(root)

    # layout

    def init(self) -> None:
        for name in LAYOUT:
            (self.root / name).mkdir(parents=True, exist_ok=True)

    def check(self) -> None:
        missing = [n for n in LAYOUT if not (self.root / n).is_dir()]
        if missing:
            raise WorkspaceError(f"{self.root} is not an initialized workspace (missing {', '.join(missing)})")

    @contextmanager
    def lock(self, timeout: float = 0.0) -> Iterator[None]:
        self.root.mkdir(parents=True, exist_ok=True)
        fl = FileLock(str(self.root / ".lock"), timeout=timeout)
        try:
            fl.acquire()
        except Timeout:
            raise WorkspaceError(f"workspace {self.root} is locked by another process") from None
        try:
            yield
        finally:
            fl.release()

    def _file(self, kind: str, name: str) -> Path:
        if not name or "/" in name or "\\" in name or name.startswith("."):
            raise WorkspaceError(f"invalid {kind} name {name!r}")
        return self.root / kind / name

    def _read(self, path: Path, what: str) -> str:
        try:
            return path.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise WorkspaceError(f"no {what} at {path.relative_to(self.root)}") from None

    # fixes

    def fixes_path(self, object_id: str) -> Path:
        return self._file("fixes", f"{object_id}.csv")

    def object_ids(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "fixes").glob("*.csv"))

    def load_fixes(self, object_id: str) -> list[GpsFix]:
        return parse_fix_csv(self._read(self.fixes_path(object_id), f"fixes for {object_id}"))

    def save_fixes(self, object_id: str, fixes: list[GpsFix]) -> None:
        atomic_write_text(self.fixes_path(object_id), format_fix_csv(fixes))

    def ingest_fixes(self, path: str | Path) -> IngestResult:
        fixes = parse_fix_csv(Path(path).read_text(encoding="utf-8"))
        groups: dict[str, list[GpsFix]] = {}
        for f in fixes:
            groups.setdefault(f.object_id, []).append(f)
        result = IngestResult(len(fixes), sorted(groups))
        for oid in sorted(groups):
            incoming = groups[oid]
            found = validate_fix_stream(incoming)
            if found:
                result.anomalies[oid] = found
            existing = self.load_fixes(oid) if self.fixes_path(oid).exists() else []
            seen = set(existing)
            merged = existing + [f for f in incoming if not (f in seen or seen.add(f))]
            merged.sort(key=lambda f: f.timestamp)
            self.save_fixes(oid, merged)
        return result

    # events

    def events_path(self, object_id: str) -> Path:
        return self._file("events", f"{object_id}.csv")

    def load_events(self, object_id: str) -> list[MissionEvent]:
        path = self.events_path(object_id)
        if not path.exists():
            return []
        return parse_event_csv(self._read(path, f"events for {object_id}"))

    def save_events(self, object_id: str, events: list[MissionEvent]) -> None:
        atomic_write_text(self.events_path(object_id), format_event_csv(events))

    def ingest_events(self, path: str | Path) -> IngestResult:
        events = parse_event_csv(Path(path).read_text(encoding="utf-8"))
        groups: dict[str, list[MissionEvent]] = {}
        for e in events:
            groups.setdefault(e.object_id, []).append(e)
        for oid, incoming in sorted(groups.items()):
            existing = self.load_events(oid)
            seen = set(existing)
            merged = existing + [e for e in incoming if not (e in seen or seen.add(e))]
            merged.sort(key=lambda e: e.timestamp)
            self.save_events(oid, merged)
        return IngestResult(len(events), sorted(groups))

    # regions

    @property
    def regions_path(self) -> Path:
        return self.root / "regions" / "regions.jsonl"

    def load_regions(self) -> dict[str, Region]:
        if not self.regions_path.exists():
            return {}
        text = self._read(self.regions_path, "regions")
        return {r.id: r for r in parse_region_file(text)} if text.strip() else {}

    def save_regions(self, regions: Iterable[Region]) -> None:
        atomic_write_text(self.regions_path, format_region_file(sorted(regions, key=lambda r: r.id)))

    def region(self, region_id: str) -> Region:
        regions = self.load_regions()
        if region_id not in regions:
            raise WorkspaceError(f"no region {region_id!r}")
        return regions[region_id]

    def ingest_regions(self, path: str | Path) -> IngestResult:
        incoming = parse_region_file(Path(path).read_text(encoding="utf-8"))
        regions = self.load_regions()
        regions.update({r.id: r for r in incoming})
        self.save_regions(regions.values())
        return IngestResult(len(incoming), sorted(r.id for r in incoming))

    # trajectories

    def trajectory_path(self, object_id: str) -> Path:
        return self._file("trajectories", f"{object_id}.traj")

    def save_trajectory(self, t: Trajectory, provenance: dict[str, Any] | None = None) -> Path:
        path = self.trajectory_path(t.object_id)
        atomic_write_text(path, dump_trajectory(t, provenance))
        return path

    def load_trajectory(self, object_id: str) -> tuple[Trajectory, dict[str, Any]]:
        return load_trajectory(self._read(self.trajectory_path(object_id), f"trajectory for {object_id}"))

    # records

    def load_records(self) -> RecordStore:
        rec = self.root / "records"
        p, s = rec / "patients.jsonl", rec / "staff.jsonl"
        return load_records(p.read_text(encoding="utf-8") if p.exists() else "",
                            s.read_text(encoding="utf-8") if s.exists() else "")

    def save_records(self, store: RecordStore) -> None:
        patients, staff = dump_records(store)
        atomic_write_text(self.root / "records" / "staff.jsonl", staff)
        atomic_write_text(self.root / "records" / "patients.jsonl", patients)

    # models

    def model_path(self, name: str) -> Path:
        return self._file("models", name if name.endswith(".model") else f"{name}.model")

    def save_model(self, name: str, model: StereotypedModel) -> Path:
        path = self.model_path(name)
        atomic_write_text(path, serialize_model(model))
        return path

    def load_model(self, name: str) -> StereotypedModel:
        return parse_model(self._read(self.model_path(name), f"model {name}"))
