"""``trajkit`` command line.

Exit codes: 0 success, 1 domain error (diagnostic on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timedelta
from pathlib import Path
from typing import Sequence

from . import relations
from .errors import TrajkitError
from .geo import Region, format_timestamp, parse_timestamp
from .mission import DEFAULT_TABLE, TransitionTable, reconcile, replay
from .profile import TRAJECTORY_UML, export_profile, parse_model, reference_model_text, validate_model
from .records import Role, StaffMember
from .scenario import BASE, offset, sample_mission, second_mission
from .segmentation import SegmentationParams, segment
from .store import Workspace, atomic_write_text, patient_to_dict, resolve_root


def _timestamp(text: str) -> datetime:
    try:
        return parse_timestamp(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return value


def _keyvalue(text: str) -> tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    return key, value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="trajkit", description="Stop/move trajectory toolkit")
    p.add_argument("--workspace", help="workspace root (overrides $TRAJKIT_WORKSPACE)")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    s = sub.add_parser("init", help="create the workspace layout")
    s.add_argument("--sample", action="store_true", help="populate with the bundled sample mission")

    s = sub.add_parser("ingest", help="import fixes, events or regions")
    s.add_argument("kind", choices=["fixes", "events", "regions"])
    s.add_argument("path", type=Path)

    s = sub.add_parser("segment", help="segment an object's fixes into stops and moves")
    s.add_argument("object_id")
    s.add_argument("--radius", type=_positive, default=100.0, help="stop radius, meters")
    s.add_argument("--dwell", type=_positive, default=300.0, help="minimum dwell, seconds")
    s.add_argument("--max-gap", type=_positive, default=600.0, help="fix gap anomaly threshold, seconds")
    s.add_argument("--no-events", action="store_true", help="ignore declared mission events")
    s.add_argument("--transitions", type=Path, help="transition table override file")

    s = sub.add_parser("relate", help="trajectory-trajectory relations")
    s.add_argument("traj1")
    s.add_argument("traj2")
    s.add_argument("--near", type=_positive, default=500.0, help="near threshold, meters")
    s.add_argument("--equal-tol", type=_positive, default=50.0, help="equal tolerance, meters")

    s = sub.add_parser("region", help="trajectory-region relations")
    s.add_argument("traj")
    s.add_argument("region")
    s.add_argument("--bypass-margin", type=_positive, default=500.0, help="bypass margin, meters")

    for name, help_ in (("timeline", "replay mission events"),
                        ("reconcile", "cross-check events against the trajectory")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("object_id")
        s.add_argument("--start", type=_timestamp, help="timeline start (default: first fix or event)")
        s.add_argument("--transitions", type=Path, help="transition table override file")
        if name == "reconcile":
            s.add_argument("--tolerance", type=float, default=60.0, help="allowed overlap, seconds")

    rec = sub.add_parser("records", help="patient records").add_subparsers(dest="action", required=True,
                                                                           metavar="ACTION")
    s = rec.add_parser("consult", help="look a patient up by name")
    s.add_argument("name")
    s = rec.add_parser("add", help="add a patient")
    s.add_argument("name")
    s.add_argument("--field", type=_keyvalue, action="append", default=[], metavar="KEY=VALUE")
    s = rec.add_parser("prescribe", help="append a prescription")
    s.add_argument("patient_id")
    s.add_argument("doctor_id")
    s.add_argument("text")
    s.add_argument("--at", type=_timestamp)
    s = rec.add_parser("examine", help="append an examination note")
    s.add_argument("patient_id")
    s.add_argument("author_id")
    s.add_argument("text")
    s.add_argument("--at", type=_timestamp)
    s = rec.add_parser("staff", help="register a staff member")
    s.add_argument("staff_id")
    s.add_argument("role", choices=[r.value for r in Role])
    s.add_argument("name")
    s.add_argument("--pda")
    s = rec.add_parser("export", help="write one JSON file per patient")
    s.add_argument("directory", type=Path)

    prof = sub.add_parser("profile", help="stereotype profile").add_subparsers(dest="action", required=True,
                                                                              metavar="ACTION")
    s = prof.add_parser("export", help="print the profile")
    s.add_argument("--format", choices=["table-text", "structured"], default="table-text")
    s = prof.add_parser("validate", help="check a model file against the profile")
    s.add_argument("model_file", type=Path)
    return p


def _table(path: Path | None) -> TransitionTable:
    return TransitionTable.load(path) if path else DEFAULT_TABLE


def _start(ws: Workspace, object_id: str, events, explicit: datetime | None) -> datetime:
    if explicit is not None:
        return explicit
    candidates = [e.timestamp for e in events[:1]]
    if ws.fixes_path(object_id).exists():
        candidates.append(ws.load_fixes(object_id)[0].timestamp)
    if not candidates:
        raise TrajkitError(f"no fixes or events for {object_id}")
    return min(candidates)


def _populate_sample(ws: Workspace) -> None:
    for sc in (sample_mission(), second_mission()):
        ws.save_fixes(sc.object_id, sc.fixes)
        ws.save_events(sc.object_id, sc.events)
    clinic = offset(BASE, 9000, 2000)
    ring = (offset(clinic, -1000, -1000), offset(clinic, -1000, 1000),
            offset(clinic, 1000, 1000), offset(clinic, 1000, -1000))
    far_away = offset(BASE, -20000, -20000)
    lake = (far_away, offset(far_away, 0, 3000), offset(far_away, 2500, 1500))
    ws.save_regions([Region("clinic-zone", ring), Region("lake", lake)])
    store = ws.load_records()
    store.add_staff(StaffMember("D1", Role.Doctor, "Dr. Amel", "PDA-D1"))
    store.add_staff(StaffMember("N1", Role.Nurse, "Sami"))
    store.add_staff(StaffMember("DR1", Role.Driver, "Karim"))
    store.add_staff(StaffMember("M1", Role.Manager, "Leila", "PDA-MH-01"))
    pid = store.add_patient("Hedi Ben Salah", {"age": "54", "village": "Oued Ellil"})
    store.add_patient("Mouna Trabelsi", {"age": "31"})
    store.add_prescription(pid, "D1", "Amoxicillin 500 mg, 3x daily, 7 days",
                           parse_timestamp("2010-03-01T09:10:00Z"))
    ws.save_records(store)
    atomic_write_text(ws.model_path("mobile_hospital"), reference_model_text())


def _cmd_init(ws: Workspace, args) -> None:
    ws.init()
    if args.sample:
        _populate_sample(ws)
    print(f"initialized workspace {ws.root}" + (" with sample data" if args.sample else ""))


def _cmd_ingest(ws: Workspace, args) -> None:
    ws.check()
    loader = {"fixes": ws.ingest_fixes, "events": ws.ingest_events, "regions": ws.ingest_regions}[args.kind]
    result = loader(args.path)
    print(f"ingested {result.count} {args.kind} for {', '.join(result.objects)}")
    for oid, found in sorted(result.anomalies.items()):
        for a in found:
            print(f"  anomaly {oid}: {a}")


def _cmd_segment(ws: Workspace, args) -> None:
    ws.check()
    params = SegmentationParams(args.radius, timedelta(seconds=args.dwell), timedelta(seconds=args.max_gap))
    fixes = ws.load_fixes(args.object_id)
    events = [] if args.no_events else ws.load_events(args.object_id)
    table = _table(args.transitions)
    report = segment(fixes, params, events, f"{args.object_id}-T", table)
    t = report.trajectory
    provenance = {
        "params": params.as_dict(),
        "source_files": [str(ws.fixes_path(args.object_id).relative_to(ws.root))]
        + ([str(ws.events_path(args.object_id).relative_to(ws.root))] if events else []),
        "trimmed_head": report.trimmed_head,
        "trimmed_tail": report.trimmed_tail,
        "anomalies": [[a.kind, format_timestamp(a.timestamp)] for a in report.anomalies],
    }
    path = ws.save_trajectory(t, provenance)
    print(f"{args.object_id}: {len(t.stops)} stops, {len(t.moves)} moves "
          f"(trimmed {report.trimmed_head} head / {report.trimmed_tail} tail fixes, "
          f"{len(report.anomalies)} anomalies)")
    for s in t.stops:
        print(f"  stop {s.id} {format_timestamp(s.begin)} .. {format_timestamp(s.end)} "
              f"at {s.position.lat:.6f},{s.position.lon:.6f} [{s.source.value}]")
    for m in t.moves:
        print(f"  move {m.id} {format_timestamp(m.begin)} .. {format_timestamp(m.end)} ({len(m.path)} samples)")
    print(f"wrote {path.relative_to(ws.root)}")


def _yes(flag: bool) -> str:
    return "true" if flag else "false"


def _cmd_relate(ws: Workspace, args) -> None:
    params = relations.RelationParams(near_threshold=args.near, equal_tolerance=args.equal_tol)
    t1, _ = ws.load_trajectory(args.traj1)
    t2, _ = ws.load_trajectory(args.traj2)
    print(f"intersects: {_yes(relations.intersects(t1, t2))}")
    print(f"equal: {_yes(relations.equal(t1, t2, params))}")
    print(f"near: {_yes(relations.near(t1, t2, params))}")
    print(f"far: {_yes(relations.far(t1, t2, params))}")


def _cmd_region(ws: Workspace, args) -> None:
    params = relations.RelationParams(bypass_margin=args.bypass_margin)
    t, _ = ws.load_trajectory(args.traj)
    rel = relations.region_relation(t, ws.region(args.region), params)
    for name, flag in rel.flags().items():
        print(f"{name}: {_yes(flag)}")
    print(f"crossings: {rel.crossings}")


def _cmd_timeline(ws: Workspace, args) -> None:
    events = ws.load_events(args.object_id)
    timeline = replay(events, _start(ws, args.object_id, events, args.start), _table(args.transitions))
    for entry in timeline.entries:
        end = format_timestamp(entry.end) if entry.end else "open"
        print(f"{entry.state.value}\t{format_timestamp(entry.begin)}\t{end}")


def _cmd_reconcile(ws: Workspace, args) -> None:
    events = ws.load_events(args.object_id)
    timeline = replay(events, _start(ws, args.object_id, events, args.start), _table(args.transitions))
    trajectory, _ = ws.load_trajectory(args.object_id)
    found = reconcile(timeline, trajectory, timedelta(seconds=args.tolerance))
    for d in found:
        print(str(d))
    print(f"{len(found)} discrepancies")


def _print_record(record) -> None:
    print(json.dumps(patient_to_dict(record), indent=2, ensure_ascii=False))


def _cmd_records(ws: Workspace, args) -> None:
    ws.check()
    store = ws.load_records()
    if args.action == "consult":
        record = store.consult_patient(args.name)
        if record is None:
            print(f"not found: {args.name}")
        else:
            _print_record(record)
        return
    if args.action == "export":
        args.directory.mkdir(parents=True, exist_ok=True)
        for record in store.patients:
            atomic_write_text(args.directory / f"{record.patient_id}.json",
                              json.dumps(patient_to_dict(record), indent=2, ensure_ascii=False) + "\n")
        print(f"exported {len(store.patients)} patients to {args.directory}")
        return
    if args.action == "add":
        pid = store.add_patient(args.name, dict(args.field))
        print(pid)
    elif args.action == "staff":
        store.add_staff(StaffMember(args.staff_id, Role(args.role), args.name, args.pda))
        print(f"registered {args.role} {args.staff_id}")
    elif args.action in ("prescribe", "examine"):
        at = args.at or datetime.now().astimezone()
        author = args.doctor_id if args.action == "prescribe" else args.author_id
        fn = store.add_prescription if args.action == "prescribe" else store.add_examination
        _print_record(fn(args.patient_id, author, args.text, at))
    ws.save_records(store)


def _cmd_profile(ws: Workspace, args) -> int:
    if args.action == "export":
        sys.stdout.write(export_profile(args.format))
        return 0
    model = parse_model(args.model_file.read_text(encoding="utf-8"))
    violations = validate_model(model, TRAJECTORY_UML)
    for v in violations:
        print(str(v))
    print(f"{len(model.elements)} elements, {len(violations)} violations")
    return 1 if violations else 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    ws = Workspace(resolve_root(args.workspace))
    handlers = {
        "init": _cmd_init, "ingest": _cmd_ingest, "segment": _cmd_segment, "relate": _cmd_relate,
        "region": _cmd_region, "timeline": _cmd_timeline, "reconcile": _cmd_reconcile,
        "records": _cmd_records, "profile": _cmd_profile,
    }
    try:
        if args.command == "profile":
            return _cmd_profile(ws, args)
        if args.command != "init":
            ws.check()
        with ws.lock():
            handlers[args.command](ws, args)
    except (TrajkitError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
