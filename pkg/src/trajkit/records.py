"""Patient records kept by the mobile hospital's medical staff.

Prescriptions and examinations are append-only.  Only doctors prescribe;
doctors and nurses may log examinations.
"""

from __future__ import annotations

import enum
import threading
from collections import defaultdict
from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import Iterable, Mapping

from .errors import (
    AmbiguousNameError,
    DuplicateIdError,
    UnauthorizedRoleError,
    UnknownPatientError,
    UnknownStaffError,
    UnsortedInputError,
)
from .geo import as_utc


class Role(str, enum.Enum):
    Doctor = "Doctor"
    Nurse = "Nurse"
    Driver = "Driver"
    Manager = "Manager"


@dataclass(frozen=True)
class StaffMember:
    staff_id: str
    role: Role
    name: str
    pda_id: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "role", Role(self.role))
        if self.pda_id == "":
            object.__setattr__(self, "pda_id", None)
        if self.role in (Role.Doctor, Role.Manager) and not self.pda_id:
            raise ValueError(f"{self.role.value} {self.staff_id} must carry a PDA")


@dataclass(frozen=True)
class Entry:
    timestamp: datetime
    author: str
    text: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "timestamp", as_utc(self.timestamp))


@dataclass(frozen=True)
class PatientRecord:
    patient_id: str
    name: str
    demographics: Mapping[str, str] = field(default_factory=dict)
    prescriptions: tuple[Entry, ...] = ()
    examinations: tuple[Entry, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "demographics", dict(self.demographics))
        object.__setattr__(self, "prescriptions", tuple(self.prescriptions))
        object.__setattr__(self, "examinations", tuple(self.examinations))
        for entries in (self.prescriptions, self.examinations):
            for a, b in zip(entries, entries[1:]):
                if b.timestamp < a.timestamp:
                    raise UnsortedInputError(f"patient {self.patient_id}: entries out of time order")


class RecordStore:
    """In-memory patient and staff registry.

    Writes to one patient are serialized; different patients do not block
    each other.  Readers get immutable snapshots.
    """

    def __init__(self, patients: Iterable[PatientRecord] = (), staff: Iterable[StaffMember] = ()):
        self._patients: dict[str, PatientRecord] = {}
        self._staff: dict[str, StaffMember] = {}
        self._registry_lock = threading.Lock()
        self._patient_locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
        self._next_id = 1
        for member in staff:
            self.add_staff(member)
        for record in patients:
            self._insert(record)

    def _insert(self, record: PatientRecord) -> None:
        if record.patient_id in self._patients:
            raise DuplicateIdError(f"patient id {record.patient_id} already exists")
        self._patients[record.patient_id] = record
        if record.patient_id.startswith("P") and record.patient_id[1:].isdigit():
            self._next_id = max(self._next_id, int(record.patient_id[1:]) + 1)

    # staff

    def add_staff(self, member: StaffMember) -> None:
        with self._registry_lock:
            if member.staff_id in self._staff:
                raise DuplicateIdError(f"staff id {member.staff_id} already exists")
            self._staff[member.staff_id] = member

    def staff_member(self, staff_id: str) -> StaffMember:
        try:
            return self._staff[staff_id]
        except KeyError:
            raise UnknownStaffError(f"no staff member {staff_id}") from None

    @property
    def staff(self) -> list[StaffMember]:
        return [self._staff[k] for k in sorted(self._staff)]

    # patients

    @property
    def patients(self) -> list[PatientRecord]:
        return [self._patients[k] for k in sorted(self._patients)]

    def add_patient(self, name: str, demographics: Mapping[str, str] | None = None) -> str:
        with self._registry_lock:
            patient_id = f"P{self._next_id:06d}"
            self._next_id += 1
            self._patients[patient_id] = PatientRecord(patient_id, name, dict(demographics or {}))
        return patient_id

    def get_patient(self, patient_id: str) -> PatientRecord:
        try:
            return self._patients[patient_id]
        except KeyError:
            raise UnknownPatientError(f"no patient {patient_id}") from None

    def consult_patient(self, name: str) -> PatientRecord | None:
        """Exact-name lookup; ``None`` when nobody has that name."""
        hits = [r for r in self._patients.values() if r.name == name]
        if len(hits) > 1:
            raise AmbiguousNameError(name, sorted(r.patient_id for r in hits))
        return hits[0] if hits else None

    def _append(self, patient_id: str, author_id: str, text: str, at: datetime,
                allowed: tuple[Role, ...], attr: str) -> PatientRecord:
        self.get_patient(patient_id)
        author = self.staff_member(author_id)
        if author.role not in allowed:
            raise UnauthorizedRoleError(f"{author.role.value} {author_id} may not write {attr}")
        entry = Entry(at, author_id, text)
        with self._patient_locks[patient_id]:
            record = self._patients[patient_id]
            existing: tuple[Entry, ...] = getattr(record, attr)
            if existing and entry.timestamp < existing[-1].timestamp:
                raise UnsortedInputError(f"{attr} entry at {entry.timestamp} precedes the last one")
            updated = replace(record, **{attr: existing + (entry,)})
            self._patients[patient_id] = updated
        return updated

    def add_prescription(self, patient_id: str, doctor_id: str, text: str, at: datetime) -> PatientRecord:
        return self._append(patient_id, doctor_id, text, at, (Role.Doctor,), "prescriptions")

    def add_examination(self, patient_id: str, author_id: str, text: str, at: datetime) -> PatientRecord:
        return self._append(patient_id, author_id, text, at, (Role.Doctor, Role.Nurse), "examinations")
