import hashlib
import threading
from datetime import timedelta

import pytest

from trajkit.errors import AmbiguousNameError, DuplicateIdError, UnauthorizedRoleError, UnknownPatientError, \
    UnknownStaffError, UnsortedInputError
from trajkit.records import PatientRecord, RecordStore, Role, StaffMember

from oracles import T0


@pytest.fixture
def store():
    return RecordStore(staff=[StaffMember("D1", Role.Doctor, "Dr. Amel", "PDA-1"),
                           StaffMember("N1", Role.Nurse, "Sami"),
                           StaffMember("DR1", Role.Driver, "Karim")])


def chain(entries):
    h, out = b"", []
    for e in entries:
        h = hashlib.sha256(h + f"{e.timestamp.isoformat()}|{e.author}|{e.text}".encode()).digest()
        out.append(h)
    return out


def test_doctor_and_manager_need_a_pda():
    with pytest.raises(ValueError):
        StaffMember("D2", Role.Doctor, "No Pda")
    with pytest.raises(ValueError):
        StaffMember("M2", Role.Manager, "No Pda", "")
    assert StaffMember("N2", Role.Nurse, "Ok").pda_id is None


def test_add_and_consult(store):
    pid = store.add_patient("Leila Ben", {"age": "34"})
    assert pid == "P000001"
    rec = store.consult_patient("Leila Ben")
    assert rec.patient_id == pid and rec.demographics == {"age": "34"}
    assert store.consult_patient("nobody") is None
    store.add_patient("Leila Ben")
    with pytest.raises(AmbiguousNameError) as info:
        store.consult_patient("Leila Ben")
    assert info.value.patient_ids == ["P000001", "P000002"]


def test_role_rules(store):
    pid = store.add_patient("A")
    store.add_prescription(pid, "D1", "aspirin", T0)
    store.add_examination(pid, "N1", "bp 12/8", T0)
    with pytest.raises(UnauthorizedRoleError):
        store.add_prescription(pid, "N1", "x", T0)
    with pytest.raises(UnauthorizedRoleError):
        store.add_examination(pid, "DR1", "x", T0)
    with pytest.raises(UnknownStaffError):
        store.add_examination(pid, "ghost", "x", T0)
    with pytest.raises(UnknownPatientError):
        store.add_prescription("P999999", "D1", "x", T0)


def test_entries_are_append_only(store):
    pid = store.add_patient("A")
    snapshots = []
    for k in range(20):
        store.add_prescription(pid, "D1", f"dose {k}", T0 + timedelta(minutes=k))
        snapshots.append(chain(store.get_patient(pid).prescriptions))
    for before, after in zip(snapshots, snapshots[1:]):
        assert after[:len(before)] == before and len(after) == len(before) + 1
    with pytest.raises(UnsortedInputError):
        store.add_prescription(pid, "D1", "late", T0)


def test_consult_does_not_mutate(store):
    pid = store.add_patient("A")
    store.add_examination(pid, "N1", "ok", T0)
    before = store.get_patient(pid)
    for _ in range(5):
        store.consult_patient("A")
    assert store.get_patient(pid) is before
    with pytest.raises(AttributeError):
        before.name = "B"


def test_thousand_unique_ids_under_threads(store):
    ids = []
    lock = threading.Lock()

    def worker(n):
        for k in range(n):
            pid = store.add_patient(f"p{k}")
            with lock:
                ids.append(pid)

    threads = [threading.Thread(target=worker, args=(125,)) for _ in range(8)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    assert len(ids) == 1000 == len(set(ids))


def test_concurrent_appends_keep_every_entry(store):
    pid = store.add_patient("A")
    threads = [threading.Thread(target=store.add_examination, args=(pid, "N1", str(k), T0)) for k in range(50)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    assert sorted(e.text for e in store.get_patient(pid).examinations) == sorted(str(k) for k in range(50))


def test_duplicates_rejected():
    with pytest.raises(DuplicateIdError):
        RecordStore(patients=[PatientRecord("P000001", "A"), PatientRecord("P000001", "B")])
    s = RecordStore(patients=[PatientRecord("P000007", "A")])
    assert s.add_patient("B") == "P000008"
