"""Exception hierarchy shared by every trajkit module."""

from __future__ import annotations


class TrajkitError(Exception):
    """Base class for domain errors (CLI maps these to exit code 1)."""


# trajectory model
class TrajectoryError(TrajkitError):
    pass


class AlternationError(TrajectoryError):
    pass


class TemporalGapError(TrajectoryError):
    pass


class EmptyTrajectoryError(TrajectoryError):
    pass


class InvalidElementError(TrajectoryError):
    """A Stop or Move violates its own invariants."""


# input streams
class UnsortedInputError(TrajkitError):
    pass


class MixedObjectError(TrajkitError):
    pass


class NoStopFoundError(TrajkitError):
    pass


# mission state machine
class InvalidTransitionError(TrajkitError):
    def __init__(self, state, event, index: int | None = None):
        self.state = state
        self.event = event
        self.index = index
        where = f" at event index {index}" if index is not None else ""
        super().__init__(f"no transition from {state} on {event}{where}")


class ObjectMismatchError(TrajkitError):
    pass


# records
class UnknownPatientError(TrajkitError):
    pass


class UnknownStaffError(TrajkitError):
    pass


class UnauthorizedRoleError(TrajkitError):
    pass


class AmbiguousNameError(TrajkitError):
    def __init__(self, name: str, patient_ids: list[str]):
        self.name = name
        self.patient_ids = patient_ids
        super().__init__(f"{len(patient_ids)} patients named {name!r}: {', '.join(patient_ids)}")


class DuplicateIdError(TrajkitError):
    pass


# model documents
class ModelSyntaxError(TrajkitError):
    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        self.message = message
        super().__init__(f"line {line}, column {column}: {message}")


class CompositionCycleError(TrajkitError):
    pass


# persistence
class SchemaError(TrajkitError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class EmptyFileError(TrajkitError):
    pass


class WorkspaceError(TrajkitError):
    pass
