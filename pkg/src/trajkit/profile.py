"""Trajectory-UML stereotype profile and model checker.

Model documents use a small line grammar::

    # comment
    class <id> ["<name>"] [«stereotype»]
    compose <whole> <part> <multiplicity>
    assoc <a> <b> ["<label>"]

Multiplicities are ``n``, ``*`` or ``lo..hi`` (``hi`` may be ``*``).
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable

from .errors import CompositionCycleError, DuplicateIdError, ModelSyntaxError, SchemaError


class Diagram(str, enum.Enum):
    SequenceDiagram = "SequenceDiagram"
    ClassDiagram = "ClassDiagram"


@dataclass(frozen=True)
class StereotypeEntry:
    element: str
    stereotype: str
    diagram: Diagram

    def __post_init__(self) -> None:
        object.__setattr__(self, "diagram", Diagram(self.diagram))
        if not (self.stereotype.startswith("«") and self.stereotype.endswith("»")):
            raise ValueError(f"stereotype {self.stereotype!r} must be guillemet-quoted")


@dataclass(frozen=True)
class ProfileDocument:
    name: str
    entries: tuple[StereotypeEntry, ...]

    def __post_init__(self) -> None:
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        keys = [(e.element, e.diagram) for e in entries]
        if len(set(keys)) != len(keys):
            raise DuplicateIdError("profile has duplicate (element, diagram) rows")

    def normalized_names(self) -> set[str]:
        return {normalize_stereotype(e.stereotype) for e in self.entries}


_SEQ, _CLS = Diagram.SequenceDiagram, Diagram.ClassDiagram

# byte-exact, in table order: sequence-diagram rows first, then class-diagram rows
TRAJECTORY_UML = ProfileDocument("Trajectory-UML", (
    StereotypeEntry("doctor", "«MEDICALSTAFF»", _SEQ),
    StereotypeEntry("patient", "«SUFFERING»", _SEQ),
    StereotypeEntry("Ulpda", "«userInterface»", _SEQ),
    StereotypeEntry("Control pda", "«management»", _SEQ),
    StereotypeEntry("Trajectory", "«trajectory»", _CLS),
    StereotypeEntry("Trajectory-section", "«trajectory-section»", _CLS),
    StereotypeEntry("Stop", "«stop»", _CLS),
    StereotypeEntry("Move", "«move»", _CLS),
    StereotypeEntry("Pda", "«pda»", _CLS),
    StereotypeEntry("Gps", "«gps data»", _CLS),
    StereotypeEntry("Location", "«surface»", _CLS),
    StereotypeEntry("Mobile hospital", "«moving object»", _CLS),
    StereotypeEntry("Doctor/nurse", "« Medical staff »", _CLS),
    StereotypeEntry("Driver/manager", "«actor»", _CLS),
    StereotypeEntry("Patient", "«suffering»", _CLS),
))


def normalize_stereotype(name: str) -> str:
    """Trim guillemets and whitespace, then case-fold (matching only)."""
    return name.strip().removeprefix("«").removesuffix("»").strip().casefold()


def export_profile(fmt: str = "table-text", profile: ProfileDocument = TRAJECTORY_UML) -> str:
    if fmt == "table-text":
        return "".join(f"{e.element}\t{e.stereotype}\t{e.diagram.value}\n" for e in profile.entries)
    if fmt == "structured":
        return "".join(
            json.dumps({"element": e.element, "stereotype": e.stereotype, "diagram": e.diagram.value},
                       ensure_ascii=False) + "\n"
            for e in profile.entries
        )
    raise ValueError(f"unknown profile format {fmt!r}")


def parse_profile(text: str, name: str = "Trajectory-UML") -> ProfileDocument:
    """Read the structured (one JSON record per line) export back."""
    entries = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            entries.append(StereotypeEntry(rec["element"], rec["stereotype"], rec["diagram"]))
        except (ValueError, KeyError, TypeError) as exc:
            raise SchemaError(f"bad profile record: {exc}", lineno) from None
    return ProfileDocument(name, tuple(entries))


# --------------------------------------------------------------------------
# models
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Element:
    id: str
    name: str | None = None
    stereotype: str | None = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Composition:
    whole: str
    part: str
    multiplicity: str = "1"
    line: int = field(default=0, compare=False)

    @property
    def bounds(self) -> tuple[int, int | None]:
        return parse_multiplicity(self.multiplicity)


@dataclass(frozen=True)
class Association:
    a: str
    b: str
    label: str | None = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class StereotypedModel:
    elements: tuple[Element, ...] = ()
    compositions: tuple[Composition, ...] = ()
    associations: tuple[Association, ...] = ()

    def __post_init__(self) -> None:
        for name in ("elements", "compositions", "associations"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        ids = [e.id for e in self.elements]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise DuplicateIdError(f"duplicate element id {dup}")
        _check_acyclic(self.compositions)

    def element(self, element_id: str) -> Element:
        for e in self.elements:
            if e.id == element_id:
                return e
        raise KeyError(element_id)


_MULT = re.compile(r"^(\d+|\*)(?:\.\.(\d+|\*))?$")
_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-.]*$")


def parse_multiplicity(text: str) -> tuple[int, int | None]:
    m = _MULT.match(text)
    if not m:
        raise ValueError(f"bad multiplicity {text!r}")
    lo_s, hi_s = m.group(1), m.group(2)
    if hi_s is None:
        return (0, None) if lo_s == "*" else (int(lo_s), int(lo_s))
    if lo_s == "*":
        raise ValueError(f"bad multiplicity {text!r}")
    hi = None if hi_s == "*" else int(hi_s)
    if hi is not None and hi < int(lo_s):
        raise ValueError(f"bad multiplicity {text!r}")
    return int(lo_s), hi


def _check_acyclic(compositions: Iterable[Composition]) -> None:
    graph: dict[str, list[str]] = {}
    for c in compositions:
        graph.setdefault(c.whole, []).append(c.part)
    state: dict[str, int] = {}

    def visit(node: str, trail: list[str]) -> None:
        state[node] = 1
        for nxt in graph.get(node, ()):
            if state.get(nxt) == 1:
                raise CompositionCycleError("composition cycle: " + " -> ".join(trail + [node, nxt]))
            if nxt not in state:
                visit(nxt, trail + [node])
        state[node] = 2

    for node in sorted(graph):
        if node not in state:
            visit(node, [])


@dataclass(frozen=True)
class _Token:
    kind: str  # "word" | "string" | "stereotype"
    text: str
    column: int


def _tokenize(line: str, lineno: int) -> list[_Token]:
    tokens: list[_Token] = []
    i, n = 0, len(line)
    while i < n:
        ch = line[i]
        if ch in " \t":
            i += 1
        elif ch == "#":
            break
        elif ch == '"':
            start, i, buf = i, i + 1, []
            while i < n and line[i] != '"':
                if line[i] == "\\" and i + 1 < n:
                    i += 1
                buf.append(line[i])
                i += 1
            if i >= n:
                raise ModelSyntaxError("unterminated string", lineno, start + 1)
            tokens.append(_Token("string", "".join(buf), start + 1))
            i += 1
        elif ch == "«":
            end = line.find("»", i + 1)
            if end < 0:
                raise ModelSyntaxError("unterminated stereotype, expected »", lineno, i + 1)
            tokens.append(_Token("stereotype", line[i:end + 1], i + 1))
            i = end + 1
        elif ch == "»":
            raise ModelSyntaxError("» without opening «", lineno, i + 1)
        else:
            start = i
            while i < n and line[i] not in ' \t"«»#':
                i += 1
            tokens.append(_Token("word", line[start:i], start + 1))
    return tokens


def parse_model(text: str) -> StereotypedModel:
    elements: list[Element] = []
    compositions: list[Composition] = []
    associations: list[Association] = []
    seen: dict[str, int] = {}
    pending_refs: list[tuple[str, int, int]] = []

    def ident(tok: _Token | None, lineno: int, what: str, at_col: int) -> str:
        if tok is None:
            raise ModelSyntaxError(f"missing {what}", lineno, at_col)
        if tok.kind != "word" or not _IDENT.match(tok.text):
            raise ModelSyntaxError(f"expected {what}, got {tok.text!r}", lineno, tok.column)
        return tok.text

    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = _tokenize(line, lineno)
        if not tokens:
            continue
        head, rest = tokens[0], tokens[1:]
        end_col = len(line.rstrip()) + 1

        def opt(kind: str) -> _Token | None:
            if rest and rest[0].kind == kind:
                return rest.pop(0)
            return None

        if head.kind != "word":
            raise ModelSyntaxError(f"expected a declaration keyword, got {head.text!r}", lineno, head.column)
        keyword = head.text
        if keyword == "class":
            eid = ident(rest.pop(0) if rest else None, lineno, "class id", end_col)
            name_tok = opt("string")
            stereo_tok = opt("stereotype")
            if eid in seen:
                raise DuplicateIdError(f"line {lineno}: id {eid} already declared on line {seen[eid]}")
            seen[eid] = lineno
            elements.append(Element(eid, name_tok.text if name_tok else None,
                                    stereo_tok.text if stereo_tok else None, lineno))
        elif keyword == "compose":
            whole_tok = rest.pop(0) if rest else None
            whole = ident(whole_tok, lineno, "whole id", end_col)
            part_tok = rest.pop(0) if rest else None
            part = ident(part_tok, lineno, "part id", end_col)
            mult_tok = rest.pop(0) if rest else None
            if mult_tok is None:
                raise ModelSyntaxError("missing multiplicity", lineno, end_col)
            try:
                parse_multiplicity(mult_tok.text)
            except ValueError as exc:
                raise ModelSyntaxError(str(exc), lineno, mult_tok.column) from None
            pending_refs += [(whole, lineno, whole_tok.column), (part, lineno, part_tok.column)]
            compositions.append(Composition(whole, part, mult_tok.text, lineno))
        elif keyword == "assoc":
            a_tok = rest.pop(0) if rest else None
            a = ident(a_tok, lineno, "first id", end_col)
            b_tok = rest.pop(0) if rest else None
            b = ident(b_tok, lineno, "second id", end_col)
            label_tok = opt("string")
            pending_refs += [(a, lineno, a_tok.column), (b, lineno, b_tok.column)]
            associations.append(Association(a, b, label_tok.text if label_tok else None, lineno))
        else:
            raise ModelSyntaxError(f"unknown declaration {keyword!r}", lineno, head.column)
        if rest:
            raise ModelSyntaxError(f"unexpected {rest[0].text!r}", lineno, rest[0].column)

    for ref, lineno, col in pending_refs:
        if ref not in seen:
            raise ModelSyntaxError(f"undeclared id {ref}", lineno, col)
    return StereotypedModel(tuple(elements), tuple(compositions), tuple(associations))


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def serialize_model(model: StereotypedModel) -> str:
    lines = []
    for e in model.elements:
        parts = ["class", e.id]
        if e.name is not None:
            parts.append(_quote(e.name))
        if e.stereotype is not None:
            parts.append(e.stereotype)
        lines.append(" ".join(parts))
    for c in model.compositions:
        lines.append(f"compose {c.whole} {c.part} {c.multiplicity}")
    for a in model.associations:
        lines.append(f"assoc {a.a} {a.b}" + (f" {_quote(a.label)}" if a.label is not None else ""))
    return "".join(line + "\n" for line in lines)


def reference_model_text() -> str:
    """The mobile-hospital class diagram, encoded in the model grammar."""
    return resources.files("trajkit.data").joinpath("mobile_hospital.model").read_text(encoding="utf-8")


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    rule: str
    element_id: str
    line: int
    message: str

    def __str__(self) -> str:
        return f"{self.rule} {self.element_id} (line {self.line}): {self.message}"


def _part_bounds(model: StereotypedModel, whole: str, stereo: str,
                 kinds: dict[str, str | None]) -> tuple[int, int | None, int]:
    lo = hi = 0
    count = 0
    unbounded = False
    for c in model.compositions:
        if c.whole == whole and kinds.get(c.part) == stereo:
            l, h = c.bounds
            lo += l
            count += 1
            if h is None:
                unbounded = True
            else:
                hi += h
    return lo, None if unbounded else hi, count


def validate_model(model: StereotypedModel, profile: ProfileDocument = TRAJECTORY_UML) -> list[Violation]:
    known = profile.normalized_names()
    kinds = {e.id: normalize_stereotype(e.stereotype) if e.stereotype else None for e in model.elements}
    out: list[Violation] = []

    for e in model.elements:
        kind = kinds[e.id]
        if e.stereotype is not None and kind not in known:
            out.append(Violation("V1", e.id, e.line, f"stereotype {e.stereotype} is not in {profile.name}"))
        if kind == "trajectory":
            _, hi, n = _part_bounds(model, e.id, "trajectory-section", kinds)
            if n == 0 or hi == 0:
                out.append(Violation("V2", e.id, e.line, "a trajectory must be composed of trajectory sections"))
        elif kind == "trajectory-section":
            for part, want in (("stop", 2), ("move", 1)):
                lo, hi, _ = _part_bounds(model, e.id, part, kinds)
                if lo != want or hi != want:
                    got = f"{lo}..{'*' if hi is None else hi}"
                    out.append(Violation("V3", e.id, e.line,
                                         f"a trajectory section needs exactly {want} «{part}» part(s), has {got}"))
        elif kind == "moving object":
            lo, hi, _ = _part_bounds(model, e.id, "trajectory", kinds)
            if lo != 1 or hi != 1:
                out.append(Violation("V4", e.id, e.line, "a moving object owns exactly one «trajectory»"))
        elif kind == "pda":
            linked = any(
                (a.a == e.id and kinds.get(a.b) == "gps data") or (a.b == e.id and kinds.get(a.a) == "gps data")
                for a in model.associations
            )
            if not linked:
                out.append(Violation("V5", e.id, e.line, "a «pda» must be connected to a «gps data» element"))
    return out
