"""Fault-tolerant parser for the rule-operation output format.

Recognized layout::

    GENERAL RULES:
    ADD 3: Always verify object location before interacting.
    ENVIRONMENT RULES:
    AGREE 4: ...
    TASK RULES:
    MOVE 12: Reshaped rule text. (TASK: Locate Object)

Nothing here raises on bad input: unparseable lines become diagnostics and
over-limit or duplicate-target operations are dropped with a reason.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from ..core import ENVIRONMENT, GENERAL, SUBTASK, normalize_task_name

OPS = ("ADD", "REMOVE", "EDIT", "AGREE", "MOVE")
MAX_OPS_PER_SECTION = 4

_HEADER = re.compile(
    r"^[\s#>*_`\-]*(GENERAL|ENVIRONMENT|ENV|TASK|SUBTASK)\s+RULES?\s*[*_`]*\s*:?\s*[*_`]*\s*$",
    re.I,
)
_OP_LINE = re.compile(
    r"^[\s>*_`]*(?:[-*•]\s*|\d+[.)]\s+)?[*_`]*(ADD|REMOVE|EDIT|AGREE|MOVE)[*_`]*\s*#?\s*(\d+)\s*[*_`]*\s*:\s*(.*?)\s*$",
    re.I,
)
_OP_NO_NUMBER = re.compile(r"^[\s>*_`]*(?:[-*•]\s*)?(ADD|REMOVE|EDIT|AGREE|MOVE)\b", re.I)
_TASK_SUFFIX = re.compile(r"\(\s*TASK\s*:\s*([^()]*?)\s*\)\s*[.;,]?\s*$", re.I)

_SECTION_OF = {"GENERAL": GENERAL, "ENVIRONMENT": ENVIRONMENT, "ENV": ENVIRONMENT,
               "TASK": SUBTASK, "SUBTASK": SUBTASK}
_NEEDS_TEXT = ("ADD", "EDIT", "MOVE")


@dataclass(frozen=True)
class AtomicOperation:
    kind: str
    section: str
    rule_number: int
    text: Optional[str] = None
    subtask_name: Optional[str] = None
    line: int = 0

    @property
    def targets_existing(self) -> bool:
        return self.kind != "ADD"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "section": self.section, "rule_number": self.rule_number,
                "text": self.text, "subtask_name": self.subtask_name, "line": self.line}


@dataclass
class ParseResult:
    operations: list = field(default_factory=list)
    dropped: list = field(default_factory=list)  # (AtomicOperation, reason)
    diagnostics: list = field(default_factory=list)

    @property
    def parsed(self) -> list:
        return self.operations + [op for op, _ in self.dropped]


def parse_operations(text) -> ParseResult:
    result = ParseResult()
    if not isinstance(text, str):
        result.diagnostics.append(f"expected text, got {type(text).__name__}")
        return result

    section: Optional[str] = None
    per_section = {GENERAL: 0, ENVIRONMENT: 0, SUBTASK: 0}
    targeted: set[int] = set()

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        header = _HEADER.match(line)
        if header:
            section = _SECTION_OF[header.group(1).upper()]
            continue
        m = _OP_LINE.match(line)
        if not m:
            if _OP_NO_NUMBER.match(line):
                result.diagnostics.append(f"line {lineno}: operation without a rule number: {line[:80]!r}")
            else:
                result.diagnostics.append(f"line {lineno}: unparseable: {line[:80]!r}")
            continue
        kind = m.group(1).upper()
        number = int(m.group(2))
        body = m.group(3).strip()
        if section is None:
            result.diagnostics.append(f"line {lineno}: {kind} {number} appears before any section header")
            continue
        if number < 1:
            result.diagnostics.append(f"line {lineno}: rule number must be positive")
            continue

        name = None
        if section == SUBTASK:
            tm = _TASK_SUFFIX.search(body)
            if tm:
                body = body[: tm.start()].rstrip()
                name, warning = normalize_task_name(tm.group(1))
                if warning:
                    result.diagnostics.append(f"line {lineno}: {warning}")
                name = name or None

        op = AtomicOperation(kind, section, number, body or None, name, lineno)

        if kind in _NEEDS_TEXT and not body:
            result.dropped.append((op, f"{kind} needs rule text"))
            continue
        if section == SUBTASK and kind in _NEEDS_TEXT and name is None:
            result.dropped.append((op, f"{kind} in task rules needs a (TASK: <name>) suffix"))
            continue
        if per_section[section] >= MAX_OPS_PER_SECTION:
            result.dropped.append((op, f"more than {MAX_OPS_PER_SECTION} operations in {section} section"))
            continue
        if op.targets_existing:
            if number in targeted:
                result.dropped.append((op, f"rule {number} already received an operation"))
                continue
            targeted.add(number)
        per_section[section] += 1
        result.operations.append(op)

    if not result.operations and not result.dropped and not result.diagnostics:
        result.diagnostics.append("no operations found")
    return result
