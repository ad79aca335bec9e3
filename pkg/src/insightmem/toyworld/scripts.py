"""Scripted LLM behaviour for offline runs against the toy world.

Each responder is a pure function of the prompt text, so every pipeline
run under these scripts is reproducible.
"""
from __future__ import annotations

import re

from ..llm import ScriptedLLM
from .planners import PlannerInput, ObedientPlanner
from .tasks import ENV_RULES, FAMILIES, GENERAL_RULE, identify

SELECT_MARKER = "task category selector"
GENERATE_MARKER = "EXISTING RULES"
PLAN_MARKER = "Plan (one action per line"

_RULE_LINE = re.compile(r"^(\d+)\.\s+(.*?)(?:\s+\(TASK:\s*(.*?)\))?\s*$")
_HEADERS = {"GENERAL RULES:": "general", "ENVIRONMENT RULES:": "environment", "TASK RULES:": "subtask"}


def _between(text: str, start: str, end: str) -> str:
    i = text.find(start)
    if i < 0:
        return ""
    i += len(start)
    j = text.find(end, i)
    return text[i:] if j < 0 else text[i:j]


def existing_rules(prompt: str) -> tuple[list, bool]:
    """Parse the EXISTING RULES block: ``[(number, section, text, task_name)]`` and env-section presence."""
    block = _between(prompt, "Here are the EXISTING RULES:", "\n\n")
    rules, section, has_env = [], None, False
    for line in block.splitlines():
        line = line.strip()
        if line in _HEADERS:
            section = _HEADERS[line]
            has_env |= section == "environment"
            continue
        m = _RULE_LINE.match(line)
        if m and section:
            rules.append((int(m.group(1)), section, m.group(2), m.group(3)))
    return rules, has_env


def generation_response(req) -> str:
    """Emit ADD for a family's rule the first time, AGREE afterwards."""
    prompt = req.prompt
    rules, has_env = existing_rules(prompt)
    success = _between(prompt, "Succeeded Trajectories:", "Here are the EXISTING RULES")
    task_line = next((ln for ln in success.splitlines() if ln.startswith("Task: ")), "")
    env_line = next((ln for ln in success.splitlines() if ln.startswith("Environment: ")), "")
    env = env_line[len("Environment: "):].strip() or None
    found = identify(task_line)
    next_no = len(rules) + 1

    def op_for(section, text, name=None):
        nonlocal next_no
        for num, sec, existing, task in rules:
            if sec == section and existing == text and task == name:
                return f"AGREE {num}: {text}"
        line = f"ADD {next_no}: {text}" + (f" (TASK: {name})" if name else "")
        next_no += 1
        return line

    out = ["GENERAL RULES:", op_for("general", GENERAL_RULE)]
    if has_env:
        out.append("ENVIRONMENT RULES:")
        if env in ENV_RULES:
            out.append(op_for("environment", ENV_RULES[env]))
    out.append("TASK RULES:")
    if found is not None:
        fam, _ = found
        out.append(op_for("subtask", fam.rule, fam.name))
    return "\n".join(out)


def selection_response(req) -> str:
    """Return the subtask name whose family the dialogue belongs to."""
    prompt = req.prompt
    names_line = _between(prompt, "Known categories:", "\n").strip()
    names = [n.strip() for n in names_line.split(",") if n.strip()]
    dialogue = _between(prompt, "Request:", "\nanswer:")
    found = identify(dialogue)
    if found is None:
        return "None"
    name = found[0].name
    return name if name in names else "None"


def planning_response(req) -> str:
    prompt = req.prompt
    block = _between(prompt, "Lessons from earlier tasks:\n", "\n\nRequest:")
    dialogue = _between(prompt, "Request: ", "\n")
    steps = ObedientPlanner()(PlannerInput("", dialogue, block))
    return "\n".join(str(s) for s in steps)


def toy_mock_llm() -> ScriptedLLM:
    """Scripted backend covering selection, generation and planning prompts."""
    return (ScriptedLLM()
            .add_rule(SELECT_MARKER, selection_response)
            .add_rule(GENERATE_MARKER, generation_response)
            .add_rule(PLAN_MARKER, planning_response))


def family_names() -> list[str]:
    return [f.name for f in FAMILIES]
