"""Prompt assembly for the rewriter and editor roles.

Rendering is deterministic and byte-stable: LF newlines, one blank line
between blocks, context pairs laid out as

    Context: [Q: <question>
    A: <answer> ]

An empty context renders as "Context: []". Rewriter prompts end with a bare
"Rewrite:", editor prompts with "Edit:". The golden files under the test
fixtures freeze this rendering as the package contract.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .corpus import RewriteTask

PROPERTIES = ("correctness", "clarity", "informativeness", "nonredundancy")

# Phrase each property contributes to the rewriter instruction.
PROPERTY_PHRASES = {
    "correctness": "retain its original meaning",
    "clarity": "addressing coreference and omission issues",
    "informativeness": "and be as informative as possible",
    "nonredundancy": "should not duplicate any previously asked questions",
}

EDITOR_INSTRUCTION_TEXT = (
    "Given a question and its context and a rewrite that decontextualizes the "
    "question, edit the rewrite to create a revised version that fully "
    "addresses coreferences and omissions in the question without changing "
    "the original meaning of the question but providing more information. "
    "The new rewrite should not duplicate any previously asked questions in "
    "the context. If there is no need to edit the rewrite, return the rewrite "
    "as-is."
)

DEFAULT_CONTEXT_CHAR_BUDGET = 12_000


@dataclass(frozen=True)
class Instruction:
    text: str
    properties_present: frozenset[str]


@dataclass(frozen=True)
class Demonstration:
    context: tuple[tuple[str, str], ...]
    question: str
    rewrite: str
    initial_rewrite: str | None = None


@dataclass(frozen=True)
class PromptBundle:
    role: str  # "rewriter" or "editor"
    instruction: Instruction
    demonstrations: tuple[Demonstration, ...]
    task: RewriteTask
    initial_rewrite: str | None
    rendered: str


def compose_rewriter_instruction(properties: frozenset[str]) -> str:
    """Build the rewriter instruction text from the properties it should name."""
    unknown = set(properties) - set(PROPERTIES)
    if unknown:
        raise ValueError(f"unknown properties: {sorted(unknown)}")
    first = "Given a question and its context, decontextualize the question"
    if "clarity" in properties:
        first += " by addressing coreference and omission issues"
    first += "."
    positives = []
    if "correctness" in properties:
        positives.append("retain its original meaning")
    if "informativeness" in properties:
        positives.append("be as informative as possible")
    negative = (
        "not duplicate any previously asked questions in the context"
        if "nonredundancy" in properties
        else None
    )
    if positives and negative:
        second = (
            "The resulting question should "
            + " and ".join(positives)
            + ", and should "
            + negative
            + "."
        )
    elif positives:
        second = "The resulting question should " + " and ".join(positives) + "."
    elif negative:
        second = "The resulting question should " + negative + "."
    else:
        second = None
    return first if second is None else f"{first} {second}"


def default_rewriter_instruction() -> Instruction:
    props = frozenset(PROPERTIES)
    return Instruction(text=compose_rewriter_instruction(props), properties_present=props)


def default_editor_instruction() -> Instruction:
    return Instruction(
        text=EDITOR_INSTRUCTION_TEXT, properties_present=frozenset(PROPERTIES)
    )


def ablate_instruction(instruction: Instruction, drop: str) -> Instruction:
    """Remove one property's phrase from a rewriter instruction. Idempotent."""
    if drop not in PROPERTIES:
        raise ValueError(f"unknown property: {drop!r}")
    if drop not in instruction.properties_present:
        return instruction
    if instruction.text != compose_rewriter_instruction(instruction.properties_present):
        raise ValueError("can only ablate rewriter instructions with the composed clause structure")
    remaining = frozenset(instruction.properties_present - {drop})
    return Instruction(
        text=compose_rewriter_instruction(remaining), properties_present=remaining
    )


def default_demonstrations() -> list[Demonstration]:
    """The fixed four-demonstration set shipped as package data."""
    raw = resources.files("convrewrite.data").joinpath("demonstrations.json").read_text("utf-8")
    payload = json.loads(raw)
    return [
        Demonstration(
            context=tuple((q, a) for q, a in entry["context"]),
            question=entry["question"],
            rewrite=entry["rewrite"],
            initial_rewrite=entry.get("initial_rewrite"),
        )
        for entry in payload["demonstrations"]
    ]


def _context_lines(pairs) -> list[str]:
    if not pairs:
        return ["Context: []"]
    lines = []
    for i, (question, answer) in enumerate(pairs):
        q_line = f"Q: {question}"
        if i == 0:
            q_line = f"Context: [{q_line}"
        lines.append(q_line)
        lines.append(f"A: {answer}")
    lines[-1] += " ]"
    return lines


def _truncate_context(pairs, budget: int | None):
    if budget is None:
        return list(pairs)
    pairs = list(pairs)
    while pairs and sum(len(line) + 1 for line in _context_lines(pairs)) > budget:
        pairs.pop(0)
    return pairs


def _demo_block(demo: Demonstration, editor: bool) -> str:
    lines = _context_lines(demo.context)
    lines.append(f"Question: {demo.question}")
    if editor:
        if demo.initial_rewrite is None:
            raise ValueError(f"demonstration {demo.question!r} lacks an initial rewrite")
        lines.append(f"Rewrite: {demo.initial_rewrite}")
        lines.append(f"Edit: {demo.rewrite}")
    else:
        lines.append(f"Rewrite: {demo.rewrite}")
    return "\n".join(lines)


def _test_block(
    task: RewriteTask,
    initial: str | None,
    editor: bool,
    context_char_budget: int | None,
) -> str:
    pairs = _truncate_context(task.context, context_char_budget)
    lines = _context_lines(pairs)
    lines.append(f"Question: {task.question}")
    if editor:
        lines.append(f"Rewrite: {initial}")
        lines.append("Edit:")
    else:
        lines.append("Rewrite:")
    return "\n".join(lines)


def render_rewriter_prompt(
    instruction: Instruction,
    demos: list[Demonstration],
    task: RewriteTask,
    context_char_budget: int | None = DEFAULT_CONTEXT_CHAR_BUDGET,
) -> str:
    blocks = [instruction.text]
    blocks.extend(_demo_block(d, editor=False) for d in demos)
    blocks.append(_test_block(task, None, editor=False, context_char_budget=context_char_budget))
    return "\n\n".join(blocks)


def render_editor_prompt(
    instruction: Instruction,
    demos: list[Demonstration],
    task: RewriteTask,
    initial: str,
    context_char_budget: int | None = DEFAULT_CONTEXT_CHAR_BUDGET,
) -> str:
    if not initial:
        raise ValueError("editor prompts require a non-empty initial rewrite")
    blocks = [instruction.text]
    blocks.extend(_demo_block(d, editor=True) for d in demos)
    blocks.append(_test_block(task, initial, editor=True, context_char_budget=context_char_budget))
    return "\n\n".join(blocks)


def build_bundle(
    role: str,
    instruction: Instruction,
    demos: list[Demonstration],
    task: RewriteTask,
    initial_rewrite: str | None = None,
    context_char_budget: int | None = DEFAULT_CONTEXT_CHAR_BUDGET,
) -> PromptBundle:
    if role == "rewriter":
        rendered = render_rewriter_prompt(instruction, demos, task, context_char_budget)
    elif role == "editor":
        if initial_rewrite is None:
            raise ValueError("editor bundles require initial_rewrite")
        rendered = render_editor_prompt(
            instruction, demos, task, initial_rewrite, context_char_budget
        )
    else:
        raise ValueError(f"unknown role: {role!r}")
    return PromptBundle(
        role=role,
        instruction=instruction,
        demonstrations=tuple(demos),
        task=task,
        initial_rewrite=initial_rewrite,
        rendered=rendered,
    )
