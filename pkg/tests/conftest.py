import json
from pathlib import Path

import pytest

from convrewrite.corpus import filter_evaluable, load_conversations, preprocess_tasks
from convrewrite.evaluation import qrels_from_tasks
from convrewrite.llm import prompt_sha256
from convrewrite.prompting import (
    default_demonstrations,
    default_editor_instruction,
    default_rewriter_instruction,
    render_editor_prompt,
    render_rewriter_prompt,
)

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def conversations_10_path() -> Path:
    return FIXTURES / "conversations_10.jsonl"


@pytest.fixture(scope="session")
def e2e_dir() -> Path:
    return FIXTURES / "e2e"


def build_e2e_pipeline(e2e_dir: Path):
    """Load the bundled e2e corpus and script a mock transcript for it.

    Returns (tasks, qrels, transcript) where the transcript covers the rw_zsl
    and rw_fsl prompts plus the ed_self editor prompt (initial = scripted
    rw_fsl text) for every task.
    """
    conversations = load_conversations(e2e_dir / "conversations.jsonl")
    tasks = preprocess_tasks(conversations)
    qrels = qrels_from_tasks(tasks)
    tasks = filter_evaluable(tasks, qrels)
    scripted = json.loads((e2e_dir / "scripted.json").read_text(encoding="utf-8"))

    rewriter_instruction = default_rewriter_instruction()
    editor_instruction = default_editor_instruction()
    demos = default_demonstrations()
    transcript = {}
    for task in tasks:
        entry = scripted[task.query_id]
        zsl_prompt = render_rewriter_prompt(rewriter_instruction, [], task)
        transcript[prompt_sha256(zsl_prompt)] = entry["rw_fsl"]
        fsl_prompt = render_rewriter_prompt(rewriter_instruction, demos, task)
        transcript[prompt_sha256(fsl_prompt)] = entry["rw_fsl"]
        editor_prompt = render_editor_prompt(
            editor_instruction, demos, task, entry["rw_fsl"]
        )
        transcript[prompt_sha256(editor_prompt)] = entry["ed"]
    return tasks, qrels, transcript


@pytest.fixture()
def e2e_pipeline(e2e_dir):
    return build_e2e_pipeline(e2e_dir)
