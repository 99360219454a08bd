import json

from rewrite_trainer.generation import generate

from conftest import overfit_examples, write_jsonl

# interface check: the pipeline's own parser must accept generate() output
from convrewrite.rewriter import read_records


def test_overfit_model_reproduces_training_targets(overfit_run, tmp_path):
    rows = generate(
        overfit_run["model"], overfit_run["train_file"], tmp_path / "student.jsonl"
    )
    targets = [r["target"] for r in overfit_examples()]
    produced = [r["rewrite"] for r in rows]
    exact = sum(1 for got, want in zip(produced, targets) if got == want)
    assert exact >= int(0.9 * len(targets))


def test_generate_round_trips_through_pipeline_parser(overfit_run, tmp_path):
    out_path = tmp_path / "student.jsonl"
    rows = generate(overfit_run["model"], overfit_run["train_file"], out_path)
    records = read_records(out_path)
    assert len(records) == len(rows) == len(overfit_examples())
    assert all(r.method == "student" for r in records)
    assert all(r.rewrite for r in records)


def test_generate_from_tasks_file(overfit_run, tmp_path):
    tasks = [
        {
            "conversation_id": "t1",
            "turn_no": 2,
            "context": [["What is item 3?", "Item 3 is a widget of class 3."]],
            "question": "What color is it?",
            "human_rewrite": None,
            "gold_passage_ids": [],
            "source": "QuAC",
        }
    ]
    tasks_path = write_jsonl(tasks, tmp_path / "tasks.jsonl")
    out_path = tmp_path / "student.jsonl"
    rows = generate(overfit_run["model"], tasks_path, out_path)
    assert len(rows) == 1
    (record,) = read_records(out_path)
    assert record.conversation_id == "t1" and record.turn_no == 2
    assert record.method == "student"


def test_generate_line_count_matches_inputs(overfit_run, tmp_path):
    out_path = tmp_path / "student.jsonl"
    generate(overfit_run["model"], overfit_run["dev_file"], out_path)
    lines = [l for l in out_path.read_text().splitlines() if l.strip()]
    assert len(lines) == len(overfit_examples())
    first = json.loads(lines[0])
    assert set(first) >= {"conversation_id", "turn_no", "method", "rewrite", "latency_ms"}
