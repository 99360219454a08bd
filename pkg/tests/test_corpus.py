import json

import pytest

from convrewrite.corpus import (
    SchemaError,
    filter_evaluable,
    load_conversations,
    load_passages,
    preprocess_tasks,
    read_tasks,
    split_dev,
    subset_counts,
    write_tasks,
)
from convrewrite.evaluation import Qrels, qrels_from_tasks

# Hand-checked against tests/fixtures/conversations_10.jsonl.
EXPECTED_TURNS = {
    "c01": 3, "c02": 2, "c03": 1, "c04": 4, "c05": 2,
    "c06": 3, "c07": 1, "c08": 2, "c09": 3, "c10": 2,
}


def test_fixture_loads_ten_conversations(conversations_10_path):
    conversations = load_conversations(conversations_10_path)
    assert len(conversations) == 10
    counts = {c.id: c.user_turn_count() for c in conversations}
    assert counts == EXPECTED_TURNS
    by_id = {c.id: c for c in conversations}
    assert by_id["c01"].source == "QuAC"
    assert by_id["c05"].source == "NQ"
    assert by_id["c10"].source == "TREC"
    # turns strictly alternate user/system
    for conv in conversations:
        roles = [t.role for t in conv.turns]
        assert roles == ["user", "system"] * (len(roles) // 2)


def test_empty_array_input(tmp_path):
    path = tmp_path / "empty.json"
    path.write_text("[]")
    assert load_conversations(path) == []


def test_missing_question_field_reports_index(tmp_path):
    records = [
        {"Conversation_no": "c1", "Turn_no": 1, "Question": "q?", "Answer": "a"},
        {"Conversation_no": "c1", "Turn_no": 2, "Answer": "a"},
    ]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(records))
    with pytest.raises(SchemaError, match="record 1"):
        load_conversations(path)


def test_duplicate_turn_rejected(tmp_path):
    records = [
        {"Conversation_no": "c1", "Turn_no": 1, "Question": "q?"},
        {"Conversation_no": "c1", "Turn_no": 1, "Question": "q again?"},
    ]
    path = tmp_path / "dup.json"
    path.write_text(json.dumps(records))
    with pytest.raises(SchemaError, match="duplicate turn"):
        load_conversations(path)


def test_source_override_applies_when_field_absent(tmp_path):
    records = [{"Conversation_no": "c1", "Turn_no": 1, "Question": "q?"}]
    path = tmp_path / "data.json"
    path.write_text(json.dumps(records))
    conversations = load_conversations(path, source_override="TREC")
    assert conversations[0].source == "TREC"


def test_custom_schema_map(tmp_path):
    records = [{"cid": "c1", "t": 1, "q": "q?", "rw": "rewritten?", "ans": "a", "src": "NQ"}]
    path = tmp_path / "data.jsonl"
    path.write_text("\n".join(json.dumps(r) for r in records))
    schema_map = {
        "conversation_id": "cid", "turn": "t", "question": "q",
        "rewrite": "rw", "answer": "ans", "source": "src", "gold_passages": "gold",
    }
    (conv,) = load_conversations(path, schema_map)
    assert conv.source == "NQ"
    assert conv.human_rewrites == {1: "rewritten?"}


def test_preprocess_replaces_first_question(conversations_10_path):
    conversations = load_conversations(conversations_10_path)
    tasks = preprocess_tasks(conversations)
    assert len(tasks) == sum(EXPECTED_TURNS.values())
    by_key = {(t.conversation_id, t.turn_no): t for t in tasks}
    first = by_key[("c01", 1)]
    assert first.context == []
    assert first.question == "Who was Elizabeth Blackwell?"
    assert not first.missing_first_rewrite
    # c03 turn 1 has no human rewrite: question kept, flagged
    flagged = by_key[("c03", 1)]
    assert flagged.question == "What is photosynthesis?"
    assert flagged.missing_first_rewrite


def test_preprocess_replacement_flows_into_context(tmp_path):
    records = [
        {"Conversation_no": "c1", "Turn_no": 1, "Question": "orig?", "Rewrite": "replaced?",
         "Answer": "a1", "Conversation_source": "QuAC"},
        {"Conversation_no": "c1", "Turn_no": 2, "Question": "next?", "Rewrite": "next full?",
         "Answer": "a2", "Conversation_source": "QuAC"},
    ]
    path = tmp_path / "conv.jsonl"
    path.write_text("\n".join(json.dumps(r) for r in records))
    tasks = preprocess_tasks(load_conversations(path))
    assert tasks[0].question == "replaced?"
    assert tasks[1].context == [("replaced?", "a1")]


def test_single_turn_conversation_one_task(tmp_path):
    records = [{"Conversation_no": "c", "Turn_no": 1, "Question": "q?", "Rewrite": "q?"}]
    path = tmp_path / "one.json"
    path.write_text(json.dumps(records))
    tasks = preprocess_tasks(load_conversations(path))
    assert len(tasks) == 1
    assert tasks[0].context == []


def test_three_turn_context_order(conversations_10_path):
    tasks = preprocess_tasks(load_conversations(conversations_10_path))
    task = next(t for t in tasks if t.conversation_id == "c04" and t.turn_no == 3)
    assert len(task.context) == 2
    assert task.context[0][0] == "Who founded the Ford Motor Company?"
    # only the first question is replaced; later context questions stay original
    assert task.context[1][0] == "Where was he born?"
    task4 = next(t for t in tasks if t.conversation_id == "c04" and t.turn_no == 4)
    assert len(task4.context) == 3


def test_filter_evaluable_counts(conversations_10_path):
    tasks = preprocess_tasks(load_conversations(conversations_10_path))
    qrels = qrels_from_tasks(tasks)
    kept = filter_evaluable(tasks, qrels)
    counts = subset_counts(kept)
    # hand-counted from the fixture: gold-labelled turns per subset
    assert counts == {"ALL": 18, "QuAC": 8, "NQ": 5, "TREC": 5}
    assert [t.query_id for t in kept] == [
        t.query_id for t in tasks if t.gold_passage_ids
    ]


def test_filter_evaluable_empty_qrels(conversations_10_path):
    tasks = preprocess_tasks(load_conversations(conversations_10_path))
    assert filter_evaluable(tasks, Qrels()) == []


def test_filter_evaluable_all_judged_identity(conversations_10_path):
    tasks = preprocess_tasks(load_conversations(conversations_10_path))
    judged = {t.query_id: {"px": 1} for t in tasks}
    assert filter_evaluable(tasks, Qrels(judgments=judged)) == tasks


def test_split_dev_partition_and_determinism(conversations_10_path):
    conversations = load_conversations(conversations_10_path)
    train_a, dev_a = split_dev(conversations, 3, seed=42)
    train_b, dev_b = split_dev(conversations, 3, seed=42)
    assert [c.id for c in dev_a] == [c.id for c in dev_b]
    assert len(dev_a) == 3 and len(train_a) == 7
    assert {c.id for c in train_a} | {c.id for c in dev_a} == {c.id for c in conversations}
    assert {c.id for c in train_a} & {c.id for c in dev_a} == set()
    _, dev_c = split_dev(conversations, 3, seed=43)
    # different seed is allowed to differ (and does here)
    assert [c.id for c in dev_c] != [c.id for c in dev_a]


def test_split_dev_zero_and_overflow(conversations_10_path):
    conversations = load_conversations(conversations_10_path)
    train, dev = split_dev(conversations, 0)
    assert dev == [] and train == conversations
    with pytest.raises(ValueError):
        split_dev(conversations, 11)


def test_load_passages_order_and_stream(tmp_path):
    path = tmp_path / "p.jsonl"
    path.write_text(
        '{"id": "a", "text": "first"}\n{"id": "b", "text": "second"}\n{"id": "c", "text": "third"}\n'
    )
    passages = load_passages(path)
    assert next(iter(passages)).id == "a"  # lazily consumable
    assert [p.id for p in load_passages(path)] == ["a", "b", "c"]


def test_load_passages_empty_file(tmp_path):
    path = tmp_path / "p.jsonl"
    path.write_text("")
    assert list(load_passages(path)) == []


def test_load_passages_missing_id_names_line(tmp_path):
    path = tmp_path / "p.jsonl"
    path.write_text('{"text": "no id"}\n')
    with pytest.raises(SchemaError, match="line 1"):
        list(load_passages(path))


def test_load_passages_duplicate_id(tmp_path):
    path = tmp_path / "p.jsonl"
    path.write_text('{"id": "a", "text": "x"}\n{"id": "a", "text": "y"}\n')
    with pytest.raises(SchemaError, match="duplicate"):
        list(load_passages(path))


def test_tasks_file_round_trip(tmp_path, conversations_10_path):
    tasks = preprocess_tasks(load_conversations(conversations_10_path))
    path = tmp_path / "tasks.jsonl"
    write_tasks(tasks, path)
    loaded = read_tasks(path)
    assert loaded == tasks
