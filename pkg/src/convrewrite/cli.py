"""Command-line entry point wiring the pipeline end to end.

Commands: prepare, rewrite, index-sparse, embed, search, evaluate, compare,
analyze, ablate, export-distill, report. Every command writes its declared
artifacts plus a .manifest.json capturing inputs, config hash, and versions.

Exit codes: 0 success, 1 usage error, 2 input error, 3 runtime failure.
"""

from __future__ import annotations

import json
import sys
from dataclasses import asdict
from pathlib import Path

import click

from . import analysis as analysis_mod
from . import corpus as corpus_mod
from . import dense as dense_mod
from . import distill as distill_mod
from . import evaluation as eval_mod
from . import prompting as prompting_mod
from . import rewriter as rewriter_mod
from . import sparse as sparse_mod
from .config import (
    PipelineConfig,
    load_config,
    make_analyzer,
    make_client,
    make_embedding_provider,
    write_manifest,
)
from .llm import LlmError


class InputError(Exception):
    """A named input file or value is missing or malformed."""


def _load_pipeline_config(config_path, set_options) -> PipelineConfig:
    overrides = {}
    for item in set_options or ():
        if "=" not in item:
            raise click.UsageError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            overrides[key] = json.loads(raw)
        except json.JSONDecodeError:
            overrides[key] = raw
    try:
        return load_config(config_path, overrides)
    except FileNotFoundError as exc:
        raise InputError(str(exc))


def _require_file(path: str | Path, kind: str) -> Path:
    path = Path(path)
    if not path.exists():
        raise InputError(f"{kind} not found: {path}")
    return path


config_option = click.option(
    "-c", "--config", "config_path", type=click.Path(), default=None,
    help="YAML pipeline config.",
)
set_option = click.option(
    "--set", "set_options", multiple=True, metavar="KEY=VALUE",
    help="Override a config key (dotted path), e.g. --set llm.backend=mock.",
)


@click.group()
def cli():
    """Conversational query rewriting and retrieval evaluation pipeline."""


@cli.command()
@click.option("--dataset", required=True, type=click.Path(), help="Conversation JSON/JSONL file.")
@click.option("--out-dir", required=True, type=click.Path(), help="Directory for tasks and qrels.")
@click.option("--schema-map", "schema_map_json", default=None, help="JSON field-name overrides.")
@click.option("--source-override", default=None, help="Subset tag when the source field is absent.")
@config_option
@set_option
def prepare(dataset, out_dir, schema_map_json, source_override, config_path, set_options):
    """Ingest conversations, preprocess tasks, filter to evaluable, emit qrels."""
    config = _load_pipeline_config(config_path, set_options)
    dataset = _require_file(dataset, "dataset file")
    schema_map = json.loads(schema_map_json) if schema_map_json else None
    conversations = corpus_mod.load_conversations(dataset, schema_map, source_override)
    tasks = corpus_mod.preprocess_tasks(conversations)
    qrels = eval_mod.qrels_from_tasks(tasks)
    evaluable = corpus_mod.filter_evaluable(tasks, qrels)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks_all_path = out_dir / "tasks_all.jsonl"
    tasks_path = out_dir / "tasks.jsonl"
    qrels_path = out_dir / "qrels.txt"
    corpus_mod.write_tasks(tasks, tasks_all_path)
    corpus_mod.write_tasks(evaluable, tasks_path)
    eval_mod.write_qrels(qrels, qrels_path)
    counts = corpus_mod.subset_counts(evaluable)
    write_manifest(
        tasks_path, "prepare", config,
        inputs={"dataset": dataset},
        outputs=[tasks_all_path, tasks_path, qrels_path],
        extra={"conversations": len(conversations), "tasks": len(tasks),
               "evaluable_counts": counts},
    )
    click.echo(f"prepared {len(evaluable)} evaluable tasks ({counts})")


@cli.command()
@click.option("--method", required=True,
              type=click.Choice(["original", "human", "rw-zsl", "rw-fsl", "ed-self", "ed-file"]))
@click.option("--tasks", "tasks_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--initials", "initials_path", default=None, type=click.Path(),
              help="Rewrite file supplying initial rewrites (ed-file; optional for ed-self).")
@click.option("--drop-property", "drop_properties", multiple=True,
              type=click.Choice(list(prompting_mod.PROPERTIES)),
              help="Ablate instruction properties before rewriting.")
@config_option
@set_option
def rewrite(method, tasks_path, out_path, initials_path, drop_properties, config_path, set_options):
    """Generate rewrites for every task with one method."""
    config = _load_pipeline_config(config_path, set_options)
    tasks = corpus_mod.read_tasks(_require_file(tasks_path, "tasks file"))
    method_key = method.replace("-", "_")

    initials = None
    if initials_path:
        initials = rewriter_mod.initials_map(
            rewriter_mod.read_records(_require_file(initials_path, "initials rewrite file"))
        )
    elif method_key == "ed_file":
        raise InputError("ed-file requires --initials")

    client = None
    instruction = None
    if method_key in rewriter_mod.LLM_METHODS:
        client = make_client(config)
        if drop_properties and method_key in ("rw_zsl", "rw_fsl"):
            instruction = prompting_mod.default_rewriter_instruction()
            for prop in drop_properties:
                instruction = prompting_mod.ablate_instruction(instruction, prop)
    records = rewriter_mod.generate_rewrites(
        method_key, tasks, client=client, initials=initials, instruction=instruction,
        context_char_budget=config.context_char_budget,
    )
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    rewriter_mod.write_records(records, out_path)
    failures = rewriter_mod.failed_count(records)
    write_manifest(
        out_path, "rewrite", config,
        inputs={"tasks": tasks_path, "initials": initials_path or ""},
        outputs=[out_path],
        extra={"method": method_key, "records": len(records), "failed": failures,
               "dropped_properties": list(drop_properties)},
    )
    click.echo(f"wrote {len(records)} rewrites ({failures} failed) to {out_path}")


@cli.command("index-sparse")
@click.option("--passages", "passages_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--k1", type=float, default=None, help="BM25 k1 (default from config: 0.82).")
@click.option("--b", type=float, default=None, help="BM25 b (default from config: 0.68).")
@click.option("--stemmer", type=click.Choice(["porter", "none"]), default=None)
@click.option("--stopwords", "stopwords_file", type=click.Path(), default=None,
              help="Stopword list, one token per line.")
@config_option
@set_option
def index_sparse(passages_path, out_path, k1, b, stemmer, stopwords_file,
                 config_path, set_options):
    """Build the BM25 inverted index from a passage JSONL file."""
    config = _load_pipeline_config(config_path, set_options)
    if k1 is not None:
        config.retrieval.k1 = k1
    if b is not None:
        config.retrieval.b = b
    if stemmer is not None:
        config.retrieval.stemmer = stemmer
    if stopwords_file is not None:
        config.retrieval.stopwords_file = str(_require_file(stopwords_file, "stopword file"))
    passages = corpus_mod.load_passages(_require_file(passages_path, "passage file"))
    index = sparse_mod.build_index(
        passages, make_analyzer(config), k1=config.retrieval.k1, b=config.retrieval.b
    )
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    sparse_mod.save_index(index, out_path)
    write_manifest(
        out_path, "index-sparse", config,
        inputs={"passages": passages_path}, outputs=[out_path],
        extra={"documents": index.doc_count, "terms": len(index.postings)},
    )
    click.echo(f"indexed {index.doc_count} passages into {out_path}")


@cli.command()
@click.option("--passages", "passages_path", required=True, type=click.Path())
@click.option("--out-dir", required=True, type=click.Path())
@config_option
@set_option
def embed(passages_path, out_dir, config_path, set_options):
    """Embed passages and write sharded vector files."""
    config = _load_pipeline_config(config_path, set_options)
    provider = make_embedding_provider(config)
    ids, texts = [], []
    for passage in corpus_mod.load_passages(_require_file(passages_path, "passage file")):
        ids.append(passage.id)
        texts.append(passage.text)
    matrix = dense_mod.embed(texts, provider)
    shards = dense_mod.build_shards(ids, matrix, config.retrieval.shard_count)
    out_dir = Path(out_dir)
    for shard in shards:
        dense_mod.save_shard(shard, out_dir)
    write_manifest(
        out_dir / "shards", "embed", config,
        inputs={"passages": passages_path},
        outputs=[out_dir / f"shard_{s.shard_no:03d}.vec" for s in shards],
        extra={"passages_embedded": len(ids), "shards": len(shards),
               "dimension": provider.dimension, "provider": provider.name},
    )
    click.echo(f"embedded {len(ids)} passages into {len(shards)} shards under {out_dir}")


@cli.command()
@click.option("--retriever", required=True, type=click.Choice(["sparse", "dense"]))
@click.option("--rewrites", "rewrites_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--index", "index_path", default=None, type=click.Path(), help="Sparse index file.")
@click.option("--shards", "shards_dir", default=None, type=click.Path(), help="Dense shard directory.")
@click.option("--tag", default=None, help="Run tag (default: method-retriever).")
@config_option
@set_option
def search(retriever, rewrites_path, out_path, index_path, shards_dir, tag, config_path, set_options):
    """Retrieve top-k passages for each rewrite and write a TREC run file."""
    config = _load_pipeline_config(config_path, set_options)
    records = rewriter_mod.read_records(_require_file(rewrites_path, "rewrite file"))
    k = config.retrieval.k
    results: dict[str, list] = {}
    if retriever == "sparse":
        if not index_path:
            raise InputError("sparse retrieval requires --index")
        index = sparse_mod.load_index(_require_file(index_path, "sparse index"))
        for record in records:
            results[record.query_id] = sparse_mod.search(index, record.rewrite, k)
    else:
        if not shards_dir:
            raise InputError("dense retrieval requires --shards")
        shards = dense_mod.load_shards(_require_file(shards_dir, "shard directory"))
        provider = make_embedding_provider(config)
        vectors = dense_mod.embed([r.rewrite for r in records], provider)
        for record, vector in zip(records, vectors):
            results[record.query_id] = dense_mod.search_dense(vector, shards, k)
    method = records[0].method if records else "unknown"
    run = eval_mod.run_from_results(results, tag or f"{method}-{retriever}")
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    eval_mod.write_run(run, out_path)
    write_manifest(
        out_path, "search", config,
        inputs={"rewrites": rewrites_path, "index": index_path or "", "shards": shards_dir or ""},
        outputs=[out_path],
        extra={"retriever": retriever, "queries": len(results), "k": k},
    )
    click.echo(f"wrote run for {len(results)} queries to {out_path}")


@cli.command()
@click.option("--run", "run_path", required=True, type=click.Path())
@click.option("--qrels", "qrels_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--tasks", "tasks_path", default=None, type=click.Path(),
              help="Tasks file supplying the query -> subset map.")
@config_option
@set_option
def evaluate(run_path, qrels_path, out_path, tasks_path, config_path, set_options):
    """Score a run against qrels with the full metric suite."""
    config = _load_pipeline_config(config_path, set_options)
    run = eval_mod.parse_run(_require_file(run_path, "run file"))
    qrels = eval_mod.read_qrels(_require_file(qrels_path, "qrels file"))
    subsets = None
    if tasks_path:
        tasks = corpus_mod.read_tasks(_require_file(tasks_path, "tasks file"))
        subsets = {t.query_id: t.source for t in tasks}
    report = eval_mod.evaluate_run(run, qrels, subsets=subsets)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    eval_mod.write_report(report, out_path)
    write_manifest(
        out_path, "evaluate", config,
        inputs={"run": run_path, "qrels": qrels_path, "tasks": tasks_path or ""},
        outputs=[out_path],
        extra={"evaluated": report.query_counts.get("ALL", 0), "excluded": len(report.excluded)},
    )
    summary = {m: round(v, 4) for m, v in report.aggregate.get("ALL", {}).items()}
    click.echo(f"evaluated {report.query_counts.get('ALL', 0)} queries: {summary}")


@cli.command()
@click.option("--run-a", "run_a_path", required=True, type=click.Path())
@click.option("--run-b", "run_b_path", required=True, type=click.Path())
@click.option("--qrels", "qrels_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@config_option
@set_option
def compare(run_a_path, run_b_path, qrels_path, out_path, config_path, set_options):
    """Pairwise win/tie/loss on per-query reciprocal rank."""
    config = _load_pipeline_config(config_path, set_options)
    run_a = eval_mod.parse_run(_require_file(run_a_path, "run file"))
    run_b = eval_mod.parse_run(_require_file(run_b_path, "run file"))
    qrels = eval_mod.read_qrels(_require_file(qrels_path, "qrels file"))
    result = eval_mod.pairwise_win_tie(run_a, run_b, qrels)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    payload = dict(asdict(result), win=result.win, tie=result.tie, loss=result.loss)
    out_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    write_manifest(
        out_path, "compare", config,
        inputs={"run_a": run_a_path, "run_b": run_b_path, "qrels": qrels_path},
        outputs=[out_path],
        extra={"tags": [run_a.tag, run_b.tag]},
    )
    click.echo(f"win {result.win:.3f} tie {result.tie:.3f} loss {result.loss:.3f} over {result.queries} queries")


@cli.command()
@click.option("--rewrites", "rewrites_paths", required=True, multiple=True, type=click.Path(),
              help="One or more rewrite files (repeatable).")
@click.option("--tasks", "tasks_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--rouge/--no-rouge", "with_rouge", default=False,
              help="Also compute ROUGE-1 against human rewrites.")
@config_option
@set_option
def analyze(rewrites_paths, tasks_path, out_path, with_rouge, config_path, set_options):
    """Token-count, overlap, ROUGE-1, and latency analytics per method."""
    config = _load_pipeline_config(config_path, set_options)
    tasks = corpus_mod.read_tasks(_require_file(tasks_path, "tasks file"))
    humans = {
        (t.conversation_id, t.turn_no): t.human_rewrite for t in tasks if t.human_rewrite
    }
    subsets = {(t.conversation_id, t.turn_no): t.source for t in tasks}
    records = []
    for path in rewrites_paths:
        records.extend(rewriter_mod.read_records(_require_file(path, "rewrite file")))
    stats = analysis_mod.rewrite_stats(records, humans, subsets, with_rouge=with_rouge)
    latency = analysis_mod.latency_stats(records)
    payload = {
        "rewrite_stats": [asdict(s) for s in stats],
        "latency": {method: asdict(summary) for method, summary in latency.items()},
    }
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    table_path = out_path.with_suffix(".txt")
    table_path.write_text(analysis_mod.stats_table(stats), encoding="utf-8")
    write_manifest(
        out_path, "analyze", config,
        inputs={"tasks": tasks_path, **{f"rewrites_{i}": p for i, p in enumerate(rewrites_paths)}},
        outputs=[out_path, table_path],
        extra={"records": len(records)},
    )
    click.echo(f"analyzed {len(records)} records into {out_path}")


@cli.command()
@click.option("--drop", required=True, type=click.Choice(list(prompting_mod.PROPERTIES)))
@click.option("--out", "out_path", required=True, type=click.Path())
@config_option
@set_option
def ablate(drop, out_path, config_path, set_options):
    """Emit the rewriter instruction with one property removed."""
    config = _load_pipeline_config(config_path, set_options)
    instruction = prompting_mod.ablate_instruction(
        prompting_mod.default_rewriter_instruction(), drop
    )
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(instruction.text + "\n", encoding="utf-8")
    write_manifest(
        out_path, "ablate", config,
        inputs={}, outputs=[out_path],
        extra={"dropped": drop, "instruction": instruction.text,
               "properties_present": sorted(instruction.properties_present)},
    )
    click.echo(f"wrote ablated instruction (-{drop}) to {out_path}")


@cli.command("export-distill")
@click.option("--tasks", "tasks_path", required=True, type=click.Path())
@click.option("--labels", "labels_path", required=True, type=click.Path(),
              help="Rewrite file supplying the training labels.")
@click.option("--label-source", default="rw_fsl", type=click.Choice(list(distill_mod.LABEL_SOURCES)))
@click.option("--n-train", required=True, type=int)
@click.option("--n-dev", required=True, type=int)
@click.option("--seed", default=42, type=int)
@click.option("--dev-tasks", "dev_tasks_path", default=None, type=click.Path(),
              help="Separate task pool for the dev split (avoids conversation leakage).")
@click.option("--out-dir", required=True, type=click.Path())
@config_option
@set_option
def export_distill(tasks_path, labels_path, label_source, n_train, n_dev, seed,
                   dev_tasks_path, out_dir, config_path, set_options):
    """Export student-model train/dev JSONL files with pseudo-label targets."""
    config = _load_pipeline_config(config_path, set_options)
    tasks = corpus_mod.read_tasks(_require_file(tasks_path, "tasks file"))
    dev_tasks = None
    if dev_tasks_path:
        dev_tasks = corpus_mod.read_tasks(_require_file(dev_tasks_path, "dev tasks file"))
    if label_source == "human":
        labels = {
            (t.conversation_id, t.turn_no): t.human_rewrite
            for t in tasks + (dev_tasks or [])
            if t.human_rewrite
        }
    else:
        records = rewriter_mod.read_records(_require_file(labels_path, "labels rewrite file"))
        labels = rewriter_mod.initials_map([r for r in records if r.method == label_source])
        if not labels:
            raise InputError(f"labels file has no {label_source!r} records")
    train, dev = distill_mod.export_training_set(
        tasks, labels, n_train, n_dev, seed=seed, label_source=label_source, dev_tasks=dev_tasks
    )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_path = out_dir / "train.jsonl"
    dev_path = out_dir / "dev.jsonl"
    distill_mod.write_examples(train, train_path)
    distill_mod.write_examples(dev, dev_path)
    write_manifest(
        train_path, "export-distill", config,
        inputs={"tasks": tasks_path, "labels": labels_path, "dev_tasks": dev_tasks_path or ""},
        outputs=[train_path, dev_path],
        extra={"label_source": label_source, "n_train": n_train, "n_dev": n_dev, "seed": seed},
    )
    click.echo(f"exported {len(train)} train / {len(dev)} dev examples to {out_dir}")


@cli.command()
@click.option("--evals", "evals_dir", required=True, type=click.Path(),
              help="Directory of per-method evaluation report JSONs.")
@click.option("--analysis", "analysis_path", default=None, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@config_option
@set_option
def report(evals_dir, analysis_path, out_path, config_path, set_options):
    """Render retrieval and rewrite-quality summary tables."""
    config = _load_pipeline_config(config_path, set_options)
    evals_dir = _require_file(evals_dir, "evaluation directory")
    reports = {}
    for path in sorted(Path(evals_dir).glob("*.json")):
        if path.name.endswith(".manifest.json"):
            continue
        reports[path.stem] = eval_mod.read_report(path)
    if not reports:
        raise InputError(f"no evaluation reports under {evals_dir}")
    text = _render_retrieval_table(reports)
    text += "\n" + _render_recall_table(reports)
    combined = {
        name: {"aggregate": r.aggregate, "query_counts": r.query_counts}
        for name, r in reports.items()
    }
    if analysis_path:
        payload = json.loads(_require_file(analysis_path, "analysis file").read_text(encoding="utf-8"))
        combined["analysis"] = payload
        stats = [analysis_mod.RewriteStats(**s) for s in payload.get("rewrite_stats", [])]
        if stats:
            text += "\n" + analysis_mod.stats_table(stats)
        latency = payload.get("latency", {})
        if any(entry.get("timed_count") for entry in latency.values()):
            text += "\n" + _render_latency_table(latency)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(text, encoding="utf-8")
    json_path = out_path.with_suffix(".json")
    json_path.write_text(json.dumps(combined, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    write_manifest(
        out_path, "report", config,
        inputs={"evals": evals_dir, "analysis": analysis_path or ""},
        outputs=[out_path, json_path],
    )
    click.echo(f"wrote report to {out_path}")


def _render_retrieval_table(reports) -> str:
    subsets = ["ALL", "QuAC", "NQ", "TREC"]
    metrics = ["MRR", "MAP", "R@10"]
    lines = []
    header = "Method".ljust(12)
    for subset in subsets:
        for metric in metrics:
            header += f"{subset} {metric}".rjust(12)
    lines.append(header)
    for name, rep in reports.items():
        row = name.ljust(12)
        for subset in subsets:
            agg = rep.aggregate.get(subset)
            for metric in metrics:
                value = f"{100 * agg[metric]:.2f}" if agg and metric in agg else "-"
                row += value.rjust(12)
        lines.append(row)
    return "\n".join(lines) + "\n"


def _render_latency_table(latency: dict) -> str:
    lines = ["Rewriting latency".ljust(12) + "mean (ms/q)".rjust(14)
             + "median".rjust(10) + "p95".rjust(10) + "timed".rjust(8)]
    for method, entry in sorted(latency.items()):
        if not entry.get("timed_count"):
            continue
        lines.append(
            method.ljust(12)
            + f"{entry['mean_ms']:.0f}".rjust(14)
            + f"{entry['median_ms']:.0f}".rjust(10)
            + f"{entry['p95_ms']:.0f}".rjust(10)
            + str(entry["timed_count"]).rjust(8)
        )
    return "\n".join(lines) + "\n"


def _render_recall_table(reports) -> str:
    cutoffs = [5, 10, 20, 30, 100]
    lines = ["Recall vs cutoff (ALL)".ljust(12) + "".join(f"R@{k}".rjust(10) for k in cutoffs)]
    for name, rep in reports.items():
        agg = rep.aggregate.get("ALL", {})
        row = name.ljust(12)
        for k in cutoffs:
            value = agg.get(f"R@{k}")
            row += (f"{100 * value:.2f}" if value is not None else "-").rjust(10)
        lines.append(row)
    return "\n".join(lines) + "\n"


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.Abort:
        return 1
    except (InputError, FileNotFoundError, corpus_mod.SchemaError) as exc:
        click.echo(f"input error: {exc}", err=True)
        return 2
    except ValueError as exc:
        click.echo(f"input error: {exc}", err=True)
        return 2
    except LlmError as exc:
        click.echo(f"runtime failure: {exc}", err=True)
        return 3
    except Exception as exc:  # pragma: no cover - defensive
        click.echo(f"runtime failure: {exc}", err=True)
        return 3


if __name__ == "__main__":
    sys.exit(main())
