"""Pipeline configuration: one YAML file, flag overrides, provenance hashing.

Defaults are the experimental constants baked into the toolkit: greedy
decoding (temperature 0, 2560 max tokens), BM25 k1=0.82 / b=0.68, k=100
retrieved passages, 768-dim embeddings in 8 shards, seed 42.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path

import yaml

from .dense import DeterministicProvider, HttpEmbeddingProvider, PrecomputedProvider
from .llm import HttpTransport, LlmClient, MockTransport, ResponseCache, load_transcript
from .sparse import Analyzer


@dataclass
class LlmSettings:
    backend: str = "http"  # "http" or "mock"
    model: str = "gpt-3.5-turbo"
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    api_key_env: str = "OPENAI_API_KEY"
    temperature: float = 0.0
    max_tokens: int = 2560
    concurrency: int = 4
    rate_per_s: float | None = None
    retries: int = 5
    backoff_base_s: float = 1.0
    timeout_s: float = 60.0
    transcript: str | None = None  # mock backend transcript path
    cache_path: str | None = None


@dataclass
class RetrievalSettings:
    k: int = 100
    k1: float = 0.82
    b: float = 0.68
    shard_count: int = 8
    dimension: int = 768
    provider: str = "deterministic"  # "deterministic", "precomputed", or "http"
    embedding_endpoint: str | None = None
    embedding_api_key_env: str | None = None
    vectors_file: str | None = None
    provider_seed: int = 0
    lowercase: bool = True
    stemmer: str = "porter"
    stopwords_file: str | None = None


@dataclass
class PipelineConfig:
    llm: LlmSettings = field(default_factory=LlmSettings)
    retrieval: RetrievalSettings = field(default_factory=RetrievalSettings)
    split_seed: int = 42
    sample_seed: int = 42
    context_char_budget: int = 12_000

    def to_dict(self) -> dict:
        return asdict(self)


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> PipelineConfig:
    """Read the YAML config (if any) and apply dotted-key overrides."""
    data: dict = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        loaded = yaml.safe_load(path.read_text(encoding="utf-8"))
        if loaded is not None:
            if not isinstance(loaded, dict):
                raise ValueError(f"config file must hold a mapping: {path}")
            data = loaded
    if overrides:
        for dotted, value in overrides.items():
            node = data
            *parents, leaf = dotted.split(".")
            for part in parents:
                node = node.setdefault(part, {})
            node[leaf] = value
    config = PipelineConfig()
    for section_name, section in (("llm", config.llm), ("retrieval", config.retrieval)):
        for key, value in (data.get(section_name) or {}).items():
            if not hasattr(section, key):
                raise ValueError(f"unknown config key: {section_name}.{key}")
            setattr(section, key, value)
    for key in ("split_seed", "sample_seed", "context_char_budget"):
        if key in data:
            setattr(config, key, data[key])
    return config


def config_hash(config: PipelineConfig) -> str:
    canonical = json.dumps(config.to_dict(), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def make_client(config: PipelineConfig) -> LlmClient:
    llm = config.llm
    if llm.backend == "mock":
        if not llm.transcript:
            raise ValueError("mock backend requires llm.transcript")
        transport = MockTransport(load_transcript(llm.transcript))
    elif llm.backend == "http":
        api_key = os.environ.get(llm.api_key_env)
        transport = HttpTransport(llm.endpoint, api_key=api_key, timeout_s=llm.timeout_s)
    else:
        raise ValueError(f"unknown llm backend: {llm.backend!r}")
    cache = ResponseCache(llm.cache_path)
    return LlmClient(
        transport,
        model=llm.model,
        temperature=llm.temperature,
        max_tokens=llm.max_tokens,
        cache=cache,
        concurrency=llm.concurrency,
        rate_per_s=llm.rate_per_s,
        retries=llm.retries,
        backoff_base_s=llm.backoff_base_s,
    )


def make_embedding_provider(config: PipelineConfig):
    retrieval = config.retrieval
    if retrieval.provider == "deterministic":
        return DeterministicProvider(dimension=retrieval.dimension, seed=retrieval.provider_seed)
    if retrieval.provider == "precomputed":
        if not retrieval.vectors_file:
            raise ValueError("precomputed provider requires retrieval.vectors_file")
        return PrecomputedProvider(retrieval.vectors_file, dimension=retrieval.dimension)
    if retrieval.provider == "http":
        if not retrieval.embedding_endpoint:
            raise ValueError("http provider requires retrieval.embedding_endpoint")
        api_key = (
            os.environ.get(retrieval.embedding_api_key_env)
            if retrieval.embedding_api_key_env
            else None
        )
        return HttpEmbeddingProvider(
            retrieval.embedding_endpoint, dimension=retrieval.dimension, api_key=api_key
        )
    raise ValueError(f"unknown embedding provider: {retrieval.provider!r}")


def make_analyzer(config: PipelineConfig) -> Analyzer:
    retrieval = config.retrieval
    stopwords = None
    if retrieval.stopwords_file:
        stopwords = frozenset(
            line.strip()
            for line in Path(retrieval.stopwords_file).read_text(encoding="utf-8").splitlines()
            if line.strip()
        )
    return Analyzer(lowercase=retrieval.lowercase, stemmer=retrieval.stemmer, stopwords=stopwords)


def package_version() -> str:
    try:
        return metadata.version("convrewrite")
    except metadata.PackageNotFoundError:
        return "unknown"


def write_manifest(
    primary_output: str | Path,
    command: str,
    config: PipelineConfig,
    inputs: dict,
    outputs: list,
    extra: dict | None = None,
) -> Path:
    """Record provenance next to a command's primary artifact.

    Timestamps live only here, keeping the artifacts themselves byte-stable.
    """
    manifest = {
        "command": command,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "package_version": package_version(),
        "config_hash": config_hash(config),
        "config": config.to_dict(),
        "inputs": {k: str(v) for k, v in inputs.items()},
        "outputs": [str(o) for o in outputs],
    }
    if extra:
        manifest.update(extra)
    path = Path(str(primary_output) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
