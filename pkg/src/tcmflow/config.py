"""Application config: one file wires backends, engine, classifier, and retrieval."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from tcmflow import prompts
from tcmflow.agents import load_registry
from tcmflow.consultation.engine import ConsultationEngine, SessionConfig
from tcmflow.gateway.embedding import HashedBigramEmbedder
from tcmflow.gateway.http import HttpChatBackend, HttpEmbeddingBackend
from tcmflow.gateway.scripted import ScriptedChatBackend, ScriptEntry, load_scripted_spec
from tcmflow.knowledge import (
    PrescriptionEntry,
    load_case_corpus,
    load_prescription_db,
    sample_prescription_db,
    tqs_items,
)
from tcmflow.retrieval.pipeline import RetrievalConfig
from tcmflow.syndrome import Classifier, KnnClassifier, LlmClassifier

ENV_API_TOKEN = "TCMFLOW_API_TOKEN"


@dataclass
class AppConfig:
    backend: str = "scripted"
    scripted_spec: str | None = None
    registry: str | None = None
    tqs: str | None = None
    db: str | None = None
    session_store: str = "./sessions"
    classifier: str = "llm"
    knn_corpus: str | None = None
    knn_k: int = 3
    embedding_dim: int = 256
    max_rounds: int = 10
    max_feedback_turns: int = 3
    questions_per_agent: int = 2
    sufficiency_rule: str = "llm"
    max_specialists: int = 2
    default_specialty: str = "internal medicine"
    rrf_k: float = 60.0
    per_leg_depth: int = 50
    top_n: int = 3
    api_token: str | None = None
    static_dir: str | None = None

    @staticmethod
    def from_file(path: str | Path | None) -> "AppConfig":
        cfg = AppConfig()
        if path is not None:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
            for key, value in data.items():
                if not hasattr(cfg, key):
                    raise ValueError(f"unknown config key {key!r}")
                setattr(cfg, key, value)
        token = os.environ.get(ENV_API_TOKEN)
        if token:
            cfg.api_token = token
        return cfg


def demo_scripted_backend() -> ScriptedChatBackend:
    """Generic per-task responses so the CLI works offline with no spec file."""
    entries = [
        ScriptEntry(prompts.TAG_SELECT, "internal medicine"),
        ScriptEntry(prompts.TAG_RECORD, json.dumps({
            "summary": "Findings collected so far during the consultation.",
            "sections": {},
        })),
        ScriptEntry(prompts.TAG_SPECIALIST_QUESTIONS, json.dumps([
            {"question": "How are your appetite, digestion, stool and urine?",
             "rationale": "Digestion and excretion localize the affected organ systems."},
            {"question": "How do you sleep, and are you unusually thirsty or sweating?",
             "rationale": "Sleep, thirst and sweating separate heat from deficiency patterns."},
        ])),
        ScriptEntry(prompts.TAG_GENERAL_QUESTIONS, json.dumps([
            {"question": "Do you feel cold or feverish, and do chills and fever come together or alternate?",
             "rationale": "Chills and fever distinguish exterior from interior patterns."},
        ])),
        ScriptEntry(prompts.TAG_EVALUATE, "Candidates reviewed against the inquiry checklist."),
        ScriptEntry(prompts.TAG_MODIFY, prompts.NO_CHANGE_MARKER),
        ScriptEntry(prompts.TAG_SUFFICIENCY, "CONTINUE"),
        ScriptEntry(prompts.TAG_SYNDROME, json.dumps({
            "label": "heart-spleen deficiency", "confidence": 0.6,
            "rationale": "Demo classifier output; configure a corpus or HTTP backend for real use.",
        })),
        ScriptEntry(prompts.TAG_TREATMENT_ATTRS, json.dumps({
            "etiology": None, "affected_organ": None,
        })),
        ScriptEntry(prompts.TAG_PATIENT, prompts.NO_INFORMATION_MARKER),
        ScriptEntry(prompts.TAG_JUDGE, "TIE"),
    ]
    return ScriptedChatBackend(entries)


def default_registry():
    with resources.as_file(
        resources.files("tcmflow").joinpath("data/registry_default.jsonl")
    ) as path:
        return load_registry(path)


@dataclass
class Components:
    """Everything the CLI and service need, wired from one AppConfig."""

    config: AppConfig
    gateway: object
    embedder: object
    engine: ConsultationEngine
    classifier: Classifier
    db: list[PrescriptionEntry]
    retrieval: RetrievalConfig


def build_components(cfg: AppConfig) -> Components:
    if cfg.backend == "scripted":
        if cfg.scripted_spec:
            gateway, embedder = load_scripted_spec(cfg.scripted_spec)
        else:
            gateway = demo_scripted_backend()
            embedder = HashedBigramEmbedder(dim=cfg.embedding_dim)
    elif cfg.backend == "http":
        gateway = HttpChatBackend()
        embedder = HttpEmbeddingBackend(dim=cfg.embedding_dim)
    else:
        raise ValueError(f"unknown backend {cfg.backend!r}; use scripted or http")

    registry = load_registry(cfg.registry) if cfg.registry else default_registry()
    tqs = tqs_items(cfg.tqs)
    session_config = SessionConfig(
        max_rounds=cfg.max_rounds,
        max_feedback_turns=cfg.max_feedback_turns,
        questions_per_agent=cfg.questions_per_agent,
        sufficiency_rule=cfg.sufficiency_rule,
        max_specialists=cfg.max_specialists,
        default_specialty=cfg.default_specialty,
    )
    engine = ConsultationEngine(registry, session_config, gateway, embedder, tqs)
    db = load_prescription_db(cfg.db) if cfg.db else sample_prescription_db()

    if cfg.classifier == "llm":
        classifier: Classifier = LlmClassifier(gateway)
    elif cfg.classifier == "knn":
        if not cfg.knn_corpus:
            raise ValueError("knn classifier needs knn_corpus")
        cases = load_case_corpus(cfg.knn_corpus)
        corpus = [(c.narrative, c.gold_syndrome) for c in cases if c.gold_syndrome]
        classifier = KnnClassifier(corpus, k=cfg.knn_k, embedder=embedder)
    else:
        raise ValueError(f"unknown classifier {cfg.classifier!r}; use llm or knn")

    retrieval = RetrievalConfig(rrf_k=cfg.rrf_k, per_leg_depth=cfg.per_leg_depth,
                                top_n=cfg.top_n)
    return Components(config=cfg, gateway=gateway, embedder=embedder, engine=engine,
                      classifier=classifier, db=db, retrieval=retrieval)
