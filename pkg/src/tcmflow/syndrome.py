"""Syndrome differentiation over the final record, plus weighted evaluation metrics."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Protocol, Sequence

from tcmflow import prompts
from tcmflow.gateway.base import ChatBackend, ChatExchange, EmbeddingBackend, chat, cosine, embed
from tcmflow.parsing import extract_json
from tcmflow.records import MedicalRecord


class UnfinalizedRecord(ValueError):
    pass


class ClassifierFailure(RuntimeError):
    pass


class EmptyCorpus(ValueError):
    pass


class KTooLarge(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class SyndromePrediction:
    label: str
    confidence: float
    rationale: str
    classifier_id: str
    out_of_vocabulary: bool = False


class Classifier(Protocol):
    classifier_id: str

    def classify(self, record: MedicalRecord) -> SyndromePrediction: ...


def differentiate(record: MedicalRecord, classifier: Classifier) -> SyndromePrediction:
    """Classify a finalized record into a syndrome type."""
    if not record.finalized:
        raise UnfinalizedRecord("syndrome differentiation requires the finalized record")
    return classifier.classify(record)


class LlmClassifier:
    """Prompts the chat gateway for a label, optionally constrained to a label space."""

    classifier_id = "llm"

    def __init__(self, gateway: ChatBackend, label_space: list[str] | None = None):
        self.gateway = gateway
        self.label_space = list(label_space) if label_space else None

    def classify(self, record: MedicalRecord) -> SyndromePrediction:
        system, user = prompts.syndrome_prompt(record, self.label_space)
        try:
            exchange = chat(ChatExchange(system=system, user=user), self.gateway)
        except Exception as exc:
            raise ClassifierFailure(str(exc)) from exc
        response = exchange.response or ""
        parsed = extract_json(response)
        if isinstance(parsed, dict) and str(parsed.get("label", "")).strip():
            label = str(parsed["label"]).strip()
            confidence = float(parsed.get("confidence", 1.0))
            rationale = str(parsed.get("rationale", response))
        else:
            label = response.strip().splitlines()[0].strip()
            confidence = 1.0
            rationale = response
        if not label:
            raise ClassifierFailure("model returned no label")
        oov = self.label_space is not None and label not in self.label_space
        confidence = min(max(confidence, 0.0), 1.0)
        return SyndromePrediction(label=label, confidence=confidence, rationale=rationale,
                                  classifier_id=self.classifier_id, out_of_vocabulary=oov)


def knn_classify(
    record_text: str,
    labeled_corpus: Sequence[tuple[str, str]],
    k: int,
    embedder: EmbeddingBackend,
) -> SyndromePrediction:
    """Majority vote over the k nearest corpus texts by cosine similarity.

    Ties: equal similarities keep corpus order; tied votes prefer the label with
    the smaller mean distance, then the earlier corpus position.
    """
    if not labeled_corpus:
        raise EmptyCorpus("nearest-neighbor classification needs a corpus")
    if k < 1 or k > len(labeled_corpus):
        raise KTooLarge(f"k={k} outside 1..{len(labeled_corpus)}")
    texts = [text for text, _ in labeled_corpus]
    vectors = embed([record_text] + texts, embedder)
    query, corpus_vecs = vectors[0], vectors[1:]
    sims = [cosine(query, vec) for vec in corpus_vecs]
    order = sorted(range(len(sims)), key=lambda i: (-sims[i], i))
    neighbors = order[:k]
    votes = Counter(labeled_corpus[i][1] for i in neighbors)
    top_count = max(votes.values())
    tied = [label for label, count in votes.items() if count == top_count]
    if len(tied) == 1:
        label = tied[0]
    else:
        def tie_key(lab: str) -> tuple[float, int]:
            member_idx = [i for i in neighbors if labeled_corpus[i][1] == lab]
            mean_distance = sum(1.0 - sims[i] for i in member_idx) / len(member_idx)
            return mean_distance, min(member_idx)
        label = min(tied, key=tie_key)
    rationale_idx = [i for i in neighbors if labeled_corpus[i][1] == label]
    return SyndromePrediction(
        label=label,
        confidence=top_count / k,
        rationale=f"nearest neighbors at corpus positions {rationale_idx}",
        classifier_id="knn",
    )


class KnnClassifier:
    classifier_id = "knn"

    def __init__(self, labeled_corpus: Sequence[tuple[str, str]], k: int,
                 embedder: EmbeddingBackend):
        self.labeled_corpus = list(labeled_corpus)
        self.k = k
        self.embedder = embedder

    def classify(self, record: MedicalRecord) -> SyndromePrediction:
        return knn_classify(record.full_text(), self.labeled_corpus, self.k, self.embedder)


@dataclass(frozen=True)
class WeightedMetrics:
    precision_w: float
    recall_w: float
    f1_w: float
    per_class: dict[str, dict[str, float]]

    def to_dict(self) -> dict:
        return {
            "precision_w": self.precision_w,
            "recall_w": self.recall_w,
            "f1_w": self.f1_w,
            "per_class": {k: dict(v) for k, v in sorted(self.per_class.items())},
        }


def weighted_metrics(predictions: Sequence[str], gold: Sequence[str]) -> WeightedMetrics:
    """Support-weighted precision/recall/F1 with the 0-convention for empty denominators."""
    if len(predictions) != len(gold):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(gold)} gold labels")
    if not gold:
        raise EmptyInput("no samples")
    n = len(gold)
    labels = sorted(set(gold) | set(predictions))
    per_class: dict[str, dict[str, float]] = {}
    precision_w = recall_w = f1_w = 0.0
    for label in labels:
        tp = sum(1 for p, g in zip(predictions, gold) if p == label and g == label)
        pred_count = sum(1 for p in predictions if p == label)
        support = sum(1 for g in gold if g == label)
        precision = tp / pred_count if pred_count else 0.0
        recall = tp / support if support else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[label] = {
            "precision": precision, "recall": recall, "f1": f1, "support": float(support),
        }
        weight = support / n
        precision_w += weight * precision
        recall_w += weight * recall
        f1_w += weight * f1
    return WeightedMetrics(precision_w=precision_w, recall_w=recall_w, f1_w=f1_w,
                           per_class=per_class)
