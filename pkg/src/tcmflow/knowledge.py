"""Inquiry-category configuration, the prescription knowledge base, and case records."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from tcmflow import prompts
from tcmflow.gateway.base import ChatBackend, ChatExchange, chat
from tcmflow.parsing import extract_json


class BadTqsFile(ValueError):
    pass


class MalformedRecord(ValueError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class DuplicateId(ValueError):
    def __init__(self, entry_id: str, line_no: int):
        super().__init__(f"line {line_no}: duplicate id {entry_id!r}")
        self.entry_id = entry_id
        self.line_no = line_no


class IoFailure(OSError):
    pass


class ExtractionEmpty(ValueError):
    pass


@dataclass(frozen=True)
class TqsItem:
    name: str
    canonical_text: str


@dataclass(frozen=True)
class TqsConfig:
    """The ten classical inquiry categories used for record sections and scoring."""

    items: tuple[TqsItem, ...]

    def __post_init__(self) -> None:
        if len(self.items) != 10:
            raise BadTqsFile(f"expected exactly 10 inquiry categories, got {len(self.items)}")
        names = [item.name for item in self.items]
        if len(set(names)) != len(names):
            raise BadTqsFile("inquiry category names must be unique")

    def names(self) -> list[str]:
        return [item.name for item in self.items]

    def canonical_texts(self) -> list[str]:
        return [item.canonical_text for item in self.items]


def _data_path(name: str):
    return resources.files("tcmflow").joinpath("data").joinpath(name)


def tqs_items(config: str | Path | None = None) -> TqsConfig:
    """Load the inquiry categories from a config file, or the built-in default."""
    if config is None:
        raw = json.loads(_data_path("tqs_default.json").read_text(encoding="utf-8"))
    else:
        try:
            raw = json.loads(Path(config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise IoFailure(str(exc)) from exc
        except json.JSONDecodeError as exc:
            raise BadTqsFile(f"not valid JSON: {exc}") from exc
    items = raw.get("items") if isinstance(raw, dict) else raw
    if not isinstance(items, list):
        raise BadTqsFile("config must hold a list of items")
    parsed = []
    for item in items:
        if not isinstance(item, dict) or "name" not in item or "canonical_text" not in item:
            raise BadTqsFile(f"item missing name/canonical_text: {item!r}")
        parsed.append(TqsItem(name=item["name"], canonical_text=item["canonical_text"]))
    return TqsConfig(items=tuple(parsed))


PRESCRIPTION_FIELDS = (
    "id",
    "disease_category",
    "syndrome_type",
    "etiology",
    "affected_organ",
    "clinical_manifestations",
    "syndrome_mechanism",
    "treatment_methods",
    "representative_formula",
    "herbs",
)

_REQUIRED_NON_EMPTY = ("id", "syndrome_type", "clinical_manifestations", "representative_formula")


@dataclass(frozen=True)
class PrescriptionEntry:
    id: str
    disease_category: str
    syndrome_type: str
    etiology: str
    affected_organ: str
    clinical_manifestations: str
    syndrome_mechanism: str
    treatment_methods: str
    representative_formula: str
    herbs: tuple[str, ...]

    def to_dict(self) -> dict:
        data = {f: getattr(self, f) for f in PRESCRIPTION_FIELDS}
        data["herbs"] = list(self.herbs)
        return data


def _parse_entry(data: dict, line_no: int) -> PrescriptionEntry:
    missing = [f for f in PRESCRIPTION_FIELDS if f not in data]
    if missing:
        raise MalformedRecord(line_no, f"missing fields: {', '.join(missing)}")
    for f in _REQUIRED_NON_EMPTY:
        if not isinstance(data[f], str) or not data[f].strip():
            raise MalformedRecord(line_no, f"field {f!r} must be a non-empty string")
    herbs = data["herbs"]
    if not isinstance(herbs, list) or not all(isinstance(h, str) for h in herbs):
        raise MalformedRecord(line_no, "field 'herbs' must be a list of strings")
    kwargs = {f: data[f] for f in PRESCRIPTION_FIELDS}
    kwargs["herbs"] = tuple(herbs)
    return PrescriptionEntry(**kwargs)


def load_prescription_db(path: str | Path) -> list[PrescriptionEntry]:
    """Load a line-delimited (JSONL) prescription database, strictly validated."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    entries: list[PrescriptionEntry] = []
    seen: dict[str, int] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(line_no, f"not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise MalformedRecord(line_no, "record must be a JSON object")
        entry = _parse_entry(data, line_no)
        if entry.id in seen:
            raise DuplicateId(entry.id, line_no)
        seen[entry.id] = line_no
        entries.append(entry)
    return entries


def save_prescription_db(entries: list[PrescriptionEntry], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(json.dumps(entry.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")


def sample_prescription_db() -> list[PrescriptionEntry]:
    """The bundled demo-scale prescription database."""
    with resources.as_file(_data_path("sample_prescriptions.jsonl")) as p:
        return load_prescription_db(p)


@dataclass(frozen=True)
class CaseRecord:
    id: str
    narrative: str
    gold_syndrome: str | None = None
    gold_formula: str | None = None
    tqs_extract: dict[str, str] | None = None

    def __post_init__(self) -> None:
        if not self.narrative.strip():
            raise ValueError("case narrative must be non-empty")


def load_case_corpus(path: str | Path) -> list[CaseRecord]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    cases = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(line_no, f"not valid JSON: {exc}") from exc
        if "id" not in data or "narrative" not in data:
            raise MalformedRecord(line_no, "case needs id and narrative")
        cases.append(CaseRecord(
            id=data["id"],
            narrative=data["narrative"],
            gold_syndrome=data.get("gold_syndrome"),
            gold_formula=data.get("gold_formula"),
            tqs_extract=data.get("tqs_extract"),
        ))
    return cases


def load_blocklist(path: str | Path | None = None) -> list[str]:
    """Instrument/administrative terms stripped from preprocessed findings."""
    if path is None:
        raw = json.loads(_data_path("blocklist_default.json").read_text(encoding="utf-8"))
    else:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    terms = raw.get("terms") if isinstance(raw, dict) else raw
    if not isinstance(terms, list):
        raise ValueError("blocklist must hold a list of terms")
    return [str(t) for t in terms]


_DEGENERATE_NARRATIVES = {"", "n/a", "na", "none", "-"}

_CLAUSE_SPLIT = re.compile(r"[。；;.!?！？\n]")


def _term_pattern(term: str) -> re.Pattern:
    # word boundaries for ASCII terms so "CT" never hits "doctor"; CJK has no \b
    if all(ord(ch) < 128 for ch in term):
        return re.compile(r"\b" + re.escape(term) + r"\b", re.IGNORECASE)
    return re.compile(re.escape(term))


def _filter_blocked(value: str, blocklist: list[str]) -> str:
    patterns = [_term_pattern(t) for t in blocklist]
    kept = []
    for clause in _CLAUSE_SPLIT.split(value):
        clause = clause.strip(" ，,")
        if not clause:
            continue
        if any(p.search(clause) for p in patterns):
            continue
        kept.append(clause)
    return "; ".join(kept)


def preprocess_case_record(
    raw: CaseRecord,
    gateway: ChatBackend,
    tqs: TqsConfig,
    blocklist: list[str] | None = None,
) -> CaseRecord:
    """Extract inquiry-category findings from a raw narrative via the chat gateway.

    Values are post-filtered against the instrument/administrative blocklist, so
    scanner mentions never leak into the structured extract even if the model
    ignores the prompt contract.
    """
    if raw.narrative.strip().lower() in _DEGENERATE_NARRATIVES:
        raise ExtractionEmpty(f"narrative of case {raw.id!r} carries no extractable content")
    if blocklist is None:
        blocklist = load_blocklist()
    system, user = prompts.tqs_extract_prompt(raw.narrative, tqs.names())
    exchange = chat(ChatExchange(system=system, user=user), gateway)
    parsed = extract_json(exchange.response or "")
    if not isinstance(parsed, dict):
        raise ExtractionEmpty("model returned no category-mapped content")
    allowed = set(tqs.names())
    extract: dict[str, str] = {}
    for key, value in parsed.items():
        if key not in allowed or not isinstance(value, str):
            continue
        filtered = _filter_blocked(value, blocklist)
        if filtered:
            extract[key] = filtered
    if not extract:
        raise ExtractionEmpty("no usable findings after filtering")
    return replace(raw, tqs_extract=extract)
