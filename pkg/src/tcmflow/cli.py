"""Command-line front end: ingest, consult, differentiate, recommend, eval, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from tcmflow.config import AppConfig, Components, build_components
from tcmflow.consultation.engine import ConsultationEngine, QueueAnswerSource, run_consultation
from tcmflow.harness.ablations import ablate_dual_stage_retrieval, ablate_general_agent
from tcmflow.harness.batch import run_batch
from tcmflow.harness.bootstrap import confidence_interval
from tcmflow.harness.textmetrics import similarity_stats
from tcmflow.knowledge import load_case_corpus
from tcmflow.records import ChiefComplaint, MedicalRecord
from tcmflow.retrieval.pipeline import recommend
from tcmflow.retrieval.sparse import build_sparse_index, save_index_snapshot
from tcmflow.syndrome import SyndromePrediction, differentiate


def _build(args: argparse.Namespace) -> Components:
    cfg = AppConfig.from_file(args.config)
    if args.backend:
        cfg.backend = args.backend
    return build_components(cfg)


def _load_record(path: str) -> MedicalRecord:
    return MedicalRecord.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
        print(f"wrote {out}")
    else:
        print(text)


def cmd_ingest(args: argparse.Namespace) -> int:
    components = _build(args)
    docs = [(e.id, f"{e.syndrome_type} {e.clinical_manifestations}") for e in components.db]
    index = build_sparse_index(docs)
    save_index_snapshot(index, args.out)
    print(json.dumps({
        "entries": len(components.db),
        "tokens": len(index.postings),
        "snapshot": args.out,
    }, sort_keys=True))
    return 0


def cmd_consult(args: argparse.Namespace) -> int:
    components = _build(args)
    complaint = ChiefComplaint(text=args.complaint, submitted_at="cli")
    if args.answers_file:
        answers = [line for line in Path(args.answers_file).read_text(encoding="utf-8").splitlines()
                   if line.strip()]
        source = QueueAnswerSource(answers, fallback="no information available")
    else:
        class TerminalSource:
            def answer(self, question, state):
                print(f"\nQ: {question.text}")
                if question.rationale:
                    print(f"   ({question.rationale})")
                return input("A: ")
        source = TerminalSource()
    engine = components.engine
    result = run_consultation(complaint, engine.registry, engine.config, source,
                              engine.gateway, engine.embedder, engine.tqs)
    if result.aborted or result.record is None:
        print(f"consultation aborted: {result.error}", file=sys.stderr)
        return 1
    prediction = differentiate(result.record, components.classifier)
    rec = recommend(result.record, prediction, components.db, components.gateway,
                    components.embedder, components.retrieval)
    _emit({
        "record": result.record.to_dict(),
        "syndrome": {"label": prediction.label, "confidence": prediction.confidence,
                     "rationale": prediction.rationale},
        "prescriptions": [r.to_dict() for r in rec.ranked],
        "retrieval_rationale": rec.rationale,
    }, args.out)
    return 0


def cmd_differentiate(args: argparse.Namespace) -> int:
    components = _build(args)
    record = _load_record(args.record)
    prediction = differentiate(record, components.classifier)
    _emit({
        "label": prediction.label,
        "confidence": prediction.confidence,
        "rationale": prediction.rationale,
        "classifier_id": prediction.classifier_id,
    }, args.out)
    return 0


def cmd_recommend(args: argparse.Namespace) -> int:
    components = _build(args)
    record = _load_record(args.record)
    if args.syndrome:
        prediction = SyndromePrediction(label=args.syndrome, confidence=1.0,
                                        rationale="label passed on the command line",
                                        classifier_id="cli")
    else:
        prediction = differentiate(record, components.classifier)
    rec = recommend(record, prediction, components.db, components.gateway,
                    components.embedder, components.retrieval)
    _emit(rec.to_dict(), args.out)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    components = _build(args)
    cases = load_case_corpus(args.cases)
    engine = components.engine
    if args.suite == "batch":
        report = run_batch(cases, engine)
        payload = json.loads(report.to_json())
    elif args.suite == "similarity":
        report = run_batch(cases, engine)
        from tcmflow.harness.ablations import transcript_text
        texts = [transcript_text(o.transcript) for o in report.outcomes if not o.aborted]
        refs = [c.narrative for c, o in zip(cases, report.outcomes) if not o.aborted]
        stats = similarity_stats(texts, refs, components.embedder)
        payload = stats.to_dict()
    elif args.suite == "dsrs-ablation":
        report = ablate_dual_stage_retrieval(cases, components.db, components.embedder, components.retrieval)
        payload = json.loads(report.to_json())
    elif args.suite == "general-ablation":
        ablated = ConsultationEngine(engine.registry, engine.config, engine.gateway,
                                     engine.embedder, engine.tqs,
                                     include_general_agent=False)
        report = ablate_general_agent(cases, engine, ablated, components.gateway)
        payload = json.loads(report.to_json())
        indicators = [1.0 if c["selected"] == "full" else 0.0 for c in payload["cases"]]
        if len(indicators) >= 2:
            ci = confidence_interval(indicators, seed=args.seed)
            payload["full_selection_ci"] = ci.to_dict()
    else:
        raise ValueError(f"unknown suite {args.suite!r}")
    payload["suite"] = args.suite
    payload["seed"] = args.seed
    _emit(payload, args.out)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from tcmflow.retrieval.pipeline import RetrievalConfig
    from tcmflow.service.app import create_app
    from tcmflow.service.manager import SessionManager
    from tcmflow.service.store import SessionStore

    components = _build(args)
    store = SessionStore(components.config.session_store)
    manager = SessionManager(components.engine, components.classifier, components.db,
                             store, components.retrieval)
    app = create_app(manager, api_token=components.config.api_token,
                     static_dir=components.config.static_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tcmflow")
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument("--backend", choices=["scripted", "http"], default=None)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--json-errors", action="store_true",
                        help="emit machine-readable error records on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate the db and write an index snapshot")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("consult", help="run a consultation in the terminal")
    p.add_argument("complaint")
    p.add_argument("--answers-file", default=None,
                   help="answer each question from this file instead of stdin")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_consult)

    p = sub.add_parser("differentiate", help="classify a record file")
    p.add_argument("--record", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_differentiate)

    p = sub.add_parser("recommend", help="two-stage retrieval over a record file")
    p.add_argument("--record", required=True)
    p.add_argument("--syndrome", default=None, help="skip the classifier, use this label")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_recommend)

    p = sub.add_parser("eval", help="batch evaluation and ablation suites")
    p.add_argument("--suite", required=True,
                   choices=["batch", "similarity", "dsrs-ablation", "general-ablation"])
    p.add_argument("--cases", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except Exception as exc:  # noqa: BLE001 - single CLI error boundary
        if args.json_errors:
            print(json.dumps({"error": type(exc).__name__, "detail": str(exc)}),
                  file=sys.stderr)
        else:
            print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
