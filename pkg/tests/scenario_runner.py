"""Run the bundled damp-heat demo scenario end to end, canonically serialized."""

from __future__ import annotations

import json
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def run_damp_heat_once() -> bytes:
    from tcmflow.config import AppConfig, build_components
    from tcmflow.consultation.engine import QueueAnswerSource, run_consultation
    from tcmflow.records import ChiefComplaint
    from tcmflow.retrieval.pipeline import recommend
    from tcmflow.syndrome import differentiate

    scenario = REPO / "scenarios" / "damp_heat"
    cfg = AppConfig.from_file(scenario / "config.json")
    cfg.scripted_spec = str(scenario / "script.json")
    components = build_components(cfg)
    complaint = ChiefComplaint(
        text=(scenario / "complaint.txt").read_text(encoding="utf-8").strip(),
        submitted_at="2024-01-01T00:00:00Z",
    )
    answers = [line for line in
               (scenario / "answers.txt").read_text(encoding="utf-8").splitlines()
               if line.strip()]
    result = run_consultation(complaint, components.engine.registry,
                              components.engine.config, QueueAnswerSource(answers),
                              components.gateway, components.embedder,
                              components.engine.tqs)
    assert not result.aborted, result.error
    prediction = differentiate(result.record, components.classifier)
    recommendation = recommend(result.record, prediction, components.db,
                               components.gateway, components.embedder,
                               components.retrieval)
    canonical = {
        "transcript": result.transcript,
        "record": result.record.to_dict(),
        "syndrome": prediction.label,
        "top3": [r.to_dict() for r in recommendation.ranked],
    }
    return json.dumps(canonical, ensure_ascii=False, sort_keys=True).encode("utf-8")


if __name__ == "__main__":
    import sys

    sys.stdout.buffer.write(run_damp_heat_once())
