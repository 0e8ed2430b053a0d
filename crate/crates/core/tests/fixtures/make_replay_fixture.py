"""Regenerates replay_corpus.tsv and replay.rec.jsonl.

Three sentences, ten trials each. Forward answers repeat per sentence so the
back-translation keys exercise occurrence indexing.
"""
import json
from pathlib import Path

HERE = Path(__file__).parent
TS = "2024-02-01T10:00:00Z"
PREFIX = "As a software engineer,"

SENTENCES = [
    (1, "she asks coworkers.", "ask", "Ohjelmistoinsinöörinä hän kysyy työtovereilta.", [
        "he asks colleagues.", "he/she asks colleagues.", "he asks colleagues.",
        "he or she asks colleagues.", "he asks colleagues.", "they ask colleagues.",
        "he asks colleagues.", "he/she asks colleagues.", "he asks colleagues.",
        "he asks colleagues.",
    ]),
    (2, "she fixes bugs.", "fix", "Ohjelmistoinsinöörinä hän korjaa virheitä.", [
        "he fixes bugs."] * 10),
    (3, "she writes code.", "write", "Ohjelmistoinsinöörinä hän kirjoittaa koodia.", [
        "she writes code.", "he writes code.", "you write code.", "she writes code.",
        "he writes code.", "she writes code.", "he writes code.", "you write code.",
        "he writes code.", "she writes code.",
    ]),
]

corpus = ["#@ name: replay-fixture", "id\tprefix\tbody\tverb"]
corpus += [f"{i}\t\t{body}\t{verb}" for i, body, verb, _, _ in SENTENCES]
(HERE / "replay_corpus.tsv").write_text("\n".join(corpus) + "\n", encoding="utf-8")

lines = [{"type": "header", "created_at": TS, "backend": "fixture"}]
for _, body, _, forward, backs in SENTENCES:
    for occ, back in enumerate(backs):
        lines.append({"type": "entry", "text": f"{PREFIX} {body}", "source": "EN", "target": "FI",
                      "occurrence": occ, "response": forward, "timestamp": TS})
        lines.append({"type": "entry", "text": forward, "source": "FI", "target": "EN-GB",
                      "occurrence": occ, "response": f"{PREFIX} {back}", "timestamp": TS})
with open(HERE / "replay.rec.jsonl", "w", encoding="utf-8") as f:
    for line in lines:
        f.write(json.dumps(line, ensure_ascii=False) + "\n")
