"""Regenerates the demo corpus, queries and qrels.

Run from the repository root: python3 demo/generate.py
Output is deterministic for a given --seed.
"""

import argparse
import json
import random
from pathlib import Path

TOPICS = [
    ("brca1 breast cancer", ["brca1", "breast", "tumor", "mutation", "carrier"],
     [("BRCA1", "Gene"), ("D001943", "Disease")]),
    ("tp53 apoptosis", ["apoptosis", "p53", "pathway", "suppressor", "damage"],
     [("TP53", "Gene"), ("D009369", "Disease")]),
    ("insulin resistance obesity", ["insulin", "glucose", "obesity", "adipose", "signaling"],
     [("INS", "Gene"), ("D009765", "Disease"), ("D003924", "Disease")]),
    ("egfr inhibitor lung", ["egfr", "inhibitor", "kinase", "lung", "resistance"],
     [("EGFR", "Gene"), ("C419708", "Chemical"), ("D008175", "Disease")]),
    ("apoe alzheimer", ["amyloid", "plaque", "cognitive", "apolipoprotein", "dementia"],
     [("APOE", "Gene"), ("D000544", "Disease")]),
    ("cftr cystic fibrosis", ["chloride", "channel", "airway", "mucus", "cftr"],
     [("CFTR", "Gene"), ("D003550", "Disease"), ("p.F508del", "Mutation")]),
    ("mouse model huntington", ["huntingtin", "striatum", "repeat", "neuron", "mouse"],
     [("HTT", "Gene"), ("D006816", "Disease"), ("10090", "Species")]),
    ("metformin diabetes", ["metformin", "hepatic", "ampk", "diabetes", "treatment"],
     [("D008687", "Chemical"), ("D003924", "Disease"), ("PRKAA1", "Gene")]),
    ("hiv protease", ["protease", "viral", "antiretroviral", "load", "hiv"],
     [("11676", "Species"), ("D017320", "Chemical")]),
    ("vegf angiogenesis", ["angiogenesis", "endothelial", "vascular", "growth", "factor"],
     [("VEGFA", "Gene"), ("D009369", "Disease")]),
]

FILLER = ("study results analysis patients cells expression level increased reduced "
          "associated role novel data method clinical protein role response model "
          "effect activity human sample cohort significant observed").split()


def make_doc(rng, doc_id, topic_idx, secondary):
    _, words, ents = TOPICS[topic_idx]
    title_words = rng.sample(words, 3) + rng.sample(FILLER, 2)
    abstract_words = [rng.choice(words) for _ in range(10)] + [rng.choice(FILLER) for _ in range(14)]
    title_ents = [e for e in ents if rng.random() < 0.5]
    abstract_ents = [e for e in ents if rng.random() < 0.8]
    if secondary is not None:
        _, w2, e2 = TOPICS[secondary]
        abstract_words += rng.sample(w2, 2)
        abstract_ents += rng.sample(e2, 1)
    rng.shuffle(title_words)
    rng.shuffle(abstract_words)
    to_json = lambda es: [{"id": i, "type": t} for i, t in es]
    return {
        "doc_id": doc_id,
        "fields": {
            "title": {"words": title_words, "entities": to_json(title_ents)},
            "abstract": {"words": abstract_words, "entities": to_json(abstract_ents)},
        },
    }


def grade(doc, topic_idx, primary):
    _, _, ents = TOPICS[topic_idx]
    present = {e["id"] for f in doc["fields"].values() for e in f["entities"]}
    hits = sum(1 for i, _ in ents if i in present)
    if primary == topic_idx and hits == len(ents):
        return 2
    if primary == topic_idx or hits == len(ents):
        return 1
    return 0


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--docs", type=int, default=50)
    ap.add_argument("--out", default="demo")
    args = ap.parse_args()
    rng = random.Random(args.seed)
    out = Path(args.out)

    docs, primary = [], {}
    for n in range(args.docs):
        t = n % len(TOPICS)
        secondary = rng.randrange(len(TOPICS)) if rng.random() < 0.3 else None
        if secondary == t:
            secondary = None
        doc_id = f"D{n:03d}"
        docs.append(make_doc(rng, doc_id, t, secondary))
        primary[doc_id] = t

    with open(out / "corpus.jsonl", "w") as f:
        for d in docs:
            f.write(json.dumps(d, sort_keys=True) + "\n")

    with open(out / "queries.jsonl", "w") as f:
        for t, (text, _, ents) in enumerate(TOPICS):
            rec = {"query_id": f"Q{t:02d}", "text": text,
                   "entities": [{"id": i, "type": ty} for i, ty in ents]}
            f.write(json.dumps(rec, sort_keys=True) + "\n")

    with open(out / "qrels.txt", "w") as f:
        for t in range(len(TOPICS)):
            for d in docs:
                g = grade(d, t, primary[d["doc_id"]])
                if g > 0 or primary[d["doc_id"]] == (t + 1) % len(TOPICS):
                    f.write(f"Q{t:02d} 0 {d['doc_id']} {g}\n")


if __name__ == "__main__":
    main()
