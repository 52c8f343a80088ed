"""Regenerate the synthetic 50-concept graph and its 20-case corpus.

    python tests/fixtures/make_synthetic.py

Output is deterministic (fixed seed); the generated files are committed.
"""

import json
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent
SEED = 20240611

SYLLABLES = ["ka", "vo", "rin", "tre", "mik", "la", "zov", "bre", "nal", "sor", "pel", "dun", "ghi", "ter",
             "mox", "quil", "fen", "dar", "zu", "lob", "nix", "cra", "vel", "tho", "sim", "pra", "gol", "wen"]
SUFFIX = ["syndrome", "disease", "dystrophy", "anomaly", "deficiency"]
HPO_POOL = ["HP:0001250", "HP:0001251", "HP:0001252", "HP:0001263", "HP:0001249", "HP:0002650", "HP:0002240",
            "HP:0001744", "HP:0001903", "HP:0001873", "HP:0000093", "HP:0000083", "HP:0001014", "HP:0000518",
            "HP:0000639", "HP:0002315", "HP:0003198", "HP:0001324", "HP:0002072", "HP:0000252"]


def _word(rng, seen):
    while True:
        w = "".join(rng.choice(SYLLABLES) for _ in range(rng.choice((2, 3))))
        if w not in seen and len(w) >= 5:
            seen.add(w)
            return w


def build():
    rng = random.Random(SEED)
    seen = set()
    records = []
    concepts = []
    for i in range(50):
        cid = f"ORPHA:{90001 + i}"
        omim = f"OMIM:{600001 + i}"
        eponym = _word(rng, seen).capitalize()
        name = f"{eponym} {rng.choice(SUFFIX)}"
        alias1 = f"{_word(rng, seen).capitalize()}-{_word(rng, seen).capitalize()} {rng.choice(SUFFIX)}"
        alias2 = f"{_word(rng, seen)} {_word(rng, seen)} {rng.choice(SUFFIX)}"
        concepts.append({"id": cid, "omim": omim, "name": name, "aliases": [alias1, alias2]})
        records.append({
            "layer": "concept", "id": cid, "name": name, "cross_refs": [omim],
            "aliases": [
                {"text": alias1, "language": "en", "weight": round(rng.uniform(0.3, 1.0), 2), "source": "synthetic"},
                {"text": alias2, "language": "en", "weight": round(rng.uniform(0.3, 1.0), 2), "source": "synthetic"},
            ],
        })

    # 5 roots x 2 children; each child holds 5 concepts; family = root
    for r in range(5):
        root = f"R{r}"
        records.append({"layer": "taxonomy", "id": root, "label": f"Group {r} disorders", "parent": None,
                        "family": f"fam{r}", "members": []})
        for c in range(2):
            node = f"R{r}.{c}"
            members = [concepts[(r * 2 + c) * 5 + j]["id"] for j in range(5)]
            records.append({"layer": "taxonomy", "id": node, "label": f"Group {r} subtype {c}", "parent": root,
                            "family": f"fam{r}", "members": members})

    for i, c in enumerate(concepts):
        feats = [{"text": f"{_word(rng, seen)} {_word(rng, seen)}", "weight": round(rng.uniform(0.2, 1.0), 2)}
                 for _ in range(rng.choice((2, 3)))]
        records.append({
            "layer": "clinical", "id": f"CP{i:02d}", "concept": c["id"],
            "phenotypes": sorted(rng.sample(HPO_POOL, 3)), "features": feats,
            "criteria": [f"{_word(rng, seen)} assay"],
        })
        for j in range(rng.choice((1, 2))):
            gene = f"SY{i:02d}{chr(65 + j)}"
            records.append({
                "layer": "instance", "id": f"IR{i:02d}{j}", "concept": c["id"],
                "case_text": f"Patient presenting with {_word(rng, seen)} findings.",
                "subtype": None, "pathway": ["clinical exam", f"{gene} sequencing"], "genes": [gene],
            })

    cases = []
    for n, i in enumerate(range(0, 50, 5)):
        alias = concepts[i]["aliases"][n % 2]
        cases.append({"case_id": f"S{len(cases):02d}", "question": alias, "gold": [concepts[i]["id"]],
                      "category": "alias"})
    for n, i in enumerate(range(2, 50, 5)):
        code = concepts[i]["id"] if n % 2 == 0 else concepts[i]["omim"].replace(":", " ")
        cases.append({"case_id": f"S{len(cases):02d}", "question": code, "gold": [concepts[i]["id"]],
                      "category": "code"})
    return records, cases


def main():
    records, cases = build()
    with (HERE / "synthetic_kg.jsonl").open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    with (HERE / "synthetic_corpus.jsonl").open("w", encoding="utf-8") as fh:
        for case in cases:
            fh.write(json.dumps(case) + "\n")


if __name__ == "__main__":
    main()
