#!/usr/bin/env python3
# Copyright 2026 The cotprobe Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Regenerates the bundled fixtures under fixtures/.

Usage: python3 tools/make_fixtures.py [out_dir]
"""

import json
import random
import sys
from pathlib import Path

LABELS = ["A", "B", "C", "D"]
SUBJECTS = ["astronomy", "chemistry", "geography"]

FACTS = [
    ("Which planet is closest to the sun?", ["Venus", "Mercury", "Mars", "Earth"], 1),
    ("What gas do plants take in for photosynthesis?", ["Oxygen", "Nitrogen", "Carbon dioxide", "Helium"], 2),
    ("Which ocean is the largest?", ["Pacific", "Atlantic", "Indian", "Arctic"], 0),
    ("What is the chemical symbol for gold?", ["Ag", "Gd", "Go", "Au"], 3),
    ("Which star is at the center of our solar system?", ["Sirius", "The Sun", "Polaris", "Vega"], 1),
    ("Which continent contains the Sahara desert?", ["Asia", "Europe", "Africa", "Australia"], 2),
    ("What is the boiling point of water at sea level in Celsius?", ["100", "90", "80", "120"], 0),
    ("Which planet has the most prominent rings?", ["Mars", "Jupiter", "Neptune", "Saturn"], 3),
    ("Which element has atomic number 1?", ["Helium", "Hydrogen", "Lithium", "Carbon"], 1),
    ("What is the longest river in South America?", ["Orinoco", "Parana", "Amazon", "Magdalena"], 2),
    ("What is the closest large galaxy to the Milky Way?", ["Andromeda", "Triangulum", "Sombrero", "Whirlpool"], 0),
    ("Which salt is common table salt?", ["Potassium chloride", "Calcium carbonate", "Magnesium sulfate", "Sodium chloride"], 3),
]


def normalise(d):
    return {k: round(v, 6) for k, v in d.items()}


def dist_for(rng, favoured, strength):
    """Distribution over the labels with `strength` on the favoured one."""
    rest = [rng.random() + 0.05 for _ in LABELS]
    rest[favoured] = 0.0
    scale = (1.0 - strength) * 0.95 / sum(rest)
    d = {LABELS[i]: rest[i] * scale for i in range(len(LABELS))}
    d[LABELS[favoured]] = strength
    return normalise(d)


def variant_records(rng, qid, variant, answer, right):
    steps_n = rng.randint(1, 3)
    steps = []
    for s in range(steps_n):
        steps.append(f"Step {s + 1} considers the options carefully. ")
    final = answer if right else (answer + rng.randint(1, 3)) % 4
    steps.append(f"So, the answer is ({LABELS[final]}).")
    recs = [{"context_key": qid, "kind": "step", "payload": {"text": t, "variant": variant}} for t in steps]
    # Confidence in the final answer rises for correct chains and wobbles for
    # wrong ones.
    start = rng.uniform(0.2, 0.5)
    for i in range(len(steps) + 1):
        if right:
            p = start + (0.95 - start) * i / len(steps)
        else:
            p = max(0.1, min(0.9, start + rng.uniform(-0.25, 0.3)))
        favoured = final if i > 0 or right else rng.randrange(4)
        recs.append({"context_key": qid, "kind": "probe",
                     "payload": {"step": i, "dist": dist_for(rng, favoured, round(p, 6)), "variant": variant}})
    return recs, right


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "fixtures")
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20260417)

    dataset, script, labels = [], [], []
    for n, (question, texts, answer) in enumerate(FACTS):
        qid = f"q{n + 1:02d}"
        dataset.append({
            "id": qid,
            "question": question,
            "choices": [{"label": LABELS[i], "text": t} for i, t in enumerate(texts)],
            "answer_label": LABELS[answer],
            "metadata": {"subject": SUBJECTS[n % len(SUBJECTS)]},
        })
        for variant in range(4):
            right = rng.random() < (0.8 if variant == 0 else 0.6)
            recs, _ = variant_records(rng, qid, variant, answer, right)
            script.extend(recs)
        for sample in range(3):
            answer_ok = rng.random() < 0.7
            labels.append({"question_id": qid, "sample_index": sample, "answer_correct": answer_ok,
                           "cot_correct": answer_ok and rng.random() < 0.7})

    with open(out / "dataset.jsonl", "w") as f:
        for r in dataset:
            f.write(json.dumps(r) + "\n")
    with open(out / "script.jsonl", "w") as f:
        for r in script:
            f.write(json.dumps(r) + "\n")
    with open(out / "labels.jsonl", "w") as f:
        for r in labels:
            f.write(json.dumps(r) + "\n")

    corpus = [
        "Question: Which planet is closest to the sun? Answer: Mercury is closest. So, the answer is (B).",
        "Question: Which ocean is the largest? Answer: The Pacific is the largest. So, the answer is (A).",
        "Question: What is the chemical symbol for gold? Answer: Gold is Au. So, the answer is (D).",
        "Question: Which continent contains the Sahara desert? Answer: The Sahara is in Africa. So, the answer is (C).",
        "Mercury orbits the sun. The sun is a star. Water boils at 100 degrees.",
    ]
    with open(out / "corpus.jsonl", "w") as f:
        for t in corpus:
            f.write(json.dumps({"text": t}) + "\n")

    demos = {
        "instruction": "The following are multiple choice questions. Think step by step, then give the answer.",
        "cot_trigger": "Let's think step by step.",
        "demos": [
            {"question": "What color is a clear daytime sky?\n(A) Green\n(B) Blue\n(C) Red\n(D) Black",
             "answer": "Sunlight scatters off air molecules. Blue light scatters most. So, the answer is (B)."},
            {"question": "How many legs does a spider have?\n(A) Eight\n(B) Six\n(C) Ten\n(D) Four",
             "answer": "Spiders are arachnids. Arachnids have eight legs. So, the answer is (A)."},
        ],
    }
    with open(out / "demos.json", "w") as f:
        json.dump(demos, f, indent=2)
        f.write("\n")

    with open(out / "config.ini", "w") as f:
        f.write("# Shared settings for the fixture runs\n")
        f.write("backend = scripted\n")
        f.write("seed = 7\n")
        f.write("k = 3\n")
        f.write("max-samples = 4\n")
        f.write("sigma = 1.0\n")


if __name__ == "__main__":
    main()
