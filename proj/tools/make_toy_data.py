#!/usr/bin/env python3
# tools/make_toy_data.py

# Copyright 2026  kgrescore authors

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#  http://www.apache.org/licenses/LICENSE-2.0
#
# THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
# KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
# WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
# MERCHANTABLITY OR NON-INFRINGEMENT.
# See the Apache 2 License for the specific language governing permissions and
# limitations under the License.

"""Writes the bundled toy knowledge graph, templates and confusion pairs.

Usage: make_toy_data.py [--seed N] [--out DIR]

Entity names are pseudo-words built from syllables.  About a quarter of the
entities of each type get a name one character away from another entity of
the same type, so that some confusions stay inside the graph.
"""

import argparse
import json
import os
import random

ONSETS = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z",
          "br", "dr", "gr", "kl", "pl", "st", "tr", "sh", "ch"]
VOWELS = ["a", "e", "i", "o", "u", "ai", "ou", "ea"]
CODAS = ["", "", "", "n", "r", "l", "s", "x", "nd", "rk"]

# type -> (count, words-per-name choices, strata sizes)
TYPES = {
    "state": (50, [1, 1, 2], (10, 25, 50)),
    "city": (300, [1, 1, 2], (30, 120, 300)),
    "music artist": (150, [2, 2, 3], (20, 60, 150)),
    "music title": (300, [1, 2, 2, 3], (30, 120, 300)),
}

CITY_STATE = [
    ("directions to <city> <state;rel=contains@1>", 0.35),
    ("weather in <city> <state;rel=contains@1>", 0.25),
    ("navigate to <city> <state;rel=contains@1>", 0.2),
    ("how far is <city> <state;rel=contains@1>", 0.1),
    ("find hotels in <city> <state;rel=contains@1>", 0.1),
]
TITLE_ARTIST = [
    ("play <music_title> by <music_artist;rel=performed@1>", 0.5),
    ("put on <music_title> by <music_artist;rel=performed@1>", 0.3),
    ("i want to hear <music_title> by <music_artist;rel=performed@1>", 0.2),
]
GENERAL = [
    ("what time is it", 0.1),
    ("set a timer for ten minutes", 0.08),
    ("turn off the lights", 0.08),
    ("turn on the lights in the kitchen", 0.05),
    ("what is the weather like today", 0.08),
    ("remind me to call my mother", 0.05),
    ("how tall is the tallest mountain", 0.04),
    ("tell me a joke", 0.06),
    ("what is on my calendar tomorrow", 0.05),
    ("add milk to the shopping list", 0.05),
    ("wake me up at seven", 0.05),
    ("stop the music", 0.06),
    ("turn the volume up", 0.05),
    ("what is the news today", 0.05),
    ("how many days until friday", 0.04),
    ("call my brother", 0.04),
    ("set an alarm for six thirty", 0.05),
    ("play some music", 0.02),
]


def make_word(rng, used):
    while True:
        n = rng.choice([2, 2, 3])
        w = "".join(rng.choice(ONSETS) + rng.choice(VOWELS) for _ in range(n - 1))
        w += rng.choice(ONSETS) + rng.choice(VOWELS) + rng.choice(CODAS)
        if len(w) >= 4 and w not in used:
            used.add(w)
            return w


def one_edit(rng, word, used):
    letters = "aeioulnrstkm"
    for _ in range(100):
        i = rng.randrange(len(word))
        c = rng.choice(letters)
        if c == word[i]:
            continue
        v = word[:i] + c + word[i + 1:]
        if v not in used:
            used.add(v)
            return v
    return make_word(rng, used)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=2026)
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data"))
    args = ap.parse_args()
    rng = random.Random(args.seed)
    used = set()
    kg = {"_strata": {}}
    ids = {}
    names = {}
    for type_name, (count, lengths, (head, torso, tail)) in TYPES.items():
        kg["_strata"][type_name] = {"head": head, "torso": torso, "tail": tail}
        prefix = "".join(p[0] for p in type_name.split())
        ids[type_name] = []
        for i in range(count):
            eid = "%s%04d" % (prefix, i)
            ids[type_name].append(eid)
            if i >= 4 and rng.random() < 0.25:
                base = names[rng.choice(ids[type_name][:i])][0]
                k = rng.randrange(len(base))
                words = list(base)
                words[k] = one_edit(rng, words[k], used)
            else:
                words = [make_word(rng, used) for _ in range(rng.choice(lengths))]
            alt = []
            if len(words) >= 2 and rng.random() < 0.2:
                alt = [words[0], make_word(rng, used)] + words[1:]
            names[eid] = [words] + ([alt] if alt else [])
        pops = [1.0 / (r + 1) for r in range(count)]
        rng.shuffle(pops)
        total = sum(pops)
        for eid, p in zip(ids[type_name], pops):
            kg[eid] = {
                "names": {" ".join(w): {"word count": len(w)} for w in names[eid]},
                "types": {type_name: {"popularity": round(p / total, 6)}},
                "relationships": [],
            }

    def pop(eid):
        return next(iter(kg[eid]["types"].values()))["popularity"]

    for city in ids["city"]:
        state = rng.choice(ids["state"])
        kg[state]["relationships"].append(
            {"relation": "contains", "entity id": city, "popularity": pop(city)})
        kg[city]["relationships"].append(
            {"relation": "is in", "entity id": state, "popularity": pop(state)})
    for title in ids["music title"]:
        artist = rng.choice(ids["music artist"])
        kg[artist]["relationships"].append(
            {"relation": "performed", "entity id": title, "popularity": pop(title)})
        kg[title]["relationships"].append(
            {"relation": "performed by", "entity id": artist, "popularity": pop(artist)})

    out = args.out
    os.makedirs(os.path.join(out, "templates"), exist_ok=True)
    with open(os.path.join(out, "toy_kg.json"), "w") as f:
        json.dump(kg, f, indent=1, sort_keys=True)
        f.write("\n")
    for name, rows in (("city_state", CITY_STATE), ("title_artist", TITLE_ARTIST),
                       ("general", GENERAL)):
        with open(os.path.join(out, "templates", name + ".tsv"), "w") as f:
            for text, freq in rows:
                f.write("%s\t%g\n" % (text, freq))

    # Split confusions: a long entity word heard as two shorter words.
    conf = {}
    for eid in sorted(names):
        for w in names[eid][0]:
            if len(w) >= 6 and rng.random() < 0.15:
                k = rng.randrange(2, len(w) - 2)
                conf.setdefault(w, []).append(w[:k] + " " + w[k:])
    with open(os.path.join(out, "confusions.tsv"), "w") as f:
        f.write("# word<TAB>alternatives, comma separated\n")
        for w in sorted(conf):
            f.write("%s\t%s\n" % (w, ",".join(conf[w])))


if __name__ == "__main__":
    main()
