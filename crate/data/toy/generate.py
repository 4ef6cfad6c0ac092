#!/usr/bin/env python3
"""Regenerates the toy corpus: tagged sentences, plain LM text and pivot rules.

Usage: python3 generate.py  (writes next to this file, deterministic)
"""
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent
rng = random.Random(20191)

PEOPLE = ["alice", "bob", "carol", "dave", "erin", "frank", "grace", "heidi",
          "john smith", "mary jones", "tom baker", "anna lee"]
CITIES = ["paris", "london", "berlin", "rome", "madrid", "tokyo", "boston",
          "new york", "los angeles", "florida", "chicago", "dublin"]
ORGS = ["acme", "globex", "initech", "umbrella", "hooli", "vandelay industries",
        "stark labs", "wayne corp"]
DAYS = ["monday", "tuesday", "wednesday", "friday", "sunday"]
MONTHS = ["may", "june", "july", "march", "april"]
ADJ_PAIRS = [("bad", "good"), ("rich", "poor"), ("happy", "sad"), ("young", "old"),
             ("strong", "weak"), ("quiet", "loud")]
ANIMALS = ["cat", "dog", "fox", "horse", "rabbit", "mouse", "bird"]
ADJS = ["small", "large", "brown", "white", "lazy", "quick", "old"]
FRUITS = ["apples", "pears", "plums", "grapes", "lemons", "melons", "figs"]
NOUNS = ["house", "car", "garden", "river", "road", "city", "museum"]


def ent(span, tag, conf=None):
    conf = conf if conf is not None else rng.choice([0.99, 0.98, 0.97, 0.96, 0.9])
    return (span, "PROPN", tag, conf)


def w(token, pos):
    return (token, pos)


def pick2(xs):
    a, b = rng.sample(xs, 2)
    return a, b


def meet():
    a, b = pick2(PEOPLE)
    return [ent(a, "PER"), w("met", "VERB"), ent(b, "PER"), w("in", "ADP"),
            ent(rng.choice(CITIES), "LOC"), w("on", "ADP"), w(rng.choice(DAYS), "PROPN"), w(".", "PUNCT")]


def flights():
    a, b = pick2(CITIES)
    first, second = rng.choice([("from", "to"), ("to", "from")])
    return [w("flights", "NOUN"), w(first, "ADP"), ent(a, "LOC"), w(second, "ADP"), ent(b, "LOC")]


def chase():
    a1, a2 = pick2(ADJS)
    n1, n2 = pick2(ANIMALS)
    return [w("the", "DET"), w(a1, "ADJ"), w(n1, "NOUN"), w("chased", "VERB"),
            w("the", "DET"), w(a2, "ADJ"), w(n2, "NOUN"), w(".", "PUNCT")]


def become():
    x, y = rng.choice(ADJ_PAIRS)
    if rng.random() < 0.5:
        x, y = y, x
    return [w("can", "AUX"), w("a", "DET"), w(x, "ADJ"), w("person", "NOUN"),
            w("become", "VERB"), w(y, "ADJ"), w("?", "PUNCT")]


def born():
    p = rng.choice(PEOPLE)
    a, b = pick2(CITIES)
    return [ent(p, "PER"), w("was", "AUX"), w("born", "VERB"), w("in", "ADP"), ent(a, "LOC"),
            w("and", "CCONJ"), w("moved", "VERB"), w("to", "ADP"), ent(b, "LOC"), w(".", "PUNCT")]


def bought():
    a, b = pick2(ORGS)
    return [ent(a, "ORG"), w("bought", "VERB"), ent(b, "ORG"), w("in", "ADP"),
            w(str(rng.randint(1990, 2018)), "NUM"), w(".", "PUNCT")]


def shopping():
    f = rng.sample(FRUITS, 3)
    return [w(rng.choice(["she", "he", "we"]), "PRON"), w("bought", "VERB"), w(f[0], "NOUN"), w(",", "PUNCT"),
            w(f[1], "NOUN"), w("and", "CCONJ"), w(f[2], "NOUN"), w(".", "PUNCT")]


def married():
    return [w("they", "PRON"), w("were", "AUX"), w("married", "VERB"), w("on", "ADP"),
            w(str(rng.randint(1, 28)), "NUM"), w(rng.choice(MONTHS), "PROPN"), w(".", "PUNCT")]


def contrast():
    n1, n2 = pick2(NOUNS)
    a1, a2 = pick2(ADJS)
    return [w("the", "DET"), w(n1, "NOUN"), w("is", "AUX"), w(a1, "ADJ"), w("but", "CCONJ"),
            w("the", "DET"), w(n2, "NOUN"), w("is", "AUX"), w(a2, "ADJ"), w(".", "PUNCT")]


def visit():
    a, b = pick2(PEOPLE)
    return [ent(a, "PER"), w("visited", "VERB"), ent(rng.choice(CITIES), "LOC"),
            w("before", "ADP"), ent(b, "PER"), w("arrived", "VERB"), w(".", "PUNCT")]


def solo():
    return [w(rng.choice(["hello", "thanks", "welcome"]), "INTJ"), w(".", "PUNCT")]


MAKERS = [meet, flights, chase, become, born, bought, shopping, married, contrast, visit, solo]
TARGET = 200


def render(sent):
    return " ".join(tok[0] for tok in sent)


def main():
    seen, out = set(), []
    attempts = 0
    while len(out) < TARGET and attempts < 100_000:
        attempts += 1
        s = rng.choice(MAKERS)()
        text = render(s)
        if text in seen:
            continue
        seen.add(text)
        out.append(s)

    with open(OUT / "corpus.tagged", "w") as f:
        f.write("# span<TAB>pos[<TAB>entity<TAB>confidence], blank line between sentences\n")
        for s in out:
            for tok in s:
                f.write("\t".join(str(x) for x in tok) + "\n")
            f.write("\n")
    with open(OUT / "corpus.txt", "w") as f:
        for s in out:
            f.write(render(s) + "\n")
    rules = [
        ("synonym", "met", "saw"), ("synonym", "bought", "purchased"), ("synonym", "bought", "acquired"),
        ("synonym", "chased", "pursued"), ("synonym", "flights", "trips"), ("synonym", "moved", "relocated"),
        ("synonym", "visited", "toured"), ("synonym", "arrived", "came"), ("synonym", "quick", "fast"),
        ("synonym", "large", "big"), ("synonym", "happy", "glad"), ("synonym", "married", "wed"),
        ("front", "on"), ("front", "in"), ("front", "before"), ("front", "but"), ("front", "to"),
    ]
    with open(OUT / "pivot.rules", "w") as f:
        for r in rules:
            f.write("\t".join(r) + "\n")


if __name__ == "__main__":
    main()
