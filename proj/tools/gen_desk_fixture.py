#!/usr/bin/env python3
"""Generate the desk-scale fixture: a small encyclopedic KB and 200 questions.

Answers are computed here by a tiny independent interpreter; `kbforge forge`
re-executes every form and refuses the corpus if the two ever disagree.

Usage: gen_desk_fixture.py OUT_DIR [--seed N] [--questions N]
"""

import argparse
import json
import random
from pathlib import Path

TYPES = [
    ("person", []), ("scientist", ["person"]), ("athlete", ["person"]), ("writer", ["person"]),
    ("organization", []), ("university", ["organization"]), ("company", ["organization"]),
    ("place", []), ("city", ["place"]), ("country", ["place"]),
    ("creative_work", []), ("book", ["creative_work"]), ("film", ["creative_work"]),
    ("award", []), ("field", []),
]

RELATIONS = [
    ("born_in", "person", "city"), ("citizen_of", "person", "country"),
    ("works_for", "person", "organization"), ("alma_mater", "person", "university"),
    ("birth_year", "person", "integer"), ("research_field", "scientist", "field"),
    ("advisor", "scientist", "scientist"), ("sponsored_by", "athlete", "company"),
    ("teammate", "athlete", "athlete"), ("wrote", "writer", "book"),
    ("influenced_by", "writer", "writer"), ("located_in", "organization", "city"),
    ("founded_year", "organization", "integer"), ("headquartered_in", "company", "country"),
    ("city_in", "city", "country"), ("population", "city", "integer"),
    ("capital_of", "city", "country"), ("directed_by", "film", "person"),
    ("based_on", "film", "book"), ("release_year", "creative_work", "integer"),
    ("won_award", "person", "award"), ("award_field", "award", "field"),
    ("set_in", "creative_work", "city"),
]

LEAVES = {
    "scientist": 9, "athlete": 6, "writer": 6, "person": 4, "university": 3, "company": 3,
    "city": 6, "country": 3, "book": 4, "film": 3, "award": 3, "field": 3,
}

PARENT = {t: ps for t, ps in TYPES}


def tags(leaf):
    out = [leaf]
    while PARENT[out[-1]]:
        out.append(PARENT[out[-1]][0])
    return out


def lit(v):
    return f'"{v}"^^integer'


class KB:
    def __init__(self):
        self.entities = {}  # id -> (tags, label)
        self.facts = set()

    def members(self, t):
        return {e for e, (ts, _) in self.entities.items() if t in ts}

    def add(self, s, r, o):
        self.facts.add((s, r, o))


def build_kb(rng):
    kb = KB()
    counters = {}
    for leaf, n in LEAVES.items():
        for _ in range(n):
            counters[leaf] = counters.get(leaf, 0) + 1
            eid = f"{leaf[:3]}{counters[leaf]}"
            kb.entities[eid] = (tags(leaf), f"{leaf.title()} {counters[leaf]}")
    m = kb.members
    people, sci, ath, wri = sorted(m("person")), sorted(m("scientist")), sorted(m("athlete")), sorted(m("writer"))
    orgs, unis, comps = sorted(m("organization")), sorted(m("university")), sorted(m("company"))
    cities, countries = sorted(m("city")), sorted(m("country"))
    works, books, films = sorted(m("creative_work")), sorted(m("book")), sorted(m("film"))
    awards, fields = sorted(m("award")), sorted(m("field"))

    for i, c in enumerate(cities):
        kb.add(c, "city_in", countries[i % len(countries)])
        kb.add(c, "population", lit(50_000 + 37_000 * rng.randrange(1, 60)))
    for i, c in enumerate(countries):
        kb.add(cities[i], "capital_of", c)
    for p in people:
        kb.add(p, "born_in", rng.choice(cities))
        kb.add(p, "citizen_of", rng.choice(countries))
        kb.add(p, "birth_year", lit(rng.randrange(1920, 2000)))
        for o in rng.sample(orgs, rng.choice([1, 1, 2])):
            kb.add(p, "works_for", o)
        if rng.random() < 0.6:
            kb.add(p, "alma_mater", rng.choice(unis))
        if rng.random() < 0.45:
            kb.add(p, "won_award", rng.choice(awards))
    for s in sci:
        for f in rng.sample(fields, rng.choice([1, 2])):
            kb.add(s, "research_field", f)
        adv = rng.choice([x for x in sci if x != s])
        kb.add(s, "advisor", adv)
    for a in ath:
        kb.add(a, "sponsored_by", rng.choice(comps))
        kb.add(a, "teammate", rng.choice([x for x in ath if x != a]))
    for i, b in enumerate(books):
        kb.add(wri[i % len(wri)], "wrote", b)
        if rng.random() < 0.5:
            kb.add(rng.choice(wri), "wrote", b)
    for w in wri:
        if rng.random() < 0.7:
            kb.add(w, "influenced_by", rng.choice([x for x in wri if x != w]))
    for o in orgs:
        kb.add(o, "located_in", rng.choice(cities))
        kb.add(o, "founded_year", lit(rng.randrange(1850, 2015)))
    for c in comps:
        kb.add(c, "headquartered_in", rng.choice(countries))
    for f in films:
        kb.add(f, "directed_by", rng.choice(people))
        kb.add(f, "based_on", rng.choice(books))
    for w in works:
        kb.add(w, "release_year", lit(rng.randrange(1950, 2023)))
        kb.add(w, "set_in", rng.choice(cities))
    for i, a in enumerate(awards):
        kb.add(a, "award_field", fields[i % len(fields)])
    return kb


# --- independent mini interpreter ------------------------------------------

def is_lit(x):
    return x.startswith('"')


def lit_val(x):
    return int(x[1:x.index('"', 1)])


def ev(kb, e):
    op = e[0]
    if op == "ent":
        return {e[1]}
    if op == "type":
        return kb.members(e[1])
    if op == "and":
        return ev(kb, e[1]) & ev(kb, e[2])
    if op == "join":
        r, inv, x = e[1], e[2], ev(kb, e[3])
        if inv:
            return {o for (s, rr, o) in kb.facts if rr == r and s in x}
        return {s for (s, rr, o) in kb.facts if rr == r and o in x}
    if op == "count":
        n = len(ev(kb, e[1]))
        return {lit(n)} if n else set()
    if op == "argmax":
        x, r = ev(kb, e[1]), e[2]
        vals = {}
        for (s, rr, o) in kb.facts:
            if rr == r and s in x and is_lit(o):
                vals.setdefault(s, []).append(lit_val(o))
        if not vals:
            return set()
        best = max(max(v) for v in vals.values())
        return {s for s, v in vals.items() if best in v}
    if op == "lt":
        r, v = e[1], e[2]
        return {s for (s, rr, o) in kb.facts if rr == r and is_lit(o) and lit_val(o) < v}
    raise ValueError(op)


def render(e):
    op = e[0]
    if op in ("ent", "type"):
        return e[1]
    if op == "and":
        return f"(AND {render(e[1])} {render(e[2])})"
    if op == "join":
        rel = f"(R {e[1]})" if e[2] else e[1]
        return f"(JOIN {rel} {render(e[3])})"
    if op == "count":
        return f"(COUNT {render(e[1])})"
    if op == "argmax":
        return f"(ARGMAX {render(e[1])} {e[2]})"
    if op == "lt":
        return f"(AND {render(e[3])} (lt {e[1]} {lit(e[2])}))"
    raise ValueError(op)


def ev_top(kb, e):
    if e[0] == "lt":
        return ev(kb, ("and", e[3], ("lt", e[1], e[2])))
    return ev(kb, e)


# --- question templates ------------------------------------------------------

ENTITY_RELS = [r for r in RELATIONS if r[2] != "integer"]
LITERAL_RELS = [r for r in RELATIONS if r[2] == "integer"]


def sample_question(kb, rng):
    facts = sorted(kb.facts)
    kind = rng.choices(["obj", "subj", "typed", "count", "hop", "argmax", "lt"],
                       weights=[22, 22, 16, 8, 16, 8, 8])[0]
    if kind in ("obj", "subj", "typed", "count"):
        r, dom, rng_t = rng.choice(ENTITY_RELS)
        pairs = [(s, o) for (s, rr, o) in facts if rr == r]
        s, o = rng.choice(pairs)
        if kind == "subj":
            e = ("join", r, True, ("ent", s))
            text = f"What does {kb.entities[s][1]} have as {r.replace('_', ' ')}?"
        else:
            e = ("join", r, False, ("ent", o))
            text = f"Which entities have {r.replace('_', ' ')} {kb.entities[o][1]}?"
            if kind == "typed":
                leaf = rng.choice(sorted({t for t, ps in TYPES if t == dom or dom in ps}))
                e = ("and", ("type", leaf), e)
                text = f"Which {leaf.replace('_', ' ')} has {r.replace('_', ' ')} {kb.entities[o][1]}?"
            elif kind == "count":
                e = ("count", e)
                text = f"How many entities have {r.replace('_', ' ')} {kb.entities[o][1]}?"
        return e, text
    if kind == "hop":
        r1, d1, t1 = rng.choice(ENTITY_RELS)
        second = [r for r in ENTITY_RELS if r[1] == t1 or r[1] in PARENT.get(t1, [])
                  or t1 in PARENT.get(r[1], [])]
        if not second:
            return None
        r2 = rng.choice(second)[0]
        anchor = rng.choice([o for (s, rr, o) in facts if rr == r2])
        e = ("join", r1, True, ("join", r2, False, ("ent", anchor)))
        text = f"What {r1.replace('_', ' ')} values belong to things with {r2.replace('_', ' ')} {kb.entities[anchor][1]}?"
        return e, text
    r, dom, _ = rng.choice(LITERAL_RELS)
    leaf = rng.choice(sorted({t for t, ps in TYPES if t == dom or dom in ps}))
    if kind == "argmax":
        return ("argmax", ("type", leaf), r), f"Which {leaf.replace('_', ' ')} has the largest {r.replace('_', ' ')}?"
    vals = sorted({lit_val(o) for (s, rr, o) in facts if rr == r})
    v = rng.choice(vals[1:]) if len(vals) > 1 else vals[0] + 1
    return ("lt", r, v, ("type", leaf)), f"Which {leaf.replace('_', ' ')} has {r.replace('_', ' ')} below {v}?"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out", type=Path)
    ap.add_argument("--seed", type=int, default=20240521)
    ap.add_argument("--questions", type=int, default=200)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    kb = build_kb(rng)

    seen, questions = set(), []
    while len(questions) < args.questions:
        got = sample_question(kb, rng)
        if got is None:
            continue
        e, text = got
        sexpr = render(e)
        answers = ev_top(kb, e)
        if sexpr in seen or not answers or len(answers) > 10:
            continue
        seen.add(sexpr)
        questions.append({
            "qid": f"q{len(questions) + 1:03d}",
            "question": text,
            "s_expression": sexpr,
            "answers": sorted(answers),
        })

    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / "schema.tsv", "w") as f:
        f.write("format_version\t1\n")
        for t, ps in TYPES:
            f.write(f"type\t{t}" + (f"\t{','.join(ps)}" if ps else "") + "\n")
        for r, d, rg in RELATIONS:
            f.write(f"relation\t{r}\t{d}\t{rg}\n")
        for eid, (ts, label) in sorted(kb.entities.items()):
            f.write(f"entity\t{eid}\t{','.join(ts)}\t{label}\n")
    with open(args.out / "facts.tsv", "w") as f:
        f.write("format_version\t1\n")
        for s, r, o in sorted(kb.facts):
            f.write(f"{s}\t{r}\t{o}\n")
    with open(args.out / "questions.jsonl", "w") as f:
        for q in questions:
            f.write(json.dumps(q) + "\n")
    print(f"{len(kb.entities)} entities, {len(kb.facts)} facts, {len(questions)} questions")


if __name__ == "__main__":
    main()
