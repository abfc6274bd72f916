"""Question generation over recipe traces, with a brute-force answer oracle.

Every item carries a structured form that the oracle answers by replaying
the trace; the templated question string is what models see. Distractors
are drawn from the answer's own type (nearby counts, sibling step phrases,
other flavors/states) and are pairwise distinct after normalization.
"""

from dataclasses import dataclass, field

from .autodiff import ContractError
from .heads import normalize_answer
from .world import (
    COLORS,
    FLAVORS,
    INGREDIENT_NAMES,
    INGREDIENTS,
    STATES,
    VERB_NAMES,
    replay_at_time,
    replay_states,
    replay_until,
    step_phrase,
)

ANSWER_TYPES = ("yes/no", "numeric", "single word", "text")

CATEGORIES = ("count", "time", "order", "taste", "complex", "property")


@dataclass
class QAItem:
    question: str
    answer: str
    choices: list
    tags: list
    answer_type: str
    structured: dict | None = field(default=None, compare=False)


def validate_qa_item(item):
    if len(item.choices) != 5:
        raise ContractError(f"expected 5 choices, got {len(item.choices)}")
    normed = [normalize_answer(c) for c in item.choices]
    if len(set(normed)) != 5:
        raise ContractError(f"choices collide after normalization: {item.choices}")
    if normalize_answer(item.answer) not in normed:
        raise ContractError(f"answer {item.answer!r} missing from choices")
    if not item.tags:
        raise ContractError("item carries no category tags")
    if item.answer_type not in ANSWER_TYPES:
        raise ContractError(f"unknown answer type {item.answer_type!r}")


# ---------------------------------------------------------------------------
# oracle


def _unique_phrase_index(trace, phrase):
    hits = [k for k, s in enumerate(trace.steps) if step_phrase(s) == phrase]
    if len(hits) != 1:
        raise ContractError(f"phrase {phrase!r} does not identify a unique step")
    return hits[0]


def _check_step_index(trace, k):
    if not 0 <= k < len(trace.steps):
        raise ContractError(f"step index {k} outside trace of {len(trace.steps)} steps")
    return k


def _check_ingredient(trace, name):
    if name not in INGREDIENTS:
        raise ContractError(f"unknown ingredient {name!r}")
    if name not in trace.ingredients:
        raise ContractError(f"ingredient {name!r} not used in this trace")
    return name


def _round10(seconds):
    return int(round(seconds / 10.0) * 10)


def _longest_index(trace):
    durs = [s.duration_s for s in trace.steps]
    best = max(durs)
    if durs.count(best) != 1:
        return None
    return durs.index(best)


def _shortest_index(trace):
    durs = [s.duration_s for s in trace.steps]
    best = min(durs)
    if durs.count(best) != 1:
        return None
    return durs.index(best)


def _order_matters(trace, i, j):
    steps = list(trace.steps)
    steps[i], steps[j] = steps[j], steps[i]
    swapped = replay_states(steps, trace.ingredients)
    original = replay_states(trace.steps, trace.ingredients)
    return "no" if swapped == original else "yes"


def oracle_answer(trace, sq):
    """Answer a structured question by brute-force replay of the trace."""
    kind = sq["kind"]
    steps = trace.steps

    if kind == "count_verb":
        verb = sq["verb"]
        if verb not in VERB_NAMES:
            raise ContractError(f"unknown verb {verb!r}")
        return str(sum(1 for s in steps if s.verb == verb))
    if kind == "count_ingredient":
        name = sq["ingredient"]
        if name not in INGREDIENTS:
            raise ContractError(f"unknown ingredient {name!r}")
        return str(sum(1 for s in steps if name in s.ingredients))
    if kind == "count_color":
        color = sq["color"]
        if color not in COLORS:
            raise ContractError(f"unknown color {color!r}")
        return str(sum(1 for n in trace.ingredients if INGREDIENTS[n].color == color))
    if kind == "count_steps":
        return str(len(steps))

    if kind in ("time_faster", "time_slower"):
        i = _check_step_index(trace, sq["i"])
        j = _check_step_index(trace, sq["j"])
        a, b = steps[i], steps[j]
        if a.duration_s == b.duration_s:
            raise ContractError("time comparison between equal durations")
        if kind == "time_faster":
            return step_phrase(a if a.duration_s < b.duration_s else b)
        return step_phrase(a if a.duration_s > b.duration_s else b)
    if kind == "time_longest":
        k = _longest_index(trace)
        if k is None:
            raise ContractError("longest step is not unique")
        return step_phrase(steps[k])
    if kind == "time_shortest":
        k = _shortest_index(trace)
        if k is None:
            raise ContractError("shortest step is not unique")
        return step_phrase(steps[k])
    if kind == "time_duration":
        k = _unique_phrase_index(trace, sq["phrase"])
        return str(_round10(steps[k].duration_s))

    if kind == "order_after":
        k = _unique_phrase_index(trace, sq["phrase"])
        _check_step_index(trace, k + 1)
        return step_phrase(steps[k + 1])
    if kind == "order_before":
        k = _unique_phrase_index(trace, sq["phrase"])
        if k == 0:
            raise ContractError("no step before the first one")
        return step_phrase(steps[k - 1])
    if kind == "order_between":
        i = _unique_phrase_index(trace, sq["first"])
        j = _unique_phrase_index(trace, sq["second"])
        if j != i + 2:
            raise ContractError("between-question anchors must be two steps apart")
        return step_phrase(steps[i + 1])
    if kind == "order_first":
        return step_phrase(steps[0])
    if kind == "order_last":
        return step_phrase(steps[-1])
    if kind == "order_which_earlier":
        i = _unique_phrase_index(trace, sq["first"])
        j = _unique_phrase_index(trace, sq["second"])
        return step_phrase(steps[min(i, j)])
    if kind == "order_matters":
        i = _check_step_index(trace, sq["i"])
        j = _check_step_index(trace, sq["j"])
        return _order_matters(trace, i, j)

    if kind == "taste_flavor_of":
        name = _check_ingredient(trace, sq["ingredient"])
        return INGREDIENTS[name].flavors[0]
    if kind == "taste_has":
        flavor = sq["flavor"]
        if flavor not in FLAVORS:
            raise ContractError(f"unknown flavor {flavor!r}")
        present = {f for n in trace.ingredients for f in INGREDIENTS[n].flavors}
        return "yes" if flavor in present else "no"
    if kind == "taste_source":
        flavor = sq["flavor"]
        carriers = [n for n in trace.ingredients if flavor in INGREDIENTS[n].flavors]
        if len(carriers) != 1:
            raise ContractError(f"flavor {flavor!r} has no unique source in this trace")
        return carriers[0]

    if kind == "property_state_after":
        name = _check_ingredient(trace, sq["ingredient"])
        k = _check_step_index(trace, sq["step_index"])
        return replay_until(trace, k)[name]["state"]
    if kind == "property_state_after_phrase":
        name = _check_ingredient(trace, sq["ingredient"])
        k = _unique_phrase_index(trace, sq["phrase"])
        return replay_until(trace, k)[name]["state"]
    if kind == "property_state_at_time":
        name = _check_ingredient(trace, sq["ingredient"])
        return replay_at_time(trace, sq["t_s"])[name]["state"]
    if kind == "property_state_final":
        name = _check_ingredient(trace, sq["ingredient"])
        return trace.final_state[name]["state"]
    if kind == "property_color_final":
        name = _check_ingredient(trace, sq["ingredient"])
        return trace.final_state[name]["color"]

    # complex kinds compose two oracle calls
    if kind == "complex_state_after_longest":
        k = _longest_index(trace)
        if k is None:
            raise ContractError("longest step is not unique")
        return oracle_answer(
            trace, {"kind": "property_state_after", "ingredient": sq["ingredient"], "step_index": k}
        )
    if kind == "complex_count_before":
        k = _unique_phrase_index(trace, sq["phrase"])
        return str(k)
    if kind == "complex_after_longest":
        k = _longest_index(trace)
        if k is None or k + 1 >= len(steps):
            raise ContractError("no step after the longest one")
        return oracle_answer(trace, {"kind": "order_after", "phrase": step_phrase(steps[k])})
    if kind == "complex_faster_neighbor":
        k = _unique_phrase_index(trace, sq["phrase"])
        if k == 0 or k + 1 >= len(steps):
            raise ContractError("step has no two neighbors")
        return oracle_answer(trace, {"kind": "time_faster", "i": k - 1, "j": k + 1})

    raise ContractError(f"unknown question kind {kind!r}")


# ---------------------------------------------------------------------------
# distractors


def _numeric_distractors(answer, rng):
    a = int(answer)
    candidates = [a - 2, a - 1, a + 1, a + 2, a + 3, a + 4, a + 5, a + 6]
    picked = []
    for c in candidates:
        if c >= 0 and c != a and c not in picked:
            picked.append(c)
        if len(picked) == 4:
            break
    return [str(c) for c in picked]


def _duration_distractors(answer, rng):
    a = int(answer)
    candidates = [a - 30, a - 20, a - 10, a + 10, a + 20, a + 30, a + 40, a + 50, a + 60]
    picked = []
    for c in candidates:
        if c > 0 and c != a and c not in picked:
            picked.append(c)
        if len(picked) == 4:
            break
    return [str(c) for c in picked]


def _yesno_distractors(answer):
    other = "no" if answer == "yes" else "yes"
    return [other, "maybe", "probably", "cannot tell"]


def _sample(rng, pool, k):
    pool = list(pool)
    if len(pool) < k:
        raise ContractError(f"distractor pool too small: {len(pool)} < {k}")
    idx = rng.choice(len(pool), size=k, replace=False)
    return [pool[int(t)] for t in idx]


def _synth_phrases(rng, exclude, need):
    """Invent plausible step phrases not present in ``exclude``."""
    out = []
    guard = 0
    while len(out) < need:
        guard += 1
        if guard > 200:
            raise ContractError("could not synthesize enough distinct phrases")
        verb = str(rng.choice(VERB_NAMES))
        name = str(rng.choice(INGREDIENT_NAMES))
        p = f"{verb} the {name}"
        if p not in exclude and p not in out:
            out.append(p)
    return out


def _phrase_distractors(trace, rng, exclude, ensure=()):
    exclude = {normalize_answer(p) for p in exclude}
    out = list(ensure)
    exclude.update(normalize_answer(p) for p in ensure)
    pool = []
    for s in trace.steps:
        p = step_phrase(s)
        if normalize_answer(p) not in exclude and p not in pool:
            pool.append(p)
    n_pool = min(len(pool), 4 - len(out))
    if n_pool > 0:
        out.extend(_sample(rng, pool, n_pool))
        exclude.update(normalize_answer(p) for p in out)
    if len(out) < 4:
        out.extend(_synth_phrases(rng, exclude, 4 - len(out)))
    return out


# ---------------------------------------------------------------------------
# per-subtype builders; each returns (sq, question, tags, answer_type,
# distractor_fn) or None when the trace cannot support the subtype


def _unique_phrase_steps(trace):
    seen = {}
    for k, s in enumerate(trace.steps):
        seen.setdefault(step_phrase(s), []).append(k)
    return [(hits[0], p) for p, hits in seen.items() if len(hits) == 1]


def _pick(rng, items):
    return items[int(rng.integers(0, len(items)))]


def _build_count_verb(trace, rng):
    verbs_in = sorted({s.verb for s in trace.steps})
    if rng.random() < 0.7:
        verb = _pick(rng, verbs_in)
    else:
        verb = str(rng.choice(VERB_NAMES))
    sq = {"kind": "count_verb", "verb": verb}
    q = f"How many steps of the recipe involve the action {verb}?"
    return sq, q, ["count"], "numeric", _numeric_distractors


def _build_count_ingredient(trace, rng):
    name = _pick(rng, list(trace.ingredients))
    sq = {"kind": "count_ingredient", "ingredient": name}
    q = f"In how many steps is the {name} used?"
    return sq, q, ["count"], "numeric", _numeric_distractors


def _build_count_color(trace, rng):
    color = str(rng.choice(COLORS))
    sq = {"kind": "count_color", "color": color}
    q = f"How many {color} ingredients are used in the recipe?"
    return sq, q, ["count"], "numeric", _numeric_distractors


def _build_count_steps(trace, rng):
    sq = {"kind": "count_steps"}
    q = "How many steps does the recipe have?"
    return sq, q, ["count"], "numeric", _numeric_distractors


def _distinct_duration_pair(trace, rng):
    unique = _unique_phrase_steps(trace)
    pairs = [
        (i, j)
        for ai, (i, _) in enumerate(unique)
        for (j, _) in unique[ai + 1 :]
        if trace.steps[i].duration_s != trace.steps[j].duration_s
    ]
    if not pairs:
        return None
    return _pick(rng, pairs)


def _build_time_compare(trace, rng, which):
    pair = _distinct_duration_pair(trace, rng)
    if pair is None:
        return None
    i, j = pair
    pa, pb = step_phrase(trace.steps[i]), step_phrase(trace.steps[j])
    sq = {"kind": f"time_{which}", "i": i, "j": j}
    q = f"Which one is {which}: to {pa} or to {pb}?"
    loser = pb if oracle_answer(trace, sq) == pa else pa

    def distractors(answer, r):
        return _phrase_distractors(trace, r, exclude=[answer], ensure=[loser])

    return sq, q, ["time"], "text", distractors


def _build_time_extreme(trace, rng, which):
    k = _longest_index(trace) if which == "longest" else _shortest_index(trace)
    if k is None:
        return None
    sq = {"kind": f"time_{which}"}
    word = "most" if which == "longest" else "least"
    q = f"Which step of the recipe takes the {word} time?"

    def distractors(answer, r):
        return _phrase_distractors(trace, r, exclude=[answer])

    return sq, q, ["time"], "text", distractors


def _build_time_duration(trace, rng):
    unique = _unique_phrase_steps(trace)
    if not unique:
        return None
    _, phrase = _pick(rng, unique)
    sq = {"kind": "time_duration", "phrase": phrase}
    q = f"About how many seconds does it take to {phrase}?"
    return sq, q, ["time"], "numeric", _duration_distractors


def _build_order_neighbor(trace, rng, kind):
    unique = _unique_phrase_steps(trace)
    if kind == "order_after":
        cand = [(k, p) for k, p in unique if k + 1 < len(trace.steps)]
    else:
        cand = [(k, p) for k, p in unique if k > 0]
    if not cand:
        return None
    k, phrase = _pick(rng, cand)
    sq = {"kind": kind, "phrase": phrase}
    word = "after" if kind == "order_after" else "before"
    q = f"What happens right {word} you {phrase}?"

    def distractors(answer, r):
        return _phrase_distractors(trace, r, exclude=[answer, phrase])

    return sq, q, ["order"], "text", distractors


def _build_order_between(trace, rng):
    if len(trace.steps) < 3:
        return None
    unique = dict(_unique_phrase_steps(trace))
    by_index = {k: p for k, p in _unique_phrase_steps(trace)}
    cand = [k for k in by_index if k + 2 in by_index]
    if not cand:
        return None
    i = _pick(rng, cand)
    first, second = by_index[i], by_index[i + 2]
    sq = {"kind": "order_between", "first": first, "second": second}
    q = f"What happens between the step to {first} and the step to {second}?"

    def distractors(answer, r):
        return _phrase_distractors(trace, r, exclude=[answer, first, second])

    return sq, q, ["order"], "text", distractors


def _build_order_edge(trace, rng, kind):
    sq = {"kind": kind}
    word = "first" if kind == "order_first" else "last"
    q = f"What is the {word} thing to happen in the recipe?"

    def distractors(answer, r):
        return _phrase_distractors(trace, r, exclude=[answer])

    return sq, q, ["order"], "text", distractors


def _build_order_which_earlier(trace, rng):
    unique = _unique_phrase_steps(trace)
    if len(unique) < 2:
        return None
    (i, pa), (j, pb) = _sample(rng, unique, 2)
    sq = {"kind": "order_which_earlier", "first": pa, "second": pb}
    q = f"Which happens earlier in the recipe: to {pa} or to {pb}?"
    later = pb if min(i, j) == i else pa

    def distractors(answer, r):
        return _phrase_distractors(trace, r, exclude=[answer], ensure=[later])

    return sq, q, ["order"], "text", distractors


def _build_order_matters(trace, rng):
    unique = _unique_phrase_steps(trace)
    if len(unique) < 2:
        return None
    (i, pa), (j, pb) = _sample(rng, unique, 2)
    if i > j:
        i, j, pa, pb = j, i, pb, pa
    sq = {"kind": "order_matters", "i": i, "j": j}
    q = f"Does it matter to change the order of '{pa}' and '{pb}'?"
    return sq, q, ["order"], "yes/no", lambda answer, r: _yesno_distractors(answer)


def _build_taste_flavor_of(trace, rng):
    name = _pick(rng, list(trace.ingredients))
    sq = {"kind": "taste_flavor_of", "ingredient": name}
    q = f"Which flavor does the {name} add to the dish?"

    def distractors(answer, r):
        return _sample(r, [f for f in FLAVORS if f not in INGREDIENTS[name].flavors], 4)

    return sq, q, ["taste"], "single word", distractors


def _build_taste_has(trace, rng):
    present = sorted({f for n in trace.ingredients for f in INGREDIENTS[n].flavors})
    absent = [f for f in FLAVORS if f not in present]
    if absent and rng.random() < 0.5:
        flavor = _pick(rng, absent)
    else:
        flavor = _pick(rng, present)
    sq = {"kind": "taste_has", "flavor": flavor}
    q = f"Does the dish taste {flavor}?"
    return sq, q, ["taste"], "yes/no", lambda answer, r: _yesno_distractors(answer)


def _build_taste_source(trace, rng):
    counts = {}
    for n in trace.ingredients:
        for f in INGREDIENTS[n].flavors:
            counts[f] = counts.get(f, 0) + 1
    singles = sorted(f for f, c in counts.items() if c == 1)
    if not singles:
        return None
    flavor = _pick(rng, singles)
    sq = {"kind": "taste_source", "flavor": flavor}
    q = f"Which ingredient makes the dish taste {flavor}?"

    def distractors(answer, r):
        used = [n for n in trace.ingredients if flavor not in INGREDIENTS[n].flavors]
        pool = used + [
            n
            for n in INGREDIENT_NAMES
            if n not in trace.ingredients and flavor not in INGREDIENTS[n].flavors
        ]
        return _sample(r, pool[: max(8, len(used))], 4)

    return sq, q, ["taste"], "single word", distractors


def _state_distractors(answer, rng):
    return [s for s in STATES if s != answer]


def _color_distractors(answer, rng):
    return _sample(rng, [c for c in COLORS if c != answer], 4)


def _build_property_state_after_phrase(trace, rng):
    unique = _unique_phrase_steps(trace)
    if not unique:
        return None
    k, phrase = _pick(rng, unique)
    name = _pick(rng, list(trace.ingredients))
    sq = {"kind": "property_state_after_phrase", "ingredient": name, "phrase": phrase}
    q = f"What is the state of the {name} right after you {phrase}?"
    return sq, q, ["property"], "single word", _state_distractors


def _build_property_state_after_step(trace, rng):
    k = int(rng.integers(0, len(trace.steps)))
    name = _pick(rng, list(trace.ingredients))
    sq = {"kind": "property_state_after", "ingredient": name, "step_index": k}
    q = f"What is the state of the {name} after step {k + 1} of the recipe?"
    return sq, q, ["property"], "single word", _state_distractors


def _build_property_state_final(trace, rng):
    name = _pick(rng, list(trace.ingredients))
    sq = {"kind": "property_state_final", "ingredient": name}
    q = f"What is the state of the {name} at the end of the recipe?"
    return sq, q, ["property"], "single word", _state_distractors


def _build_property_color_final(trace, rng):
    name = _pick(rng, list(trace.ingredients))
    sq = {"kind": "property_color_final", "ingredient": name}
    q = f"What color is the {name} at the end of the recipe?"
    return sq, q, ["property"], "single word", _color_distractors


def _build_complex_state_after_longest(trace, rng):
    if _longest_index(trace) is None:
        return None
    name = _pick(rng, list(trace.ingredients))
    sq = {"kind": "complex_state_after_longest", "ingredient": name}
    q = f"What is the state of the {name} right after the longest step of the recipe?"
    return sq, q, ["complex", "property", "time"], "single word", _state_distractors


def _build_complex_count_before(trace, rng):
    unique = _unique_phrase_steps(trace)
    if not unique:
        return None
    k, phrase = _pick(rng, unique)
    sq = {"kind": "complex_count_before", "phrase": phrase}
    q = f"How many steps happen before you {phrase}?"
    return sq, q, ["complex", "count", "order"], "numeric", _numeric_distractors


def _build_complex_after_longest(trace, rng):
    k = _longest_index(trace)
    if k is None or k + 1 >= len(trace.steps):
        return None
    phrases = [step_phrase(s) for s in trace.steps]
    if phrases.count(phrases[k]) != 1:
        return None
    sq = {"kind": "complex_after_longest"}
    q = "What happens right after the longest step of the recipe?"

    def distractors(answer, r):
        return _phrase_distractors(trace, r, exclude=[answer, step_phrase(trace.steps[k])])

    return sq, q, ["complex", "order", "time"], "text", distractors


def _build_complex_faster_neighbor(trace, rng):
    unique = _unique_phrase_steps(trace)
    cand = [
        (k, p)
        for k, p in unique
        if 0 < k < len(trace.steps) - 1
        and trace.steps[k - 1].duration_s != trace.steps[k + 1].duration_s
        and step_phrase(trace.steps[k - 1]) != step_phrase(trace.steps[k + 1])
    ]
    if not cand:
        return None
    k, phrase = _pick(rng, cand)
    sq = {"kind": "complex_faster_neighbor", "phrase": phrase}
    q = f"Which is faster: the step right before you {phrase}, or the step right after?"
    slower = step_phrase(
        trace.steps[k - 1]
        if trace.steps[k - 1].duration_s > trace.steps[k + 1].duration_s
        else trace.steps[k + 1]
    )

    def distractors(answer, r):
        return _phrase_distractors(trace, r, exclude=[answer, phrase], ensure=[slower])

    return sq, q, ["complex", "time", "order"], "text", distractors


_SUBTYPES = {
    "count": (
        (_build_count_verb, 0.30),
        (_build_count_ingredient, 0.25),
        (_build_count_color, 0.25),
        (_build_count_steps, 0.20),
    ),
    "time": (
        (lambda t, r: _build_time_compare(t, r, "faster"), 0.25),
        (lambda t, r: _build_time_compare(t, r, "slower"), 0.15),
        (lambda t, r: _build_time_extreme(t, r, "longest"), 0.20),
        (lambda t, r: _build_time_extreme(t, r, "shortest"), 0.15),
        (_build_time_duration, 0.25),
    ),
    "order": (
        (lambda t, r: _build_order_neighbor(t, r, "order_after"), 0.22),
        (lambda t, r: _build_order_neighbor(t, r, "order_before"), 0.18),
        (_build_order_between, 0.15),
        (lambda t, r: _build_order_edge(t, r, "order_first"), 0.08),
        (lambda t, r: _build_order_edge(t, r, "order_last"), 0.08),
        (_build_order_which_earlier, 0.17),
        (_build_order_matters, 0.12),
    ),
    "taste": (
        (_build_taste_flavor_of, 0.50),
        (_build_taste_has, 0.30),
        (_build_taste_source, 0.20),
    ),
    "property": (
        (_build_property_state_after_phrase, 0.35),
        (_build_property_state_after_step, 0.25),
        (_build_property_state_final, 0.30),
        (_build_property_color_final, 0.10),
    ),
    "complex": (
        (_build_complex_state_after_longest, 0.30),
        (_build_complex_count_before, 0.25),
        (_build_complex_after_longest, 0.25),
        (_build_complex_faster_neighbor, 0.20),
    ),
}


def _weighted_choice(rng, pairs):
    total = sum(w for _, w in pairs)
    x = rng.random() * total
    for item, w in pairs:
        x -= w
        if x <= 0:
            return item
    return pairs[-1][0]


def generate_qa(trace, rng, config=None, n_items=None):
    """Generate QA items for one trace per the configured category mix.

    Categories the trace cannot support (e.g. 'between' on a two-step
    recipe) are skipped and redrawn, never fabricated.
    """
    from .world import WorldConfig

    cfg = config or WorldConfig()
    n = n_items if n_items is not None else cfg.qa_per_video
    mix = tuple(cfg.category_mix.items())
    items = []
    for _ in range(n):
        built = None
        for _attempt in range(50):
            category = _weighted_choice(rng, mix)
            builder = _weighted_choice(rng, _SUBTYPES[category])
            built = builder(trace, rng)
            if built is not None:
                break
        if built is None:
            continue
        sq, question, tags, answer_type, distractor_fn = built
        answer = oracle_answer(trace, sq)
        distractors = distractor_fn(answer, rng)
        choices = [answer] + list(distractors)
        order = rng.permutation(len(choices))
        choices = [choices[int(k)] for k in order]
        item = QAItem(
            question=question,
            answer=answer,
            choices=choices,
            tags=sorted(tags),
            answer_type=answer_type,
            structured=sq,
        )
        validate_qa_item(item)
        items.append(item)
    return items
