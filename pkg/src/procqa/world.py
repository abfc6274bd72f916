"""Symbolic procedural-recipe world.

Recipes are ordered steps of (verb, ingredients, attributes, duration)
with contiguous temporal boundaries. Verb effects mutate per-ingredient
color/state attributes, so the attribute state at any point is
recomputable by replaying the steps. Frame features are content
embeddings plus Gaussian noise; narratives are templated descriptions and
noisy, jittered transcripts.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np


@dataclass(frozen=True)
class VerbSpec:
    duration_range: tuple
    state: str | None = None
    color: str | None = None


@dataclass(frozen=True)
class IngredientSpec:
    color: str
    flavors: tuple


VERBS = {
    "add": VerbSpec((5, 20)),
    "pour": VerbSpec((5, 20)),
    "sprinkle": VerbSpec((5, 15)),
    "season": VerbSpec((5, 15)),
    "chop": VerbSpec((10, 45), state="chopped"),
    "slice": VerbSpec((10, 45), state="chopped"),
    "dice": VerbSpec((10, 45), state="chopped"),
    "mix": VerbSpec((10, 40), state="mixed"),
    "stir": VerbSpec((10, 40), state="mixed"),
    "whisk": VerbSpec((10, 40), state="mixed"),
    "blend": VerbSpec((15, 45), state="mixed"),
    "fry": VerbSpec((45, 180), state="cooked", color="brown"),
    "bake": VerbSpec((60, 240), state="cooked", color="brown"),
    "boil": VerbSpec((60, 240), state="cooked"),
    "grill": VerbSpec((45, 180), state="cooked", color="brown"),
    "roast": VerbSpec((60, 240), state="cooked", color="brown"),
    "steam": VerbSpec((45, 180), state="cooked"),
    "saute": VerbSpec((30, 120), state="cooked", color="golden"),
    "melt": VerbSpec((20, 90), state="dissolved"),
    "dissolve": VerbSpec((15, 60), state="dissolved"),
}

INGREDIENTS = {
    "onion": IngredientSpec("white", ("savory",)),
    "garlic": IngredientSpec("white", ("savory", "spicy")),
    "salt": IngredientSpec("white", ("salty",)),
    "sugar": IngredientSpec("white", ("sweet",)),
    "flour": IngredientSpec("white", ("savory",)),
    "rice": IngredientSpec("white", ("savory",)),
    "tofu": IngredientSpec("white", ("savory",)),
    "yogurt": IngredientSpec("white", ("sour",)),
    "tomato": IngredientSpec("red", ("tangy",)),
    "chili": IngredientSpec("red", ("spicy",)),
    "paprika": IngredientSpec("red", ("smoky", "spicy")),
    "beet": IngredientSpec("red", ("sweet",)),
    "spinach": IngredientSpec("green", ("bitter",)),
    "basil": IngredientSpec("green", ("savory",)),
    "parsley": IngredientSpec("green", ("bitter",)),
    "cucumber": IngredientSpec("green", ("tangy",)),
    "lime": IngredientSpec("green", ("sour", "tangy")),
    "broccoli": IngredientSpec("green", ("bitter",)),
    "lemon": IngredientSpec("yellow", ("sour", "tangy")),
    "corn": IngredientSpec("yellow", ("sweet",)),
    "butter": IngredientSpec("yellow", ("savory",)),
    "cheese": IngredientSpec("yellow", ("salty", "savory")),
    "ginger": IngredientSpec("yellow", ("spicy",)),
    "mushroom": IngredientSpec("brown", ("savory", "smoky")),
    "cocoa": IngredientSpec("brown", ("bitter", "sweet")),
    "coffee": IngredientSpec("brown", ("bitter",)),
    "cinnamon": IngredientSpec("brown", ("sweet", "spicy")),
    "walnut": IngredientSpec("brown", ("bitter",)),
    "honey": IngredientSpec("golden", ("sweet",)),
    "syrup": IngredientSpec("golden", ("sweet",)),
}

COLORS = ("white", "red", "green", "yellow", "brown", "golden")
STATES = ("raw", "chopped", "mixed", "cooked", "dissolved")
FLAVORS = ("sweet", "salty", "sour", "bitter", "spicy", "savory", "smoky", "tangy")

VERB_NAMES = tuple(VERBS)
INGREDIENT_NAMES = tuple(INGREDIENTS)

INITIAL_STATE = "raw"

FILLERS = ("um", "uh", "okay", "right", "folks", "really", "you", "know", "so", "well")

_UTTERANCE_TEMPLATES = (
    "okay now we {phrase}",
    "next we {phrase}",
    "let us {phrase}",
    "time to {phrase}",
    "here we {phrase}",
)

_DESCRIPTION_OPENERS = ("Next", "Then", "After that", "Now")


@dataclass(frozen=True)
class Step:
    verb: str
    ingredients: tuple
    attributes: dict  # post-step {ingredient: {"color", "state"}}
    duration_s: int
    start_s: float
    end_s: float


@dataclass
class RecipeTrace:
    steps: list
    ingredients: tuple  # every ingredient used anywhere in the recipe
    final_state: dict
    duration_s: float


@dataclass
class WorldConfig:
    steps_min: int = 2
    steps_max: int = 12
    recipe_ingredients_min: int = 2
    recipe_ingredients_max: int = 6
    step_ingredients_max: int = 3
    seconds_per_frame: float = 15.0
    frame_dim: int = 16
    feature_sigma: float = 0.1
    p_ins: float = 0.15
    p_drop: float = 0.10
    jitter_s: float = 3.0
    qa_per_video: int = 8
    category_mix: dict = field(
        default_factory=lambda: {
            "count": 0.16,
            "time": 0.14,
            "order": 0.20,
            "taste": 0.16,
            "property": 0.18,
            "complex": 0.16,
        }
    )


def initial_attributes(ingredient):
    return {"color": INGREDIENTS[ingredient].color, "state": INITIAL_STATE}


def apply_verb(verb, attrs):
    spec = VERBS[verb]
    out = dict(attrs)
    if spec.state is not None:
        out["state"] = spec.state
    if spec.color is not None:
        out["color"] = spec.color
    return out


def replay_states(steps, ingredients):
    """Final per-ingredient attributes after applying steps in order."""
    state = {name: initial_attributes(name) for name in ingredients}
    for step in steps:
        for name in step.ingredients:
            state[name] = apply_verb(step.verb, state[name])
    return state


def replay_until(trace, step_index):
    """Attributes after the first ``step_index + 1`` steps."""
    return replay_states(trace.steps[: step_index + 1], trace.ingredients)


def replay_at_time(trace, t_s):
    """Attributes once every step that finished by ``t_s`` has applied."""
    done = [s for s in trace.steps if s.end_s <= t_s]
    return replay_states(done, trace.ingredients)


def step_phrase(step):
    """Natural rendering of one step, e.g. 'chop the onion and the salt'."""
    names = [f"the {n}" for n in step.ingredients]
    if len(names) == 1:
        objects = names[0]
    else:
        objects = ", ".join(names[:-1]) + " and " + names[-1]
    return f"{step.verb} {objects}"


def generate_recipe(rng, config=None):
    """Sample a causally consistent recipe trace.

    The first step introduces ingredients with a no-effect verb; later
    steps mutate attributes via their verb's effects. Durations come from
    per-verb ranges and boundaries are contiguous from zero.
    """
    cfg = config or WorldConfig()
    n_steps = int(rng.integers(cfg.steps_min, cfg.steps_max + 1))
    n_ing = int(rng.integers(cfg.recipe_ingredients_min, cfg.recipe_ingredients_max + 1))
    pool = [str(x) for x in rng.choice(INGREDIENT_NAMES, size=n_ing, replace=False)]
    attrs = {name: initial_attributes(name) for name in pool}

    steps = []
    t = 0.0
    for k in range(n_steps):
        if k == 0:
            verb = "add"
        else:
            verb = str(rng.choice(VERB_NAMES))
        n_use = int(rng.integers(1, min(cfg.step_ingredients_max, len(pool)) + 1))
        used = tuple(sorted(str(x) for x in rng.choice(pool, size=n_use, replace=False)))
        lo, hi = VERBS[verb].duration_range
        duration = int(rng.integers(lo, hi + 1))
        for name in used:
            attrs[name] = apply_verb(verb, attrs[name])
        snapshot = {name: dict(attrs[name]) for name in used}
        steps.append(
            Step(
                verb=verb,
                ingredients=used,
                attributes=snapshot,
                duration_s=duration,
                start_s=t,
                end_s=t + duration,
            )
        )
        t += duration

    used_anywhere = tuple(sorted({n for s in steps for n in s.ingredients}))
    final_state = {name: dict(attrs[name]) for name in used_anywhere}
    return RecipeTrace(
        steps=steps, ingredients=used_anywhere, final_state=final_state, duration_s=t
    )


# ---------------------------------------------------------------------------
# frame features


def content_table(feature_seed, frame_dim):
    """Fixed random embedding tables for verbs, ingredients, and attributes."""
    rng = np.random.default_rng([int(feature_seed), 0x5EED])
    return {
        "verb": {v: rng.standard_normal(frame_dim) for v in VERB_NAMES},
        "ingredient": {i: rng.standard_normal(frame_dim) for i in INGREDIENT_NAMES},
        "color": {c: rng.standard_normal(frame_dim) for c in COLORS},
        "state": {s: rng.standard_normal(frame_dim) for s in STATES},
    }


def step_content_vector(table, verb, ingredients, attributes):
    """Deterministic content embedding of one step's (verb, ingredients,
    attributes)."""
    vec = table["verb"][verb].copy()
    parts = []
    for name in ingredients:
        a = attributes[name]
        parts.append(
            table["ingredient"][name] + table["color"][a["color"]] + table["state"][a["state"]]
        )
    vec += np.mean(parts, axis=0)
    return vec


def render_features(trace, feature_seed, video_key, config=None):
    """Per-segment frame features: ceil(duration/u) frames of content
    embedding plus Gaussian noise, seeded independently per video."""
    cfg = config or WorldConfig()
    table = content_table(feature_seed, cfg.frame_dim)
    noise_rng = np.random.default_rng([int(feature_seed), int(video_key), 0xF8A3E])
    out = []
    for step in trace.steps:
        content = step_content_vector(table, step.verb, step.ingredients, step.attributes)
        k = max(1, math.ceil(step.duration_s / cfg.seconds_per_frame))
        frames = np.tile(content, (k, 1))
        if cfg.feature_sigma > 0:
            frames = frames + cfg.feature_sigma * noise_rng.standard_normal(frames.shape)
        out.append(frames)
    return out


# ---------------------------------------------------------------------------
# narratives


def render_descriptions(trace, rng):
    """One clean templated sentence per step; always mentions the verb."""
    out = []
    for k, step in enumerate(trace.steps):
        if k == 0:
            opener = "First"
        elif k == len(trace.steps) - 1:
            opener = "Finally"
        else:
            opener = str(rng.choice(_DESCRIPTION_OPENERS))
        out.append(f"{opener}, {step_phrase(step)}.")
    return out


def render_transcripts(trace, rng, config=None):
    """Noisy spoken-style utterances with timestamps that may cross
    segment boundaries (and fall off either end of the video).

    Returns one list of (t_s, text) per segment, in speaking order.
    """
    cfg = config or WorldConfig()
    out = []
    for step in trace.steps:
        n_utt = 1 + step.duration_s // 45
        utts = []
        for u in range(n_utt):
            template = str(rng.choice(_UTTERANCE_TEMPLATES))
            words = template.format(phrase=step_phrase(step)).split()
            noisy = []
            for w in words:
                if cfg.p_drop > 0 and rng.random() < cfg.p_drop:
                    continue
                noisy.append(w)
                if cfg.p_ins > 0 and rng.random() < cfg.p_ins:
                    noisy.append(str(rng.choice(FILLERS)))
            if not noisy:
                noisy = [words[-1]]
            t = step.start_s + u * (step.duration_s / n_utt)
            if cfg.jitter_s > 0:
                t += rng.uniform(-cfg.jitter_s, cfg.jitter_s)
            utts.append((t, " ".join(noisy)))
        out.append(utts)
    return out
