"""Independent oracles used by the tests.

Everything here is deliberately written without the package's tape or
kernels: plain numpy straight-line code for the model math, and a second
replay implementation for the synthetic-world questions. These stay
independent of the code paths they check.
"""

import numpy as np


def central_diff(loss_fn, param, eps=1e-5):
    """Finite-difference gradient oracle over one parameter tensor."""
    flat = param.data.reshape(-1)
    grad = np.empty_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        up = float(loss_fn().data)
        flat[i] = orig - eps
        dn = float(loss_fn().data)
        flat[i] = orig
        grad[i] = (up - dn) / (2 * eps)
    return grad.reshape(param.data.shape)


def rel_err(a, b):
    denom = np.maximum(1e-6, np.maximum(np.abs(a), np.abs(b)))
    return np.max(np.abs(np.asarray(a) - np.asarray(b)) / denom)


def softmax_rows_np(x):
    x = np.atleast_2d(x)
    e = np.exp(x - x.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def lstm_cell_np(x, h, c, wx, wh, b):
    """Plain-numpy gated cell step (input/forget/output/candidate order)."""
    hd = wh.shape[1]
    pre = wx @ x + wh @ h + b
    i = 1.0 / (1.0 + np.exp(-pre[:hd]))
    f = 1.0 / (1.0 + np.exp(-pre[hd : 2 * hd]))
    o = 1.0 / (1.0 + np.exp(-pre[2 * hd : 3 * hd]))
    g = np.tanh(pre[3 * hd :])
    c2 = f * c + i * g
    h2 = o * np.tanh(c2)
    return h2, c2


def attend_np(q, x):
    weights = softmax_rows_np(x @ q)[0]
    return weights[:, None] * x


def gcn_forward_np(x, q, ws, attend, normalize=True):
    """Straight-line three-layer graph convolution with mean pooling."""
    s = x
    for j, w in enumerate(ws):
        if attend and j == len(ws) - 1:
            s = attend_np(q, s)
        logits = s @ s.T
        g = softmax_rows_np(logits) if normalize else logits
        s = np.maximum(0.0, g @ s @ w)
    return s.mean(axis=0)


def rgcn_forward_np(x, q, wx, wh, b, w, attend, normalize=True):
    """Hand-unrolled recurrent-graph forward pass.

    Per step t: read node t-1 of the current layer (zeros at t=0), run the
    cell on [x_t, read] from the previous hidden state, write the hidden
    state into node t, then propagate the next layer from the post-swap
    nodes. Returns the final hidden state.
    """
    n, d = x.shape
    hd = wh.shape[1]
    h = np.zeros(hd)
    c = np.zeros(hd)
    if attend:
        x = attend_np(q, x)
    z = x.copy()
    for t in range(n):
        read = z[t - 1].copy() if t > 0 else np.zeros(d)
        h, c = lstm_cell_np(np.concatenate([x[t], read]), h, c, wx, wh, b)
        z[t] = h
        if t < n - 1:
            logits = z @ z.T
            g = softmax_rows_np(logits) if normalize else logits
            z = np.maximum(0.0, g @ z @ w)
    return h


# ---------------------------------------------------------------------------
# second replay oracle for the synthetic world (independent of qagen)

_VERB_EFFECTS = None


def _effects():
    global _VERB_EFFECTS
    if _VERB_EFFECTS is None:
        from procqa.world import VERBS

        _VERB_EFFECTS = {name: (spec.state, spec.color) for name, spec in VERBS.items()}
    return _VERB_EFFECTS


def _replay(steps, ingredients):
    from procqa.world import INGREDIENTS

    state = {n: ["raw", INGREDIENTS[n].color] for n in ingredients}
    for s in steps:
        st_eff, col_eff = _effects()[s.verb]
        for n in s.ingredients:
            if st_eff is not None:
                state[n][0] = st_eff
            if col_eff is not None:
                state[n][1] = col_eff
    return {n: tuple(v) for n, v in state.items()}


def _phrase(step):
    names = [f"the {n}" for n in step.ingredients]
    if len(names) == 1:
        objs = names[0]
    else:
        objs = ", ".join(names[:-1]) + " and " + names[-1]
    return f"{step.verb} {objs}"


def _find_unique(trace, phrase):
    hits = [k for k, s in enumerate(trace.steps) if _phrase(s) == phrase]
    assert len(hits) == 1, phrase
    return hits[0]


def replay_oracle(trace, sq):
    """Second implementation of the question oracle, coded separately."""
    from procqa.world import COLORS, FLAVORS, INGREDIENTS

    kind = sq["kind"]
    steps = trace.steps
    durs = [s.duration_s for s in steps]

    if kind == "count_verb":
        return str(len([s for s in steps if s.verb == sq["verb"]]))
    if kind == "count_ingredient":
        return str(len([s for s in steps if sq["ingredient"] in s.ingredients]))
    if kind == "count_color":
        return str(len([n for n in trace.ingredients if INGREDIENTS[n].color == sq["color"]]))
    if kind == "count_steps":
        return str(len(steps))
    if kind in ("time_faster", "time_slower"):
        a, b = steps[sq["i"]], steps[sq["j"]]
        if kind == "time_faster":
            win = a if a.duration_s < b.duration_s else b
        else:
            win = a if a.duration_s > b.duration_s else b
        return _phrase(win)
    if kind == "time_longest":
        return _phrase(steps[int(np.argmax(durs))])
    if kind == "time_shortest":
        return _phrase(steps[int(np.argmin(durs))])
    if kind == "time_duration":
        k = _find_unique(trace, sq["phrase"])
        return str(int(round(durs[k] / 10.0) * 10))
    if kind == "order_after":
        return _phrase(steps[_find_unique(trace, sq["phrase"]) + 1])
    if kind == "order_before":
        return _phrase(steps[_find_unique(trace, sq["phrase"]) - 1])
    if kind == "order_between":
        return _phrase(steps[_find_unique(trace, sq["first"]) + 1])
    if kind == "order_first":
        return _phrase(steps[0])
    if kind == "order_last":
        return _phrase(steps[-1])
    if kind == "order_which_earlier":
        i = _find_unique(trace, sq["first"])
        j = _find_unique(trace, sq["second"])
        return sq["first"] if i < j else sq["second"]
    if kind == "order_matters":
        swapped = list(steps)
        swapped[sq["i"]], swapped[sq["j"]] = swapped[sq["j"]], swapped[sq["i"]]
        same = _replay(swapped, trace.ingredients) == _replay(steps, trace.ingredients)
        return "no" if same else "yes"
    if kind == "taste_flavor_of":
        return INGREDIENTS[sq["ingredient"]].flavors[0]
    if kind == "taste_has":
        have = set()
        for n in trace.ingredients:
            have.update(INGREDIENTS[n].flavors)
        return "yes" if sq["flavor"] in have else "no"
    if kind == "taste_source":
        carriers = [n for n in trace.ingredients if sq["flavor"] in INGREDIENTS[n].flavors]
        assert len(carriers) == 1
        return carriers[0]
    if kind == "property_state_after":
        return _replay(steps[: sq["step_index"] + 1], trace.ingredients)[sq["ingredient"]][0]
    if kind == "property_state_after_phrase":
        k = _find_unique(trace, sq["phrase"])
        return _replay(steps[: k + 1], trace.ingredients)[sq["ingredient"]][0]
    if kind == "property_state_at_time":
        done = [s for s in steps if s.end_s <= sq["t_s"]]
        return _replay(done, trace.ingredients)[sq["ingredient"]][0]
    if kind == "property_state_final":
        return _replay(steps, trace.ingredients)[sq["ingredient"]][0]
    if kind == "property_color_final":
        return _replay(steps, trace.ingredients)[sq["ingredient"]][1]
    if kind == "complex_state_after_longest":
        k = int(np.argmax(durs))
        return _replay(steps[: k + 1], trace.ingredients)[sq["ingredient"]][0]
    if kind == "complex_count_before":
        return str(_find_unique(trace, sq["phrase"]))
    if kind == "complex_after_longest":
        return _phrase(steps[int(np.argmax(durs)) + 1])
    if kind == "complex_faster_neighbor":
        k = _find_unique(trace, sq["phrase"])
        a, b = steps[k - 1], steps[k + 1]
        return _phrase(a if a.duration_s < b.duration_s else b)
    raise AssertionError(f"unhandled kind {kind}")
