"""Hot numeric kernels, numba-jitted when available.

Every kernel has a single source written in numpy that either runs as-is
(pure-numpy path) or gets compiled with ``@njit`` (numba path). The numba
path is the default whenever numba imports; set ``PROCQA_NO_NUMBA=1`` to
force the numpy path. The uncompiled functions stay reachable through
``PY_IMPLS`` so the two paths can be benchmarked and cross-checked.

Gate layout for the recurrent-cell kernels: the 4H axis is ordered
input, forget, output, candidate.
"""

import os

import numpy as np


def _numba_disabled() -> bool:
    return os.environ.get("PROCQA_NO_NUMBA", "").strip().lower() in {"1", "true", "yes"}


HAS_NUMBA = False
if not _numba_disabled():
    try:
        from numba import njit as _njit

        HAS_NUMBA = True
    except ImportError:
        HAS_NUMBA = False

ACTIVE_BACKEND = "numba" if HAS_NUMBA else "numpy"

# name -> plain-python implementation, kept for benchmarks and path tests
PY_IMPLS = {}


def _kernel(fn):
    PY_IMPLS[fn.__name__] = fn
    if HAS_NUMBA:
        return _njit(cache=True)(fn)
    return fn


@_kernel
def lstm_sequence_forward(xs, wx, wh, b, h0, c0):
    """Run T gated recurrence steps; returns (hs, cs, acts) caches.

    xs: (T, D) inputs, wx: (4H, D), wh: (4H, H), b: (4H,).
    acts stores the post-nonlinearity gate values needed by backward.
    """
    T = xs.shape[0]
    H = wh.shape[1]
    hs = np.empty((T, H))
    cs = np.empty((T, H))
    acts = np.empty((T, 4 * H))
    h = h0
    c = c0
    for t in range(T):
        pre = np.dot(wx, xs[t])
        pre += np.dot(wh, h)
        for k in range(H):
            ik = 1.0 / (1.0 + np.exp(-(pre[k] + b[k])))
            fk = 1.0 / (1.0 + np.exp(-(pre[H + k] + b[H + k])))
            ok = 1.0 / (1.0 + np.exp(-(pre[2 * H + k] + b[2 * H + k])))
            gk = np.tanh(pre[3 * H + k] + b[3 * H + k])
            ck = fk * c[k] + ik * gk
            acts[t, k] = ik
            acts[t, H + k] = fk
            acts[t, 2 * H + k] = ok
            acts[t, 3 * H + k] = gk
            cs[t, k] = ck
            hs[t, k] = ok * np.tanh(ck)
        h = hs[t]
        c = cs[t]
    return hs, cs, acts


@_kernel
def lstm_sequence_backward(xs, wx, wh, h0, c0, hs, cs, acts, dhs):
    """Backward through T steps given dL/dhs; returns (dxs, dwx, dwh, db).

    Per-step work stays at gate math plus one gemv; the weight gradients
    are batched into two matmuls at the end.
    """
    T = xs.shape[0]
    H = wh.shape[1]
    dpres = np.empty((T, 4 * H))
    dh = np.zeros(H)
    dc = np.zeros(H)
    for t in range(T - 1, -1, -1):
        c_prev = cs[t - 1] if t > 0 else c0
        for k in range(H):
            i = acts[t, k]
            f = acts[t, H + k]
            o = acts[t, 2 * H + k]
            g = acts[t, 3 * H + k]
            tc = np.tanh(cs[t, k])
            dhk = dh[k] + dhs[t, k]
            dck = dc[k] + dhk * o * (1.0 - tc * tc)
            dok = dhk * tc
            dpres[t, k] = dck * g * i * (1.0 - i)
            dpres[t, H + k] = dck * c_prev[k] * f * (1.0 - f)
            dpres[t, 2 * H + k] = dok * o * (1.0 - o)
            dpres[t, 3 * H + k] = dck * i * (1.0 - g * g)
            dc[k] = dck * f
        dh = np.dot(dpres[t], wh)
    dxs = np.dot(dpres, wx)
    h_prevs = np.empty((T, H))
    h_prevs[0] = h0
    if T > 1:
        h_prevs[1:] = hs[: T - 1]
    dpt = dpres.T.copy()
    dwx = np.dot(dpt, xs)
    dwh = np.dot(dpt, h_prevs)
    db = np.sum(dpres, axis=0)
    return dxs, dwx, dwh, db


@_kernel
def lstm_step_forward(x, h, c, wx, wh, b):
    """One gated step; returns (h2, c2, acts) with acts of shape (4H,)."""
    H = wh.shape[1]
    pre = np.dot(wx, x)
    pre += np.dot(wh, h)
    acts = np.empty(4 * H)
    h2 = np.empty(H)
    c2 = np.empty(H)
    for k in range(H):
        ik = 1.0 / (1.0 + np.exp(-(pre[k] + b[k])))
        fk = 1.0 / (1.0 + np.exp(-(pre[H + k] + b[H + k])))
        ok = 1.0 / (1.0 + np.exp(-(pre[2 * H + k] + b[2 * H + k])))
        gk = np.tanh(pre[3 * H + k] + b[3 * H + k])
        ck = fk * c[k] + ik * gk
        acts[k] = ik
        acts[H + k] = fk
        acts[2 * H + k] = ok
        acts[3 * H + k] = gk
        c2[k] = ck
        h2[k] = ok * np.tanh(ck)
    return h2, c2, acts


@_kernel
def lstm_step_backward(x, h, c, wx, wh, acts, c2, dh2, dc2):
    """Backward for one step; returns (dx, dh, dc, dwx, dwh, db)."""
    H = wh.shape[1]
    dpre = np.empty(4 * H)
    dc = np.empty(H)
    for k in range(H):
        i = acts[k]
        f = acts[H + k]
        o = acts[2 * H + k]
        g = acts[3 * H + k]
        tc = np.tanh(c2[k])
        dck = dc2[k] + dh2[k] * o * (1.0 - tc * tc)
        dok = dh2[k] * tc
        dpre[k] = dck * g * i * (1.0 - i)
        dpre[H + k] = dck * c[k] * f * (1.0 - f)
        dpre[2 * H + k] = dok * o * (1.0 - o)
        dpre[3 * H + k] = dck * i * (1.0 - g * g)
        dc[k] = dck * f
    dwx = np.outer(dpre, x)
    dwh = np.outer(dpre, h)
    db = dpre
    dx = np.dot(dpre, wx)
    dh = np.dot(dpre, wh)
    return dx, dh, dc, dwx, dwh, db


@_kernel
def lstm_multi_forward(xs_cat, ends, wx, wh, b):
    """Encode B independent sequences stored back to back in one call.

    xs_cat: (sumT, D); ends[k] is one past the last row of sequence k.
    Every sequence starts from zero state. Returns row-aligned caches
    (hs, cs, acts) plus the (B, H) matrix of final hidden states.
    """
    H = wh.shape[1]
    total = xs_cat.shape[0]
    B = ends.shape[0]
    hs = np.empty((total, H))
    cs = np.empty((total, H))
    acts = np.empty((total, 4 * H))
    finals = np.empty((B, H))
    zero = np.zeros(H)
    start = 0
    for s in range(B):
        end = ends[s]
        h = zero
        c = zero
        for t in range(start, end):
            pre = np.dot(wx, xs_cat[t])
            pre += np.dot(wh, h)
            for k in range(H):
                ik = 1.0 / (1.0 + np.exp(-(pre[k] + b[k])))
                fk = 1.0 / (1.0 + np.exp(-(pre[H + k] + b[H + k])))
                ok = 1.0 / (1.0 + np.exp(-(pre[2 * H + k] + b[2 * H + k])))
                gk = np.tanh(pre[3 * H + k] + b[3 * H + k])
                ck = fk * c[k] + ik * gk
                acts[t, k] = ik
                acts[t, H + k] = fk
                acts[t, 2 * H + k] = ok
                acts[t, 3 * H + k] = gk
                cs[t, k] = ck
                hs[t, k] = ok * np.tanh(ck)
            h = hs[t]
            c = cs[t]
        finals[s] = h
        start = end
    return hs, cs, acts, finals


@_kernel
def lstm_multi_backward(xs_cat, ends, wx, wh, hs, cs, acts, dhs_cat):
    """Backward across all sequences; weight grads accumulate jointly."""
    H = wh.shape[1]
    total = xs_cat.shape[0]
    B = ends.shape[0]
    dpres = np.empty((total, 4 * H))
    zero = np.zeros(H)
    dh = np.zeros(H)
    dc = np.empty(H)
    start = 0
    for s in range(B):
        end = ends[s]
        for k in range(H):
            dh[k] = 0.0
            dc[k] = 0.0
        for t in range(end - 1, start - 1, -1):
            c_prev = cs[t - 1] if t > start else zero
            for k in range(H):
                i = acts[t, k]
                f = acts[t, H + k]
                o = acts[t, 2 * H + k]
                g = acts[t, 3 * H + k]
                tc = np.tanh(cs[t, k])
                dhk = dh[k] + dhs_cat[t, k]
                dck = dc[k] + dhk * o * (1.0 - tc * tc)
                dok = dhk * tc
                dpres[t, k] = dck * g * i * (1.0 - i)
                dpres[t, H + k] = dck * c_prev[k] * f * (1.0 - f)
                dpres[t, 2 * H + k] = dok * o * (1.0 - o)
                dpres[t, 3 * H + k] = dck * i * (1.0 - g * g)
                dc[k] = dck * f
            dh = np.dot(dpres[t], wh)
        start = end
    dxs = np.dot(dpres, wx)
    h_prevs = np.empty((total, H))
    start = 0
    for s in range(B):
        end = ends[s]
        h_prevs[start] = zero
        for t in range(start + 1, end):
            h_prevs[t] = hs[t - 1]
        start = end
    dpt = dpres.T.copy()
    dwx = np.dot(dpt, xs_cat)
    dwh = np.dot(dpt, h_prevs)
    db = np.sum(dpres, axis=0)
    return dxs, dwx, dwh, db


@_kernel
def softmax_rows(x):
    """Row-wise stable softmax for a 2D array."""
    out = np.empty(x.shape)
    for r in range(x.shape[0]):
        m = np.max(x[r])
        e = np.exp(x[r] - m)
        out[r] = e / np.sum(e)
    return out


@_kernel
def softmax_rows_backward(y, dy):
    dx = np.empty(y.shape)
    for r in range(y.shape[0]):
        s = np.sum(y[r] * dy[r])
        dx[r] = y[r] * (dy[r] - s)
    return dx


@_kernel
def adam_update(p, g, m, v, t, lr, beta1, beta2, eps):
    """In-place Adam step with bias correction on flat float64 views."""
    m[:] = beta1 * m + (1.0 - beta1) * g
    v[:] = beta2 * v + (1.0 - beta2) * g * g
    mhat = m / (1.0 - beta1**t)
    vhat = v / (1.0 - beta2**t)
    p -= lr * mhat / (np.sqrt(vhat) + eps)


KERNELS = {
    "lstm_sequence_forward": lstm_sequence_forward,
    "lstm_sequence_backward": lstm_sequence_backward,
    "lstm_step_forward": lstm_step_forward,
    "lstm_step_backward": lstm_step_backward,
    "lstm_multi_forward": lstm_multi_forward,
    "lstm_multi_backward": lstm_multi_backward,
    "softmax_rows": softmax_rows,
    "softmax_rows_backward": softmax_rows_backward,
    "adam_update": adam_update,
}


def warmup():
    """Trigger jit compilation on tiny inputs so timings stay honest."""
    if not HAS_NUMBA:
        return
    rng = np.random.default_rng(0)
    xs = rng.standard_normal((2, 3))
    wx = rng.standard_normal((8, 3))
    wh = rng.standard_normal((8, 2))
    b = np.zeros(8)
    z = np.zeros(2)
    hs, cs, acts = lstm_sequence_forward(xs, wx, wh, b, z, z)
    lstm_sequence_backward(xs, wx, wh, z, z, hs, cs, acts, np.ones_like(hs))
    h2, c2, a1 = lstm_step_forward(xs[0], z, z, wx, wh, b)
    lstm_step_backward(xs[0], z, z, wx, wh, a1, c2, np.ones(2), np.zeros(2))
    ends = np.array([1, 2], dtype=np.int64)
    hs, cs, acts, _ = lstm_multi_forward(xs, ends, wx, wh, b)
    lstm_multi_backward(xs, ends, wx, wh, hs, cs, acts, np.ones_like(hs))
    y = softmax_rows(xs)
    softmax_rows_backward(y, np.ones_like(y))
    p = np.zeros(4)
    adam_update(p, np.ones(4), np.zeros(4), np.zeros(4), 1, 1e-3, 0.9, 0.999, 1e-8)
