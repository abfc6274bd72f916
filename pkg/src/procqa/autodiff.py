"""Dense float64 tensors with tape-based reverse-mode differentiation.

Ops record a backward closure onto the active :class:`Tape` only while one
is open, so evaluation outside a tape pays no bookkeeping. Broadcasting is
deliberately unsupported: every shape alignment is explicit, which keeps
each backward rule small enough to audit by eye.

Gradient slots accumulate additively. The tape clears the grads of its own
intermediate outputs before replaying, but never touches leaf tensors;
zeroing parameter grads between optimizer steps is the caller's job.
"""

import numpy as np

from . import accel


class DimensionError(ValueError):
    """Operand shapes do not satisfy an op's contract."""


class ContractError(ValueError):
    """An op or tape was used outside its stated preconditions."""


class NumericsError(ArithmeticError):
    """Non-finite values were produced or consumed."""


class Tensor:
    """A dense float64 array plus an optional gradient slot."""

    __slots__ = ("data", "requires_grad", "grad", "op")

    def __init__(self, data, requires_grad=False, op="leaf"):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = None
        self.op = op

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, op={self.op!r}, requires_grad={self.requires_grad})"


def parameter(data, op="param"):
    return Tensor(data, requires_grad=True, op=op)


_TAPE = None


class Tape:
    """Ordered record of executed ops; replays backward rules in reverse."""

    __slots__ = ("_records", "_prev")

    def __init__(self):
        self._records = []
        self._prev = None

    def __enter__(self):
        global _TAPE
        self._prev = _TAPE
        _TAPE = self
        return self

    def __exit__(self, exc_type, exc, tb):
        global _TAPE
        _TAPE = self._prev
        self._prev = None
        return False

    def __len__(self):
        return len(self._records)

    def record(self, op, outs, backward_fn):
        self._records.append((op, outs, backward_fn))

    def first_nonfinite(self):
        """Name the first op on the tape whose output went non-finite."""
        for op, outs, _ in self._records:
            for o in outs:
                if not np.all(np.isfinite(o.data)):
                    return op
        return None

    def backward(self, loss):
        """Populate grads of every requires_grad ancestor of ``loss``."""
        if loss.data.shape != ():
            raise ContractError(
                f"backward needs a scalar loss, got shape {loss.data.shape}"
            )
        produced = set()
        for _, outs, _ in self._records:
            produced.update(id(o) for o in outs)
        if id(loss) not in produced:
            raise ContractError("loss tensor was not produced on this tape")
        for _, outs, _ in self._records:
            for o in outs:
                o.grad = None
        loss.grad = np.ones((), dtype=np.float64)
        for _, outs, fn in reversed(self._records):
            if all(o.grad is None for o in outs):
                continue
            fn()


def _acc(t, g):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.array(g, dtype=np.float64)
    else:
        t.grad += g


def _acc_owned(t, g):
    """Accumulate a gradient buffer the caller will not reuse (no copy)."""
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = g
    else:
        t.grad += g


def _make(data, inputs, op):
    rg = _TAPE is not None and any(t.requires_grad for t in inputs)
    return Tensor(data, requires_grad=rg, op=op)


def _record(out, fn):
    if out.requires_grad:
        _TAPE.record(out.op, (out,), fn)


def _grad_or_zeros(t):
    return t.grad if t.grad is not None else np.zeros(t.data.shape)


# ---------------------------------------------------------------------------
# ops


def matmul(a, b):
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    out = _make(np.dot(a.data, b.data), (a, b), "matmul")

    def fn():
        g = out.grad
        _acc_owned(a, np.dot(g, b.data.T))
        _acc_owned(b, np.dot(a.data.T, g))

    _record(out, fn)
    return out


def matvec(m, v):
    if m.data.ndim != 2 or v.data.ndim != 1 or m.shape[1] != v.shape[0]:
        raise DimensionError(f"matvec: incompatible shapes {m.shape} and {v.shape}")
    out = _make(np.dot(m.data, v.data), (m, v), "matvec")

    def fn():
        g = out.grad
        _acc_owned(m, np.outer(g, v.data))
        _acc_owned(v, np.dot(m.data.T, g))

    _record(out, fn)
    return out


def dot(a, b):
    if a.data.ndim != 1 or b.data.ndim != 1 or a.shape != b.shape:
        raise DimensionError(f"dot: incompatible shapes {a.shape} and {b.shape}")
    out = _make(np.dot(a.data, b.data), (a, b), "dot")

    def fn():
        g = out.grad
        _acc(a, g * b.data)
        _acc(b, g * a.data)

    _record(out, fn)
    return out


def add(a, b):
    if a.shape != b.shape:
        raise DimensionError(f"add: incompatible shapes {a.shape} and {b.shape}")
    out = _make(a.data + b.data, (a, b), "add")

    def fn():
        _acc(a, out.grad)
        _acc(b, out.grad)

    _record(out, fn)
    return out


def mul(a, b):
    if a.shape != b.shape:
        raise DimensionError(f"mul: incompatible shapes {a.shape} and {b.shape}")
    out = _make(a.data * b.data, (a, b), "mul")

    def fn():
        g = out.grad
        _acc(a, g * b.data)
        _acc(b, g * a.data)

    _record(out, fn)
    return out


def scale(a, s):
    s = float(s)
    out = _make(a.data * s, (a,), "scale")

    def fn():
        _acc(a, out.grad * s)

    _record(out, fn)
    return out


def relu(x):
    mask = x.data > 0.0
    out = _make(np.where(mask, x.data, 0.0), (x,), "relu")

    def fn():
        _acc(x, out.grad * mask)

    _record(out, fn)
    return out


def sigmoid(x):
    y = 1.0 / (1.0 + np.exp(-x.data))
    out = _make(y, (x,), "sigmoid")

    def fn():
        _acc(x, out.grad * y * (1.0 - y))

    _record(out, fn)
    return out


def tanh(x):
    y = np.tanh(x.data)
    out = _make(y, (x,), "tanh")

    def fn():
        _acc(x, out.grad * (1.0 - y * y))

    _record(out, fn)
    return out


def concat(parts):
    """Concatenate 1D tensors along their only axis."""
    parts = list(parts)
    if not parts:
        raise ContractError("concat of an empty sequence")
    for p in parts:
        if p.data.ndim != 1:
            raise DimensionError(f"concat expects 1D tensors, got shape {p.shape}")
    out = _make(np.concatenate([p.data for p in parts]), parts, "concat")
    sizes = [p.shape[0] for p in parts]

    def fn():
        g = out.grad
        off = 0
        for p, n in zip(parts, sizes):
            _acc(p, g[off : off + n])
            off += n

    _record(out, fn)
    return out


def stack_rows(parts):
    """Stack N same-length 1D tensors into an (N, d) matrix."""
    parts = list(parts)
    if not parts:
        raise ContractError("stack_rows of an empty sequence")
    d = parts[0].shape
    for p in parts:
        if p.data.ndim != 1 or p.shape != d:
            raise DimensionError(f"stack_rows: mixed shapes {d} and {p.shape}")
    out = _make(np.stack([p.data for p in parts]), parts, "stack_rows")

    def fn():
        g = out.grad
        for k, p in enumerate(parts):
            _acc(p, g[k])

    _record(out, fn)
    return out


def index_row(m, i):
    if m.data.ndim != 2:
        raise DimensionError(f"index_row expects a matrix, got shape {m.shape}")
    if not 0 <= i < m.shape[0]:
        raise IndexError(f"row {i} out of range for shape {m.shape}")
    out = _make(m.data[i].copy(), (m,), "index_row")

    def fn():
        g = np.zeros(m.data.shape)
        g[i] = out.grad
        _acc(m, g)

    _record(out, fn)
    return out


def set_row(m, i, v):
    """Return a copy of ``m`` with row ``i`` replaced by ``v``."""
    if m.data.ndim != 2 or v.data.ndim != 1 or v.shape[0] != m.shape[1]:
        raise DimensionError(f"set_row: incompatible shapes {m.shape} and {v.shape}")
    if not 0 <= i < m.shape[0]:
        raise IndexError(f"row {i} out of range for shape {m.shape}")
    data = m.data.copy()
    data[i] = v.data
    out = _make(data, (m, v), "set_row")

    def fn():
        g = out.grad
        gm = g.copy()
        gm[i] = 0.0
        _acc(m, gm)
        _acc(v, g[i])

    _record(out, fn)
    return out


def transpose(m):
    if m.data.ndim != 2:
        raise DimensionError(f"transpose expects a matrix, got shape {m.shape}")
    out = _make(m.data.T.copy(), (m,), "transpose")

    def fn():
        _acc(m, out.grad.T)

    _record(out, fn)
    return out


def reshape(x, shape):
    out = _make(x.data.reshape(shape), (x,), "reshape")

    def fn():
        _acc(x, out.grad.reshape(x.data.shape))

    _record(out, fn)
    return out


def sum_all(x):
    out = _make(np.sum(x.data), (x,), "sum")

    def fn():
        _acc(x, np.full(x.data.shape, float(out.grad)))

    _record(out, fn)
    return out


def mean_pool(x, axis=0):
    """Mean over one axis of a matrix, returning a vector."""
    if x.data.ndim != 2 or axis not in (0, 1):
        raise DimensionError(f"mean_pool: need a matrix and axis 0/1, got {x.shape}")
    n = x.shape[axis]
    out = _make(x.data.mean(axis=axis), (x,), "mean_pool")

    def fn():
        g = out.grad / n
        if axis == 0:
            _acc(x, np.tile(g, (n, 1)))
        else:
            _acc(x, np.tile(g[:, None], (1, n)))

    _record(out, fn)
    return out


def softmax_row(x):
    """Softmax along the trailing axis of a 1D or 2D tensor."""
    if x.data.ndim not in (1, 2):
        raise DimensionError(f"softmax_row expects 1D or 2D, got shape {x.shape}")
    if not np.all(np.isfinite(x.data)):
        raise NumericsError("softmax_row: non-finite input")
    flat = x.data.reshape(-1, x.shape[-1])
    y = accel.softmax_rows(flat).reshape(x.data.shape)
    out = _make(y, (x,), "softmax_row")

    def fn():
        dy = out.grad.reshape(flat.shape)
        dx = accel.softmax_rows_backward(y.reshape(flat.shape), dy)
        _acc(x, dx.reshape(x.data.shape))

    _record(out, fn)
    return out


def embedding_lookup(table, ids, skip_id=None):
    """Gather rows of ``table``; rows with id == skip_id receive no gradient."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.ndim != 1:
        raise DimensionError(f"embedding_lookup: ids must be 1D, got {ids.shape}")
    if table.data.ndim != 2:
        raise DimensionError(f"embedding_lookup: table must be 2D, got {table.shape}")
    n = table.shape[0]
    if ids.size and (ids.min() < 0 or ids.max() >= n):
        bad = ids[(ids < 0) | (ids >= n)][0]
        raise IndexError(f"token id {bad} out of range for table of size {n}")
    out = _make(table.data[ids], (table,), "embedding_lookup")

    def fn():
        g = out.grad
        gt = np.zeros(table.data.shape)
        if skip_id is None:
            np.add.at(gt, ids, g)
        else:
            keep = ids != skip_id
            np.add.at(gt, ids[keep], g[keep])
        _acc(table, gt)

    _record(out, fn)
    return out


def cross_entropy(logits, target_index):
    """Softmax cross-entropy of 1D logits against one target class."""
    if logits.data.ndim != 1:
        raise DimensionError(f"cross_entropy expects 1D logits, got {logits.shape}")
    n = logits.shape[0]
    if not 0 <= target_index < n:
        raise IndexError(f"target {target_index} out of range for {n} logits")
    z = logits.data
    m = z.max()
    e = np.exp(z - m)
    lse = m + np.log(e.sum())
    out = _make(lse - z[target_index], (logits,), "cross_entropy")
    probs = e / e.sum()

    def fn():
        g = float(out.grad)
        d = probs.copy()
        d[target_index] -= 1.0
        _acc(logits, g * d)

    _record(out, fn)
    return out


def affine(w, b, x):
    """w @ x + b for a weight matrix, bias vector, and input vector."""
    if (
        w.data.ndim != 2
        or x.data.ndim != 1
        or b.data.ndim != 1
        or w.shape[1] != x.shape[0]
        or w.shape[0] != b.shape[0]
    ):
        raise DimensionError(
            f"affine: incompatible shapes {w.shape}, {b.shape}, {x.shape}"
        )
    out = _make(np.dot(w.data, x.data) + b.data, (w, b, x), "affine")

    def fn():
        g = out.grad
        _acc_owned(w, np.outer(g, x.data))
        _acc(b, g)
        _acc_owned(x, np.dot(w.data.T, g))

    _record(out, fn)
    return out


def row_scale(m, s):
    """Scale row i of a matrix by s[i]."""
    if m.data.ndim != 2 or s.data.ndim != 1 or s.shape[0] != m.shape[0]:
        raise DimensionError(f"row_scale: incompatible shapes {m.shape} and {s.shape}")
    out = _make(m.data * s.data[:, None], (m, s), "row_scale")

    def fn():
        g = out.grad
        _acc(m, g * s.data[:, None])
        _acc(s, np.sum(g * m.data, axis=1))

    _record(out, fn)
    return out


def lstm_step(x, h, c, wx, wh, b):
    """One fused gated-recurrence step; returns (h_next, c_next)."""
    H = wh.shape[1]
    if (
        x.data.ndim != 1
        or wx.shape != (4 * H, x.shape[0])
        or wh.shape != (4 * H, H)
        or b.shape != (4 * H,)
        or h.shape != (H,)
        or c.shape != (H,)
    ):
        raise DimensionError(
            f"lstm_step: incompatible shapes x={x.shape} h={h.shape} c={c.shape} "
            f"wx={wx.shape} wh={wh.shape} b={b.shape}"
        )
    h2d, c2d, acts = accel.lstm_step_forward(x.data, h.data, c.data, wx.data, wh.data, b.data)
    inputs = (x, h, c, wx, wh, b)
    rg = _TAPE is not None and any(t.requires_grad for t in inputs)
    h2 = Tensor(h2d, requires_grad=rg, op="lstm_step.h")
    c2 = Tensor(c2d, requires_grad=rg, op="lstm_step.c")

    if rg:

        def fn():
            dh2 = _grad_or_zeros(h2)
            dc2 = _grad_or_zeros(c2)
            dx, dh, dc, dwx, dwh, db = accel.lstm_step_backward(
                x.data, h.data, c.data, wx.data, wh.data, acts, c2d, dh2, dc2
            )
            _acc_owned(x, dx)
            _acc_owned(h, dh)
            _acc_owned(c, dc)
            _acc_owned(wx, dwx)
            _acc_owned(wh, dwh)
            _acc_owned(b, db)

        _TAPE.record("lstm_step", (h2, c2), fn)
    return h2, c2


def graph_propagate(z, w, normalize=True):
    """One dense graph-convolution layer: relu(G @ z @ w) with the
    adjacency G built from pairwise dot products of ``z`` (row-softmax
    normalized unless ``normalize`` is false). Single fused tape record.
    """
    if z.data.ndim != 2 or w.data.ndim != 2 or z.shape[1] != w.shape[0]:
        raise DimensionError(f"graph_propagate: incompatible shapes {z.shape} and {w.shape}")
    zd = z.data
    logits = np.dot(zd, zd.T)
    g = accel.softmax_rows(logits) if normalize else logits
    a = np.dot(g, zd)
    p = np.dot(a, w.data)
    mask = p > 0.0
    out = _make(np.where(mask, p, 0.0), (z, w), "graph_propagate")

    def fn():
        dp = out.grad * mask
        da = np.dot(dp, w.data.T)
        dw = np.dot(a.T, dp)
        dg = np.dot(da, zd.T)
        dz = np.dot(g.T, da)
        dl = accel.softmax_rows_backward(g, dg) if normalize else dg
        dz += np.dot(dl + dl.T, zd)
        _acc_owned(z, dz)
        _acc_owned(w, dw)

    _record(out, fn)
    return out


def concat_rows(parts):
    """Stack 2D tensors vertically (shared column count)."""
    parts = list(parts)
    if not parts:
        raise ContractError("concat_rows of an empty sequence")
    cols = parts[0].shape[1] if parts[0].data.ndim == 2 else None
    for p in parts:
        if p.data.ndim != 2 or p.shape[1] != cols:
            raise DimensionError(f"concat_rows: mixed shapes {[q.shape for q in parts]}")
    out = _make(np.concatenate([p.data for p in parts]), parts, "concat_rows")
    sizes = [p.shape[0] for p in parts]

    def fn():
        g = out.grad
        off = 0
        for p, n in zip(parts, sizes):
            _acc(p, g[off : off + n])
            off += n

    _record(out, fn)
    return out


def lstm_finals(xs_cat, lengths, wx, wh, b):
    """Fused gated recurrence over several sequences packed back to back.

    ``xs_cat`` is the (sum(lengths), D) row-wise concatenation of the
    sequences; each starts from zero state. Returns the (B, H) matrix of
    final hidden states under a single tape record.
    """
    H = wh.shape[1]
    lengths = np.asarray(lengths, dtype=np.int64)
    if lengths.size == 0 or np.any(lengths < 1):
        raise ContractError("lstm_finals: every sequence needs at least one step")
    if xs_cat.data.ndim != 2 or wx.shape != (4 * H, xs_cat.shape[1]) or b.shape != (4 * H,):
        raise DimensionError(
            f"lstm_finals: incompatible shapes xs={xs_cat.shape} wx={wx.shape} "
            f"wh={wh.shape} b={b.shape}"
        )
    ends = np.cumsum(lengths)
    if ends[-1] != xs_cat.shape[0]:
        raise DimensionError(
            f"lstm_finals: lengths sum to {ends[-1]} but inputs have {xs_cat.shape[0]} rows"
        )
    hs, cs, acts, finals_d = accel.lstm_multi_forward(
        xs_cat.data, ends, wx.data, wh.data, b.data
    )
    inputs = (xs_cat, wx, wh, b)
    rg = _TAPE is not None and any(t.requires_grad for t in inputs)
    finals = Tensor(finals_d, requires_grad=rg, op="lstm_finals")

    if rg:

        def fn():
            dhs = np.zeros(hs.shape)
            dhs[ends - 1] = finals.grad
            dxs, dwx, dwh, db = accel.lstm_multi_backward(
                xs_cat.data, ends, wx.data, wh.data, hs, cs, acts, dhs
            )
            _acc_owned(xs_cat, dxs)
            _acc_owned(wx, dwx)
            _acc_owned(wh, dwh)
            _acc_owned(b, db)

        _TAPE.record("lstm_finals", (finals,), fn)
    return finals


def lstm_sequence(xs, wx, wh, b):
    """Fused gated recurrence from zero state over (T, D) inputs.

    Returns the (T, H) matrix of hidden states; one tape record covers the
    whole unrolled loop.
    """
    H = wh.shape[1]
    if xs.data.ndim != 2 or wx.shape != (4 * H, xs.shape[1]) or b.shape != (4 * H,):
        raise DimensionError(
            f"lstm_sequence: incompatible shapes xs={xs.shape} wx={wx.shape} "
            f"wh={wh.shape} b={b.shape}"
        )
    if xs.shape[0] == 0:
        raise ContractError("lstm_sequence: empty sequence")
    h0 = np.zeros(H)
    c0 = np.zeros(H)
    hs_d, cs_d, acts = accel.lstm_sequence_forward(xs.data, wx.data, wh.data, b.data, h0, c0)
    inputs = (xs, wx, wh, b)
    rg = _TAPE is not None and any(t.requires_grad for t in inputs)
    hs = Tensor(hs_d, requires_grad=rg, op="lstm_sequence")

    if rg:

        def fn():
            dhs = hs.grad
            dxs, dwx, dwh, db = accel.lstm_sequence_backward(
                xs.data, wx.data, wh.data, h0, c0, hs_d, cs_d, acts, dhs
            )
            _acc_owned(xs, dxs)
            _acc_owned(wx, dwx)
            _acc_owned(wh, dwh)
            _acc_owned(b, db)

        _TAPE.record("lstm_sequence", (hs,), fn)
    return hs
