"""Dense float64 tensors with tape-based reverse-mode differentiation.

Every operation that touches a tensor requiring gradients records a node on
that tensor's tape; ``backward`` replays the tape in reverse to accumulate
vector-Jacobian products. The op set is deliberately small: just enough to
express dense classifier forward passes and batch distance losses.

Masked reductions use a large negative sentinel (``NEG_MASK``) instead of
-inf so that every op output stays finite and the blanket finiteness check
can stay strict.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Finite stand-in for log(0) in masked log-sum-exp reductions.
NEG_MASK = -1e300


class ShapeMismatchError(ValueError):
    """Raised when an op receives shape-incompatible inputs."""

    def __init__(self, op: str, *shapes):
        self.op = op
        self.shapes = shapes
        super().__init__(f"{op}: incompatible shapes {' and '.join(str(s) for s in shapes)}")


class NonFiniteError(ArithmeticError):
    """Raised when an op would produce NaN/inf, or external data contains it."""

    def __init__(self, op: str):
        self.op = op
        super().__init__(f"{op}: non-finite values")


class Tape:
    """Append-only record of differentiable operations.

    Nodes are stored in execution order, which is a topological order by
    construction (an op can only consume tensors that already exist), so the
    backward pass is a single reverse sweep.
    """

    def __init__(self):
        self._nodes = []  # (out_id, in_ids, vjp) ; vjp(grad_out) -> grads per input
        self._next_id = 0
        self._leaf_ids = []

    def _new_id(self) -> int:
        nid = self._next_id
        self._next_id += 1
        return nid

    def _record(self, out_id, in_ids, vjp):
        self._nodes.append((out_id, in_ids, vjp))

    def leaf(self, data, requires_grad: bool = True) -> "Tensor":
        """Register an input tensor on this tape."""
        t = Tensor(data, requires_grad=requires_grad, tape=self if requires_grad else None)
        if requires_grad:
            t.node_id = self._new_id()
            self._leaf_ids.append(t.node_id)
        return t


class Tensor:
    """Dense float64 value, optionally tracked on a tape."""

    __slots__ = ("data", "requires_grad", "tape", "node_id")

    # keep numpy from consuming Tensor operands in mixed expressions, so
    # ndarray <op> Tensor falls through to the reflected operators below
    __array_ufunc__ = None

    def __init__(self, data, requires_grad: bool = False, tape: Tape | None = None):
        arr = np.asarray(data, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError("tensor")
        self.data = arr
        self.requires_grad = requires_grad
        self.tape = tape
        self.node_id: int | None = None

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # operator sugar; scalars are promoted to constants
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def sum(self, axis=None):
        return tensor_sum(self, axis)

    def mean(self, axis=None):
        return tensor_mean(self, axis)

    def reshape(self, shape):
        return reshape(self, shape)


def _as_tensor(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x)


def _merge_tape(op: str, *tensors) -> Tape | None:
    tape = None
    for t in tensors:
        if t.requires_grad:
            if t.tape is None:
                raise ValueError(f"{op}: tensor requires grad but has no tape")
            if tape is None:
                tape = t.tape
            elif tape is not t.tape:
                raise ValueError(f"{op}: inputs live on different tapes")
    return tape


def _finish(op: str, out_data: np.ndarray, inputs, vjps) -> Tensor:
    """Gate the output and, if any input is tracked, record the node.

    ``vjps`` maps each tracked input to a callable grad_out -> grad_in.
    """
    out_data = np.asarray(out_data, dtype=np.float64)
    if not np.all(np.isfinite(out_data)):
        raise NonFiniteError(op)
    tape = _merge_tape(op, *inputs)
    out = Tensor.__new__(Tensor)
    out.data = out_data
    out.tape = tape
    out.node_id = None
    out.requires_grad = tape is not None
    if tape is not None:
        out.node_id = tape._new_id()
        in_ids = []
        in_vjps = []
        for t, vjp in zip(inputs, vjps):
            if t.requires_grad:
                in_ids.append(t.node_id)
                in_vjps.append(vjp)

        def node_vjp(g, fns=tuple(in_vjps)):
            return [fn(g) for fn in fns]

        tape._record(out.node_id, tuple(in_ids), node_vjp)
    return out


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    """Sum a broadcast gradient back down to the original operand shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad.reshape(shape)


# ---------------------------------------------------------------------------
# primitive ops
# ---------------------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        out = a.data + b.data
    except ValueError:
        raise ShapeMismatchError("add", a.shape, b.shape) from None
    return _finish("add", out, (a, b),
                   (lambda g: _unbroadcast(g, a.shape),
                    lambda g: _unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        out = a.data - b.data
    except ValueError:
        raise ShapeMismatchError("sub", a.shape, b.shape) from None
    return _finish("sub", out, (a, b),
                   (lambda g: _unbroadcast(g, a.shape),
                    lambda g: _unbroadcast(-g, b.shape)))


def mul(a, b) -> Tensor:
    """Elementwise product; covers scalar multiply via broadcasting."""
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        out = a.data * b.data
    except ValueError:
        raise ShapeMismatchError("mul", a.shape, b.shape) from None
    ad, bd = a.data, b.data
    return _finish("mul", out, (a, b),
                   (lambda g: _unbroadcast(g * bd, a.shape),
                    lambda g: _unbroadcast(g * ad, b.shape)))


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatchError("matmul", a.shape, b.shape)
    ad, bd = a.data, b.data
    return _finish("matmul", ad @ bd, (a, b),
                   (lambda g: g @ bd.T,
                    lambda g: ad.T @ g))


def tensor_sum(x, axis=None) -> Tensor:
    x = _as_tensor(x)
    xshape = x.shape

    def vjp(g):
        if axis is None:
            return np.broadcast_to(g, xshape).copy()
        return np.broadcast_to(np.expand_dims(g, axis), xshape).copy()

    return _finish("sum", np.sum(x.data, axis=axis), (x,), (vjp,))


def tensor_mean(x, axis=None) -> Tensor:
    x = _as_tensor(x)
    xshape = x.shape
    n = x.data.size if axis is None else x.shape[axis]

    def vjp(g):
        if axis is None:
            return np.broadcast_to(g / n, xshape).copy()
        return np.broadcast_to(np.expand_dims(g, axis) / n, xshape).copy()

    return _finish("mean", np.mean(x.data, axis=axis), (x,), (vjp,))


def reshape(x, shape) -> Tensor:
    x = _as_tensor(x)
    old = x.shape
    return _finish("reshape", x.data.reshape(shape), (x,),
                   (lambda g: g.reshape(old),))


def transpose(x) -> Tensor:
    x = _as_tensor(x)
    if x.data.ndim != 2:
        raise ShapeMismatchError("transpose", x.shape)
    return _finish("transpose", x.data.T.copy(), (x,), (lambda g: g.T,))


def exp(x) -> Tensor:
    x = _as_tensor(x)
    with np.errstate(over="ignore"):
        out = np.exp(x.data)
    return _finish("exp", out, (x,), (lambda g: g * out,))


def log(x) -> Tensor:
    x = _as_tensor(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(x.data)
    xd = x.data
    return _finish("log", out, (x,), (lambda g: g / xd,))


def sqrt(x) -> Tensor:
    """Elementwise square root. Subgradient 0 at x == 0 (one-sided) so that
    masked-out zero distances cannot poison the backward pass."""
    x = _as_tensor(x)
    out = np.sqrt(x.data)
    xd = x.data

    def vjp(g):
        return np.where(xd > 0.0, g * 0.5 / np.where(xd > 0.0, out, 1.0), 0.0)

    return _finish("sqrt", out, (x,), (vjp,))


def maximum(x, c: float) -> Tensor:
    """Elementwise max with a constant. Subgradient 0 at the kink."""
    x = _as_tensor(x)
    xd = x.data
    return _finish("maximum", np.maximum(xd, c), (x,),
                   (lambda g: np.where(xd > c, g, 0.0),))


def relu(x) -> Tensor:
    return maximum(x, 0.0)


def cross_sqdist(x, y) -> Tensor:
    """Squared L2 norms of row differences: out[i, j] = ||x[i] - y[j]||^2."""
    x, y = _as_tensor(x), _as_tensor(y)
    if x.data.ndim != 2 or y.data.ndim != 2 or x.shape[1] != y.shape[1]:
        raise ShapeMismatchError("cross_sqdist", x.shape, y.shape)
    diff = x.data[:, None, :] - y.data[None, :, :]
    out = np.einsum("ijk,ijk->ij", diff, diff)
    xd, yd = x.data, y.data

    def vjp_x(g):
        return 2.0 * (g.sum(axis=1)[:, None] * xd - g @ yd)

    def vjp_y(g):
        return 2.0 * (g.sum(axis=0)[:, None] * yd - g.T @ xd)

    return _finish("cross_sqdist", out, (x, y), (vjp_x, vjp_y))


def logsumexp(x, axis: int = -1) -> Tensor:
    """Row-stable log-sum-exp. Entries at NEG_MASK contribute (exactly) zero
    weight, which is how masked reductions are expressed."""
    x = _as_tensor(x)
    xd = x.data
    m = np.max(xd, axis=axis, keepdims=True)
    expd = np.exp(xd - m)
    sums = np.sum(expd, axis=axis, keepdims=True)
    out = np.squeeze(m + np.log(sums), axis=axis)
    softw = expd / sums

    def vjp(g):
        return np.expand_dims(g, axis) * softw

    return _finish("logsumexp", out, (x,), (vjp,))


def logaddexp(x, const: float) -> Tensor:
    """log(exp(x) + exp(const)) elementwise, stable for any magnitude of x."""
    x = _as_tensor(x)
    xd = x.data
    out = np.logaddexp(xd, const)

    def vjp(g):
        # d/dx = sigmoid(x - const), computed via tanh to avoid overflow
        return g * 0.5 * (1.0 + np.tanh(0.5 * (xd - const)))

    return _finish("logaddexp", out, (x,), (vjp,))


def softmax_cross_entropy(logits, labels) -> Tensor:
    """Per-row -log softmax(logits)[label], via the log-sum-exp trick.

    Returns a length-N tensor; reduce with mean() for the batch loss.
    """
    logits = _as_tensor(logits)
    labels = np.asarray(labels)
    if logits.data.ndim != 2:
        raise ShapeMismatchError("softmax_cross_entropy", logits.shape)
    n, c = logits.shape
    if labels.shape != (n,):
        raise ShapeMismatchError("softmax_cross_entropy", logits.shape, labels.shape)
    if labels.min() < 0 or labels.max() >= c:
        raise ValueError("softmax_cross_entropy: label out of range")
    ld = logits.data
    m = ld.max(axis=1, keepdims=True)
    expd = np.exp(ld - m)
    lse = np.squeeze(m, 1) + np.log(expd.sum(axis=1))
    picked = ld[np.arange(n), labels]
    out = lse - picked
    softw = expd / expd.sum(axis=1, keepdims=True)

    def vjp(g):
        grad = softw * g[:, None]
        grad[np.arange(n), labels] -= g
        return grad

    return _finish("softmax_cross_entropy", out, (logits,), (vjp,))


def dropout(x, p: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout: zero with probability p, scale survivors by 1/(1-p)."""
    x = _as_tensor(x)
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout: p must be in [0, 1), got {p}")
    if p == 0.0:
        return _finish("dropout", x.data.copy(), (x,), (lambda g: g,))
    mask = (rng.random(x.shape) >= p) / (1.0 - p)
    return _finish("dropout", x.data * mask, (x,), (lambda g: g * mask,))


# ---------------------------------------------------------------------------
# backward pass
# ---------------------------------------------------------------------------

def backward(tape: Tape, root: Tensor) -> dict[int, np.ndarray]:
    """Accumulate d(root)/d(leaf) for every requires_grad leaf on the tape.

    ``root`` must be a scalar recorded on ``tape``. Returns a map from
    node_id to gradient array; leaves not reachable from the root get zeros.
    The pass is pure: calling it twice yields identical results.
    """
    if root.tape is not tape or root.node_id is None:
        raise ValueError("backward: root is not recorded on this tape")
    if root.data.ndim != 0:
        raise ValueError(f"backward: root must be scalar, got shape {root.shape}")
    grads: dict[int, np.ndarray] = {root.node_id: np.asarray(1.0)}
    for out_id, in_ids, vjp in reversed(tape._nodes):
        g = grads.get(out_id)
        if g is None:
            continue
        for in_id, gin in zip(in_ids, vjp(g)):
            if in_id in grads:
                grads[in_id] = grads[in_id] + gin
            else:
                grads[in_id] = gin
    out = {}
    for leaf_id in tape._leaf_ids:
        out[leaf_id] = grads.get(leaf_id, None)
    # unreachable leaves get explicit zeros (shape unknown here, so keep 0.0
    # scalars only if never touched; callers index by node_id)
    return {k: (v if v is not None else np.asarray(0.0)) for k, v in out.items()}


def grad_wrt(grads: dict[int, np.ndarray], leaf: Tensor) -> np.ndarray:
    """Pull a leaf's gradient out of a backward() result, zero-filled to the
    leaf's shape if the leaf never influenced the root."""
    g = grads[leaf.node_id]
    if g.shape != leaf.data.shape:
        g = np.zeros_like(leaf.data)
    return g


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    """Bias-corrected Adam accumulators for a fixed parameter list."""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    step_count: int = 0
    first_moment: list = field(default_factory=list)
    second_moment: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params, learning_rate: float = 1e-3,
                   beta1: float = 0.9, beta2: float = 0.999,
                   eps_adam: float = 1e-8) -> "AdamState":
        state = cls(learning_rate=learning_rate, beta1=beta1, beta2=beta2,
                    eps_adam=eps_adam)
        state.first_moment = [np.zeros_like(p.data if isinstance(p, Tensor) else p)
                              for p in params]
        state.second_moment = [np.zeros_like(m) for m in state.first_moment]
        return state


def adam_step(params, grads, state: AdamState) -> None:
    """One bias-corrected Adam update, in place on the parameter arrays."""
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise ShapeMismatchError("adam_step", len(params), len(grads))
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        arr = p.data if isinstance(p, Tensor) else p
        g = np.asarray(g, dtype=np.float64)
        if g.shape != arr.shape:
            raise ShapeMismatchError("adam_step", arr.shape, g.shape)
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        arr -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps_adam)


# ---------------------------------------------------------------------------
# finite-difference harness
# ---------------------------------------------------------------------------

def check_gradient(fn, x, h: float = 1e-5) -> float:
    """Max relative error between backward() and central finite differences.

    ``fn`` maps a leaf Tensor to a scalar Tensor on a fresh tape. The error
    denominator is max(|analytic|, |numeric|, 1e-8) per component.
    """
    x0 = np.asarray(x.data if isinstance(x, Tensor) else x, dtype=np.float64)

    def value(arr) -> float:
        tape = Tape()
        out = fn(tape.leaf(arr))
        return float(out.data)

    tape = Tape()
    leaf = tape.leaf(x0)
    out = fn(leaf)
    grads = backward(tape, out)
    analytic = grad_wrt(grads, leaf)

    worst = 0.0
    flat = x0.reshape(-1)
    aflat = analytic.reshape(-1)
    for i in range(flat.size):
        bump = np.zeros_like(flat)
        bump[i] = h
        f_plus = value((flat + bump).reshape(x0.shape))
        f_minus = value((flat - bump).reshape(x0.shape))
        numeric = (f_plus - f_minus) / (2.0 * h)
        denom = max(abs(aflat[i]), abs(numeric), 1e-8)
        worst = max(worst, abs(aflat[i] - numeric) / denom)
    return worst
