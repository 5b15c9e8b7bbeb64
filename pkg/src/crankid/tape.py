"""Reverse-mode automatic differentiation over numpy arrays.

A Tape records every operation in creation order, so the node list itself is
a valid evaluation order (parents always precede children).  Values are
float64 numpy arrays of any shape; elementwise ops broadcast like numpy and
the backward pass sums gradients back down to each operand's shape.

The op set is deliberately small: constant, variable, add, sub, mul, div,
sin, cos, arcsin, sqrt, relu, matmul, sum, square.  That is enough for the
rigid-body equations, the ReLU network and the prediction-error loss.
"""

import numpy as np


class TapeError(Exception):
    pass


class UnboundVariable(TapeError):
    """A named variable was referenced or rebound but never declared."""


class DomainError(TapeError):
    """An op was evaluated outside its differentiable domain."""


class NotEvaluated(TapeError):
    """backward() was called after rebinding without re-running forward()."""


class NonFiniteValue(TapeError):
    """A gradient check met NaN/Inf in a function value or gradient."""


# threshold below 1.0 so the arcsin derivative 1/sqrt(1-x^2) stays finite
ARCSIN_GUARD = 1.0 - 1e-9


def _unbroadcast(g, shape):
    """Sum gradient g down to `shape` (reverse of numpy broadcasting)."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _forward(op, args):
    """Primal computation for one node; shared by tracing and re-evaluation."""
    if op == "add":
        return args[0] + args[1]
    if op == "sub":
        return args[0] - args[1]
    if op == "mul":
        return args[0] * args[1]
    if op == "div":
        if np.any(args[1] == 0.0):
            raise DomainError("division by zero")
        return args[0] / args[1]
    if op == "sin":
        return np.sin(args[0])
    if op == "cos":
        return np.cos(args[0])
    if op == "arcsin":
        if np.any(np.abs(args[0]) > ARCSIN_GUARD):
            raise DomainError("arcsin argument outside (-1, 1) guard band")
        return np.arcsin(args[0])
    if op == "sqrt":
        if np.any(args[0] < 0.0):
            raise DomainError("sqrt of negative value")
        return np.sqrt(args[0])
    if op == "relu":
        return np.maximum(args[0], 0.0)
    if op == "square":
        return args[0] * args[0]
    if op == "matmul":
        return args[0] @ args[1]
    if op == "sum":
        return np.asarray(args[0].sum())
    raise TapeError("unknown op %r" % op)


class Value:
    """One node of the graph: an op, its parents and the cached primal."""

    __slots__ = ("tape", "idx", "op", "parents", "data", "grad", "name")

    def __init__(self, tape, idx, op, parents, data, name=None):
        self.tape = tape
        self.idx = idx
        self.op = op
        self.parents = parents
        self.data = data
        self.grad = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def _lift(self, other):
        if isinstance(other, Value):
            if other.tape is not self.tape:
                raise TapeError("operands recorded on different tapes")
            return other
        return self.tape.constant(other)

    def __add__(self, other):
        return self.tape._record("add", (self, self._lift(other)))

    def __radd__(self, other):
        return self._lift(other).__add__(self)

    def __sub__(self, other):
        return self.tape._record("sub", (self, self._lift(other)))

    def __rsub__(self, other):
        return self._lift(other).__sub__(self)

    def __mul__(self, other):
        return self.tape._record("mul", (self, self._lift(other)))

    def __rmul__(self, other):
        return self._lift(other).__mul__(self)

    def __truediv__(self, other):
        return self.tape._record("div", (self, self._lift(other)))

    def __rtruediv__(self, other):
        return self._lift(other).__truediv__(self)

    def __matmul__(self, other):
        return self.tape._record("matmul", (self, self._lift(other)))

    def __neg__(self):
        return self.tape.constant(0.0) - self

    def sin(self):
        return self.tape._record("sin", (self,))

    def cos(self):
        return self.tape._record("cos", (self,))

    def arcsin(self):
        return self.tape._record("arcsin", (self,))

    def sqrt(self):
        return self.tape._record("sqrt", (self,))

    def relu(self):
        return self.tape._record("relu", (self,))

    def square(self):
        return self.tape._record("square", (self,))

    def sum(self):
        return self.tape._record("sum", (self,))

    def __repr__(self):
        return "Value(op=%s, shape=%s, idx=%d)" % (self.op, self.data.shape, self.idx)


class Tape:
    """Append-only op record supporting re-evaluation and reverse sweep."""

    def __init__(self):
        self.nodes = []
        self.variables = {}
        self._stale = False

    def _append(self, op, parents, data, name=None):
        node = Value(self, len(self.nodes), op, parents, data, name)
        self.nodes.append(node)
        return node

    def constant(self, value):
        return self._append("constant", (), np.asarray(value, dtype=np.float64))

    def variable(self, name, value):
        if name in self.variables:
            raise TapeError("variable %r already declared" % name)
        node = self._append("variable", (), np.asarray(value, dtype=np.float64), name)
        self.variables[name] = node
        return node

    def _record(self, op, parents):
        data = _forward(op, tuple(p.data for p in parents))
        return self._append(op, parents, data)

    def bind(self, bindings):
        """Rebind named variables without recomputing; backward() will refuse
        to run until forward() refreshes the cached primals."""
        for name, value in bindings.items():
            if name not in self.variables:
                raise UnboundVariable("no variable named %r on this tape" % name)
            var = self.variables[name]
            value = np.asarray(value, dtype=np.float64)
            if value.shape != var.data.shape:
                raise TapeError(
                    "cannot rebind %r: shape %s != %s"
                    % (name, value.shape, var.data.shape)
                )
            var.data = value
        self._stale = True

    def forward(self, bindings=None):
        """Recompute every node, optionally rebinding named variables."""
        if bindings:
            self.bind(bindings)
        for node in self.nodes:
            if node.op in ("constant", "variable"):
                continue
            node.data = _forward(node.op, tuple(p.data for p in node.parents))
        self._stale = False

    def backward(self, seed, seed_value=1.0):
        """Reverse sweep from a scalar seed; returns {variable name: gradient}.

        Linear in the seed: seeding with 2.0 doubles every gradient.
        """
        if self._stale:
            raise NotEvaluated("variables were rebound; call forward() first")
        if seed.tape is not self:
            raise TapeError("seed recorded on a different tape")
        if seed.data.size != 1:
            raise TapeError("backward seed must be scalar, got shape %s" % (seed.data.shape,))
        for node in self.nodes:
            node.grad = None
        seed.grad = np.full_like(seed.data, seed_value)
        for node in self.nodes[seed.idx :: -1]:
            g = node.grad
            if g is None:
                continue
            op = node.op
            if op in ("constant", "variable"):
                continue
            ps = node.parents
            if op == "add":
                _acc(ps[0], _unbroadcast(g, ps[0].data.shape))
                _acc(ps[1], _unbroadcast(g, ps[1].data.shape))
            elif op == "sub":
                _acc(ps[0], _unbroadcast(g, ps[0].data.shape))
                _acc(ps[1], _unbroadcast(-g, ps[1].data.shape))
            elif op == "mul":
                _acc(ps[0], _unbroadcast(g * ps[1].data, ps[0].data.shape))
                _acc(ps[1], _unbroadcast(g * ps[0].data, ps[1].data.shape))
            elif op == "div":
                _acc(ps[0], _unbroadcast(g / ps[1].data, ps[0].data.shape))
                _acc(ps[1], _unbroadcast(-g * ps[0].data / (ps[1].data * ps[1].data), ps[1].data.shape))
            elif op == "sin":
                _acc(ps[0], g * np.cos(ps[0].data))
            elif op == "cos":
                _acc(ps[0], -g * np.sin(ps[0].data))
            elif op == "arcsin":
                _acc(ps[0], g / np.sqrt(1.0 - ps[0].data * ps[0].data))
            elif op == "sqrt":
                _acc(ps[0], 0.5 * g / node.data)
            elif op == "relu":
                # subgradient 0 at the kink
                _acc(ps[0], g * (ps[0].data > 0.0))
            elif op == "square":
                _acc(ps[0], 2.0 * g * ps[0].data)
            elif op == "sum":
                _acc(ps[0], np.broadcast_to(g, ps[0].data.shape))
            elif op == "matmul":
                _acc(ps[0], g @ ps[1].data.T)
                _acc(ps[1], ps[0].data.T @ g)
            else:
                raise TapeError("unknown op %r in backward" % op)
        return {name: var.grad for name, var in self.variables.items()}


def _acc(node, g):
    if node.grad is None:
        node.grad = np.array(g, dtype=np.float64, copy=True)
    else:
        node.grad += g


class GradientReport:
    """Outcome of an AD vs central-difference comparison."""

    def __init__(self, gradients, fd_gradients, max_rel_error):
        self.gradients = gradients
        self.fd_gradients = fd_gradients
        self.max_rel_error = max_rel_error

    def __repr__(self):
        return "GradientReport(max_rel_error=%.3e)" % self.max_rel_error


def check_gradient(fn, point, eps=1e-6):
    """Compare reverse-mode gradients of fn against central differences.

    fn(tape, point) must declare its inputs via tape.variable(name, ...) and
    return a scalar Value.  point maps variable names to arrays.  Reports the
    max over all components of |ad - fd| / max(1, |ad|).
    """
    tape = Tape()
    out = fn(tape, point)
    if out.data.size != 1:
        raise TapeError("check_gradient needs a scalar-valued fn")
    if not np.all(np.isfinite(out.data)):
        raise NonFiniteValue("fn value is not finite at the base point")
    grads = tape.backward(out)
    ad = {}
    for name in point:
        if name not in grads or grads[name] is None:
            ad[name] = np.zeros_like(np.asarray(point[name], dtype=np.float64))
        else:
            ad[name] = grads[name]
        if not np.all(np.isfinite(ad[name])):
            raise NonFiniteValue("AD gradient for %r is not finite" % name)

    fd = {}
    max_rel = 0.0
    for name, base in point.items():
        base = np.asarray(base, dtype=np.float64)
        g = np.zeros_like(base)
        flat = base.ravel()
        for k in range(flat.size):
            orig = flat[k]
            probe = base.copy().ravel()
            probe[k] = orig + eps
            tape.forward({name: probe.reshape(base.shape)})
            f_plus = float(out.data)
            probe[k] = orig - eps
            tape.forward({name: probe.reshape(base.shape)})
            f_minus = float(out.data)
            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                raise NonFiniteValue("fn value is not finite near %r" % name)
            g.ravel()[k] = (f_plus - f_minus) / (2.0 * eps)
        tape.forward({name: base})
        fd[name] = g
        rel = np.abs(ad[name] - g) / np.maximum(1.0, np.abs(ad[name]))
        if rel.size:
            max_rel = max(max_rel, float(rel.max()))
    return GradientReport(ad, fd, max_rel)


# --- small dispatch helpers so physics code can be written once and run on
#     either plain numpy arrays or taped Values ---

def sin(x):
    return x.sin() if isinstance(x, Value) else np.sin(x)


def cos(x):
    return x.cos() if isinstance(x, Value) else np.cos(x)


def arcsin(x):
    if isinstance(x, Value):
        return x.arcsin()
    if np.any(np.abs(x) > ARCSIN_GUARD):
        raise DomainError("arcsin argument outside (-1, 1) guard band")
    return np.arcsin(x)


def sqrt(x):
    return x.sqrt() if isinstance(x, Value) else np.sqrt(x)
