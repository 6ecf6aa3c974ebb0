"""Scalar expression language over chart coordinates.

Expressions are immutable and hash-consed: structurally identical nodes are
the same Python object, so large derived expressions (Christoffel symbols,
curvature, their derivatives) share subgraphs instead of growing as trees.
Numeric evaluation is vectorized over a batch of points and memoized per node.
"""

import math
import re

import numpy as np

UNARY_OPS = ("neg", "exp", "log", "sqrt", "abs", "sin", "cos")
BINARY_OPS = ("add", "sub", "mul", "div", "pow")
FUNCTIONS = ("exp", "log", "sqrt", "abs", "sin", "cos")

_BINARY_SYMBOL = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}


class ExprError(Exception):
    pass


class ParseError(ExprError):
    """Syntax error; `offset` is the 1-based byte position of the problem."""

    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ExprError):
    def __init__(self, name, offset):
        super().__init__(f"unknown identifier {name!r} at offset {offset}")
        self.name = name
        self.offset = offset


class DomainError(ExprError):
    """Evaluation left the domain of an operation (names node and point)."""

    def __init__(self, reason, node, point):
        text = to_string(node, max_len=120)
        super().__init__(f"{reason} in {text} at {point}")
        self.reason = reason
        self.node = node
        self.point = point


_table = {}
_counter = [0]


class Expr:
    """A node of the expression DAG. Build with the module constructors or
    with the overloaded arithmetic operators, never directly."""

    __slots__ = ("op", "args", "value", "uid", "_deriv", "_vars")

    def __init__(self, op, args, value, uid, variables):
        setter = object.__setattr__
        setter(self, "op", op)
        setter(self, "args", args)
        setter(self, "value", value)
        setter(self, "uid", uid)
        setter(self, "_deriv", {})
        setter(self, "_vars", variables)

    def __setattr__(self, name, val):
        raise AttributeError("Expr is immutable")

    @property
    def children(self):
        return self.args

    @property
    def kind(self):
        if self.op in ("const", "var"):
            return self.op
        return "unary" if self.op in UNARY_OPS else "binary"

    def is_const(self, c=None):
        return self.op == "const" and (c is None or self.value == c)

    def variables(self):
        """Set of coordinate names this expression depends on."""
        return self._vars

    def __hash__(self):
        return self.uid

    def __eq__(self, other):
        return self is other

    def __repr__(self):
        return f"Expr({to_string(self, max_len=200)})"

    def __str__(self):
        return to_string(self)

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __pow__(self, other):
        return power(self, as_expr(other))

    def __rpow__(self, other):
        return power(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pos__(self):
        return self


def _intern(op, args, value=None):
    key = (op, value, tuple(a.uid for a in args))
    node = _table.get(key)
    if node is None:
        _counter[0] += 1
        if op == "var":
            vs = frozenset((value,))
        elif not args:
            vs = frozenset()
        elif len(args) == 1 or args[0]._vars is args[1]._vars:
            vs = args[0]._vars
        else:
            vs = args[0]._vars | args[1]._vars
        node = Expr(op, tuple(args), value, _counter[0], vs)
        _table[key] = node
    return node


def const(c):
    c = float(c)
    if c == 0.0:
        c = 0.0  # collapse -0.0
    return _intern("const", (), c)


def var(name):
    return _intern("var", (), str(name))


def as_expr(x):
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float, np.integer, np.floating)):
        return const(x)
    raise TypeError(f"cannot convert {type(x).__name__} to Expr")


ZERO = const(0.0)
ONE = const(1.0)


def _finite_or_none(v):
    return v if math.isfinite(v) else None


def neg(a):
    a = as_expr(a)
    if a.op == "const":
        return const(-a.value)
    if a.op == "neg":
        return a.args[0]
    return _intern("neg", (a,))


def _ordered(a, b):
    # commutative ops: canonical argument order improves sharing
    return (a, b) if a.uid <= b.uid else (b, a)


def add(a, b):
    a, b = as_expr(a), as_expr(b)
    if a.op == "const" and b.op == "const":
        return const(a.value + b.value)
    if a.is_const(0.0):
        return b
    if b.is_const(0.0):
        return a
    if b.op == "neg":
        return sub(a, b.args[0])
    if a.op == "neg":
        return sub(b, a.args[0])
    return _intern("add", _ordered(a, b))


def sub(a, b):
    a, b = as_expr(a), as_expr(b)
    if a.op == "const" and b.op == "const":
        return const(a.value - b.value)
    if b.is_const(0.0):
        return a
    if a.is_const(0.0):
        return neg(b)
    if a is b:
        return ZERO
    if b.op == "neg":
        return add(a, b.args[0])
    return _intern("sub", (a, b))


def mul(a, b):
    a, b = as_expr(a), as_expr(b)
    if a.op == "const" and b.op == "const":
        return const(a.value * b.value)
    if a.is_const(0.0) or b.is_const(0.0):
        return ZERO
    if a.is_const(1.0):
        return b
    if b.is_const(1.0):
        return a
    if a.is_const(-1.0):
        return neg(b)
    if b.is_const(-1.0):
        return neg(a)
    if a.op == "neg" and b.op == "neg":
        return mul(a.args[0], b.args[0])
    if a.op == "neg":
        return neg(mul(a.args[0], b))
    if b.op == "neg":
        return neg(mul(a, b.args[0]))
    return _intern("mul", _ordered(a, b))


def div(a, b):
    a, b = as_expr(a), as_expr(b)
    if b.op == "const" and b.value != 0.0:
        if a.op == "const":
            return const(a.value / b.value)
        if b.value == 1.0:
            return a
        if b.value == -1.0:
            return neg(a)
    if a.is_const(0.0) and b.op != "const":
        return ZERO
    if a.op == "neg":
        return neg(div(a.args[0], b))
    if b.op == "neg":
        return neg(div(a, b.args[0]))
    return _intern("div", (a, b))


def power(a, b):
    a, b = as_expr(a), as_expr(b)
    if b.op == "const":
        if b.value == 0.0:
            return ONE
        if b.value == 1.0:
            return a
        if a.op == "const":
            try:
                v = _finite_or_none(_pow_scalar(a.value, b.value))
            except (ValueError, ZeroDivisionError, OverflowError):
                v = None
            if v is not None:
                return const(v)
    return _intern("pow", (a, b))


def _pow_scalar(x, y):
    if x < 0 and y != int(y):
        raise ValueError("negative base")
    return x ** y


def _unary(op, fold):
    def build(a):
        a = as_expr(a)
        if a.op == "const":
            try:
                v = _finite_or_none(fold(a.value))
            except (ValueError, OverflowError):
                v = None
            if v is not None:
                return const(v)
        return _intern(op, (a,))

    build.__name__ = op
    return build


def _log_fold(x):
    if x <= 0:
        raise ValueError
    return math.log(x)


def _sqrt_fold(x):
    if x <= 0:
        raise ValueError
    return math.sqrt(x)


exp = _unary("exp", math.exp)
log = _unary("log", _log_fold)
sqrt = _unary("sqrt", _sqrt_fold)
sin = _unary("sin", math.sin)
cos = _unary("cos", math.cos)
_abs_raw = _unary("abs", abs)


def absolute(a):
    a = as_expr(a)
    if a.op == "abs":
        return a
    return _abs_raw(a)


_BUILDERS = {
    "neg": neg, "exp": exp, "log": log, "sqrt": sqrt, "abs": absolute,
    "sin": sin, "cos": cos, "add": add, "sub": sub, "mul": mul, "div": div,
    "pow": power,
}


def make(op, *args):
    """Generic constructor by operator name."""
    return _BUILDERS[op](*args)


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<id>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", _byte_offset(text, pos))
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), _byte_offset(text, start)))
        pos = m.end()
    tokens.append(("end", "", _byte_offset(text, n)))
    return tokens


def _byte_offset(text, pos):
    return len(text[:pos].encode("utf-8")) + 1


def _coords_of(chart):
    if chart is None:
        return None
    if hasattr(chart, "coords"):
        return tuple(chart.coords)
    return tuple(chart)


class _Parser:
    def __init__(self, text, coords):
        self.tokens = _tokenize(text)
        self.i = 0
        self.coords = coords

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        tok = self.peek()
        if tok[0] == "end":
            raise ParseError(f"expected {value!r} but input ended", tok[2])
        if tok[1] != value:
            raise ParseError(f"expected {value!r}, found {tok[1]!r}", tok[2])
        self.take()

    def parse(self):
        e = self.sum()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"unexpected token {tok[1]!r}", tok[2])
        return e

    def sum(self):
        e = self.product()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.product()
            e = add(e, rhs) if op == "+" else sub(e, rhs)
        return e

    def product(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.unary()
            e = mul(e, rhs) if op == "*" else div(e, rhs)
        return e

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            return neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "^":
            self.take()
            return power(base, self.unary())
        return base

    def atom(self):
        kind, text, offset = self.take()
        if kind == "num":
            return const(float(text))
        if kind == "id":
            nxt = self.peek()
            if nxt[0] == "op" and nxt[1] == "(":
                if text not in FUNCTIONS:
                    raise UnknownIdentifierError(text, offset)
                self.take()
                arg = self.sum()
                self.expect(")")
                return _BUILDERS[text](arg)
            if self.coords is not None and text not in self.coords:
                raise UnknownIdentifierError(text, offset)
            return var(text)
        if kind == "op" and text == "(":
            e = self.sum()
            self.expect(")")
            return e
        if kind == "end":
            raise ParseError("unexpected end of input", offset)
        raise ParseError(f"unexpected token {text!r}", offset)


def parse(text, chart=None):
    """Parse `text` into an Expr; identifiers must be coordinates of `chart`
    (a Chart or a sequence of names) or one of the known functions."""
    return _Parser(text, _coords_of(chart)).parse()


# ---------------------------------------------------------------- printing

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}


def to_string(e, max_len=None):
    """Render `e` in the input grammar; parse(to_string(e)) evaluates
    identically. Shared subgraphs are expanded, so keep this for small
    expressions (pass max_len to truncate)."""
    out = []
    budget = [max_len if max_len is not None else -1]

    def emit(s):
        out.append(s)
        if budget[0] >= 0:
            budget[0] -= len(s)
            if budget[0] < 0:
                raise _Truncated

    def rec(node, parent_prec, right_side):
        op = node.op
        if op == "const":
            v = node.value
            s = repr(v)
            if v < 0 or "e" in s or "inf" in s or "nan" in s:
                emit("(" + s + ")")
            else:
                emit(s)
            return
        if op == "var":
            emit(node.value)
            return
        if op in FUNCTIONS:
            emit(op + "(")
            rec(node.args[0], 0, False)
            emit(")")
            return
        prec = _PREC[op]
        wrap = prec < parent_prec or (prec == parent_prec and (right_side or op == "pow"))
        if wrap:
            emit("(")
        if op == "neg":
            emit("-")
            rec(node.args[0], prec, False)
        else:
            left_prec = prec + 1 if op == "pow" else prec
            rec(node.args[0], left_prec, False)
            emit(_BINARY_SYMBOL[op])
            rec(node.args[1], prec, op != "pow")
        if wrap:
            emit(")")

    try:
        rec(e, 0, False)
    except _Truncated:
        return "".join(out)[:max_len] + "..."
    return "".join(out)


class _Truncated(Exception):
    pass


# ---------------------------------------------------------- differentiation

def differentiate(e, v):
    """Exact partial derivative of `e` with respect to coordinate `v`.
    Results are memoized on the node."""
    v = v.value if isinstance(v, Expr) else str(v)
    if v in e._deriv:
        return e._deriv[v]
    stack = [(e, False)]
    while stack:
        node, done = stack.pop()
        memo = node._deriv
        if v in memo:
            continue
        if v not in node._vars:
            memo[v] = ZERO
            continue
        if done:
            memo[v] = _deriv_rule(node, v)
            continue
        stack.append((node, True))
        for a in node.args:
            if v not in a._deriv:
                stack.append((a, False))
    return e._deriv[v]


def _deriv_rule(node, v):
    op = node.op
    if op == "var":
        return ONE if node.value == v else ZERO
    if op == "const":
        return ZERO
    a = node.args[0]
    da = a._deriv[v]
    if op == "neg":
        return neg(da)
    if op == "exp":
        return mul(node, da)
    if op == "log":
        return div(da, a)
    if op == "sqrt":
        return div(da, mul(const(2.0), node))
    if op == "abs":
        return mul(da, div(a, node))
    if op == "sin":
        return mul(cos(a), da)
    if op == "cos":
        return neg(mul(sin(a), da))
    b = node.args[1]
    db = b._deriv[v]
    if op == "add":
        return add(da, db)
    if op == "sub":
        return sub(da, db)
    if op == "mul":
        return add(mul(da, b), mul(a, db))
    if op == "div":
        return div(sub(da, mul(node, db)), b)
    if op == "pow":
        if b.op == "const":
            c = b.value
            return mul(mul(const(c), power(a, const(c - 1.0))), da)
        term = mul(db, log(a))
        if not da.is_const(0.0):
            term = add(term, div(mul(b, da), a))
        return mul(node, term)
    raise ExprError(f"unknown op {op}")


def _topo(roots):
    """Nodes reachable from roots, children before parents."""
    seen = set()
    order = []
    for root in roots:
        if root.uid in seen:
            continue
        stack = [(root, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if node.uid in seen:
                continue
            seen.add(node.uid)
            stack.append((node, True))
            for a in node.args:
                if a.uid not in seen:
                    stack.append((a, False))
    return order


def dag_size(exprs):
    """Number of distinct nodes reachable from the given expressions."""
    if isinstance(exprs, Expr):
        exprs = [exprs]
    return len(_topo(list(exprs)))


# --------------------------------------------------------------- evaluation

class Evaluator:
    """Vectorized evaluation of expressions over a fixed batch of points.

    `points` maps coordinate names to equal-length 1-D arrays. Node values
    are cached, so evaluating many expressions sharing subgraphs costs one
    pass over their union.
    """

    def __init__(self, points):
        self.points = {k: np.atleast_1d(np.asarray(v, dtype=float)) for k, v in points.items()}
        sizes = {len(v) for v in self.points.values()}
        if len(sizes) > 1:
            raise ValueError("coordinate arrays must have equal length")
        self.n = sizes.pop() if sizes else 1
        self._cache = {}

    def point(self, i):
        return {k: float(v[i]) for k, v in self.points.items()}

    def __call__(self, e):
        if isinstance(e, Expr):
            return self._eval(e)
        arr = np.asarray(e, dtype=object)
        out = np.empty(arr.shape + (self.n,))
        flat = arr.reshape(-1)
        todo = [as_expr(x) for x in flat]
        self._fill(todo)
        res = out.reshape(-1, self.n)
        for k, x in enumerate(todo):
            res[k] = self._cache[x.uid]
        return out

    def _eval(self, e):
        self._fill([e])
        return self._cache[e.uid]

    def _fill(self, roots):
        cache = self._cache
        pending = [r for r in roots if r.uid not in cache]
        if not pending:
            return
        seen = set(cache)
        order = []
        for root in pending:
            if root.uid in seen:
                continue
            stack = [(root, False)]
            while stack:
                node, done = stack.pop()
                if done:
                    order.append(node)
                    continue
                if node.uid in seen:
                    continue
                seen.add(node.uid)
                stack.append((node, True))
                for a in node.args:
                    if a.uid not in seen:
                        stack.append((a, False))
        with np.errstate(all="ignore"):
            for node in order:
                cache[node.uid] = self._apply(node, cache)

    def _bad(self, reason, node, mask):
        i = int(np.flatnonzero(mask)[0])
        raise DomainError(reason, node, self.point(i))

    def _apply(self, node, cache):
        op = node.op
        if op == "const":
            return np.full(self.n, node.value)
        if op == "var":
            try:
                return self.points[node.value]
            except KeyError:
                raise ExprError(f"no value supplied for coordinate {node.value!r}") from None
        a = cache[node.args[0].uid]
        if op == "neg":
            return -a
        if op == "exp":
            return np.exp(a)
        if op == "log":
            bad = ~(a > 0)
            if bad.any():
                self._bad("log of nonpositive argument", node, bad)
            return np.log(a)
        if op == "sqrt":
            bad = ~(a > 0)
            if bad.any():
                self._bad("sqrt of nonpositive argument", node, bad)
            return np.sqrt(a)
        if op == "abs":
            return np.abs(a)
        if op == "sin":
            return np.sin(a)
        if op == "cos":
            return np.cos(a)
        b = cache[node.args[1].uid]
        if op == "add":
            return a + b
        if op == "sub":
            return a - b
        if op == "mul":
            return a * b
        if op == "div":
            bad = b == 0
            if bad.any():
                self._bad("division by zero", node, bad)
            return a / b
        if op == "pow":
            if node.args[1].op == "const":
                c = node.args[1].value
                if c == int(c):
                    if c < 0 and (a == 0).any():
                        self._bad("division by zero", node, a == 0)
                    return a ** c if c >= 0 else 1.0 / a ** (-c)
            bad = (a < 0) & (b != np.round(b))
            if bad.any():
                self._bad("non-integer power of negative base", node, bad)
            bad = (a == 0) & (b < 0)
            if bad.any():
                self._bad("division by zero", node, bad)
            return np.power(a, b)
        raise ExprError(f"unknown op {op}")


def evaluate(e, p):
    """Evaluate `e` at a single point `p` (mapping coordinate -> float)."""
    ev = Evaluator({k: [v] for k, v in dict(p).items()})
    return float(ev(as_expr(e))[0])
