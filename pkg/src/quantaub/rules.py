"""JSON rule vocabulary for weights, sequences and test data.

A rule is a small JSON object such as ``{"kind": "power", "exp": 1.0}``.
:func:`compile_rule` turns a rule into a vectorised callable together with
the metadata the numerical code needs (monotonicity, break points of
non-smooth factors, power singularity at the origin).

The ``expr`` kind accepts a restricted arithmetic grammar over one variable
(``x`` or ``t``)::

    {"kind": "expr", "expr": "exp(-x) * indicator(x, 0, inf)"}

Only numbers, the variable, ``pi``, ``e``, ``inf``, the operators
``+ - * / **`` and the functions listed in ``_FUNCS`` are allowed.
"""

import ast
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SchemaError

__all__ = ["CompiledRule", "compile_rule", "compile_expr"]


def _indicator(x, a, b):
    x = np.asarray(x, dtype=float)
    return np.where((x >= a) & (x <= b), 1.0, 0.0)


def _safe_log(x):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(x)


def _sinc(x):
    # unnormalised: sin(x)/x
    return np.sinc(np.asarray(x, dtype=float) / np.pi)


def _mul(a, b):
    # 0 * inf = 0, so cut-offs such as exp(-x) * indicator(x, 0, inf) stay finite
    a, b = np.asarray(a), np.asarray(b)
    return np.where((a == 0) | (b == 0), 0.0, a * b)


_FUNCS = {
    "exp": np.exp,
    "log": _safe_log,
    "sin": np.sin,
    "cos": np.cos,
    "abs": np.abs,
    "sqrt": np.sqrt,
    "pow": np.power,
    "sinc": _sinc,
    "min": np.minimum,
    "max": np.maximum,
    "indicator": _indicator,
}

_CONSTS = {"pi": math.pi, "e": math.e, "inf": math.inf}

_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}


@dataclass(frozen=True)
class CompiledRule:
    """A rule turned into a vectorised function of one real variable."""

    func: object
    monotone: str = "none"
    breakpoints: tuple = ()
    # exponent p of a t**p singularity at 0 (None when the rule is regular)
    singularity: float = None
    spec: dict = field(default_factory=dict)
    # s -> log(func(exp(s))), valid for s far beyond the float range of t
    log_func: object = None

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            return np.asarray(self.func(t), dtype=float)

    def log_at(self, s):
        """``log f(e**s)``; falls back to direct evaluation without a log form."""
        s = np.asarray(s, dtype=float)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            if self.log_func is not None:
                return np.asarray(self.log_func(s), dtype=float) + np.zeros_like(s)
            return np.log(np.asarray(self.func(np.exp(s)), dtype=float))


def _const_value(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id in _CONSTS:
        return _CONSTS[node.id]
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        v = _const_value(node.operand)
        return None if v is None else -v
    return None


def compile_expr(text, var=None, dtype=float):
    """Compile an arithmetic expression into ``(callable, breakpoints)``.

    Break points are collected from ``indicator(var, a, b)`` calls whose
    bounds are literal numbers.  With ``dtype=complex`` the imaginary unit
    ``i`` is available and the callable returns complex arrays.
    """
    consts = dict(_CONSTS)
    if dtype is complex:
        consts["i"] = 1j
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise SchemaError(f"cannot parse expression {text!r}: {exc}") from None
    names = {n.id for n in ast.walk(tree) if isinstance(n, ast.Name)}
    free = names - set(_FUNCS) - set(consts)
    if var is None:
        if len(free) > 1:
            raise SchemaError(f"expression {text!r} uses several variables {sorted(free)}")
        var = free.pop() if free else "x"
    elif free - {var}:
        raise SchemaError(f"unknown names {sorted(free - {var})} in {text!r}")
    breaks = []

    def build(node):
        if isinstance(node, ast.Expression):
            return build(node.body)
        if isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
                raise SchemaError(f"unsupported literal {node.value!r}")
            v = float(node.value)
            return lambda x: v
        if isinstance(node, ast.Name):
            if node.id == var:
                return lambda x: x
            if node.id in consts:
                v = consts[node.id]
                return lambda x: v
            raise SchemaError(f"unknown name {node.id!r}")
        if isinstance(node, ast.BinOp):
            op = _BINOPS.get(type(node.op))
            if op is None:
                raise SchemaError(f"operator {type(node.op).__name__} not allowed")
            left, right = build(node.left), build(node.right)
            if op is np.multiply:
                return lambda x: _mul(left(x), right(x))
            return lambda x: op(left(x), right(x))
        if isinstance(node, ast.UnaryOp):
            inner = build(node.operand)
            if isinstance(node.op, ast.USub):
                return lambda x: -inner(x)
            if isinstance(node.op, ast.UAdd):
                return inner
            raise SchemaError("unary operator not allowed")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
                raise SchemaError(f"function not allowed in {text!r}")
            if node.keywords:
                raise SchemaError("keyword arguments are not allowed")
            fn = _FUNCS[node.func.id]
            if node.func.id == "indicator":
                if len(node.args) != 3:
                    raise SchemaError("indicator takes (var, a, b)")
                for arg in node.args[1:]:
                    v = _const_value(arg)
                    if v is not None and math.isfinite(v):
                        breaks.append(v)
            args = [build(a) for a in node.args]
            return lambda x: fn(*(a(x) for a in args))
        raise SchemaError(f"syntax {type(node).__name__} not allowed in {text!r}")

    fn = build(tree)

    def func(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            return np.broadcast_to(np.asarray(fn(x), dtype=dtype), x.shape).copy()

    return func, tuple(sorted(set(breaks)))


def _num(rule, key, default=None):
    v = rule.get(key, default)
    if v is None:
        raise SchemaError(f"rule {rule.get('kind')!r} needs {key!r}")
    try:
        return float(v)
    except (TypeError, ValueError):
        raise SchemaError(f"{key!r} must be a number, got {v!r}") from None


def _log_shifted(s, shift):
    # log(e**s + shift)
    if shift == 0.0:
        return s
    if shift > 0.0:
        return np.logaddexp(s, math.log(shift))
    return None


def _log_form(kind, rule, parts=None):
    """Log-domain evaluator ``s -> log f(e**s)`` for the closed-form kinds."""
    if kind == "const":
        v = float(rule["value"])
        lv = math.log(v) if v > 0 else -math.inf
        return lambda s: np.full_like(s, lv)
    if kind == "power":
        p, coef, shift = float(rule["exp"]), float(rule.get("coef", 1.0)), float(rule.get("shift", 0.0))
        if coef <= 0 or shift < 0:
            return None
        return lambda s: math.log(coef) + p * _log_shifted(s, shift)
    if kind == "log":
        shift, pw = float(rule.get("shift", math.e)), float(rule.get("power", 1.0))
        if shift < 1.0:
            return None
        return lambda s: pw * np.log(_log_shifted(s, shift))
    if kind == "loglog":
        shift = float(rule.get("shift", math.e))
        if shift < math.e:
            return None
        return lambda s: np.log(np.log(_log_shifted(s, shift)))
    if kind == "exp":
        c, pw = float(rule.get("coef", 1.0)), float(rule.get("power", 1.0))
        return lambda s: c * np.exp(pw * s)
    if kind == "scale":
        by = float(rule["by"])
        inner = parts[0].log_func
        if by <= 0 or inner is None:
            return None
        return lambda s: math.log(by) + inner(s)
    if kind in ("product", "sum", "max", "min"):
        logs = [p.log_func for p in parts]
        if any(f is None for f in logs):
            return None
        red = {"product": np.add, "sum": np.logaddexp, "max": np.maximum, "min": np.minimum}[kind]

        def f(s):
            out = logs[0](s)
            for g in logs[1:]:
                out = red(out, g(s))
            return out

        return f
    return None


def compile_rule(rule):
    """Compile a weight / function rule into a :class:`CompiledRule`.

    Supported kinds: ``const``, ``power``, ``log``, ``exp``, ``loglog``,
    ``expr``, ``table``, ``product``, ``sum``, ``max``, ``min`` and
    ``scale``.  Numbers are accepted as shorthand for ``const``.  The
    closed-form kinds (everything except ``expr`` and ``table``) also carry a
    log-domain evaluator, see :meth:`CompiledRule.log_at`.
    """
    c = _compile_rule(rule)
    if c.log_func is None and isinstance(c.spec, dict):
        kind = c.spec.get("kind")
        parts = None
        if kind in ("product", "sum", "max", "min"):
            parts = [compile_rule(r) for r in c.spec.get("of", [])]
        elif kind == "scale":
            parts = [compile_rule(c.spec.get("of"))]
        lf = _log_form(kind, c.spec, parts)
        if lf is not None:
            c = CompiledRule(c.func, c.monotone, c.breakpoints, c.singularity, c.spec, lf)
    return c


def _compile_rule(rule):
    if isinstance(rule, (int, float)) and not isinstance(rule, bool):
        rule = {"kind": "const", "value": float(rule)}
    if isinstance(rule, str):
        rule = {"kind": "expr", "expr": rule}
    if not isinstance(rule, dict) or "kind" not in rule:
        raise SchemaError(f"rule must be an object with a 'kind', got {rule!r}")
    kind = rule["kind"]

    if kind == "const":
        v = _num(rule, "value")
        return CompiledRule(lambda t: np.full_like(t, v), "non_decreasing", spec=rule)

    if kind == "power":
        p = _num(rule, "exp")
        coef = _num(rule, "coef", 1.0)
        shift = _num(rule, "shift", 0.0)
        sing = p if (shift == 0.0 and p < 0) else None
        if sing is not None and sing <= -1:
            raise SchemaError("power singularity at 0 must have exponent > -1")
        mono = "non_decreasing" if p * coef >= 0 else "non_increasing"
        return CompiledRule(lambda t: coef * np.power(t + shift, p), mono, singularity=sing, spec=rule)

    if kind == "log":
        shift = _num(rule, "shift", math.e)
        pw = _num(rule, "power", 1.0)
        mono = "non_decreasing" if pw >= 0 else "non_increasing"
        return CompiledRule(lambda t: np.power(np.log(t + shift), pw), mono, spec=rule)

    if kind == "loglog":
        # log(log(t + shift)), shift >= e keeps it non-negative
        shift = _num(rule, "shift", math.e)
        return CompiledRule(lambda t: np.log(np.log(t + shift)), "non_decreasing", spec=rule)

    if kind == "exp":
        c = _num(rule, "coef", 1.0)
        pw = _num(rule, "power", 1.0)
        return CompiledRule(lambda t: np.exp(c * np.power(np.abs(t), pw)),
                            "non_decreasing" if c >= 0 else "non_increasing", spec=rule)

    if kind == "expr":
        text = rule.get("expr")
        if not isinstance(text, str):
            raise SchemaError("expr rule needs an 'expr' string")
        func, breaks = compile_expr(text, rule.get("var"))
        return CompiledRule(func, rule.get("monotone", "none"), breaks, spec=rule)

    if kind == "table":
        ts = np.asarray(rule.get("t", []), dtype=float)
        vs = np.asarray(rule.get("v", []), dtype=float)
        if ts.ndim != 1 or ts.shape != vs.shape or ts.size < 2 or np.any(np.diff(ts) <= 0):
            raise SchemaError("table rule needs increasing 't' and matching 'v' arrays")
        d = np.diff(vs)
        mono = "non_decreasing" if np.all(d >= 0) else ("non_increasing" if np.all(d <= 0) else "none")
        return CompiledRule(lambda t: np.interp(t, ts, vs), mono, spec=rule)

    if kind in ("product", "sum", "max", "min"):
        parts = [compile_rule(r) for r in rule.get("of", [])]
        if not parts:
            raise SchemaError(f"{kind} rule needs a non-empty 'of' list")
        red = {"product": np.multiply, "sum": np.add, "max": np.maximum, "min": np.minimum}[kind]

        def func(t, parts=parts, red=red):
            out = parts[0](t)
            for p in parts[1:]:
                out = red(out, p(t))
            return out

        monos = {p.monotone for p in parts}
        mono = monos.pop() if len(monos) == 1 else "none"
        if kind == "product" and mono == "non_increasing":
            mono = "none"  # sign information is not tracked
        sings = [p.singularity for p in parts if p.singularity is not None]
        sing = sum(sings) if (sings and kind == "product") else None
        breaks = tuple(sorted({b for p in parts for b in p.breakpoints}))
        return CompiledRule(func, mono, breaks, sing, spec=rule)

    if kind == "scale":
        by = _num(rule, "by")
        inner = compile_rule(rule.get("of"))
        mono = inner.monotone if by > 0 else "none"
        return CompiledRule(lambda t: by * inner(t), mono, inner.breakpoints, inner.singularity, spec=rule)

    raise SchemaError(f"unknown rule kind {kind!r}")
