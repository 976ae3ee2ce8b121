"""The vector-expression language in which population update rules are written.

A rule is a straight-line program: an optional leading block of scalar
parameter declarations, then assignments, the last of which must produce the
``offspring`` vector::

    F = 0.5;
    CR = 0.9;
    v = r1 + F * (r2 - r3);
    offspring = bincross(x, clamp(v), CR);

Grammar::

    program := param* stmt+
    param   := IDENT "=" ["-"] NUMBER ";"        (leading block only)
    stmt    := IDENT "=" expr ";"
    expr    := additive chain of "+" "-" over "*" "/" with unary minus
               and parentheses

Builtins -- vectors: ``x`` (the target individual), ``best``, ``r1 r2 r3``
(distinct random population members), ``mean`` (population centroid),
``lb ub`` (bounds); scalars: ``cv``, ``f`` (the target's violation and
objective), ``dim``, and the zero-argument draws ``rand()``, ``randn()``.
Functions: ``bincross(vec, vec, scalar)``, ``clamp(vec)``, ``abs``, ``min``,
``max``.  Scalars broadcast over vectors.

Randomness contract (what makes two executions comparable draw by draw): per
target individual, first r1, r2, r3 are rejection-sampled distinct and
different from the target index; then statements evaluate left to right with
each ``rand()``/``randn()`` call site consuming exactly one draw; each
``bincross`` draws the forced crossover index, then one batch of ``dim``
uniforms.  After the final statement, any non-finite offspring component is
resampled uniformly inside the bounds (one draw per component, in index
order) so a degenerate rule can never crash or escape the search box.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

MAX_RULE_CHARS = 8192

VECTOR = "vector"
SCALAR = "scalar"

VECTOR_BUILTINS = ("x", "best", "r1", "r2", "r3", "mean", "lb", "ub")
SCALAR_BUILTINS = ("cv", "f", "dim")
DRAW_FUNCTIONS = ("rand", "randn")
RESERVED = set(VECTOR_BUILTINS) | set(SCALAR_BUILTINS) | set(DRAW_FUNCTIONS) | {
    "bincross",
    "clamp",
    "abs",
    "min",
    "max",
}


class RuleError(ValueError):
    """Base class for every rule rejection; ``kind`` is a stable machine tag
    so the outer loop can report the failure class back to the generator."""

    kind = "rule"

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"{line}:{col}: {message}"
        super().__init__(message)


class RuleSyntaxError(RuleError):
    kind = "syntax"


class RuleTypeError(RuleError):
    kind = "type"


class UnboundIdentifierError(RuleError):
    kind = "unbound-identifier"


class MissingOffspringError(RuleError):
    kind = "missing-offspring"


class ReservedNameError(RuleError):
    kind = "reserved-name"


class SourceLimitError(RuleError):
    kind = "source-limit"


@dataclass(frozen=True)
class RuleSource:
    text: str
    origin: str = "scripted"  # llm | scripted | builtin


# --- abstract syntax ---------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Ref:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple["Expr", ...]


Expr = Num | Ref | Neg | BinOp | Call


@dataclass(frozen=True)
class Assign:
    name: str
    expr: Expr


@dataclass(frozen=True)
class RuleAst:
    params: tuple[tuple[str, float], ...]
    statements: tuple[Assign, ...]


# --- lexer -------------------------------------------------------------------

_NUMBER_RE = re.compile(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_SYMBOLS = "+-*/()=;,"


@dataclass(frozen=True)
class _Token:
    kind: str  # NUMBER | IDENT | one of _SYMBOLS | EOF
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        m = _NUMBER_RE.match(text, i)
        if m:
            tokens.append(_Token("NUMBER", m.group(0), line, col))
            col += len(m.group(0))
            i = m.end()
            continue
        m = _IDENT_RE.match(text, i)
        if m:
            tokens.append(_Token("IDENT", m.group(0), line, col))
            col += len(m.group(0))
            i = m.end()
            continue
        if ch in _SYMBOLS:
            tokens.append(_Token(ch, ch, line, col))
            i += 1
            col += 1
            continue
        raise RuleSyntaxError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("EOF", "", line, col))
    return tokens


# --- parser ------------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def cur(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.cur
        self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        if self.cur.kind != kind:
            raise RuleSyntaxError(
                f"expected {kind!r}, found {self.cur.text or 'end of input'!r}",
                self.cur.line,
                self.cur.col,
            )
        return self.advance()

    def parse_program(self) -> list[Assign]:
        statements = []
        while self.cur.kind != "EOF":
            name = self.expect("IDENT")
            self.expect("=")
            expr = self.parse_expr()
            self.expect(";")
            statements.append(Assign(name.text, expr))
        if not statements:
            raise RuleSyntaxError("empty rule: expected at least one assignment", 1, 1)
        return statements

    def parse_expr(self) -> Expr:
        node = self.parse_term()
        while self.cur.kind in "+-":
            op = self.advance().kind
            node = BinOp(op, node, self.parse_term())
        return node

    def parse_term(self) -> Expr:
        node = self.parse_unary()
        while self.cur.kind in "*/":
            op = self.advance().kind
            node = BinOp(op, node, self.parse_unary())
        return node

    def parse_unary(self) -> Expr:
        if self.cur.kind == "-":
            self.advance()
            return Neg(self.parse_unary())
        return self.parse_primary()

    def parse_primary(self) -> Expr:
        tok = self.cur
        if tok.kind == "NUMBER":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "IDENT":
            self.advance()
            if self.cur.kind == "(":
                self.advance()
                args = []
                if self.cur.kind != ")":
                    args.append(self.parse_expr())
                    while self.cur.kind == ",":
                        self.advance()
                        args.append(self.parse_expr())
                self.expect(")")
                return Call(tok.text, tuple(args))
            return Ref(tok.text)
        if tok.kind == "(":
            self.advance()
            node = self.parse_expr()
            self.expect(")")
            return node
        raise RuleSyntaxError(
            f"expected a value, found {tok.text or 'end of input'!r}", tok.line, tok.col
        )


def _literal_value(expr: Expr) -> float | None:
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Neg) and isinstance(expr.operand, Num):
        return -expr.operand.value
    return None


def _split_params(statements: list[Assign]) -> tuple[tuple[tuple[str, float], ...], list[Assign]]:
    params = []
    rest = list(statements)
    while rest:
        value = _literal_value(rest[0].expr)
        if value is None:
            break
        params.append((rest[0].name, value))
        rest.pop(0)
    return tuple(params), rest


# --- static checking ---------------------------------------------------------

_FUNCTION_SIGNATURES = {
    # name -> (arg types or None for numeric-any, result or None for broadcast)
    "bincross": ((VECTOR, VECTOR, SCALAR), VECTOR),
    "clamp": ((VECTOR,), VECTOR),
    "abs": ((None,), None),
    "min": ((None, None), None),
    "max": ((None, None), None),
    "rand": ((), SCALAR),
    "randn": ((), SCALAR),
}


def _check_expr(expr: Expr, env: dict[str, str]) -> str:
    if isinstance(expr, Num):
        return SCALAR
    if isinstance(expr, Ref):
        if expr.name in env:
            return env[expr.name]
        if expr.name in VECTOR_BUILTINS:
            return VECTOR
        if expr.name in SCALAR_BUILTINS:
            return SCALAR
        if expr.name in DRAW_FUNCTIONS:
            raise RuleTypeError(f"{expr.name} is a function: write {expr.name}()")
        raise UnboundIdentifierError(f"unbound identifier {expr.name!r}")
    if isinstance(expr, Neg):
        return _check_expr(expr.operand, env)
    if isinstance(expr, BinOp):
        lt = _check_expr(expr.left, env)
        rt = _check_expr(expr.right, env)
        return VECTOR if VECTOR in (lt, rt) else SCALAR
    if isinstance(expr, Call):
        sig = _FUNCTION_SIGNATURES.get(expr.fn)
        if sig is None:
            raise UnboundIdentifierError(f"unknown function {expr.fn!r}")
        arg_types, result = sig
        if len(expr.args) != len(arg_types):
            raise RuleTypeError(
                f"{expr.fn} expects {len(arg_types)} argument(s), got {len(expr.args)}"
            )
        seen = []
        for want, arg in zip(arg_types, expr.args):
            got = _check_expr(arg, env)
            seen.append(got)
            if want is not None and got != want:
                raise RuleTypeError(f"{expr.fn} argument must be a {want}, got a {got}")
        if result is not None:
            return result
        return VECTOR if VECTOR in seen else SCALAR
    raise AssertionError(f"unreachable expression node {expr!r}")


def check(ast: RuleAst) -> RuleAst:
    """Validate identifier binding, typing and the offspring contract."""
    env: dict[str, str] = {}
    for name, _ in ast.params:
        if name in RESERVED:
            raise ReservedNameError(f"cannot redefine builtin {name!r}")
        if name in env:
            raise ReservedNameError(f"duplicate parameter {name!r}")
        env[name] = SCALAR
    if not ast.statements:
        raise MissingOffspringError("rule has no statements: the last one must assign offspring")
    for stmt in ast.statements:
        if stmt.name in RESERVED:
            raise ReservedNameError(f"cannot assign to builtin {stmt.name!r}")
        env[stmt.name] = _check_expr(stmt.expr, env)
    last = ast.statements[-1]
    if last.name != "offspring":
        raise MissingOffspringError("the final assignment must target `offspring`")
    if env["offspring"] != VECTOR:
        raise RuleTypeError("offspring must be a vector, this rule produces a scalar")
    return ast


def parse(source: RuleSource | str) -> RuleAst:
    """Parse and check a rule, returning its AST.

    Raises a :class:`RuleError` subclass whose ``kind`` identifies the failure
    (syntax, type, unbound-identifier, missing-offspring, reserved-name,
    source-limit).
    """
    text = source.text if isinstance(source, RuleSource) else source
    if not text or not text.strip():
        raise SourceLimitError("rule source is empty")
    if len(text) > MAX_RULE_CHARS:
        raise SourceLimitError(f"rule source exceeds {MAX_RULE_CHARS} characters")
    statements = _Parser(_tokenize(text)).parse_program()
    params, rest = _split_params(statements)
    return check(RuleAst(params=params, statements=tuple(rest)))


# --- canonical printing ------------------------------------------------------

_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2}


def _print_expr(expr: Expr, parent_prec: int = 0, right_side: bool = False) -> str:
    if isinstance(expr, Num):
        return repr(expr.value)
    if isinstance(expr, Ref):
        return expr.name
    if isinstance(expr, Neg):
        inner = _print_expr(expr.operand, 3)
        return f"-{inner}"
    if isinstance(expr, Call):
        args = ", ".join(_print_expr(a) for a in expr.args)
        return f"{expr.fn}({args})"
    prec = _PRECEDENCE[expr.op]
    left = _print_expr(expr.left, prec, right_side=False)
    right = _print_expr(expr.right, prec + 1, right_side=True)
    text = f"{left} {expr.op} {right}"
    if prec < parent_prec:
        return f"({text})"
    return text


def print_rule(ast: RuleAst) -> str:
    """Canonical textual form; ``parse(print_rule(ast))`` reproduces ``ast``."""
    lines = [f"{name} = {repr(value)};" for name, value in ast.params]
    lines += [f"{stmt.name} = {_print_expr(stmt.expr)};" for stmt in ast.statements]
    return "\n".join(lines)


# --- interpretation ----------------------------------------------------------


def draw_distinct_indices(rng, n: int, target: int, count: int = 3) -> tuple[int, ...]:
    """Rejection-sample ``count`` distinct population indices != ``target``.

    This is step (1) of the randomness contract; the order of draws matters
    for reproducibility.
    """
    if n < count + 1:
        raise ValueError(f"need a population of at least {count + 1}, got {n}")
    chosen: list[int] = []
    taken = {target}
    while len(chosen) < count:
        r = int(rng.integers(n))
        if r in taken:
            continue
        taken.add(r)
        chosen.append(r)
    return tuple(chosen)


@dataclass
class RuleContext:
    """Everything a rule may read while producing one offspring."""

    x: np.ndarray
    f: float
    cv: float
    r1: np.ndarray
    r2: np.ndarray
    r3: np.ndarray
    best: np.ndarray
    mean: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    rng: object
    n_resampled: int = 0

    @property
    def dim(self) -> int:
        return self.x.shape[0]

    @classmethod
    def for_target(cls, X, f_arr, cv_arr, i, best_idx, mean, lb, ub, rng) -> "RuleContext":
        r1, r2, r3 = draw_distinct_indices(rng, X.shape[0], i)
        return cls(
            x=X[i],
            f=float(f_arr[i]),
            cv=float(cv_arr[i]),
            r1=X[r1],
            r2=X[r2],
            r3=X[r3],
            best=X[best_idx],
            mean=mean,
            lb=lb,
            ub=ub,
            rng=rng,
        )


def binomial_crossover(a: np.ndarray, b: np.ndarray, cr: float, rng) -> np.ndarray:
    """Per-component mix of ``a`` and ``b`` with one forced ``b`` component."""
    dim = a.shape[0]
    jrand = int(rng.integers(dim))
    u = rng.random(dim)
    mask = u < cr
    mask[jrand] = True
    return np.where(mask, b, a)


def interpret(rule: RuleAst, ctx: RuleContext) -> np.ndarray:
    """Execute a checked rule against one target, returning the offspring.

    Deterministic given the context's rng state.  Non-finite intermediate
    values propagate silently; non-finite components of the final offspring
    are resampled uniformly in bounds and counted in ``ctx.n_resampled``.
    """
    env: dict[str, object] = {name: np.float64(value) for name, value in rule.params}
    builtins: dict[str, object] = {
        "x": ctx.x,
        "best": ctx.best,
        "r1": ctx.r1,
        "r2": ctx.r2,
        "r3": ctx.r3,
        "mean": ctx.mean,
        "lb": ctx.lb,
        "ub": ctx.ub,
        "cv": np.float64(ctx.cv),
        "f": np.float64(ctx.f),
        "dim": np.float64(ctx.dim),
    }

    def ev(expr: Expr):
        if isinstance(expr, Num):
            return np.float64(expr.value)
        if isinstance(expr, Ref):
            if expr.name in env:
                return env[expr.name]
            return builtins[expr.name]
        if isinstance(expr, Neg):
            return -ev(expr.operand)
        if isinstance(expr, BinOp):
            left = ev(expr.left)
            right = ev(expr.right)
            if expr.op == "+":
                return left + right
            if expr.op == "-":
                return left - right
            if expr.op == "*":
                return left * right
            return left / right
        fn = expr.fn
        if fn == "rand":
            return np.float64(ctx.rng.random())
        if fn == "randn":
            return np.float64(ctx.rng.standard_normal())
        if fn == "abs":
            return np.abs(ev(expr.args[0]))
        if fn == "min":
            return np.minimum(ev(expr.args[0]), ev(expr.args[1]))
        if fn == "max":
            return np.maximum(ev(expr.args[0]), ev(expr.args[1]))
        if fn == "clamp":
            return np.clip(ev(expr.args[0]), ctx.lb, ctx.ub)
        # bincross: evaluate operands left to right, then draw
        a = ev(expr.args[0])
        b = ev(expr.args[1])
        cr = ev(expr.args[2])
        return binomial_crossover(a, b, float(cr), ctx.rng)

    with np.errstate(all="ignore"):
        for stmt in rule.statements:
            env[stmt.name] = ev(stmt.expr)

    offspring = np.array(env["offspring"], dtype=np.float64, copy=True)
    bad = np.nonzero(~np.isfinite(offspring))[0]
    for k in bad:
        offspring[k] = ctx.lb[k] + ctx.rng.random() * (ctx.ub[k] - ctx.lb[k])
    ctx.n_resampled += len(bad)
    return offspring


# --- builtin rule corpus -----------------------------------------------------

BUILTIN_RULE_TEXTS = {
    "de_rand_1_bin": (
        "F = 0.5;\n"
        "CR = 0.9;\n"
        "v = r1 + F * (r2 - r3);\n"
        "offspring = bincross(x, clamp(v), CR);"
    ),
    "de_best_1_bin": (
        "F = 0.5;\n"
        "CR = 0.9;\n"
        "v = best + F * (r2 - r3);\n"
        "offspring = bincross(x, clamp(v), CR);"
    ),
    "no_op": "offspring = x;",
    "uniform_random": "offspring = clamp(lb + rand() * (ub - lb));",
}


def builtin_rules() -> dict[str, RuleAst]:
    """The seed corpus: canonical DE variants plus degenerate controls."""
    return {name: parse(RuleSource(text, origin="builtin")) for name, text in BUILTIN_RULE_TEXTS.items()}
