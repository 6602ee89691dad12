"""Tiny expression language for coefficient formulas in the variable t.

Grammar (ASCII):

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          -- right associative
    atom   := NUMBER | 'pi' | 'e' | 't'
            | FN '(' expr (',' expr)* ')'
            | '(' expr ')'

Functions: exp, ln, sin, cos, sqrt (arity 1) and pow (arity 2).
Precedence: ^  >  unary -  >  * /  >  + -.

All formulas are real-valued functions of real t; evaluation raises
:class:`~fracphi.errors.ExprDomainError` outside the natural domain
(ln/sqrt of a negative number, division by zero).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ExprDomainError, ExprSyntaxError

__all__ = [
    "ExprAst",
    "Num",
    "Const",
    "Var",
    "Neg",
    "Bin",
    "Call",
    "parse",
    "unparse",
    "evaluate",
    "differentiate",
    "fold",
    "as_constant",
]

_CONSTANTS = {"pi": math.pi, "e": math.e}
_FUNCTIONS = {"exp": 1, "ln": 1, "sin": 1, "cos": 1, "sqrt": 1, "pow": 2}
_BINOPS = ("+", "-", "*", "/", "^")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Const:
    name: str  # "pi" or "e"


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    arg: "ExprAst"


@dataclass(frozen=True)
class Bin:
    op: str
    left: "ExprAst"
    right: "ExprAst"


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple


ExprAst = Num | Const | Var | Neg | Bin | Call


# ---------------------------------------------------------------------------
# tokenizer / parser


@dataclass(frozen=True)
class _Token:
    kind: str  # "num", "ident", "op", "end"
    text: str
    offset: int


def _tokenize(src: str) -> list[_Token]:
    tokens = []
    i, n = 0, len(src)
    while i < n:
        c = src[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and src[i + 1].isdigit()):
            j = i
            while j < n and (src[j].isdigit() or src[j] == "."):
                j += 1
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] in "+-":
                    k += 1
                if k < n and src[k].isdigit():
                    j = k
                    while j < n and src[j].isdigit():
                        j += 1
            text = src[i:j]
            try:
                float(text)
            except ValueError:
                raise ExprSyntaxError(f"malformed number '{text}'", i) from None
            tokens.append(_Token("num", text, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            tokens.append(_Token("ident", src[i:j], i))
            i = j
            continue
        if c in "+-*/^(),":
            tokens.append(_Token("op", c, i))
            i += 1
            continue
        raise ExprSyntaxError(f"unexpected character '{c}'", i)
    tokens.append(_Token("end", "", n))
    return tokens


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.tokens = _tokenize(src)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, text: str) -> None:
        tok = self.peek()
        if tok.kind == "op" and tok.text == text:
            self.advance()
            return
        raise ExprSyntaxError(f"expected '{text}'", tok.offset)

    def parse(self) -> ExprAst:
        node = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ExprSyntaxError(f"unexpected trailing input '{tok.text}'", tok.offset)
        return node

    def expr(self) -> ExprAst:
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            node = Bin(op, node, self.term())
        return node

    def term(self) -> ExprAst:
        node = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            node = Bin(op, node, self.unary())
        return node

    def unary(self) -> ExprAst:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> ExprAst:
        base = self.atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            return Bin("^", base, self.unary())
        return base

    def atom(self) -> ExprAst:
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "ident":
            self.advance()
            name = tok.text
            if name == "t":
                return Var()
            if name in _CONSTANTS:
                return Const(name)
            if name in _FUNCTIONS:
                self.expect_op("(")
                args = [self.expr()]
                while self.peek().kind == "op" and self.peek().text == ",":
                    self.advance()
                    args.append(self.expr())
                self.expect_op(")")
                arity = _FUNCTIONS[name]
                if len(args) != arity:
                    raise ExprSyntaxError(
                        f"{name} takes {arity} argument(s), got {len(args)}", tok.offset
                    )
                return Call(name, tuple(args))
            raise ExprSyntaxError(f"unknown identifier '{name}'", tok.offset)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExprSyntaxError("expected operand", tok.offset)


def parse(src: str) -> ExprAst:
    """Parse a formula string into an AST."""
    return _Parser(src).parse()


# ---------------------------------------------------------------------------
# unparse

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


def _prec(node: ExprAst) -> int:
    if isinstance(node, Bin):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _PREC["neg"]
    return _PREC["atom"]


def unparse(node: ExprAst) -> str:
    """Render an AST back to a string that reparses to an equal AST."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Var):
        return "t"
    if isinstance(node, Neg):
        inner = unparse(node.arg)
        if _prec(node.arg) < _PREC["neg"]:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, Bin):
        op = node.op
        lhs, rhs = unparse(node.left), unparse(node.right)
        lp, rp = _prec(node.left), _prec(node.right)
        p = _PREC[op]
        if lp < p or (lp == p and op == "^"):
            lhs = f"({lhs})"
        # left-associative parsing: an equal-precedence right child needs parens
        if rp < p or (rp == p and op != "^"):
            rhs = f"({rhs})"
        return f"{lhs} {op} {rhs}" if op in "+-" else f"{lhs}{op}{rhs}"
    if isinstance(node, Call):
        return f"{node.fn}({', '.join(unparse(a) for a in node.args)})"
    raise TypeError(f"not an expression node: {node!r}")


# ---------------------------------------------------------------------------
# evaluation


def evaluate(node: ExprAst, t: float) -> float:
    """Evaluate at real t.  Values are real; use complex(evaluate(...)) if needed."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Const):
        return _CONSTANTS[node.name]
    if isinstance(node, Var):
        return float(t)
    if isinstance(node, Neg):
        return -evaluate(node.arg, t)
    if isinstance(node, Bin):
        a = evaluate(node.left, t)
        b = evaluate(node.right, t)
        return _apply_binop(node, node.op, a, b)
    if isinstance(node, Call):
        vals = [evaluate(a, t) for a in node.args]
        return _apply_fn(node, node.fn, vals)
    raise TypeError(f"not an expression node: {node!r}")


def _apply_binop(node: ExprAst, op: str, a: float, b: float) -> float:
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0:
            raise ExprDomainError("division by zero", unparse(node))
        return a / b
    if op == "^":
        return _real_pow(node, a, b)
    raise ValueError(f"unknown operator {op!r}")


def _real_pow(node: ExprAst, a: float, b: float) -> float:
    if a == 0 and b < 0:
        raise ExprDomainError("zero raised to a negative power", unparse(node))
    if a < 0 and not float(b).is_integer():
        raise ExprDomainError("negative base with non-integer exponent", unparse(node))
    try:
        return math.pow(a, b)
    except OverflowError:
        raise ExprDomainError("overflow", unparse(node)) from None


def _apply_fn(node: ExprAst, fn: str, vals: list[float]) -> float:
    if fn == "exp":
        try:
            return math.exp(vals[0])
        except OverflowError:
            raise ExprDomainError("overflow", unparse(node)) from None
    if fn == "ln":
        if vals[0] <= 0:
            raise ExprDomainError("logarithm of a non-positive number", unparse(node))
        return math.log(vals[0])
    if fn == "sin":
        return math.sin(vals[0])
    if fn == "cos":
        return math.cos(vals[0])
    if fn == "sqrt":
        if vals[0] < 0:
            raise ExprDomainError("square root of a negative number", unparse(node))
        return math.sqrt(vals[0])
    if fn == "pow":
        return _real_pow(node, vals[0], vals[1])
    raise ValueError(f"unknown function {fn!r}")


# ---------------------------------------------------------------------------
# symbolic differentiation with constant folding

_ZERO = Num(0.0)
_ONE = Num(1.0)


def _is_num(node: ExprAst, value: float | None = None) -> bool:
    if not isinstance(node, Num):
        return False
    return value is None or node.value == value


def _literal(node: ExprAst) -> float | None:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Const):
        return _CONSTANTS[node.name]
    return None


def fold(node: ExprAst) -> ExprAst:
    """Constant-fold literal subtrees; no general simplification."""
    if isinstance(node, (Num, Const, Var)):
        return node
    if isinstance(node, Neg):
        arg = fold(node.arg)
        v = _literal(arg)
        if v is not None:
            return Num(-v)
        if isinstance(arg, Neg):
            return arg.arg
        return Neg(arg)
    if isinstance(node, Bin):
        a, b = fold(node.left), fold(node.right)
        av, bv = _literal(a), _literal(b)
        if av is not None and bv is not None:
            try:
                return Num(_apply_binop(Bin(node.op, a, b), node.op, av, bv))
            except ExprDomainError:
                return Bin(node.op, a, b)
        if node.op == "+":
            if _is_num(a, 0.0):
                return b
            if _is_num(b, 0.0):
                return a
        elif node.op == "-":
            if _is_num(b, 0.0):
                return a
            if _is_num(a, 0.0):
                return fold(Neg(b))
        elif node.op == "*":
            if _is_num(a, 0.0) or _is_num(b, 0.0):
                return _ZERO
            if _is_num(a, 1.0):
                return b
            if _is_num(b, 1.0):
                return a
        elif node.op == "/":
            if _is_num(a, 0.0) and not _is_num(b, 0.0):
                return _ZERO
            if _is_num(b, 1.0):
                return a
        elif node.op == "^":
            if _is_num(b, 1.0):
                return a
            if _is_num(b, 0.0):
                return _ONE
        return Bin(node.op, a, b)
    if isinstance(node, Call):
        args = tuple(fold(a) for a in node.args)
        vals = [_literal(a) for a in args]
        if all(v is not None for v in vals):
            try:
                return Num(_apply_fn(Call(node.fn, args), node.fn, vals))
            except ExprDomainError:
                pass
        return Call(node.fn, args)
    raise TypeError(f"not an expression node: {node!r}")


def differentiate(node: ExprAst) -> ExprAst:
    """Symbolic d/dt, constant-folded.  Total on the AST."""
    return fold(_diff(node))


def _diff(node: ExprAst) -> ExprAst:
    if isinstance(node, (Num, Const)):
        return _ZERO
    if isinstance(node, Var):
        return _ONE
    if isinstance(node, Neg):
        return Neg(_diff(node.arg))
    if isinstance(node, Bin):
        a, b = node.left, node.right
        da, db = _diff(a), _diff(b)
        if node.op in "+-":
            return Bin(node.op, da, db)
        if node.op == "*":
            return Bin("+", Bin("*", da, b), Bin("*", a, db))
        if node.op == "/":
            num = Bin("-", Bin("*", da, b), Bin("*", a, db))
            return Bin("/", num, Bin("^", b, Num(2.0)))
        if node.op == "^":
            return _diff_pow(a, b, da, db)
        raise ValueError(f"unknown operator {node.op!r}")
    if isinstance(node, Call):
        if node.fn == "pow":
            a, b = node.args
            return _diff_pow(a, b, _diff(a), _diff(b))
        (a,) = node.args
        da = _diff(a)
        if node.fn == "exp":
            outer = Call("exp", (a,))
        elif node.fn == "ln":
            return Bin("/", da, a)
        elif node.fn == "sin":
            outer = Call("cos", (a,))
        elif node.fn == "cos":
            outer = Neg(Call("sin", (a,)))
        elif node.fn == "sqrt":
            return Bin("/", da, Bin("*", Num(2.0), Call("sqrt", (a,))))
        else:
            raise ValueError(f"unknown function {node.fn!r}")
        return Bin("*", outer, da)
    raise TypeError(f"not an expression node: {node!r}")


def _diff_pow(a: ExprAst, b: ExprAst, da: ExprAst, db: ExprAst) -> ExprAst:
    # a^b with constant exponent: b * a^(b-1) * a'; otherwise the general
    # a^b * (b' ln a + b a'/a) form, which requires a > 0 at evaluation time.
    fb = fold(b)
    if isinstance(fb, Num):
        power = Bin("^", a, Num(fb.value - 1.0))
        return Bin("*", Bin("*", fb, power), da)
    fa = fold(a)
    if isinstance(fa, Num) or isinstance(fa, Const):
        return Bin("*", Bin("^", fa, b), Bin("*", Call("ln", (fa,)), db))
    log_term = Bin("*", db, Call("ln", (a,)))
    ratio_term = Bin("/", Bin("*", b, da), a)
    return Bin("*", Bin("^", a, b), Bin("+", log_term, ratio_term))


def as_constant(node: ExprAst) -> float | None:
    """Return the value of a constant expression, or None if t-dependent."""
    folded = fold(node)
    if isinstance(folded, Num):
        return folded.value
    if isinstance(folded, Const):
        return _CONSTANTS[folded.name]
    return None
