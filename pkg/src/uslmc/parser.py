"""Concrete syntax: lexer, recursive-descent parser, renderer.

Surface syntax (ASCII):

    <<x>> phi          existential strategy quantifier
    [[x]] phi          universal quantifier, sugar for !<<x>>!phi
    bind(A,x) psi      binder; A is a bare agent, {a1,a2} or {}
    unbind(A,x) psi    unbinder
    X U F G            temporal operators (F/G are sugar over U)
    ! & | ->           boolean connectives, plus literals true/false

Precedence, loosest to tightest: ``->``, ``|``, ``&``, ``U``, prefix
operators.  Prefix operators take the smallest following formula and chain
right-associatively, so ``<<x1>> bind(a,x1) G p`` nests as
exists(x1, bind(a,x1, always(p))).  ``#`` starts a line comment.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import formula as F
from .formula import Span

KEYWORDS = {"bind", "unbind", "true", "false", "X", "U", "F", "G"}

_PUNCT = ["<<", ">>", "[[", "]]", "->", "(", ")", "{", "}", ",", "!", "&", "|"]


class ParseError(ValueError):
    """Syntax, sort or dialect error with a source span."""

    def __init__(self, message: str, span: Span):
        super().__init__(f"{message} (at {span.start}..{span.end})")
        self.message = message
        self.span = span


class SortError(ParseError):
    pass


class DialectError(ParseError):
    pass


@dataclass(frozen=True)
class Token:
    kind: str  # punctuation literal, 'name', 'keyword', 'eof'
    text: str
    start: int
    end: int

    @property
    def span(self) -> Span:
        return Span(self.start, self.end)


def _lex(text: str) -> list:
    toks = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            i += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        matched = False
        for p in _PUNCT:
            if text.startswith(p, i):
                toks.append(Token(p, p, i, i + len(p)))
                i += len(p)
                matched = True
                break
        if matched:
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "keyword" if word in KEYWORDS else "name"
            toks.append(Token(kind, word, i, j))
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", Span(i, i + 1))
    toks.append(Token("eof", "", n, n))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _lex(text)
        self.pos = 0

    def peek(self) -> Token:
        return self.toks[self.pos]

    def take(self) -> Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, kind: str) -> Token:
        t = self.peek()
        if t.kind != kind:
            raise ParseError(f"expected {kind!r}, found {t.text!r}", t.span)
        return self.take()

    def expect_name(self, what: str) -> Token:
        t = self.peek()
        if t.kind != "name":
            raise ParseError(f"expected {what}, found {t.text!r}", t.span)
        return self.take()

    # precedence ladder -------------------------------------------------

    def parse(self) -> F.Formula:
        f = self.implies()
        t = self.peek()
        if t.kind != "eof":
            raise ParseError(f"unexpected trailing input {t.text!r}", t.span)
        return f

    def implies(self) -> F.Formula:
        left = self.disjunction()
        if self.peek().kind == "->":
            self.take()
            right = self.implies()
            return F.implies(left, right, span=self._span(left, right))
        return left

    def disjunction(self) -> F.Formula:
        left = self.conjunction()
        while self.peek().kind == "|":
            self.take()
            right = self.conjunction()
            left = F.f_or(left, right, span=self._span(left, right))
        return left

    def conjunction(self) -> F.Formula:
        left = self.until()
        while self.peek().kind == "&":
            self.take()
            right = self.until()
            left = F.path_and(left, right, span=self._span(left, right))
        return left

    def until(self) -> F.Formula:
        left = self.prefix()
        t = self.peek()
        if t.kind == "keyword" and t.text == "U":
            self.take()
            right = self.until()
            return F.Until(left, right, span=self._span(left, right))
        return left

    def prefix(self) -> F.Formula:
        t = self.peek()
        if t.kind == "!":
            self.take()
            body = self.prefix()
            return F.path_not(body, span=self._span_from(t, body))
        if t.kind == "<<":
            self.take()
            var = self.expect_name("a variable")
            self.expect(">>")
            body = self.prefix()
            self._require_state(body, "the strategy quantifier")
            return F.Exists(var.text, body, span=self._span_from(t, body))
        if t.kind == "[[":
            self.take()
            var = self.expect_name("a variable")
            self.expect("]]")
            body = self.prefix()
            self._require_state(body, "the strategy quantifier")
            return F.forall(var.text, body, span=self._span_from(t, body))
        if t.kind == "keyword" and t.text in ("bind", "unbind"):
            self.take()
            self.expect("(")
            agents = self._coalition()
            self.expect(",")
            var = self.expect_name("a variable")
            self.expect(")")
            body = self.prefix()
            ctor = F.Bind if t.text == "bind" else F.Unbind
            return ctor(agents, var.text, body, span=self._span_from(t, body))
        if t.kind == "keyword" and t.text == "X":
            self.take()
            body = self.prefix()
            return F.Next(body, span=self._span_from(t, body))
        if t.kind == "keyword" and t.text == "F":
            self.take()
            body = self.prefix()
            return F.eventually(body, span=self._span_from(t, body))
        if t.kind == "keyword" and t.text == "G":
            self.take()
            body = self.prefix()
            return F.always(body, span=self._span_from(t, body))
        if t.kind == "keyword" and t.text in ("true", "false"):
            self.take()
            return F.Const(t.text == "true", span=t.span)
        if t.kind == "name":
            self.take()
            return F.Atom(t.text, span=t.span)
        if t.kind == "(":
            self.take()
            body = self.implies()
            close = self.expect(")")
            return _with_span(body, Span(t.start, close.end))
        raise ParseError(f"expected a formula, found {t.text!r}", t.span)

    def _coalition(self) -> frozenset:
        t = self.peek()
        if t.kind == "name":
            self.take()
            return frozenset([t.text])
        if t.kind == "{":
            self.take()
            agents = []
            if self.peek().kind == "name":
                agents.append(self.take().text)
                while self.peek().kind == ",":
                    self.take()
                    agents.append(self.expect_name("an agent").text)
            self.expect("}")
            return frozenset(agents)
        raise ParseError(f"expected an agent or a coalition, found {t.text!r}", t.span)

    def _require_state(self, f: F.Formula, where: str) -> None:
        if not isinstance(f, F.StateFormula):
            raise SortError(
                f"{where} must be applied to a state formula", f.span or self.peek().span
            )

    @staticmethod
    def _span(left: F.Formula, right: F.Formula) -> Optional[Span]:
        if left.span and right.span:
            return Span(left.span.start, right.span.end)
        return None

    @staticmethod
    def _span_from(tok: Token, body: F.Formula) -> Span:
        end = body.span.end if body.span else tok.end
        return Span(tok.start, end)


def _with_span(f: F.Formula, span: Span) -> F.Formula:
    object.__setattr__(f, "span", span)
    return f


def parse_formula(text: str, dialect: str = "usl") -> F.Formula:
    """Parse one formula; ``dialect`` is ``usl`` or ``sl``."""
    if dialect not in ("usl", "sl"):
        raise ValueError(f"unknown dialect {dialect!r}")
    f = _Parser(text).parse()
    if dialect == "sl":
        try:
            F.check_single_agent_dialect(f)
        except F.DialectViolation as e:
            raise DialectError(str(e), e.span or Span(0, len(text))) from None
    return f


def load_formula(path, dialect: str = "usl") -> F.Formula:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_formula(fh.read(), dialect)


# -- rendering -----------------------------------------------------------

def _match_neg(f):
    if isinstance(f, (F.Not, F.PathNot)):
        return f.operand
    return None


def _sugar(f):
    """Recognize derived-operator shapes in the core AST."""
    if isinstance(f, F.Not) and isinstance(f.operand, F.Exists):
        inner = _match_neg(f.operand.operand)
        if inner is not None:
            return ("forall", f.operand.var, inner)
    neg = _match_neg(f)
    if neg is not None and isinstance(neg, F.Until) and neg.left == F.Const(True):
        body = _match_neg(neg.right)
        if body is not None:
            return ("always", body)
    if isinstance(f, F.Until) and f.left == F.Const(True):
        return ("eventually", f.right)
    if neg is not None and isinstance(neg, (F.And, F.PathAnd)):
        nl, nr = _match_neg(neg.left), _match_neg(neg.right)
        if nl is not None and nr is not None:
            return ("or", nl, nr)
        if nr is not None:
            return ("implies", neg.left, nr)
    return None


def _is_literalish(f) -> bool:
    """Atoms, constants and bare negation chains render without parens."""
    if isinstance(f, (F.Atom, F.Const)):
        return True
    if isinstance(f, (F.Not, F.PathNot)) and _sugar(f) is None:
        return _is_literalish(f.operand)
    return False


def _infix_operand(f) -> str:
    s = render_formula(f)
    return s if _is_literalish(f) else f"({s})"


def _prefix_operand(f) -> str:
    s = render_formula(f)
    sugar = _sugar(f)
    if sugar is not None:
        return s if sugar[0] in ("forall", "always", "eventually") else f"({s})"
    if isinstance(f, (F.Atom, F.Const, F.Not, F.PathNot, F.Exists, F.Bind, F.Unbind, F.Next)):
        return s
    return f"({s})"


def _render_coalition(agents: frozenset) -> str:
    if len(agents) == 1:
        return next(iter(agents))
    return "{" + ",".join(sorted(agents)) + "}"


def render_formula(f: F.Formula) -> str:
    """Canonical text for a formula; ``parse_formula`` round-trips it."""
    sugar = _sugar(f)
    if sugar is not None:
        tag = sugar[0]
        if tag == "forall":
            return f"[[{sugar[1]}]] {_prefix_operand(sugar[2])}"
        if tag == "always":
            return f"G {_prefix_operand(sugar[1])}"
        if tag == "eventually":
            return f"F {_prefix_operand(sugar[1])}"
        if tag == "or":
            return f"{_infix_operand(sugar[1])} | {_infix_operand(sugar[2])}"
        if tag == "implies":
            return f"{_infix_operand(sugar[1])} -> {_infix_operand(sugar[2])}"
    if isinstance(f, F.Atom):
        return f.name
    if isinstance(f, F.Const):
        return "true" if f.value else "false"
    if isinstance(f, (F.Not, F.PathNot)):
        return f"!{_prefix_operand(f.operand)}"
    if isinstance(f, (F.And, F.PathAnd)):
        return f"{_infix_operand(f.left)} & {_infix_operand(f.right)}"
    if isinstance(f, F.Until):
        return f"{_infix_operand(f.left)} U {_infix_operand(f.right)}"
    if isinstance(f, F.Next):
        return f"X {_prefix_operand(f.operand)}"
    if isinstance(f, F.Exists):
        return f"<<{f.var}>> {_prefix_operand(f.operand)}"
    if isinstance(f, F.Bind):
        return f"bind({_render_coalition(f.agents)},{f.var}) {_prefix_operand(f.operand)}"
    if isinstance(f, F.Unbind):
        return f"unbind({_render_coalition(f.agents)},{f.var}) {_prefix_operand(f.operand)}"
    raise TypeError(f"not a formula: {f!r}")
