"""Concrete syntax: parse and print programs in a DLV-compatible dialect.

Grammar highlights: rules end with `.`; head literals separated by `v`;
`:-` introduces the body; `not ` is weak negation, `-` strong negation;
`%` starts a line comment; quoted strings are constants; the built-ins
`<`, `!=`, `=` and `X = Y + k` are accepted in bodies.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional

from .core import (Atom, Builtin, Literal, Program, Rule, SourceSpan, Term)


class ParseError(Exception):
    def __init__(self, message: str, span: Optional[SourceSpan] = None):
        self.span = span
        if span is not None:
            message = "%s (line %d, column %d)" % (message, span.line, span.column)
        super().__init__(message)


_TOKEN_RE = re.compile(r"""
    (?P<WS>\s+)
  | (?P<COMMENT>%[^\n]*)
  | (?P<IF>:-)
  | (?P<COLON>:)
  | (?P<DOT>\.)
  | (?P<COMMA>,)
  | (?P<LPAR>\()
  | (?P<RPAR>\))
  | (?P<NEQ>!=)
  | (?P<LT><)
  | (?P<EQ>=)
  | (?P<PLUS>\+)
  | (?P<MINUS>-)
  | (?P<STRING>"[^"\n]*")
  | (?P<INTEGER>\d+)
  | (?P<IDENT>[a-z][A-Za-z0-9_]*)
  | (?P<VARIABLE>[A-Z_][A-Za-z0-9_]*)
""", re.VERBOSE)


@dataclass
class _Tok:
    kind: str
    text: str
    span: SourceSpan


def _tokenize(text: str) -> List[_Tok]:
    toks = []
    pos = 0
    line = 1
    linestart = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            span = SourceSpan(pos, pos + 1, line, pos - linestart + 1)
            raise ParseError("illegal character %r" % text[pos], span)
        kind = m.lastgroup
        tok_text = m.group()
        span = SourceSpan(pos, m.end(), line, pos - linestart + 1)
        if kind == "WS":
            for i, ch in enumerate(tok_text):
                if ch == "\n":
                    line += 1
                    linestart = pos + i + 1
        elif kind != "COMMENT":
            toks.append(_Tok(kind, tok_text, span))
        pos = m.end()
    toks.append(_Tok("EOF", "", SourceSpan(n, n, line, n - linestart + 1)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self, ahead: int = 0) -> _Tok:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        if t.kind != "EOF":
            self.i += 1
        return t

    def expect(self, kind: str) -> _Tok:
        t = self.peek()
        if t.kind != kind:
            raise ParseError("expected %s, found %r" % (kind, t.text or "end of input"),
                             t.span)
        return self.next()

    def parse_program(self) -> Program:
        rules = []
        names = set()
        auto = 0
        while self.peek().kind != "EOF":
            start = self.peek().span
            name, r = self.parse_rule()
            auto += 1
            if name is None:
                name = "r%d" % auto
            elif name in names:
                raise ParseError("duplicate explicit rule name %r" % name, start)
            if name in names:
                raise ParseError("rule name %r collides with an auto-assigned name"
                                 % name, start)
            names.add(name)
            rules.append(Rule(name, r.head, r.pbody, r.nbody, r.builtins, start))
        return Program(rules)

    def parse_rule(self):
        name = None
        t = self.peek()
        if t.kind in ("IDENT", "INTEGER") and self.peek(1).kind == "COLON":
            name = self.next().text
            self.next()
        head = []
        t = self.peek()
        if t.kind != "IF":
            head.append(self.parse_literal())
            while self.peek().kind == "IDENT" and self.peek().text == "v":
                self.next()
                head.append(self.parse_literal())
        pbody, nbody, builtins = [], [], []
        if self.peek().kind == "IF":
            ifspan = self.next().span
            if self.peek().kind == "DOT" and not head:
                raise ParseError("rule with empty head and empty body", ifspan)
            if self.peek().kind != "DOT":
                self.parse_body(pbody, nbody, builtins)
        self.expect("DOT")
        return name, Rule(None, tuple(head), tuple(pbody), tuple(nbody),
                          tuple(builtins))

    def parse_body(self, pbody, nbody, builtins):
        while True:
            t = self.peek()
            if t.kind == "IDENT" and t.text == "not":
                self.next()
                nbody.append(self.parse_literal())
            elif t.kind == "MINUS":
                pbody.append(self.parse_literal())
            elif t.kind in ("VARIABLE", "INTEGER", "STRING"):
                builtins.append(self.parse_builtin(self.parse_term()))
            elif t.kind == "IDENT":
                # a bare constant followed by a comparison is a built-in
                if self.peek(1).kind in ("LT", "NEQ", "EQ"):
                    builtins.append(self.parse_builtin(self.parse_term()))
                else:
                    pbody.append(self.parse_literal())
            else:
                raise ParseError("expected body element, found %r" % t.text, t.span)
            if self.peek().kind == "COMMA":
                self.next()
            else:
                return

    def parse_builtin(self, lhs: Term) -> Builtin:
        t = self.peek()
        if t.kind == "LT":
            self.next()
            return Builtin("<", lhs, self.parse_term())
        if t.kind == "NEQ":
            self.next()
            return Builtin("!=", lhs, self.parse_term())
        if t.kind == "EQ":
            self.next()
            rhs = self.parse_term()
            if self.peek().kind == "PLUS":
                self.next()
                return Builtin("=", lhs, rhs, self.parse_term())
            return Builtin("=", lhs, rhs)
        raise ParseError("expected <, != or = after term", t.span)

    def parse_literal(self) -> Literal:
        neg = False
        if self.peek().kind == "MINUS":
            self.next()
            neg = True
        t = self.peek()
        if t.kind != "IDENT":
            raise ParseError("expected predicate name, found %r" % t.text, t.span)
        if t.text in ("not", "v"):
            raise ParseError("%r is a reserved word" % t.text, t.span)
        self.next()
        args = []
        if self.peek().kind == "LPAR":
            self.next()
            args.append(self.parse_term())
            while self.peek().kind == "COMMA":
                self.next()
                args.append(self.parse_term())
            self.expect("RPAR")
        return Literal(Atom(t.text, tuple(args)), neg)

    def parse_term(self) -> Term:
        t = self.next()
        if t.kind == "IDENT":
            return Term.sym(t.text)
        if t.kind == "INTEGER":
            return Term.num(int(t.text))
        if t.kind == "STRING":
            return Term.string(t.text[1:-1])
        if t.kind == "VARIABLE":
            return Term.var(t.text)
        raise ParseError("expected term, found %r" % t.text, t.span)


def parse(text: str) -> Program:
    return _Parser(text).parse_program()


def parse_rule(text: str) -> Rule:
    """Parse a single rule; the trailing dot is required."""
    p = parse(text)
    if len(p.rules) != 1:
        raise ParseError("expected exactly one rule")
    return p.rules[0]


def parse_literal(text: str) -> Literal:
    """Parse one ground literal, e.g. a reified literal name."""
    parser = _Parser(text)
    l = parser.parse_literal()
    if parser.peek().kind != "EOF":
        raise ParseError("trailing input after literal", parser.peek().span)
    return l


def print_rule(r: Rule, auto_name: Optional[str] = None) -> str:
    prefix = ""
    if r.name is not None and r.name != auto_name:
        prefix = "%s: " % r.name
    head = " v ".join(str(l) for l in r.head)
    body = [str(l) for l in r.pbody]
    body += [str(b) for b in r.builtins]
    body += ["not %s" % l for l in r.nbody]
    if not body:
        return "%s%s." % (prefix, head)
    if not head:
        return "%s:- %s." % (prefix, ", ".join(body))
    return "%s%s :- %s." % (prefix, head, ", ".join(body))


def print_program(p: Program) -> str:
    lines = []
    for i, r in enumerate(p.rules, start=1):
        lines.append(print_rule(r, auto_name="r%d" % i))
    return "\n".join(lines)


def print_answer_sets(sets, fmt: str = "text") -> str:
    if fmt == "json":
        import json
        return json.dumps([[str(l) for l in sorted(s.literals, key=str)]
                           for s in sets])
    if fmt != "text":
        raise ValueError("unknown format %r" % fmt)
    lines = []
    for s in sets:
        lines.append("{%s}" % ", ".join(str(l) for l in sorted(s.literals, key=str)))
    return "\n".join(lines)
