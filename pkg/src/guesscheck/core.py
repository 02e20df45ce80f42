"""Core data model: terms, literals, rules, programs, and their classification.

Ground literals carry a canonical total order (lexicographic on the printed
form) which the rest of the toolkit relies on for deterministic output and
for the object-level `<` comparisons of generated programs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence

CONST = "const"
INT = "int"
STRING = "string"
VAR = "var"


@dataclass(frozen=True)
class Term:
    kind: str
    value: object

    @staticmethod
    def sym(name: str) -> "Term":
        return Term(CONST, name)

    @staticmethod
    def num(value: int) -> "Term":
        return Term(INT, int(value))

    @staticmethod
    def string(value: str) -> "Term":
        return Term(STRING, value)

    @staticmethod
    def var(name: str) -> "Term":
        return Term(VAR, name)

    @property
    def is_ground(self) -> bool:
        return self.kind != VAR

    def sort_key(self):
        # integers order numerically before symbolic constants; quoted
        # strings compare by content, after an equally-spelled plain symbol
        if self.kind == INT:
            return (0, self.value, 0)
        if self.kind == CONST:
            return (1, self.value, 0)
        if self.kind == STRING:
            return (1, self.value, 1)
        raise ValueError("variable %r has no canonical order" % (self.value,))

    def __str__(self) -> str:
        if self.kind == STRING:
            return '"%s"' % (self.value,)
        return str(self.value)


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple = ()

    @property
    def is_ground(self) -> bool:
        return all(t.is_ground for t in self.args)

    @property
    def arity(self) -> int:
        return len(self.args)

    def __str__(self) -> str:
        s = self.__dict__.get("_s")
        if s is None:
            if not self.args:
                s = self.pred
            else:
                s = "%s(%s)" % (self.pred, ",".join(str(t) for t in self.args))
            object.__setattr__(self, "_s", s)
        return s


@dataclass(frozen=True)
class Literal:
    atom: Atom
    neg: bool = False

    @property
    def is_ground(self) -> bool:
        return self.atom.is_ground

    def negate(self) -> "Literal":
        return Literal(self.atom, not self.neg)

    def __str__(self) -> str:
        s = self.__dict__.get("_s")
        if s is None:
            s = ("-" if self.neg else "") + str(self.atom)
            object.__setattr__(self, "_s", s)
        return s


def lit(pred: str, *args, neg: bool = False) -> Literal:
    """Convenience constructor; plain ints/strs become constant terms."""
    terms = []
    for a in args:
        if isinstance(a, Term):
            terms.append(a)
        elif isinstance(a, int):
            terms.append(Term.num(a))
        else:
            terms.append(Term.sym(str(a)))
    return Literal(Atom(pred, tuple(terms)), neg)


@dataclass(frozen=True)
class Builtin:
    """Body built-in: comparison (<, !=, =) or assignment X = Y + Z."""

    op: str
    lhs: Term
    rhs: Term
    plus: Optional[Term] = None

    @property
    def is_arith(self) -> bool:
        return self.plus is not None

    def variables(self) -> set:
        out = set()
        for t in (self.lhs, self.rhs, self.plus):
            if t is not None and t.kind == VAR:
                out.add(t.value)
        return out

    def __str__(self) -> str:
        if self.plus is not None:
            return "%s = %s + %s" % (self.lhs, self.rhs, self.plus)
        return "%s %s %s" % (self.lhs, self.op, self.rhs)


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int
    line: int
    column: int


def _sorted_lits(lits: Iterable[Literal]) -> tuple:
    return tuple(sorted(set(lits), key=str))


@dataclass(frozen=True)
class Rule:
    name: str
    head: tuple = ()
    pbody: tuple = ()
    nbody: tuple = ()
    builtins: tuple = ()
    span: Optional[SourceSpan] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "head", _sorted_lits(self.head))
        object.__setattr__(self, "pbody", _sorted_lits(self.pbody))
        object.__setattr__(self, "nbody", _sorted_lits(self.nbody))
        object.__setattr__(self, "builtins", tuple(self.builtins))

    @property
    def is_fact(self) -> bool:
        return (len(self.head) == 1 and not self.pbody and not self.nbody
                and not self.builtins)

    @property
    def is_constraint(self) -> bool:
        return not self.head

    @property
    def kind(self) -> str:
        if self.is_fact:
            return "fact"
        if self.is_constraint:
            return "constraint"
        return "rule"

    @property
    def is_ground(self) -> bool:
        return (all(l.is_ground for l in self.head + self.pbody + self.nbody)
                and not any(b.variables() for b in self.builtins))

    def literals(self) -> tuple:
        return self.head + self.pbody + self.nbody

    def triple(self):
        """Structural identity ignoring name and span."""
        return (frozenset(self.head), frozenset(self.pbody),
                frozenset(self.nbody), frozenset(str(b) for b in self.builtins))


@dataclass(frozen=True)
class Flags:
    ground: bool
    positive: bool
    normal: bool
    hcf: bool
    stratified: bool


class Program:
    """Ordered rule collection with lazily computed classification flags."""

    def __init__(self, rules: Sequence[Rule]):
        self.rules = tuple(rules)
        names = [r.name for r in self.rules]
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise ValueError("duplicate rule names: %s" % ", ".join(dup))
        self._by_name = {r.name: r for r in self.rules}

    def __iter__(self):
        return iter(self.rules)

    def __len__(self):
        return len(self.rules)

    def __eq__(self, other):
        return isinstance(other, Program) and self.rules == other.rules

    def __hash__(self):
        return hash(self.rules)

    def rule(self, name: str) -> Rule:
        return self._by_name[name]

    def literals(self) -> list:
        """Distinct literals occurring anywhere, canonically ordered."""
        seen = {}
        for r in self.rules:
            for l in r.literals():
                seen[str(l)] = l
        return [seen[k] for k in sorted(seen)]

    def head_literals(self) -> list:
        seen = {}
        for r in self.rules:
            for l in r.head:
                seen[str(l)] = l
        return [seen[k] for k in sorted(seen)]

    def facts(self) -> list:
        return [r.head[0] for r in self.rules if r.is_fact]

    def predicates(self) -> set:
        return {l.atom.pred for r in self.rules for l in r.literals()}

    @cached_property
    def flags(self) -> Flags:
        return classify(self)

    def concat(self, other: "Program") -> "Program":
        return Program(self.rules + tuple(other.rules))


def make_program(rules: Sequence[Rule], prefix: str = "r") -> Program:
    """Assign positional names (r1, r2, ...) to rules named None."""
    out = []
    for i, r in enumerate(rules, start=1):
        name = r.name if r.name is not None else "%s%d" % (prefix, i)
        out.append(Rule(name, r.head, r.pbody, r.nbody, r.builtins, r.span))
    return Program(out)


def rule(head=(), pbody=(), nbody=(), builtins=(), name=None) -> Rule:
    return Rule(name, tuple(head), tuple(pbody), tuple(nbody), tuple(builtins))


@dataclass
class DependencyGraph:
    nodes: list
    positive_edges: set   # (head, pos-body) pairs of literal strings
    negative_edges: set
    disjunctive_edges: set


def positive_dependency_graph(p: Program) -> DependencyGraph:
    nodes = [str(l) for l in p.literals()]
    pos = set()
    for r in p.rules:
        for h in r.head:
            for b in r.pbody:
                pos.add((str(h), str(b)))
    return DependencyGraph(nodes, pos, set(), set())


def _full_dependency_graph(p: Program) -> DependencyGraph:
    g = positive_dependency_graph(p)
    for r in p.rules:
        for h in r.head:
            for b in r.nbody:
                g.negative_edges.add((str(h), str(b)))
        for h in r.head:
            for h2 in r.head:
                if h != h2:
                    g.disjunctive_edges.add((str(h), str(h2)))
    return g


def _sccs(nodes: list, edges: dict) -> list:
    """Iterative Tarjan; returns list of sets of nodes."""
    index = {}
    low = {}
    onstack = set()
    stack = []
    out = []
    counter = [0]

    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(edges.get(root, ())))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        onstack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    onstack.add(w)
                    work.append((w, iter(edges.get(w, ()))))
                    advanced = True
                    break
                elif w in onstack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = set()
                while True:
                    w = stack.pop()
                    onstack.discard(w)
                    comp.add(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def classify(p: Program) -> Flags:
    ground = all(r.is_ground for r in p.rules)
    positive = all(not r.nbody for r in p.rules)
    normal = all(len(r.head) <= 1 for r in p.rules)

    # HCF: no two distinct co-head literals in one SCC of the positive graph
    g = positive_dependency_graph(p)
    adj = {}
    for a, b in g.positive_edges:
        adj.setdefault(a, []).append(b)
    comp_of = {}
    for comp in _sccs(g.nodes, adj):
        for n in comp:
            comp_of[n] = id(comp)
    hcf = True
    for r in p.rules:
        for i, h1 in enumerate(r.head):
            for h2 in r.head[i + 1:]:
                if comp_of.get(str(h1)) == comp_of.get(str(h2)):
                    hcf = False

    # stratified: no cycle through a negative edge, counting disjunction
    # as positive recursion
    fg = _full_dependency_graph(p)
    adj2 = {}
    for a, b in fg.positive_edges | fg.negative_edges | fg.disjunctive_edges:
        adj2.setdefault(a, []).append(b)
    comp2 = {}
    for comp in _sccs(fg.nodes, adj2):
        for n in comp:
            comp2[n] = id(comp)
    stratified = True
    for a, b in fg.negative_edges:
        if comp2.get(a) == comp2.get(b):
            stratified = False
    return Flags(ground, positive, normal, hcf, stratified)


def reduct(p: Program, s: Iterable[Literal]) -> Program:
    """The positive program keeping (nbody-stripped) rules with S∩nbody=∅."""
    if not p.flags.ground:
        raise ValueError("reduct requires a ground program")
    sset = {str(l) for l in s}
    out = []
    for r in p.rules:
        if any(str(l) in sset for l in r.nbody):
            continue
        out.append(Rule(r.name, r.head, r.pbody, (), r.builtins, r.span))
    return Program(out)


def splitting_violations(guess: Program, check: Program) -> list:
    """Head literals of `check` occurring anywhere in `guess`.

    Empty result means Lit(guess) is a splitting set for guess ∪ check.
    """
    guess_lits = {str(l) for r in guess.rules for l in r.literals()}
    out = {}
    for r in check.rules:
        for h in r.head:
            if str(h) in guess_lits:
                out[str(h)] = h
    return [out[k] for k in sorted(out)]
