"""Meta-interpreter transformation of head-cycle-free check programs.

Builds the factual reification of a ground program, the fixed disjunctive
meta-interpreter (with its optional non-modular, potentially-applicable and
dependency-guided variants), their union tr(Π), and the canonical saturated
answer set Ω that tr(Π) has exactly when Π is inconsistent.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from . import textio
from .core import (Atom, Literal, Program, Rule, Term, make_program)
from .grounder import ground
from .solver import AnswerSet, stratified_eval

META_PREDICATES = frozenset({
    "rule", "ruleBefore", "ruleAfter", "ruleBetween", "firstRule", "lastRule",
    "nextRule", "before", "after", "between", "next", "first", "last",
    "hlit", "inS", "ninS", "notok", "phi", "allInSUpto", "allInS",
    "allNinSUpto", "allNinS", "hasHead", "hasPBody", "hasNBody",
    "failsToProve", "allFailUpto", "lit", "atom", "pa", "dep", "cyclic",
})


class TransformError(Exception):
    pass


class NotHcfWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TransformOptions:
    opt_mod: bool = False
    opt_pa: bool = False
    opt_dep: bool = False

    @staticmethod
    def parse(spec: str) -> "TransformOptions":
        spec = spec.strip()
        if spec in ("", "none"):
            return TransformOptions()
        if spec == "all":
            return TransformOptions(True, True, True)
        kw = {}
        for part in spec.split(","):
            part = part.strip()
            if part not in ("mod", "pa", "dep"):
                raise TransformError("unknown optimization %r" % part)
            kw["opt_" + part] = True
        return TransformOptions(**kw)

    def label(self) -> str:
        parts = [n for n, on in (("mod", self.opt_mod), ("pa", self.opt_pa),
                                 ("dep", self.opt_dep)) if on]
        return ",".join(parts) if parts else "none"


ALL_OPTIONS = tuple(TransformOptions(m, p, d)
                    for m in (False, True)
                    for p in (False, True)
                    for d in (False, True))


# ---------------------------------------------------------------------------
# fixed meta-interpreter blocks

_STEP1_RULES = """
rule(L,R) :- lit(h,L,R), not lit(p,L,R), not lit(n,L,R).
ruleBefore(L,R) :- rule(L,R), rule(L,R1), R1 < R.
ruleAfter(L,R) :- rule(L,R), rule(L,R1), R < R1.
ruleBetween(L,R1,R2) :- rule(L,R1), rule(L,R2), rule(L,R3), R1 < R3, R3 < R2.
firstRule(L,R) :- rule(L,R), not ruleBefore(L,R).
lastRule(L,R) :- rule(L,R), not ruleAfter(L,R).
nextRule(L,R1,R2) :- rule(L,R1), rule(L,R2), R1 < R2, not ruleBetween(L,R1,R2).
"""

_STEP1_ITER = """
before(HPN,L,R) :- lit(HPN,L,R), lit(HPN,L1,R), L1 < L.
after(HPN,L,R) :- lit(HPN,L,R), lit(HPN,L1,R), L < L1.
between(HPN,L,L2,R) :- lit(HPN,L,R), lit(HPN,L1,R), lit(HPN,L2,R), L < L1, L1 < L2.
next(HPN,L,L1,R) :- lit(HPN,L,R), lit(HPN,L1,R), L < L1, not between(HPN,L,L1,R).
first(HPN,L,R) :- lit(HPN,L,R), not before(HPN,L,R).
last(HPN,L,R) :- lit(HPN,L,R), not after(HPN,L,R).
"""

_HLIT = "hlit(L) :- rule(L,R).\n"

_STEP2_GUESS = "inS(L) v ninS(L) :- hlit(L).\n"

_STEP2_DEFAULT = "ninS(L) :- lit(HPN,L,R), not hlit(L).\n"

_STEP2_CONSISTENT = \
    "notok :- inS(L), inS(NL), L != NL, atom(L,A), atom(NL,A).\n"

_STEP2_PHI = """
phi(L,L1) v phi(L1,L) :- inS(L), inS(L1), L < L1.
phi(L,L2) :- phi(L,L1), phi(L1,L2).
"""

_STEP3 = """
allInSUpto(p,Min,R) :- inS(Min), first(p,Min,R).
allInSUpto(p,L1,R) :- inS(L1), allInSUpto(p,L,R), next(p,L,L1,R).
allInS(p,R) :- allInSUpto(p,Max,R), last(p,Max,R).
allNinSUpto(HN,Min,R) :- ninS(Min), first(HN,Min,R).
allNinSUpto(HN,L1,R) :- ninS(L1), allNinSUpto(HN,L,R), next(HN,L,L1,R).
allNinS(HN,R) :- allNinSUpto(HN,Max,R), last(HN,Max,R).
hasHead(R) :- lit(h,L,R).
hasPBody(R) :- lit(p,L,R).
hasNBody(R) :- lit(n,L,R).
allNinS(h,R) :- lit(HPN,L,R), not hasHead(R).
allInS(p,R) :- lit(HPN,L,R), not hasPBody(R).
allNinS(n,R) :- lit(HPN,L,R), not hasNBody(R).
notok :- allNinS(h,R), allInS(p,R), allNinS(n,R), lit(HPN,L,R).
"""

_STEP4 = """
failsToProve(L,R) :- rule(L,R), lit(p,L1,R), ninS(L1).
failsToProve(L,R) :- rule(L,R), lit(n,L1,R), inS(L1).
failsToProve(L,R) :- rule(L,R), rule(L1,R), inS(L1), L1 != L, inS(L).
failsToProve(L,R) :- rule(L,R), lit(p,L1,R), phi(L1,L).
allFailUpto(L,R) :- failsToProve(L,R), firstRule(L,R).
allFailUpto(L,R1) :- failsToProve(L,R1), allFailUpto(L,R), nextRule(L,R,R1).
notok :- allFailUpto(L,R), lastRule(L,R), inS(L).
"""

# OPT_dep variant: order violations are only checked on literals that are
# cyclic with respect to the guess, and the redundant inS(L) of the co-head
# check is dropped, matching the published integrated encoding
_STEP4_DEP = """
failsToProve(L,R) :- rule(L,R), lit(p,L1,R), ninS(L1).
failsToProve(L,R) :- rule(L,R), lit(n,L1,R), inS(L1).
failsToProve(L,R) :- rule(L,R), rule(L1,R), inS(L1), L1 != L.
failsToProve(L,R) :- lit(p,L1,R), rule(L,R), phi(L1,L), cyclic.
allFailUpto(L,R) :- failsToProve(L,R), firstRule(L,R).
allFailUpto(L,R1) :- failsToProve(L,R1), allFailUpto(L,R), nextRule(L,R,R1).
notok :- allFailUpto(L,R), lastRule(L,R), inS(L).
"""

_STEP5 = """
phi(L,L1) :- notok, hlit(L), hlit(L1).
inS(L) :- notok, hlit(L).
ninS(L) :- notok, hlit(L).
"""

_STEP5_DEP = """
phi(L,L1) :- notok, hlit(L), hlit(L1), cyclic.
inS(L) :- notok, hlit(L).
ninS(L) :- notok, hlit(L).
"""

_DEP_RULES = """
dep(L,L1) :- rule(L,R), lit(p,L1,R), inS(L1), inS(L).
dep(L,L2) :- rule(L,R), lit(p,L1,R), dep(L1,L2), inS(L).
cyclic :- dep(L,L1), dep(L1,L).
"""

_DEP_PHI = """
phi(L,L1) v phi(L1,L) :- dep(L,L1), dep(L1,L), L < L1, cyclic.
phi(L,L2) :- phi(L,L1), phi(L1,L2), cyclic.
"""

_PA_RULE1 = "rule(L,R) :- lit(h,L,R), not lit(p,L,R), not lit(n,L,R), pa(R).\n"


def _parse_rules(text: str) -> List[Rule]:
    return [Rule(None, r.head, r.pbody, r.nbody, r.builtins)
            for r in textio.parse(text).rules]


# ---------------------------------------------------------------------------
# reification

def reified_name(l: Literal) -> Term:
    """Literal names are the exact printed literal in double quotes."""
    return Term.string(str(l))


def rule_name_term(name: str) -> Term:
    return Term.num(int(name)) if name.isdigit() else Term.sym(name)


def _meta_collisions(p: Program) -> List[str]:
    return sorted(p.predicates() & META_PREDICATES)


def _lit_fact(slot: str, l: Literal, rname: str) -> Rule:
    head = Literal(Atom("lit", (Term.sym(slot), reified_name(l),
                                rule_name_term(rname))))
    return Rule(None, (head,))


def _atom_fact(l: Literal) -> Rule:
    head = Literal(Atom("atom", (reified_name(l),
                                 Term.string(str(l.atom)))))
    return Rule(None, (head,))


def factual_rep(p: Program) -> List[Rule]:
    """F(Π): lit(h|p|n, l, r) facts plus atom(l, |l|) for head literals."""
    if not p.flags.ground:
        raise TransformError("factual representation requires a ground program")
    collisions = _meta_collisions(p)
    if collisions:
        raise TransformError("input uses reserved meta predicates: %s"
                             % ", ".join(collisions))
    if not p.flags.hcf:
        warnings.warn("program is not head-cycle free; transformation is "
                      "unsound for it", NotHcfWarning, stacklevel=2)
    out: List[Rule] = []
    seen_atom_facts: Set[str] = set()
    for r in p.rules:
        for h in r.head:
            out.append(_lit_fact("h", h, r.name))
            if str(h) not in seen_atom_facts:
                seen_atom_facts.add(str(h))
                out.append(_atom_fact(h))
        for b in r.pbody:
            out.append(_lit_fact("p", b, r.name))
        for b in r.nbody:
            out.append(_lit_fact("n", b, r.name))
    return out


# ---------------------------------------------------------------------------
# the input-dependent rule groups of the optimized variants

def _ins(l: Literal) -> Literal:
    return Literal(Atom("inS", (reified_name(l),)))


def _nins(l: Literal) -> Literal:
    return Literal(Atom("ninS", (reified_name(l),)))


_NOTOK = Literal(Atom("notok"))

BodyGuess = Tuple[Tuple[Literal, ...], Tuple[Literal, ...]]  # (pos, neg)

_EMPTY_BG: BodyGuess = ((), ())


def mod_rules(rules: Sequence[Rule],
              body_guess: Optional[Dict[str, BodyGuess]] = None) -> List[Rule]:
    """The per-rule satisfaction rules of the non-modular variant.

    One notok rule per program rule; normal rules with non-empty heads whose
    head literal does not occur in their own body force the guess instead.
    When integrating, the guess-defined part of each body is appended.
    """
    body_guess = body_guess or {}
    out: List[Rule] = []
    for r in rules:
        bg_pos, bg_neg = body_guess.get(r.name, _EMPTY_BG)
        body_of_r = {str(l) for l in r.pbody + r.nbody}
        pbody = tuple(_ins(l) for l in r.pbody) + bg_pos
        nbody_as_pos = tuple(_nins(l) for l in r.nbody)
        if len(r.head) == 1 and str(r.head[0]) not in body_of_r:
            head = (_ins(r.head[0]),)
            out.append(Rule(None, head, pbody + nbody_as_pos, bg_neg))
        else:
            pb = tuple(_nins(l) for l in r.head) + pbody + nbody_as_pos
            out.append(Rule(None, (_NOTOK,), pb, bg_neg))
    return out


def pa_rules(rules: Sequence[Rule]) -> List[Rule]:
    """pa(r) derivation rules of the potentially-applicable restriction."""
    out: List[Rule] = []
    for r in rules:
        head = (Literal(Atom("pa", (rule_name_term(r.name),))),)
        body: List[Literal] = []
        for i, b in enumerate(r.pbody, start=1):
            rv = Term.var("R%d" % i)
            body.append(Literal(Atom("lit", (Term.sym("h"), reified_name(b),
                                             rv))))
            body.append(Literal(Atom("pa", (rv,))))
        out.append(Rule(None, head, tuple(body)))
    return out


def preprocess_constraints(p: Program) -> Program:
    """Drop critical negative constraint literals (those in no rule head)."""
    heads = {str(l) for l in p.head_literals()}
    out = []
    for r in p.rules:
        if r.is_constraint:
            nbody = tuple(l for l in r.nbody if str(l) in heads)
            out.append(Rule(r.name, r.head, r.pbody, nbody, r.builtins, r.span))
        else:
            out.append(r)
    return Program(out)


def meta_rules(options: TransformOptions = TransformOptions(),
               p: Optional[Program] = None) -> Program:
    """Π_meta for the given options; p is consulted by the input-dependent
    variants (required when opt_mod or opt_pa is set)."""
    if (options.opt_mod or options.opt_pa) and p is None:
        raise TransformError("opt_mod/opt_pa need the program being "
                             "transformed")
    rules: List[Rule] = []
    rules += _parse_rules(_PA_RULE1 if options.opt_pa else
                          _STEP1_RULES.strip().splitlines()[0] + "\n")
    rules += _parse_rules("\n".join(_STEP1_RULES.strip().splitlines()[1:]))
    if not options.opt_mod:
        rules += _parse_rules(_STEP1_ITER)
    rules += _parse_rules(_HLIT)
    rules += _parse_rules(_STEP2_GUESS)
    rules += _parse_rules(_STEP2_DEFAULT)
    rules += _parse_rules(_STEP2_CONSISTENT)
    if options.opt_dep:
        rules += _parse_rules(_DEP_RULES)
        rules += _parse_rules(_DEP_PHI)
    else:
        rules += _parse_rules(_STEP2_PHI)
    if options.opt_mod:
        pre = preprocess_constraints(p)
        rules += mod_rules(pre.rules)
    else:
        rules += _parse_rules(_STEP3)
    rules += _parse_rules(_STEP4_DEP if options.opt_dep else _STEP4)
    if options.opt_pa:
        rules += pa_rules(p.rules)
    rules += _parse_rules(_STEP5_DEP if options.opt_dep else _STEP5)
    return make_program(rules, prefix="m")


def tr(p: Program, options: TransformOptions = TransformOptions()) -> Program:
    """tr(Π) = F(Π) ∪ Π_meta, a stratified DLP without strong negation."""
    source = p
    if options.opt_mod:
        source = Program([r for r in p.rules if not r.is_constraint])
    facts = factual_rep(source)
    meta = meta_rules(options, p)
    return make_program(facts + list(meta.rules))


def guess_rule_names(p: Program) -> List[str]:
    """Names of the two disjunctive guess groups inside a tr(Π) output."""
    out = []
    for r in p.rules:
        preds = sorted({l.atom.pred for l in r.head})
        if len(r.head) == 2 and preds in (["inS", "ninS"], ["phi"]):
            out.append(r.name)
    return out


def omega(p: Program, options: TransformOptions = TransformOptions()
          ) -> AnswerSet:
    """The saturated answer set Ω: evaluate tr(Π) with both guesses removed
    and notok asserted (a stratified normal program, so no search)."""
    t = tr(p, options)
    return omega_of_tr(t)


def omega_of_tr(t: Program) -> AnswerSet:
    guesses = set(guess_rule_names(t))
    rules = [r for r in t.rules if r.name not in guesses]
    rules.append(Rule("omeganotok", (_NOTOK,)))
    g, _ = ground(Program(rules))
    s = stratified_eval(g)
    return AnswerSet(s.literals, "omega")


def project(s: AnswerSet) -> AnswerSet:
    """Un-reify the literal set named by the inS atoms of a meta answer set."""
    out = []
    for l in s.literals:
        if l.atom.pred == "inS" and not l.neg:
            (name,) = l.atom.args
            if name.kind != "string":
                raise TransformError("inS argument %s is not a literal name"
                                     % name)
            out.append(textio.parse_literal(str(name.value)))
    return AnswerSet(out, s.producer)


def pa_closure(p: Program) -> Set[str]:
    """Least fixpoint of potentially applicable rules, as rule names."""
    if not p.flags.ground:
        raise TransformError("pa_closure requires a ground program")
    derivable: Set[str] = set()
    pa: Set[str] = set()
    changed = True
    while changed:
        changed = False
        for r in p.rules:
            if r.name in pa:
                continue
            if all(str(b) in derivable for b in r.pbody):
                pa.add(r.name)
                for h in r.head:
                    derivable.add(str(h))
                changed = True
    return pa
