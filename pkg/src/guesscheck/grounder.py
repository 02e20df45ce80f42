"""Naive instantiation over the Herbrand universe with built-in evaluation.

Instantiation joins rule bodies against an overapproximation of the
derivable atoms (facts plus anything a rule head could produce), the way a
grounder with its rewriting optimizations disabled behaves.  Variables that
feed an arithmetic built-in are not narrowed by that join: they range over
the integer interval of the program, bounded by the largest integer
occurring in it.  Instances whose built-ins evaluate to false are dropped;
everything else is kept verbatim, including body atoms that can never hold.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Set, Tuple

from .core import (Atom, Builtin, INT, Literal, Program, Rule, Term, VAR)


class GroundingError(Exception):
    pass


class UnsafeRuleError(GroundingError):
    def __init__(self, rule: Rule, variable: str):
        self.rule = rule
        self.variable = variable
        where = ""
        if rule.span is not None:
            where = " (line %d, column %d)" % (rule.span.line, rule.span.column)
        super().__init__("unsafe variable %s in rule %s%s"
                         % (variable, rule.name, where))


@dataclass
class GroundingReport:
    input_rules: int
    output_rules: int
    universe_size: int
    dropped: int


def universe(p: Program) -> List[Term]:
    """All constants occurring in p, integers numerically first."""
    seen = {}
    for r in p.rules:
        for l in r.literals():
            for t in l.atom.args:
                if t.is_ground:
                    seen[t.sort_key()] = t
        for b in r.builtins:
            for t in (b.lhs, b.rhs, b.plus):
                if t is not None and t.is_ground:
                    seen[t.sort_key()] = t
    return [seen[k] for k in sorted(seen)]


def _rule_vars(r: Rule) -> Set[str]:
    out = set()
    for l in r.literals():
        for t in l.atom.args:
            if t.kind == VAR:
                out.add(t.value)
    for b in r.builtins:
        out |= b.variables()
    return out


def _classify_vars(r: Rule):
    """Partition rule variables into computed, arith-ranged and join vars."""
    computed = set()
    for b in r.builtins:
        if b.op == "=" and b.lhs.kind == VAR:
            computed.add(b.lhs.value)
    arith = set()
    for b in r.builtins:
        if b.is_arith:
            for t in (b.rhs, b.plus):
                if t.kind == VAR and t.value not in computed:
                    arith.add(t.value)
    join = _rule_vars(r) - computed - arith
    return computed, arith, join


def _positive_atom_vars(r: Rule) -> Set[str]:
    out = set()
    for l in r.pbody:
        for t in l.atom.args:
            if t.kind == VAR:
                out.add(t.value)
    return out


def check_safety(r: Rule) -> None:
    computed, arith, _join = _classify_vars(r)
    pos = _positive_atom_vars(r)
    for v in sorted(_rule_vars(r)):
        if v not in pos and v not in computed:
            raise UnsafeRuleError(r, v)


_KEY = Tuple[bool, str, int]


def _lit_key(l: Literal) -> _KEY:
    return (l.neg, l.atom.pred, l.atom.arity)


class _Possible:
    """Overapproximation of derivable ground literals, keyed by signature."""

    def __init__(self):
        self.by_key: Dict[_KEY, Set[tuple]] = {}

    def add(self, l: Literal) -> bool:
        key = _lit_key(l)
        args = tuple(l.atom.args)
        bucket = self.by_key.setdefault(key, set())
        if args in bucket:
            return False
        bucket.add(args)
        return True

    def candidates(self, key: _KEY) -> List[tuple]:
        return sorted(self.by_key.get(key, ()),
                      key=lambda args: tuple(t.sort_key() for t in args))


def _subst_term(t: Term, binding: dict) -> Term:
    if t.kind == VAR:
        return binding[t.value]
    return t


def _subst_literal(l: Literal, binding: dict) -> Literal:
    if l.is_ground:
        return l
    args = tuple(_subst_term(t, binding) for t in l.atom.args)
    return Literal(Atom(l.atom.pred, args), l.neg)


def _term_value(t: Term, binding: dict) -> Term:
    return binding[t.value] if t.kind == VAR else t


def _compare(op: str, a: Term, b: Term) -> bool:
    if op == "<":
        return a.sort_key() < b.sort_key()
    if op == "!=":
        return a != b
    if op == "=":
        return a == b
    raise GroundingError("unknown comparison %r" % op)


class _RulePlan:
    """Pre-computed binding order for instantiating one rule."""

    def __init__(self, rule: Rule):
        check_safety(rule)
        self.rule = rule
        computed, arith, join = _classify_vars(rule)
        self.steps: List[tuple] = [("range", v) for v in sorted(arith)]
        bound = set(arith)
        # atoms restricted to join variables participate in the join;
        # atoms touching arithmetic or computed variables must not narrow
        # the instantiation (their instances are kept even if underivable)
        pending_atoms = []
        for l in rule.pbody:
            vs = {t.value for t in l.atom.args if t.kind == VAR}
            if vs <= join:
                pending_atoms.append(l)
        pending_builtins = list(rule.builtins)
        while pending_atoms or pending_builtins:
            ready = None
            for b in pending_builtins:
                needs = {t.value for t in (b.rhs, b.plus)
                         if t is not None and t.kind == VAR}
                if b.lhs.kind == VAR and b.op == "=" and b.lhs.value not in bound:
                    if needs <= bound:
                        ready = ("assign", b)
                elif (needs | ({b.lhs.value} if b.lhs.kind == VAR else set())) <= bound:
                    ready = ("test", b)
                if ready:
                    pending_builtins.remove(b)
                    break
            if ready:
                self.steps.append(ready)
                if ready[0] == "assign":
                    bound.add(ready[1].lhs.value)
                continue
            if pending_atoms:
                l = pending_atoms.pop(0)
                self.steps.append(("join", l))
                bound |= {t.value for t in l.atom.args if t.kind == VAR}
                continue
            # a join variable seen only in non-restricting atoms
            fallback = sorted(v for v in join if v not in bound)
            if fallback:
                self.steps.append(("univ", fallback[0]))
                bound.add(fallback[0])
                continue
            raise UnsafeRuleError(rule, sorted(b.variables()
                                               for b in pending_builtins)[0].pop())
        for v in sorted(join - bound):
            self.steps.append(("univ", v))
            bound.add(v)


class _Grounder:
    def __init__(self, program: Program, context: Optional[Program] = None):
        self.program = program
        rules = list(program.rules)
        if context is not None:
            rules += list(context.rules)
        self.all_rules = rules
        combined = Program(list(program.rules)
                           + [Rule("__ctx%d" % i, r.head, r.pbody, r.nbody,
                                   r.builtins)
                              for i, r in enumerate(context.rules)]) \
            if context is not None else program
        self.universe = universe(combined)
        ints = sorted(t.value for t in self.universe if t.kind == INT)
        if ints:
            lo = min(0, ints[0])
            self.int_range = [Term.num(i) for i in range(lo, ints[-1] + 1)]
            self.max_int = ints[-1]
        else:
            self.int_range = []
            self.max_int = None
        self.dropped = 0
        self.possible = _Possible()
        self.plans = {}
        for r in rules:
            if not r.is_ground:
                self.plans[id(r)] = _RulePlan(r)

    def _eval_builtin(self, b: Builtin, binding: dict):
        """Returns updated binding, or None when the instance is dropped."""
        if b.op == "=" and b.lhs.kind == VAR and b.lhs.value not in binding:
            rhs = _term_value(b.rhs, binding)
            if b.plus is None:
                binding[b.lhs.value] = rhs
                return binding
            plus = _term_value(b.plus, binding)
            if rhs.kind != INT or plus.kind != INT:
                raise GroundingError(
                    "arithmetic on non-integer constant in rule %s"
                    % self._current_rule.name)
            val = rhs.value + plus.value
            if self.max_int is None or val > self.max_int or val < min(
                    0, self.int_range[0].value if self.int_range else 0):
                return None
            binding[b.lhs.value] = Term.num(val)
            return binding
        lhs = _term_value(b.lhs, binding)
        rhs = _term_value(b.rhs, binding)
        if b.plus is not None:
            plus = _term_value(b.plus, binding)
            if rhs.kind != INT or plus.kind != INT or lhs.kind != INT:
                raise GroundingError(
                    "arithmetic on non-integer constant in rule %s"
                    % self._current_rule.name)
            return binding if lhs.value == rhs.value + plus.value else None
        return binding if _compare(b.op, lhs, rhs) else None

    def _bindings(self, plan: _RulePlan):
        self._current_rule = plan.rule

        def walk(i: int, binding: dict):
            if i == len(plan.steps):
                yield dict(binding)
                return
            step = plan.steps[i]
            if step[0] == "range":
                for t in self.int_range:
                    binding[step[1]] = t
                    yield from walk(i + 1, binding)
                binding.pop(step[1], None)
            elif step[0] == "univ":
                for t in self.universe:
                    binding[step[1]] = t
                    yield from walk(i + 1, binding)
                binding.pop(step[1], None)
            elif step[0] == "join":
                l = step[1]
                for args in self.possible.candidates(_lit_key(l)):
                    new = {}
                    ok = True
                    for pat, val in zip(l.atom.args, args):
                        if pat.kind == VAR:
                            cur = binding.get(pat.value, new.get(pat.value))
                            if cur is None:
                                new[pat.value] = val
                            elif cur != val:
                                ok = False
                                break
                        elif pat != val:
                            ok = False
                            break
                    if not ok:
                        continue
                    binding.update(new)
                    yield from walk(i + 1, binding)
                    for v in new:
                        binding.pop(v, None)
            else:  # assign / test
                saved = dict(binding)
                result = self._eval_builtin(step[1], binding)
                if result is None:
                    self.dropped += 1
                    binding.clear()
                    binding.update(saved)
                    return
                yield from walk(i + 1, binding)
                binding.clear()
                binding.update(saved)

        yield from walk(0, {})

    def _fixpoint(self):
        for r in self.all_rules:
            if r.is_ground:
                binding = {}
                ok = True
                for b in r.builtins:
                    if self._eval_builtin_ground(b) is False:
                        ok = False
                        break
                if ok:
                    for h in r.head:
                        self.possible.add(h)
        changed = True
        while changed:
            changed = False
            for r in self.all_rules:
                if r.is_ground or not r.head:
                    continue
                plan = self.plans[id(r)]
                for binding in self._bindings(plan):
                    for h in r.head:
                        if self.possible.add(_subst_literal(h, binding)):
                            changed = True

    def _eval_builtin_ground(self, b: Builtin) -> bool:
        lhs, rhs = b.lhs, b.rhs
        if b.plus is not None:
            if lhs.kind != INT or rhs.kind != INT or b.plus.kind != INT:
                raise GroundingError("arithmetic on non-integer constant")
            return lhs.value == rhs.value + b.plus.value
        return _compare(b.op, lhs, rhs)

    def run(self) -> Tuple[Program, GroundingReport]:
        self.dropped = 0
        self._fixpoint()
        self.dropped = 0  # only count drops of the emission pass
        out: List[Rule] = []
        seen_triples = {}
        used_names = set()

        def emit(name_base: str, index: int, total: int, head, pbody, nbody):
            r = Rule(None, head, pbody, nbody)
            key = r.triple()
            if key in seen_triples:
                return
            name = name_base if total == 1 else "%s_%d" % (name_base, index)
            while name in used_names:
                name = name + "x"
            used_names.add(name)
            seen_triples[key] = name
            out.append(Rule(name, head, pbody, nbody))

        for r in self.program.rules:
            if r.is_ground:
                ok = True
                for b in r.builtins:
                    if not self._eval_builtin_ground(b):
                        ok = False
                        self.dropped += 1
                        break
                if ok:
                    emit(r.name, 1, 1, r.head, r.pbody, r.nbody)
                continue
            plan = self.plans[id(r)]
            instances = []
            for binding in self._bindings(plan):
                instances.append((
                    tuple(_subst_literal(l, binding) for l in r.head),
                    tuple(_subst_literal(l, binding) for l in r.pbody),
                    tuple(_subst_literal(l, binding) for l in r.nbody)))
            for i, (h, pb, nb) in enumerate(instances, start=1):
                emit(r.name, i, len(instances), h, pb, nb)
        report = GroundingReport(len(self.program.rules), len(out),
                                 len(self.universe), self.dropped)
        return Program(out), report


def ground(p: Program, context: Optional[Program] = None
           ) -> Tuple[Program, GroundingReport]:
    """Instantiate p; `context` contributes constants and derivable atoms
    (e.g. the guess program when grounding a check program) but no output."""
    for r in p.rules:
        if not r.is_ground:
            check_safety(r)
    return _Grounder(p, context).run()
