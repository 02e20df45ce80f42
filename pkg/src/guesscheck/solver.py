"""Desk-scale answer-set computation.

`solve` runs a backtracking search over literal truth values with unit
propagation on the clause forms of rules plus support propagation (a
literal with no rule left that could derive it is set false).  Every total
assignment that survives is checked for stability with `is_answer_set`.
`brute_force` is a deliberately independent oracle: plain subset
enumeration with an exhaustive minimality check, sharing no search code.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

from .core import Literal, Program, Rule, reduct


class SolverError(Exception):
    pass


class BudgetExceeded(SolverError):
    def __init__(self, stats: "SearchStats"):
        self.stats = stats
        super().__init__("search budget exceeded after %d decisions"
                         % stats.decisions)


class CapExceeded(SolverError):
    pass


@dataclass
class SearchStats:
    decisions: int = 0
    propagations: int = 0
    stability_checks: int = 0
    wall_ms: float = 0.0


@dataclass(frozen=True)
class Budget:
    max_decisions: int = 10 ** 6
    max_ms: float = 10_000.0


class AnswerSet:
    """A consistent literal set plus the producer that computed it."""

    __slots__ = ("literals", "producer")

    def __init__(self, literals: Iterable[Literal], producer: str = "solver"):
        lits = frozenset(literals)
        atoms: Dict[str, bool] = {}
        for l in lits:
            if atoms.get(str(l.atom), l.neg) != l.neg:
                raise ValueError("inconsistent answer set: %s and %s"
                                 % (l, l.negate()))
            atoms[str(l.atom)] = l.neg
        self.literals: FrozenSet[Literal] = lits
        self.producer = producer

    def key(self) -> tuple:
        return tuple(sorted(str(l) for l in self.literals))

    def names(self) -> FrozenSet[str]:
        return frozenset(str(l) for l in self.literals)

    def restrict(self, predicates: Iterable[str]) -> "AnswerSet":
        preds = set(predicates)
        return AnswerSet((l for l in self.literals if l.atom.pred in preds),
                         self.producer)

    def __eq__(self, other):
        return isinstance(other, AnswerSet) and self.literals == other.literals

    def __hash__(self):
        return hash(self.literals)

    def __contains__(self, item):
        if isinstance(item, str):
            return item in self.names()
        return item in self.literals

    def __iter__(self):
        return iter(sorted(self.literals, key=str))

    def __len__(self):
        return len(self.literals)

    def __repr__(self):
        return "AnswerSet({%s})" % ", ".join(str(l) for l in self)


def _check_ground_builtin_free(p: Program, op: str) -> None:
    for r in p.rules:
        if not r.is_ground:
            raise SolverError("%s requires a ground program" % op)
        if r.builtins:
            raise SolverError("%s requires a built-in-free program" % op)


# ---------------------------------------------------------------------------
# compact clause engine; literal encoding (var << 1) | polarity

class _SatSearch:
    """DPLL satisfiability with counter-based unit propagation."""

    def __init__(self, clauses: List[List[int]], nvars: int):
        self.clauses = clauses
        self.n = nvars
        self.occ: List[List[int]] = [[] for _ in range(2 * nvars)]
        for ci, c in enumerate(clauses):
            for lit_ in c:
                self.occ[lit_].append(ci)
        self.n_true = [0] * len(clauses)
        self.n_undef = [len(c) for c in clauses]
        self.assign = [-1] * nvars
        self.trail: List[int] = []

    def _set(self, var: int, val: int, pending: List[Tuple[int, int]]) -> bool:
        if self.assign[var] >= 0:
            return self.assign[var] == val
        self.assign[var] = val
        self.trail.append(var)
        true_lit = (var << 1) | val
        false_lit = (var << 1) | (1 - val)
        for ci in self.occ[true_lit]:
            self.n_true[ci] += 1
            self.n_undef[ci] -= 1
        conflict = False
        # counters must be fully updated even on conflict so that undo
        # restores them exactly
        for ci in self.occ[false_lit]:
            self.n_undef[ci] -= 1
            if self.n_true[ci] == 0 and not conflict:
                if self.n_undef[ci] == 0:
                    conflict = True
                elif self.n_undef[ci] == 1:
                    for lit_ in self.clauses[ci]:
                        v = lit_ >> 1
                        if self.assign[v] < 0:
                            pending.append((v, lit_ & 1))
                            break
        return not conflict

    def _propagate(self, pending: List[Tuple[int, int]]) -> bool:
        while pending:
            var, val = pending.pop()
            if not self._set(var, val, pending):
                return False
        return True

    def _undo_to(self, mark: int) -> None:
        while len(self.trail) > mark:
            var = self.trail.pop()
            val = self.assign[var]
            true_lit = (var << 1) | val
            false_lit = (var << 1) | (1 - val)
            for ci in self.occ[true_lit]:
                self.n_true[ci] -= 1
                self.n_undef[ci] += 1
            for ci in self.occ[false_lit]:
                self.n_undef[ci] += 1
            self.assign[var] = -1

    def solve(self) -> Optional[List[int]]:
        pending = []
        for ci, c in enumerate(self.clauses):
            if not c:
                return None
            if len(c) == 1:
                pending.append((c[0] >> 1, c[0] & 1))
        if not self._propagate(pending):
            return None
        stack: List[Tuple[int, int, int]] = []
        while True:
            var = next((v for v in range(self.n) if self.assign[v] < 0), None)
            if var is None:
                return list(self.assign)
            stack.append((var, 1, len(self.trail)))
            if self._propagate([(var, 0)]):
                continue
            while stack:
                var, phase, mark = stack.pop()
                self._undo_to(mark)
                if phase == 1:
                    stack.append((var, 2, mark))
                    if self._propagate([(var, 1)]):
                        break
            else:
                return None


# ---------------------------------------------------------------------------
# stability

def satisfies_all(p: Program, s: Iterable[Literal]) -> bool:
    sset = {str(l) for l in s}
    for r in p.rules:
        if any(str(l) in sset for l in r.nbody):
            continue
        if all(str(l) in sset for l in r.pbody) and \
                not any(str(l) in sset for l in r.head):
            return False
    return True


def is_answer_set(p: Program, s: Iterable[Literal], *,
                  exhaustive: bool = False) -> bool:
    """True iff s satisfies reduct(p, s) and no proper subset of s does.

    The default minimality check is a bounded backtracking search over the
    atoms of s; `exhaustive` switches to plain subset enumeration.
    """
    if not p.flags.ground:
        raise SolverError("is_answer_set requires a ground program")
    s_list = sorted(set(s), key=str)
    atoms: Dict[str, bool] = {}
    for l in s_list:
        if atoms.get(str(l.atom), l.neg) != l.neg:
            return False
        atoms[str(l.atom)] = l.neg
    sset = {str(l) for l in s_list}
    red = reduct(p, s_list)
    for r in red.rules:
        if all(str(l) in sset for l in r.pbody) and \
                not any(str(l) in sset for l in r.head):
            return False
    if not s_list:
        return True
    if exhaustive:
        names = sorted(sset)
        for k in range(len(names)):
            for sub in combinations(names, k):
                subset = set(sub)
                if all(any(str(l) in subset for l in r.head)
                       or not all(str(l) in subset for l in r.pbody)
                       for r in red.rules):
                    return False
        return True
    index = {str(l): i for i, l in enumerate(s_list)}
    clauses = []
    for r in red.rules:
        if not all(str(l) in index for l in r.pbody):
            continue  # body leaves S: vacuously satisfied by any M ⊆ S
        clause = [(index[str(l)] << 1) | 1 for l in r.head if str(l) in index]
        clause += [(index[str(l)] << 1) for l in r.pbody]
        clauses.append(clause)
    clauses.append([(i << 1) for i in range(len(s_list))])  # some atom false
    return _SatSearch(clauses, len(s_list)).solve() is None


# ---------------------------------------------------------------------------
# full enumeration

class _Search(_SatSearch):
    def __init__(self, p: Program, budget: Budget):
        self.p = p
        self.budget = budget
        self.stats = SearchStats()
        lits = p.literals()
        self.lits = lits
        self.index = {str(l): i for i, l in enumerate(lits)}
        n = len(lits)
        clauses: List[List[int]] = []
        occ_count = [0] * n
        self.rule_head: List[List[int]] = []
        self.rule_pbody: List[List[int]] = []
        self.rule_nbody: List[List[int]] = []
        for r in p.rules:
            h = [self.index[str(l)] for l in r.head]
            pb = [self.index[str(l)] for l in r.pbody]
            nb = [self.index[str(l)] for l in r.nbody]
            clauses.append([(v << 1) | 1 for v in h] + [(v << 1) for v in pb]
                           + [(v << 1) | 1 for v in nb])
            for v in h + pb + nb:
                occ_count[v] += 1
            self.rule_head.append(h)
            self.rule_pbody.append(pb)
            self.rule_nbody.append(nb)
        by_atom: Dict[str, List[int]] = {}
        for i, l in enumerate(lits):
            by_atom.setdefault(str(l.atom), []).append(i)
        for _, vs in sorted(by_atom.items()):
            if len(vs) == 2:  # a and -a never both hold
                clauses.append([(vs[0] << 1), (vs[1] << 1)])
        super().__init__(clauses, n)
        self.nrules = len(p.rules)
        self.supports: List[List[int]] = [[] for _ in range(n)]
        for ri, h in enumerate(self.rule_head):
            for v in h:
                self.supports[v].append(ri)
        self.support_count = [len(s) for s in self.supports]
        self.rule_alive = [True] * self.nrules
        self.pbody_occ: List[List[int]] = [[] for _ in range(n)]
        self.nbody_occ: List[List[int]] = [[] for _ in range(n)]
        for ri in range(self.nrules):
            for v in self.rule_pbody[ri]:
                self.pbody_occ[v].append(ri)
            for v in self.rule_nbody[ri]:
                self.nbody_occ[v].append(ri)
        self.kills: List[Tuple[int, int]] = []  # (trail position, rule index)
        self.order = sorted(range(n), key=lambda v: (-occ_count[v],
                                                     str(lits[v])))
        self.true_mask = 0
        self.head_mask = [0] * self.nrules
        self.pbody_mask = [0] * self.nrules
        self.nbody_mask = [0] * self.nrules
        for ri in range(self.nrules):
            for v in self.rule_head[ri]:
                self.head_mask[ri] |= 1 << v
            for v in self.rule_pbody[ri]:
                self.pbody_mask[ri] |= 1 << v
            for v in self.rule_nbody[ri]:
                self.nbody_mask[ri] |= 1 << v

    # support tracking rides on top of the clause engine: rules die when a
    # positive body member goes false or a negative one goes true

    def _set(self, var: int, val: int, pending) -> bool:
        if self.assign[var] >= 0:
            return self.assign[var] == val
        if not super()._set(var, val, pending):
            return False
        self.stats.propagations += 1
        if val == 1:
            self.true_mask |= 1 << var
        pos = len(self.trail)
        dying = self.pbody_occ[var] if val == 0 else self.nbody_occ[var]
        alive = self.rule_alive
        counts = self.support_count
        assign = self.assign
        for ri in dying:
            if not alive[ri]:
                continue
            alive[ri] = False
            self.kills.append((pos, ri))
            for v in self.rule_head[ri]:
                counts[v] -= 1
                if counts[v] == 0:
                    if assign[v] == 1:
                        return False
                    if assign[v] < 0:
                        pending.append((v, 0))
        return True

    def _undo_to(self, mark: int) -> None:
        while self.kills and self.kills[-1][0] > mark:
            _, ri = self.kills.pop()
            self.rule_alive[ri] = True
            for v in self.rule_head[ri]:
                self.support_count[v] += 1
        trail = self.trail
        assign = self.assign
        i = mark
        while i < len(trail):
            v = trail[i]
            if assign[v] == 1:
                self.true_mask &= ~(1 << v)
            i += 1
        super()._undo_to(mark)

    def run(self, limit) -> List[AnswerSet]:
        start = time.monotonic()
        found: List[AnswerSet] = []
        pending = []
        for ci, c in enumerate(self.clauses):
            if not c:
                return []
            if len(c) == 1:
                pending.append((c[0] >> 1, c[0] & 1))
        for v in range(self.n):
            if self.support_count[v] == 0:
                pending.append((v, 0))
        if not self._propagate(pending):
            self.stats.wall_ms = (time.monotonic() - start) * 1000
            return []
        stack: List[Tuple[int, int, int]] = []  # (var, tried phase, mark)

        def backtrack() -> bool:
            while stack:
                var, phase, mark = stack.pop()
                self._undo_to(mark)
                if phase == 1:
                    stack.append((var, 2, mark))
                    self.stats.decisions += 1
                    if self._propagate([(var, 1)]):
                        return True
            return False

        while True:
            if self.stats.decisions > self.budget.max_decisions or \
                    (self.stats.decisions % 64 == 0 and
                     (time.monotonic() - start) * 1000 > self.budget.max_ms):
                self.stats.wall_ms = (time.monotonic() - start) * 1000
                raise BudgetExceeded(self.stats)
            var = next((v for v in self.order if self.assign[v] < 0), None)
            if var is None:
                self.stats.stability_checks += 1
                if self._supported_now() and self._stable_now():
                    model = [self.lits[v] for v in range(self.n)
                             if self.assign[v] == 1]
                    found.append(AnswerSet(model, "solver"))
                    if limit != "all" and len(found) >= int(limit):
                        break
                if not backtrack():
                    break
                continue
            mark = len(self.trail)
            stack.append((var, 1, mark))
            self.stats.decisions += 1
            if not self._propagate([(var, 0)]):
                if not backtrack():
                    break
        self.stats.wall_ms = (time.monotonic() - start) * 1000
        return found

    def _supported_now(self) -> bool:
        mask = self.true_mask
        inv = ~mask
        v = 0
        m = mask
        while m:
            if m & 1:
                for ri in self.supports[v]:
                    if self.pbody_mask[ri] & inv == 0 and \
                            self.nbody_mask[ri] & mask == 0:
                        break
                else:
                    return False
            m >>= 1
            v += 1
        return True

    def _stable_now(self) -> bool:
        """Minimality of the current total assignment over the reduct.

        Clause satisfaction and supportedness already hold here, so only
        the proper-submodel search remains; it runs on bitmask clauses
        (pos, neg): a candidate M satisfies one iff pos∩M ≠ ∅ or neg ⊄ M.
        """
        smask = self.true_mask
        if smask == 0:
            return True
        inv = ~smask
        clauses = []
        for ri in range(self.nrules):
            if self.nbody_mask[ri] & smask:
                continue
            pb = self.pbody_mask[ri]
            if pb & inv:
                continue
            clauses.append((self.head_mask[ri] & smask, pb))
        clauses.append((0, smask))  # at least one atom of S leaves M
        return not _mask_sat(clauses, smask)


def solve(p: Program, limit="all", budget: Optional[Budget] = None
          ) -> Tuple[List[AnswerSet], SearchStats]:
    """Sound and complete enumeration of answer sets, up to `limit`."""
    _check_ground_builtin_free(p, "solve")
    if budget is None:
        budget = Budget()
    search = _Search(p, budget)
    sets = search.run(limit)
    sets.sort(key=lambda a: a.key())
    return sets, search.stats


# ---------------------------------------------------------------------------
# independent oracles

def brute_force(p: Program, cap: int = 22) -> List[AnswerSet]:
    """All answer sets by enumerating every consistent subset of Lit(p).

    Exhaustive subset minimality; intentionally shares no machinery with
    `solve`.
    """
    _check_ground_builtin_free(p, "brute_force")
    lits = p.literals()
    if len(lits) > cap:
        raise CapExceeded("brute_force cap %d exceeded: %d literals"
                          % (cap, len(lits)))
    names = [str(l) for l in lits]
    by_name = {str(l): l for l in lits}
    atom_of = {str(l): str(l.atom) for l in lits}
    neg_of = {str(l): l.neg for l in lits}

    def sat(world: set, candidate: set) -> bool:
        # candidate must satisfy the reduct of p w.r.t. world
        for r in p.rules:
            if any(str(l) in world for l in r.nbody):
                continue
            if all(str(l) in candidate for l in r.pbody) and \
                    not any(str(l) in candidate for l in r.head):
                return False
        return True

    out = []
    for mask in range(1 << len(lits)):
        chosen = [names[i] for i in range(len(lits)) if mask >> i & 1]
        atoms_seen: Dict[str, bool] = {}
        consistent = True
        for nm in chosen:
            if atoms_seen.get(atom_of[nm], neg_of[nm]) != neg_of[nm]:
                consistent = False
                break
            atoms_seen[atom_of[nm]] = neg_of[nm]
        if not consistent:
            continue
        s = set(chosen)
        if not sat(s, s):
            continue
        minimal = True
        k = len(chosen)
        for submask in range((1 << k) - 1):
            sub = {chosen[i] for i in range(k) if submask >> i & 1}
            if sat(s, sub):
                minimal = False
                break
        if minimal:
            out.append(AnswerSet((by_name[nm] for nm in chosen), "brute"))
    out.sort(key=lambda a: a.key())
    return out


def hcf_check(p: Program, s: Iterable[Literal]) -> bool:
    """Answer-set test for HCF programs by monotone proof closure."""
    if not p.flags.ground:
        raise SolverError("hcf_check requires a ground program")
    if not p.flags.hcf:
        raise SolverError("hcf_check requires a head-cycle-free program")
    s_list = sorted(set(s), key=str)
    atoms: Dict[str, bool] = {}
    for l in s_list:
        if atoms.get(str(l.atom), l.neg) != l.neg:
            raise SolverError("hcf_check requires a consistent literal set")
        atoms[str(l.atom)] = l.neg
    sset = {str(l) for l in s_list}
    for r in p.rules:
        if any(str(l) in sset for l in r.nbody):
            continue
        if all(str(l) in sset for l in r.pbody) and \
                not any(str(l) in sset for l in r.head):
            return False
    proven: set = set()
    changed = True
    while changed:
        changed = False
        for r in p.rules:
            if any(str(l) in sset for l in r.nbody):
                continue
            if not all(str(l) in proven for l in r.pbody):
                continue
            for h in r.head:
                hn = str(h)
                if hn in sset and hn not in proven and \
                        not any(str(h2) in sset for h2 in r.head if h2 != h):
                    proven.add(hn)
                    changed = True
    return proven == sset


def stratified_eval(p: Program) -> AnswerSet:
    """Unique answer set of a stratified normal constraint-free program."""
    _check_ground_builtin_free(p, "stratified_eval")
    flags = p.flags
    if not flags.normal:
        raise SolverError("stratified_eval requires a normal program")
    if not flags.stratified:
        raise SolverError("stratified_eval requires a stratified program")
    if any(r.is_constraint for r in p.rules):
        raise SolverError("stratified_eval requires a constraint-free program")
    lits = p.literals()
    index = {str(l): i for i, l in enumerate(lits)}
    adj: Dict[int, List[int]] = {i: [] for i in range(len(lits))}
    for r in p.rules:
        h = index[str(r.head[0])]
        for b in r.pbody + r.nbody:
            adj[h].append(index[str(b)])
    from .core import _sccs
    # Tarjan emits SCCs with dependencies (rule bodies) first, which is
    # exactly the stratum evaluation order
    comps = _sccs(list(range(len(lits))), adj)
    level = {}
    for rank, comp in enumerate(comps):
        for v in comp:
            level[v] = rank
    rules_by_level: Dict[int, List[Rule]] = {}
    for r in p.rules:
        rules_by_level.setdefault(level[index[str(r.head[0])]], []).append(r)
    derived: set = set()
    for rank in sorted(rules_by_level):
        changed = True
        while changed:
            changed = False
            for r in rules_by_level[rank]:
                hname = str(r.head[0])
                if hname in derived:
                    continue
                if all(str(l) in derived for l in r.pbody) and \
                        not any(str(l) in derived for l in r.nbody):
                    derived.add(hname)
                    changed = True
    by_name = {str(l): l for l in lits}
    return AnswerSet((by_name[nm] for nm in derived), "stratified")
