"""Canonical models and the brute-force certain-answer oracle.

Everything here favours obvious correctness over speed: the chase is
materialised up to a depth bound and queries are answered by plain
backtracking over the materialised model.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

from .dl import ABox, Atom, BasicConcept, CQ, Concept, Exists, Role, TBox, exists_name, h_complete
from .errors import InconsistentInput, NotBoolean, NotTreeShaped

Element = tuple[str, tuple[Role, ...]]


def element_str(e: Element) -> str:
    ind, word = e
    return ind if not word else ind + "." + ".".join(str(r) for r in word)


@dataclass
class CanonicalModel:
    domain: set[Element]
    concepts: dict[str, set[Element]]
    roles: dict[str, set[tuple[Element, Element]]]
    depth_bound: int
    _succ: dict[str, dict[Element, set[Element]]] = field(default_factory=dict, repr=False)
    _pred: dict[str, dict[Element, set[Element]]] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        succ: dict = defaultdict(lambda: defaultdict(set))
        pred: dict = defaultdict(lambda: defaultdict(set))
        for name, pairs in self.roles.items():
            for a, b in pairs:
                succ[name][a].add(b)
                pred[name][b].add(a)
        self._succ = succ
        self._pred = pred

    @property
    def individuals(self) -> list[Element]:
        return sorted(e for e in self.domain if not e[1])

    def successors(self, name: str, e: Element) -> set[Element]:
        return self._succ.get(name, {}).get(e, set())

    def predecessors(self, name: str, e: Element) -> set[Element]:
        return self._pred.get(name, {}).get(e, set())

    def has_role(self, name: str, a: Element, b: Element) -> bool:
        return b in self.successors(name, a)

    def has_concept(self, name: str, e: Element) -> bool:
        return e in self.concepts.get(name, ())


def _basic_concepts_at(tbox: TBox, abox: ABox) -> dict[str, set[BasicConcept]]:
    """Basic concepts entailed at each individual."""
    holds: dict[str, set[BasicConcept]] = defaultdict(set)
    for c, a in abox.concept_facts:
        holds[a].add(Concept(c))
    for p, a, b in abox.role_facts:
        holds[a].add(Exists(Role(p)))
        holds[b].add(Exists(Role(p, True)))
    out: dict[str, set[BasicConcept]] = {}
    for a in abox.individuals:
        acc: set[BasicConcept] = set()
        for b in holds[a]:
            acc |= tbox.concept_supers(b)
        out[a] = acc
    return out


def build_chase(tbox: TBox, abox: ABox, depth_limit: int) -> CanonicalModel:
    """Materialise all elements ``a.w`` of the canonical model with ``|w| <= depth_limit``."""
    complete = h_complete(tbox, abox)
    entailed = _basic_concepts_at(tbox, abox)
    domain: set[Element] = set()
    concepts: dict[str, set[Element]] = defaultdict(set)
    roles: dict[str, set[tuple[Element, Element]]] = defaultdict(set)
    for a in abox.individuals:
        domain.add((a, ()))
    for c, a in complete.concept_facts:
        concepts[c].add((a, ()))
    for p, a, b in complete.role_facts:
        roles[p].add(((a, ()), (b, ())))

    anon_concepts = {
        r: [c.name for c in tbox.concept_supers(Exists(r.inv)) if isinstance(c, Concept)]
        for r in tbox.generating_roles
    }
    edge_roles = {r: sorted(tbox.role_supers(r)) for r in tbox.generating_roles}

    frontier: list[Element] = []
    if depth_limit >= 1:
        for a in sorted(abox.individuals):
            for r in sorted(tbox.generating_roles):
                if Exists(r) in entailed[a]:
                    frontier.append((a, (r,)))
    level = 1
    while frontier:
        nxt: list[Element] = []
        for e in frontier:
            ind, word = e
            parent = (ind, word[:-1])
            last = word[-1]
            domain.add(e)
            for c in anon_concepts[last]:
                concepts[c].add(e)
            for s in edge_roles[last]:
                if s.inverse:
                    roles[s.name].add((e, parent))
                else:
                    roles[s.name].add((parent, e))
            if level < depth_limit:
                for s in tbox.word_successors(last):
                    nxt.append((ind, word + (s,)))
        frontier = nxt
        level += 1
    return CanonicalModel(domain, dict(concepts), dict(roles), depth_limit)


# ---------------------------------------------------------------- homomorphisms

def _variable_order(atoms: Iterable[Atom], variables: list[str], first: Iterable[str]) -> list[str]:
    adj: dict[str, set[str]] = defaultdict(set)
    for a in atoms:
        if len(a.args) == 2 and a.args[0] != a.args[1]:
            adj[a.args[0]].add(a.args[1])
            adj[a.args[1]].add(a.args[0])
    pos = {v: i for i, v in enumerate(variables)}
    first = [v for v in first if v in pos]
    order = sorted(first, key=lambda v: (-len(adj[v]), pos[v]))
    rest = [v for v in variables if v not in set(first)]
    while rest:
        placed = set(order)
        best = min(
            rest,
            key=lambda v: (-len(adj[v] & placed), -len(adj[v]), pos[v]),
        )
        order.append(best)
        rest.remove(best)
    return order


def homomorphisms(
    atoms: list[Atom],
    model: CanonicalModel,
    domain_of: Callable[[str], Iterable[Element]],
    fixed: dict[str, Element] | None = None,
    project: tuple[str, ...] = (),
) -> set[tuple[Element, ...]]:
    """Projections onto ``project`` of all homomorphisms from ``atoms`` into ``model``.

    Variables in ``project`` are searched first; once a projection is known
    to extend to a full homomorphism the search moves to the next one.
    """
    fixed = dict(fixed or {})
    variables: list[str] = []
    for a in atoms:
        for v in a.args:
            if v not in variables:
                variables.append(v)
    for v in project:
        if v not in variables:
            variables.append(v)
    free = [v for v in variables if v not in fixed]
    order = _variable_order(atoms, free, [v for v in project if v not in fixed])
    k = sum(1 for v in order if v in project)

    unary: dict[str, list[str]] = defaultdict(list)
    loops: dict[str, list[str]] = defaultdict(list)
    binary: dict[str, list[tuple[str, str, bool]]] = defaultdict(list)
    for a in atoms:
        if len(a.args) == 1:
            unary[a.args[0]].append(a.pred)
        elif a.args[0] == a.args[1]:
            loops[a.args[0]].append(a.pred)
        else:
            u, v = a.args
            binary[u].append((a.pred, v, True))
            binary[v].append((a.pred, u, False))

    assign: dict[str, Element] = dict(fixed)

    def ok(v: str, e: Element) -> bool:
        for c in unary[v]:
            if not model.has_concept(c, e):
                return False
        for p in loops[v]:
            if not model.has_role(p, e, e):
                return False
        for p, other, forward in binary[v]:
            if other in assign:
                f = assign[other]
                if forward and not model.has_role(p, e, f):
                    return False
                if not forward and not model.has_role(p, f, e):
                    return False
        return True

    for v, e in fixed.items():
        assign.pop(v)
        if not ok(v, e):
            return set()
        assign[v] = e

    def candidates(v: str) -> Iterable[Element]:
        best: set[Element] | None = None
        for p, other, forward in binary[v]:
            if other in assign:
                f = assign[other]
                cand = model.predecessors(p, f) if forward else model.successors(p, f)
                if best is None or len(cand) < len(best):
                    best = cand
        if best is None:
            dom = domain_of(v)
            return sorted(dom) if isinstance(dom, (set, frozenset)) else dom
        allowed = domain_of(v)
        if isinstance(allowed, (set, frozenset)):
            return sorted(best & allowed)
        allowed_set = set(allowed)
        return sorted(e for e in best if e in allowed_set)

    results: set[tuple[Element, ...]] = set()
    n = len(order)

    def rec(i: int) -> bool:
        if i == n:
            results.add(tuple(assign[x] for x in project))
            return True
        v = order[i]
        for e in candidates(v):
            if ok(v, e):
                assign[v] = e
                found = rec(i + 1)
                del assign[v]
                if found and i >= k:
                    return True
        return False

    rec(0)
    return results


# ---------------------------------------------------------------- oracle

def _satisfied(tbox: TBox, abox: ABox) -> list[set[BasicConcept]]:
    """Basic-concept sets of individuals and of depth-1 anonymous elements."""
    sets = list(_basic_concepts_at(tbox, abox).values())
    for r in tbox.generating_roles:
        if any(Exists(r) in s for s in sets):
            sets.append(set(tbox.concept_supers(Exists(r.inv))))
    return sets


def is_consistent(tbox: TBox, abox: ABox) -> bool:
    """Check every disjointness axiom against the depth-1 chase."""
    if not tbox.concept_disjointness and not tbox.role_disjointness:
        return True
    sets = _satisfied(tbox, abox)
    for b1, b2 in tbox.concept_disjointness:
        for s in sets:
            if b1 in s and b2 in s:
                return False
    if tbox.role_disjointness:
        complete = h_complete(tbox, abox)
        for r1, r2 in tbox.role_disjointness:
            p1 = set(complete.role_pairs(r1))
            if p1 & set(complete.role_pairs(r2)):
                return False
            for r in tbox.generating_roles:
                if any(Exists(r) in s for s in sets):
                    sup = tbox.role_supers(r)
                    if (r1 in sup and r2 in sup) or (r1.inv in sup and r2.inv in sup):
                        return False
    return True


def _answers(tbox: TBox, cq: CQ, abox: ABox) -> set[tuple[str, ...]]:
    if not cq.atoms:
        return {()} if not cq.answer_vars else set()
    model = build_chase(tbox, abox, len(cq.variables))
    inds = frozenset(model.individuals)
    everything = sorted(model.domain)
    answer = set(cq.answer_vars)

    def domain_of(v: str) -> Iterable[Element]:
        return inds if v in answer else everything

    found = homomorphisms(list(cq.atoms), model, domain_of, project=cq.answer_vars)
    return {tuple(e[0] for e in t) for t in found}


def certain_answers(tbox: TBox, cq: CQ, abox: ABox) -> set[tuple[str, ...]]:
    """All tuples over ind(A) that are certain answers to the query."""
    if not is_consistent(tbox, abox):
        raise InconsistentInput("the ABox is inconsistent with the TBox")
    return _answers(tbox, cq, abox)


def entails_from_concept(tbox: TBox, concept: str, cq: CQ) -> bool:
    """Decide ``T, {concept(a)} |= q`` for a Boolean query."""
    if not cq.is_boolean:
        raise NotBoolean("the query has answer variables")
    return _answers(tbox, cq, ABox([(concept, "a")])) == {()}


# ---------------------------------------------------------------- tree witnesses

@dataclass(frozen=True)
class TreeWitness:
    t_r: frozenset[str]
    t_i: frozenset[str]
    generators: frozenset[Role]
    atoms: tuple[Atom, ...]

    def __str__(self) -> str:
        gens = ",".join(str(r) for r in sorted(self.generators))
        return f"tw(r={sorted(self.t_r)}, i={sorted(self.t_i)}, gen={gens})"


def _connected_subsets(adj: dict[str, frozenset[str]], allowed: list[str]) -> list[frozenset[str]]:
    allowed_set = set(allowed)
    seen: set[frozenset[str]] = set()
    stack = [frozenset([v]) for v in allowed]
    while stack:
        s = stack.pop()
        if s in seen:
            continue
        seen.add(s)
        for v in s:
            for n in adj[v]:
                if n in allowed_set and n not in s:
                    stack.append(s | {n})
    pos = {v: i for i, v in enumerate(allowed)}
    return sorted(seen, key=lambda s: (len(s), sorted(pos[v] for v in s)))


def witness_atoms(cq: CQ, t_r: frozenset[str], t_i: frozenset[str]) -> tuple[Atom, ...]:
    span = t_r | t_i
    return tuple(a for a in cq.atoms if set(a.args) <= span and not set(a.args) <= t_r)


def is_generated_by(tbox: TBox, cq: CQ, t_r: frozenset[str], t_i: frozenset[str], role: Role) -> bool:
    """Homomorphism test of the witness sub-query into the tree generated by ``role``."""
    atoms = witness_atoms(cq, t_r, t_i)
    model = build_chase(tbox, ABox([(exists_name(role), "a")]), len(t_i))
    root: Element = ("a", ())
    inner = sorted(e for e in model.domain if e[1] and e[1][0] == role)
    if not inner:
        return False
    fixed = {v: root for v in t_r}
    return bool(homomorphisms(list(atoms), model, lambda v: inner, fixed=fixed))


def tree_witnesses(tbox: TBox, cq: CQ) -> list[TreeWitness]:
    """Enumerate tree witnesses of a tree-shaped query.

    Interior sets are connected sets of existential variables; the root
    set is then forced to be their neighbourhood, because the witness
    sub-query must contain every atom touching an interior variable.
    """
    if not cq.is_tree_shaped():
        raise NotTreeShaped(str(cq))
    adj = cq.gaifman
    out = []
    for t_i in _connected_subsets(adj, list(cq.existential_vars)):
        t_r = frozenset(n for v in t_i for n in adj[v]) - t_i
        gens = frozenset(
            r for r in sorted(tbox.generating_roles) if is_generated_by(tbox, cq, t_r, t_i, r)
        )
        if gens:
            out.append(TreeWitness(t_r, t_i, gens, witness_atoms(cq, t_r, t_i)))
    return out


__all__ = [
    "CanonicalModel",
    "TreeWitness",
    "build_chase",
    "certain_answers",
    "element_str",
    "entails_from_concept",
    "homomorphisms",
    "is_consistent",
    "tree_witnesses",
]
