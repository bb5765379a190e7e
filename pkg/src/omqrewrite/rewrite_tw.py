"""Log-depth rewriting of tree-shaped CQs over arbitrary TBoxes via tree witnesses.

Each subquery is split at a middle vertex.  Either that vertex lands on
an ABox individual, and the subqueries hanging off its neighbours are
solved independently, or it lies inside the anonymous part of a tree
witness, and the remainder outside the witness is solved instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .chase import TreeWitness, entails_from_concept, tree_witnesses
from .dl import CQ, Atom, TBox, exists_name, normalize
from .errors import NotTreeShaped
from .ndl import Clause, Program


def middle_vertex(cq: CQ) -> str:
    """A vertex whose removal leaves components of at most m/2 variables.

    The m/2 bound (a centroid) is slightly stronger than ceil(m/2); it
    rules out picking an endpoint of a three-variable path, which would
    make no progress when that endpoint is already an answer variable.
    """
    if not cq.is_tree_shaped():
        raise NotTreeShaped(str(cq))
    variables = cq.variables
    if len(variables) == 1:
        return variables[0]
    if len(variables) == 2 and cq.existential_vars:
        return cq.existential_vars[0]
    m = len(variables)
    for v in variables:
        if all(2 * len(c) <= m for c in _components_without(cq, v)):
            return v
    raise AssertionError("every tree has a middle vertex")


def _components_without(cq: CQ, removed: str) -> list[set[str]]:
    adj = cq.gaifman
    seen = {removed}
    out = []
    for start in cq.variables:
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        seen.add(start)
        while stack:
            cur = stack.pop()
            for n in adj[cur]:
                if n not in seen:
                    seen.add(n)
                    comp.add(n)
                    stack.append(n)
        out.append(comp)
    return out


def _atom_components(atoms: list[Atom]) -> list[list[Atom]]:
    """Group atoms connected through shared variables, in first-occurrence order."""
    groups: list[tuple[set[str], list[Atom]]] = []
    for a in atoms:
        vs = set(a.args)
        touching = [g for g in groups if g[0] & vs]
        merged_vars, merged_atoms = set(vs), [a]
        for g in touching:
            merged_vars |= g[0]
            merged_atoms = g[1] + merged_atoms
            groups.remove(g)
        groups.append((merged_vars, merged_atoms))
    order = {a: i for i, a in enumerate(atoms)}
    comps = [sorted(g[1], key=order.__getitem__) for g in groups]
    return sorted(comps, key=lambda c: order[c[0]])


@dataclass
class Subquery:
    atoms: tuple[Atom, ...]
    z: tuple[str, ...]
    name: str
    middle: str | None = None
    origin: str = "root"
    neighbours: list[int] = field(default_factory=list)
    witnesses: list[tuple[TreeWitness, list[int]]] = field(default_factory=list)

    @property
    def cq(self) -> CQ:
        return CQ(self.atoms, self.z)

    @property
    def variables(self) -> tuple[str, ...]:
        return self.cq.variables


@dataclass
class SubqueryRegistry:
    entries: list[Subquery]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def decompose_sq(tbox: TBox, cq0: CQ) -> SubqueryRegistry:
    """Close ``{cq0}`` under the neighbour and tree-witness splitting rules."""
    if not cq0.is_tree_shaped():
        raise NotTreeShaped(str(cq0))
    if not tbox.normalized:
        tbox = normalize(tbox)
    order = {v: i for i, v in enumerate(cq0.variables)}
    entries: list[Subquery] = []
    index: dict[tuple[frozenset[Atom], frozenset[str]], int] = {}

    def register(atoms: list[Atom], z: set[str], origin: str) -> int:
        key = (frozenset(atoms), frozenset(z))
        if key not in index:
            index[key] = len(entries)
            name = "G" if not entries else f"P{len(entries)}"
            entries.append(Subquery(tuple(atoms), tuple(sorted(z, key=order.__getitem__)), name, origin=origin))
        return index[key]

    register(list(cq0.atoms), set(cq0.answer_vars), "root")
    i = 0
    while i < len(entries):
        sq = entries[i]
        i += 1
        q = sq.cq
        if set(q.variables) == set(sq.z):
            continue
        v = middle_vertex(q)
        sq.middle = v
        z = set(sq.z)
        for comp in _components_without(q, v):
            # in a tree each component hangs off exactly one neighbour of v
            part = [a for a in q.atoms if set(a.args) <= comp | {v} and set(a.args) & comp]
            sub_vars = {t for a in part for t in a.args}
            sq.neighbours.append(register(part, sub_vars & (z | {v}), "neighbour"))
        for tw in tree_witnesses(tbox, q):
            if not tw.t_r or v not in tw.t_i:
                continue
            rest = [a for a in q.atoms if a not in tw.atoms]
            parts = []
            for comp_atoms in _atom_components(rest):
                comp_vars = {t for a in comp_atoms for t in a.args}
                parts.append(register(comp_atoms, comp_vars & (z | tw.t_r), "witness"))
            sq.witnesses.append((tw, parts))
    return SubqueryRegistry(entries)


def rewrite_tw(tbox: TBox, cq0: CQ) -> Program:
    """Ordered NDL rewriting over H-complete ABoxes with goal ``G``."""
    if not tbox.normalized:
        tbox = normalize(tbox)
    reg = decompose_sq(tbox, cq0)
    order = {v: i for i, v in enumerate(cq0.variables)}
    answers = set(cq0.answer_vars)

    def head(sq: Subquery) -> Atom:
        plain = [v for v in sq.z if v not in answers]
        params = [v for v in sq.z if v in answers]
        return Atom(sq.name, tuple(plain + params))

    def closed(sq: Subquery) -> bool:
        return set(sq.variables) == set(sq.z)

    def use(j: int) -> list[Atom]:
        # subqueries without existential variables are inlined as their atoms
        sub = reg.entries[j]
        return list(sub.atoms) if closed(sub) else [head(sub)]

    kept = [sq for k, sq in enumerate(reg) if k == 0 or not closed(sq)]
    params = {sq.name: tuple(v for v in sq.z if v in answers) for sq in kept}
    clauses: list[Clause] = []
    for sq in kept:
        h = head(sq)
        if closed(sq):
            clauses.append(Clause(h, sq.atoms))
            continue
        v = sq.middle
        local = [a for a in sq.atoms if a.args == (v,) or a.args == (v, v)]
        body = local + [a for j in sq.neighbours for a in use(j)]
        clauses.append(Clause(h, tuple(body)))
        for tw, parts in sq.witnesses:
            roots = sorted(tw.t_r, key=order.__getitem__)
            eqs = [Atom("=", (roots[0], u)) for u in roots[1:]]
            rest = [a for j in parts for a in use(j)]
            for role in sorted(tw.generators):
                marks = [Atom(exists_name(role), (u,)) for u in roots]
                clause = Clause(h, tuple(eqs + marks + rest))
                if clause not in clauses:
                    clauses.append(clause)
    if cq0.is_boolean:
        goal = reg.entries[0]
        for name in sorted(tbox.concept_names):
            if entails_from_concept(tbox, name, cq0):
                clauses.append(Clause(head(goal), (Atom(name, ("x",)),)))
    return Program(clauses, "G", len(cq0.answer_vars), params)


def tw_weights(tbox: TBox, cq0: CQ, program: Program | None = None) -> dict[str, int]:
    """The weight function assigning each subquery predicate its atom count."""
    reg = decompose_sq(tbox if tbox.normalized else normalize(tbox), cq0)
    nu = {sq.name: len(sq.atoms) for sq in reg}
    if program is not None:
        nu = {p: nu[p] for p in program.idb} | {p: 0 for p in program.edb}
    return nu
