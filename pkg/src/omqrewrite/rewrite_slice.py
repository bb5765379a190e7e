"""Linear rewriting of tree-shaped CQs over finite-depth TBoxes by distance slices."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import product

from .dl import CQ, OMEGA, Atom, TBox, normalize
from .errors import InfiniteDepth, NotTreeShaped, OutOfRange
from .ndl import Clause, Program, guarded_clause
from .wordtypes import TypeAssignment, Word, at_atoms, atom_ok, local_candidates, type_str


@dataclass
class SliceDecomposition:
    root: str
    slices: list[tuple[str, ...]]
    cq: CQ

    @property
    def depth(self) -> int:
        return len(self.slices) - 1

    def suffix_atoms(self, n: int) -> tuple[Atom, ...]:
        below = {v for s in self.slices[n:] for v in s}
        return tuple(a for a in self.cq.atoms if set(a.args) <= below)

    def answers(self, n: int) -> tuple[str, ...]:
        used = {v for a in self.suffix_atoms(n) for v in a.args}
        return tuple(x for x in self.cq.answer_vars if x in used)

    def existential(self, n: int) -> tuple[str, ...]:
        return tuple(v for v in self.slices[n] if v not in self.cq.answer_vars)


def default_root(cq: CQ) -> str:
    return cq.answer_vars[0] if cq.answer_vars else cq.variables[0]


def slice_query(cq: CQ, root: str | None = None) -> SliceDecomposition:
    """Layer the variables by their distance from ``root``."""
    if not cq.is_tree_shaped():
        raise NotTreeShaped(str(cq))
    root = root or default_root(cq)
    if root not in cq.variables:
        raise OutOfRange(f"root {root!r} is not a query variable")
    dist = {root: 0}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for u in cq.gaifman[v]:
            if u not in dist:
                dist[u] = dist[v] + 1
                queue.append(u)
    m = max(dist.values())
    slices = [tuple(v for v in cq.variables if dist[v] == n) for n in range(m + 1)]
    return SliceDecomposition(root, slices, cq)


def locally_compatible(tbox: TBox, w: TypeAssignment, slice_vars: tuple[str, ...], cq: CQ) -> bool:
    return all(w[v] in local_candidates(tbox, cq, v, [w[v]]) for v in slice_vars)


def pair_compatible(
    tbox: TBox,
    w: TypeAssignment,
    s: TypeAssignment,
    slice_n: tuple[str, ...],
    slice_n1: tuple[str, ...],
    cq: CQ,
) -> bool:
    if not (locally_compatible(tbox, w, slice_n, cq) and locally_compatible(tbox, s, slice_n1, cq)):
        return False
    merged = {**w, **s}
    for a in cq.atoms:
        if len(a.args) == 2 and a.args[0] != a.args[1] and set(a.args) <= set(merged):
            if not (set(a.args) & set(slice_n) and set(a.args) & set(slice_n1)):
                continue
            if not atom_ok(tbox, a, merged):
                return False
    return True


def _slice_types(tbox: TBox, cq: CQ, variables: tuple[str, ...], words: list[Word]) -> list[TypeAssignment]:
    options = [local_candidates(tbox, cq, v, words) for v in variables]
    return [dict(zip(variables, combo)) for combo in product(*options)]


def rewrite_slice(tbox: TBox, cq: CQ, root: str | None = None) -> Program:
    """Linear ordered NDL rewriting over H-complete ABoxes with goal ``G``.

    A level-``M`` predicate whose body would be empty is not emitted; the
    atom referring to it is left out of the clauses one level up, where
    the slice-crossing atoms already bind its arguments.
    """
    if not tbox.normalized:
        tbox = normalize(tbox)
    if tbox.depth == OMEGA:
        raise InfiniteDepth("the TBox has infinite depth")
    dec = slice_query(cq, root)
    words = tbox.words()
    m = dec.depth
    types = [_slice_types(tbox, cq, dec.slices[n], words) for n in range(m + 1)]
    params: dict[str, tuple[str, ...]] = {}

    def atom_for(n: int, w: TypeAssignment) -> Atom:
        name = f"P{n}<{type_str(w, dec.slices[n])}>"
        params[name] = dec.answers(n)
        return Atom(name, dec.existential(n) + dec.answers(n))

    clauses: list[Clause] = []
    trivial: dict[str, Atom] = {}
    for w in types[m]:
        head = atom_for(m, w)
        body = at_atoms(cq, w, dec.slices[m])
        if body:
            clauses.append(guarded_clause(head, body))
        else:
            trivial[head.pred] = head
    guarded: list[Clause] = []
    for n in range(m - 1, -1, -1):
        level: list[Clause] = []
        for w in types[n]:
            for s in types[n + 1]:
                if not pair_compatible(tbox, w, s, dec.slices[n], dec.slices[n + 1], cq):
                    continue
                merged = {**w, **s}
                body = at_atoms(cq, merged, dec.slices[n] + dec.slices[n + 1])
                child = atom_for(n + 1, s)
                bound = {v for a in body for v in a.variables}
                if child.pred not in trivial or not set(child.variables) <= bound:
                    body.append(child)
                    if child.pred in trivial and all(g.head.pred != child.pred for g in guarded):
                        head = trivial[child.pred]
                        guarded.append(guarded_clause(head, ()))
                level.append(guarded_clause(atom_for(n, w), body))
        clauses = level + clauses
    clauses += guarded
    heads0 = []
    for c in clauses:
        if c.head.pred.startswith("P0<") and c.head not in heads0:
            heads0.append(c.head)
    goal_clauses = [Clause(Atom("G", cq.answer_vars), (h,)) for h in heads0]
    params["G"] = cq.answer_vars
    defined = {c.head.pred for c in clauses} | {"G"}
    return Program(goal_clauses + clauses, "G", len(cq.answer_vars), {k: v for k, v in params.items() if k in defined})
