"""Types: maps from query variables to words of the canonical model.

Shared by the tree-decomposition and slice rewriters.  A word is a tuple
of roles; the empty tuple means the variable lands on an ABox individual.
"""

from __future__ import annotations

from itertools import product
from typing import Iterable, Iterator, Mapping, Sequence

from .dl import CQ, Atom, Concept, Exists, Role, TBox, exists_name

Word = tuple[Role, ...]
TypeAssignment = dict[str, Word]


def word_str(word: Word) -> str:
    return ".".join(str(r) for r in word) if word else "e"


def type_str(assignment: Mapping[str, Word], order: Iterable[str]) -> str:
    return ";".join(f"{v}:{word_str(assignment[v])}" for v in order)


def concept_ok(tbox: TBox, concept: str, word: Word) -> bool:
    return not word or tbox.subsumes_concept(Exists(word[-1].inv), Concept(concept))


def role_ok(tbox: TBox, role: Role, w_from: Word, w_to: Word) -> bool:
    """Can an edge ``role(u, v)`` hold between ``a.w_from`` and ``a.w_to``?"""
    if not w_from and not w_to:
        return True
    if len(w_to) == len(w_from) + 1 and w_to[:-1] == w_from:
        return tbox.subsumes_role(w_to[-1], role)
    if len(w_from) == len(w_to) + 1 and w_from[:-1] == w_to:
        return tbox.subsumes_role(w_from[-1], role.inv)
    return False


def atom_ok(tbox: TBox, atom: Atom, assignment: Mapping[str, Word]) -> bool:
    if len(atom.args) == 1:
        return concept_ok(tbox, atom.pred, assignment[atom.args[0]])
    u, v = atom.args
    return role_ok(tbox, Role(atom.pred), assignment[u], assignment[v])


def local_candidates(tbox: TBox, cq: CQ, var: str, words: Sequence[Word]) -> list[Word]:
    """Words for one variable allowed by its answer status and concept atoms."""
    if var in cq.answer_vars:
        return [()]
    out = []
    for w in words:
        ok = True
        for a in cq.atoms:
            if a.args == (var,) and not concept_ok(tbox, a.pred, w):
                ok = False
            elif len(a.args) == 2 and a.args[0] == a.args[1] == var and w:
                ok = False
            if not ok:
                break
        if ok:
            out.append(w)
    return out


def compatible(tbox: TBox, cq: CQ, assignment: Mapping[str, Word]) -> bool:
    """All atoms of ``cq`` inside the assignment's domain are satisfiable."""
    dom = set(assignment)
    for v in dom:
        if v in cq.answer_vars and assignment[v]:
            return False
    return all(atom_ok(tbox, a, assignment) for a in cq.atoms if set(a.args) <= dom)


def enumerate_types(
    tbox: TBox, cq: CQ, variables: Sequence[str], words: Sequence[Word]
) -> Iterator[TypeAssignment]:
    """Compatible total maps over ``variables`` in lexicographic order."""
    options = [local_candidates(tbox, cq, v, words) for v in variables]
    inner = [a for a in cq.atoms if len(a.args) == 2 and set(a.args) <= set(variables)]
    for combo in product(*options):
        assignment = dict(zip(variables, combo))
        if all(atom_ok(tbox, a, assignment) for a in inner):
            yield assignment


def at_atoms(cq: CQ, assignment: Mapping[str, Word], order: Sequence[str]) -> list[Atom]:
    """Body atoms checking that ``assignment`` is realised around ABox individuals.

    Atoms entirely on individuals are copied, role atoms touching an
    anonymous element become equalities between their endpoints, and every
    anonymous variable requires the existential concept of its first role.
    """
    dom = set(assignment)
    out: list[Atom] = []
    for a in cq.atoms:
        if not set(a.args) <= dom:
            continue
        if all(not assignment[v] for v in a.args):
            out.append(a)
        elif len(a.args) == 2 and a.args[0] != a.args[1]:
            eq = Atom("=", a.args)
            if eq not in out:
                out.append(eq)
    for v in order:
        if assignment.get(v):
            out.append(Atom(exists_name(assignment[v][0]), (v,)))
    return out
