"""Seeded random instances shared by the module tests and the acceptance suite."""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache

from omqrewrite.chase import is_consistent
from omqrewrite.dl import CQ, OMEGA, ABox, Atom, Concept, Exists, Role, TBox, normalize, parse_tbox
from omqrewrite.ndl import Clause, Program
from omqrewrite.rewrite_td import tree_decomposition

CONCEPTS = ("A", "B", "C")
ROLES = ("P", "R", "S")

OMEGA_TBOX = "A sub ex P\nex P- sub ex P\n"


def random_role(rng: random.Random) -> Role:
    return Role(rng.choice(ROLES), rng.random() < 0.4)


def random_basic(rng: random.Random):
    return Concept(rng.choice(CONCEPTS)) if rng.random() < 0.5 else Exists(random_role(rng))


def random_tbox(rng: random.Random, max_depth: float | None = None) -> TBox:
    """Normalized random TBox, resampled until its depth is at most ``max_depth``."""
    while True:
        ci = []
        for _ in range(rng.randint(1, 5)):
            rhs = Exists(random_role(rng)) if rng.random() < 0.6 else Concept(rng.choice(CONCEPTS))
            ci.append((random_basic(rng), rhs))
        ri = [(random_role(rng), random_role(rng)) for _ in range(rng.randint(0, 2))]
        cd = [(random_basic(rng), random_basic(rng))] if rng.random() < 0.15 else []
        rd = [(random_role(rng), random_role(rng))] if rng.random() < 0.05 else []
        t = normalize(TBox(ci, ri, cd, rd))
        if max_depth is None or t.depth <= max_depth:
            return t


def omega_tbox() -> TBox:
    return normalize(parse_tbox(OMEGA_TBOX))


def leaf_count(cq: CQ) -> int:
    g = cq.gaifman
    return max(1, sum(1 for v in cq.variables if len(g[v]) <= 1))


def random_tree_query(rng: random.Random, max_atoms: int = 8, max_leaves: int = 3) -> CQ:
    while True:
        natoms = rng.randint(1, max_atoms)
        nv = rng.randint(1, min(6, natoms + 1))
        vs = [f"y{i}" for i in range(nv)]
        atoms = []
        for i in range(1, nv):
            p = rng.randrange(i)
            pair = (vs[p], vs[i]) if rng.random() < 0.5 else (vs[i], vs[p])
            atoms.append(Atom(rng.choice(ROLES), pair))
        while len(atoms) < natoms:
            v = rng.choice(vs)
            if rng.random() < 0.1:
                atoms.append(Atom(rng.choice(ROLES), (v, v)))
            else:
                atoms.append(Atom(rng.choice(CONCEPTS), (v,)))
        rng.shuffle(atoms)
        q = CQ(atoms)
        if leaf_count(q) > max_leaves:
            continue
        answers = [v for v in q.variables if rng.random() < 0.3][:2]
        return CQ(q.atoms, answers)


def random_tw2_query(rng: random.Random, max_atoms: int = 8) -> CQ:
    """Connected query of treewidth at most 2; trees plus up to two chords."""
    while True:
        base = random_tree_query(rng, max_atoms, max_leaves=8)
        atoms = list(base.atoms)
        vs = list(base.variables)
        for _ in range(rng.choice((0, 1, 1, 2))):
            if len(vs) >= 3 and len(atoms) < max_atoms:
                u, v = rng.sample(vs, 2)
                atoms.append(Atom(rng.choice(ROLES), (u, v)))
        q = CQ(atoms, base.answer_vars)
        if tree_decomposition(q).width <= 2:
            return q


def random_abox(rng: random.Random, tbox: TBox, cq: CQ, max_individuals: int = 6) -> ABox:
    """Random ABox, half the time seeded with a partial image of the query.

    Seeded facts are sometimes replaced by a subsumee so that answers
    depend on the TBox.
    """
    inds = [f"a{i}" for i in range(rng.randint(1, max_individuals))]
    concepts = [(rng.choice(CONCEPTS), rng.choice(inds)) for _ in range(rng.randint(0, 4))]
    roles = [(rng.choice(ROLES), rng.choice(inds), rng.choice(inds)) for _ in range(rng.randint(0, 6))]
    if rng.random() < 0.5:
        image = {v: rng.choice(inds) for v in cq.variables}
        for a in cq.atoms:
            if rng.random() < 0.3:
                continue
            if len(a.args) == 1:
                subs = sorted(
                    (b for b in tbox.concept_subs(Concept(a.pred)) if isinstance(b, Concept) and b.name in CONCEPTS),
                    key=str,
                )
                name = rng.choice(subs).name if subs and rng.random() < 0.4 else a.pred
                concepts.append((name, image[a.args[0]]))
            else:
                u, v = image[a.args[0]], image[a.args[1]]
                subs = sorted((r for r in tbox.role_subs(Role(a.pred)) if r.name in ROLES), key=str)
                r = rng.choice(subs) if subs and rng.random() < 0.4 else Role(a.pred)
                roles.append((r.name, v, u) if r.inverse else (r.name, u, v))
    return ABox(concepts, roles)


@dataclass(frozen=True)
class Instance:
    method: str
    tbox: TBox
    cq: CQ
    abox: ABox


def _consistent_abox(rng: random.Random, tbox: TBox, cq: CQ) -> ABox:
    while True:
        abox = random_abox(rng, tbox, cq)
        if is_consistent(tbox, abox):
            return abox


@lru_cache(maxsize=None)
def oracle_corpus(per_method: int = 200, seed: int = 20240617) -> tuple[Instance, ...]:
    """``per_method`` instances for each of td, slice and tw.

    td and slice use TBoxes of depth at most 2; tw uses unrestricted
    TBoxes, with every fifth instance on an infinite-depth TBox.
    """
    rng = random.Random(seed)
    out: list[Instance] = []
    for i in range(per_method):
        t = random_tbox(rng, max_depth=2)
        q = random_tw2_query(rng)
        out.append(Instance("td", t, q, _consistent_abox(rng, t, q)))
    for i in range(per_method):
        t = random_tbox(rng, max_depth=2)
        q = random_tree_query(rng)
        out.append(Instance("slice", t, q, _consistent_abox(rng, t, q)))
    for i in range(per_method):
        t = omega_tbox() if i % 5 == 0 else random_tbox(rng)
        q = random_tree_query(rng)
        out.append(Instance("tw", t, q, _consistent_abox(rng, t, q)))
    return tuple(out)


def random_program(rng: random.Random, layers: int = 3, linear: bool = False) -> Program:
    """Random nonrecursive program over the corpus vocabulary.

    IDB predicates are layered; bodies draw EDB atoms and IDB atoms of
    lower layers, and unbound head variables get a unary EDB guard.
    """
    variables = ("x", "y", "z", "u")
    arity: dict[str, int] = {}
    levels: list[list[str]] = []
    clauses: list[Clause] = []
    for level in range(layers):
        names = [f"I{level}_{i}" for i in range(rng.randint(1, 2))] if level < layers - 1 else ["G"]
        for name in names:
            arity[name] = rng.randint(0, 2)
            lower = [p for ps in levels for p in ps]
            for _ in range(rng.randint(1, 3)):
                body: list[Atom] = []
                idb_left = 1 if linear else 3
                for _ in range(rng.randint(1, 5)):
                    if lower and idb_left and rng.random() < 0.4:
                        p = rng.choice(lower)
                        idb_left -= 1
                        body.append(Atom(p, tuple(rng.choice(variables) for _ in range(arity[p]))))
                    elif rng.random() < 0.5:
                        body.append(Atom(rng.choice(CONCEPTS), (rng.choice(variables),)))
                    else:
                        body.append(Atom(rng.choice(ROLES), (rng.choice(variables), rng.choice(variables))))
                head_args = tuple(rng.choice(variables) for _ in range(arity[name]))
                bound = {v for a in body for v in a.args}
                body += [Atom(rng.choice(CONCEPTS), (v,)) for v in dict.fromkeys(head_args) if v not in bound]
                clauses.append(Clause(Atom(name, head_args), tuple(body)))
        levels.append(names)
    return Program(clauses, "G", arity["G"])


def random_plain_abox(rng: random.Random, max_individuals: int = 6) -> ABox:
    inds = [f"a{i}" for i in range(rng.randint(1, max_individuals))]
    concepts = [(rng.choice(CONCEPTS), rng.choice(inds)) for _ in range(rng.randint(0, 8))]
    roles = [(rng.choice(ROLES), rng.choice(inds), rng.choice(inds)) for _ in range(rng.randint(0, 12))]
    return ABox(concepts, roles)


def depth_is_finite(tbox: TBox) -> bool:
    return tbox.depth != OMEGA
