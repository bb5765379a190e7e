"""Log-depth rewriting of arbitrary CQs over finite-depth TBoxes via tree decompositions.

The decomposition tree is split recursively at balanced nodes.  Each
resulting subtree ``D`` and each assignment of words to its boundary
variables gets a predicate; a clause guesses the words of the splitting
bag, checks them with ABox atoms and delegates the remaining subtrees.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Mapping

import networkx as nx

from .dl import CQ, OMEGA, Atom, TBox, normalize
from .errors import Disconnected, InfiniteDepth, InvalidUserDecomposition, NoSplitter, ParseError
from .ndl import Clause, Program, guarded_clause
from .wordtypes import TypeAssignment, Word, at_atoms, enumerate_types, type_str


@dataclass
class TreeDecomposition:
    bags: dict[int, tuple[str, ...]]
    adj: dict[int, frozenset[int]]

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags.values()), default=0) - 1

    @property
    def nodes(self) -> list[int]:
        return sorted(self.bags)

    def edges(self) -> list[tuple[int, int]]:
        return sorted((a, b) for a in self.adj for b in self.adj[a] if a < b)

    def check(self, cq: CQ) -> None:
        """Raise ``InvalidUserDecomposition`` unless this decomposes ``cq``."""
        g = nx.Graph()
        g.add_nodes_from(self.bags)
        g.add_edges_from(self.edges())
        if self.bags and not nx.is_tree(g):
            raise InvalidUserDecomposition("the bags do not form a tree")
        covered = set().union(*map(set, self.bags.values())) if self.bags else set()
        if set(cq.variables) - covered:
            raise InvalidUserDecomposition(f"variables {sorted(set(cq.variables) - covered)} are in no bag")
        for a in cq.atoms:
            if not any(set(a.args) <= set(b) for b in self.bags.values()):
                raise InvalidUserDecomposition(f"atom {a} is in no bag")
        for v in cq.variables:
            holders = [n for n, b in self.bags.items() if v in b]
            if not nx.is_connected(g.subgraph(holders)):
                raise InvalidUserDecomposition(f"the bags containing {v} are not connected")


def _from_edges(bags: dict[int, tuple[str, ...]], edges: Iterable[tuple[int, int]]) -> TreeDecomposition:
    adj: dict[int, set[int]] = {n: set() for n in bags}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    return TreeDecomposition(bags, {k: frozenset(v) for k, v in adj.items()})


def tree_decomposition(cq: CQ) -> TreeDecomposition:
    """Edge bags chained along the tree for tree-shaped queries, min-fill otherwise."""
    if not cq.is_connected():
        raise Disconnected("decompose each connected component separately")
    order = {v: i for i, v in enumerate(cq.variables)}
    if len(cq.variables) <= 1:
        return _from_edges({0: tuple(cq.variables)}, [])
    if cq.is_tree_shaped():
        pairs: list[tuple[str, str]] = []
        for a in cq.atoms:
            if len(a.args) == 2 and a.args[0] != a.args[1]:
                pair = tuple(sorted(a.args, key=order.__getitem__))
                if pair not in pairs:
                    pairs.append(pair)  # type: ignore[arg-type]
        bags = {i: p for i, p in enumerate(pairs)}
        edges = []
        for v in cq.variables:
            incident = [i for i, p in bags.items() if v in p]
            edges += list(zip(incident, incident[1:]))
        return _from_edges(bags, edges)
    g = nx.Graph()
    g.add_nodes_from(cq.variables)
    g.add_edges_from((u, v) for u, ns in cq.gaifman.items() for v in ns)
    _, decomp = nx.algorithms.approximation.treewidth_min_fill_in(g)
    keyed = sorted(decomp.nodes, key=lambda b: sorted(order[v] for v in b))
    ids = {b: i for i, b in enumerate(keyed)}
    bags = {ids[b]: tuple(sorted(b, key=order.__getitem__)) for b in keyed}
    return _from_edges(bags, [(ids[a], ids[b]) for a, b in decomp.edges])


def parse_decomposition(text: str, cq: CQ) -> TreeDecomposition:
    """Read ``bag <id>: v1 v2 ...`` and ``edge <id> <id>`` lines."""
    bags: dict[int, tuple[str, ...]] = {}
    edges: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.fullmatch(r"bag\s+(\d+)\s*:\s*(.*)", line)
        if m:
            bags[int(m.group(1))] = tuple(m.group(2).split())
            continue
        m = re.fullmatch(r"edge\s+(\d+)\s+(\d+)", line)
        if m:
            edges.append((int(m.group(1)), int(m.group(2))))
            continue
        raise ParseError(f"unrecognised decomposition line {line!r}", lineno)
    for a, b in edges:
        if a not in bags or b not in bags:
            raise InvalidUserDecomposition(f"edge {a}-{b} mentions an unknown bag")
    order = {v: i for i, v in enumerate(cq.variables)}
    bags = {k: tuple(sorted(v, key=lambda x: order.get(x, len(order)))) for k, v in bags.items()}
    td = _from_edges(bags, edges)
    td.check(cq)
    return td


# ---------------------------------------------------------------- splitting

def _components(td: TreeDecomposition, nodes: frozenset[int]) -> list[frozenset[int]]:
    seen: set[int] = set()
    out = []
    for n in sorted(nodes):
        if n in seen:
            continue
        comp = {n}
        stack = [n]
        while stack:
            cur = stack.pop()
            for m in td.adj[cur]:
                if m in nodes and m not in comp:
                    comp.add(m)
                    stack.append(m)
        seen |= comp
        out.append(frozenset(comp))
    return out


def boundary_nodes(td: TreeDecomposition, sub: frozenset[int]) -> list[int]:
    return sorted(n for n in sub if td.adj[n] - sub)


def degree(td: TreeDecomposition, sub: frozenset[int]) -> int:
    return len(boundary_nodes(td, sub))


def split_node(td: TreeDecomposition, sub: frozenset[int]) -> int:
    """First node (by id) whose removal leaves parts within the balanced size and degree bounds."""
    m = len(sub)
    deg = degree(td, sub)
    for t in sorted(sub):
        parts = _components(td, sub - {t})
        exceptional = 0
        ok = True
        for p in parts:
            if 2 * len(p) <= m and degree(td, p) <= 2:
                continue
            if deg == 2 and exceptional == 0 and degree(td, p) == 1 and len(p) < m - 1:
                exceptional += 1
                continue
            ok = False
            break
        if ok:
            return t
    raise NoSplitter(f"no splitting node for subtree {sorted(sub)}")


@dataclass
class SubtreeIndex:
    subtrees: list[frozenset[int]]
    children: dict[frozenset[int], list[frozenset[int]]]
    splitter: dict[frozenset[int], int]
    boundary: dict[frozenset[int], tuple[str, ...]]
    atoms: dict[frozenset[int], tuple[Atom, ...]]
    answers: dict[frozenset[int], tuple[str, ...]]
    depth: dict[frozenset[int], int] = field(default_factory=dict)

    def ident(self, sub: frozenset[int]) -> int:
        return self.subtrees.index(sub)


def build_subtree_index(td: TreeDecomposition, cq: CQ) -> SubtreeIndex:
    """Recursive balanced splitting of the whole decomposition tree."""
    order = {v: i for i, v in enumerate(cq.variables)}
    root = frozenset(td.bags)
    subtrees: list[frozenset[int]] = []
    children: dict[frozenset[int], list[frozenset[int]]] = {}
    splitter: dict[frozenset[int], int] = {}
    boundary: dict[frozenset[int], tuple[str, ...]] = {}
    depth: dict[frozenset[int], int] = {root: 0}
    queue = [root]
    while queue:
        d = queue.pop(0)
        subtrees.append(d)
        if len(d) == 1:
            (node,) = d
            splitter[d] = node
            children[d] = []
            elsewhere = {v for n, b in td.bags.items() if n != node for v in b}
            shared = set(td.bags[node]) & elsewhere
        else:
            t = split_node(td, d)
            splitter[d] = t
            children[d] = _components(td, d - {t})
            for c in children[d]:
                depth[c] = depth[d] + 1
            queue.extend(children[d])
            shared = set()
            for n in d:
                for m in td.adj[n] - d:
                    shared |= set(td.bags[n]) & set(td.bags[m])
        boundary[d] = tuple(sorted(shared, key=order.__getitem__))

    atoms: dict[frozenset[int], tuple[Atom, ...]] = {}
    for d in reversed(subtrees):
        bag = set(td.bags[splitter[d]])
        own = [a for a in cq.atoms if set(a.args) <= bag]
        for c in children[d]:
            own += [a for a in atoms[c] if a not in own]
        atoms[d] = tuple(a for a in cq.atoms if a in own)
    answers = {
        d: tuple(x for x in cq.answer_vars if any(x in a.args for a in atoms[d])) for d in subtrees
    }
    return SubtreeIndex(subtrees, children, splitter, boundary, atoms, answers, depth)


# ---------------------------------------------------------------- rewriting

def compatible_types(tbox: TBox, bag: Iterable[str], cq: CQ) -> list[TypeAssignment]:
    if tbox.depth == OMEGA:
        raise InfiniteDepth("types need a TBox of finite depth")
    return list(enumerate_types(tbox, cq, list(bag), tbox.words()))


def _restrict(assignment: Mapping[str, Word], variables: Iterable[str]) -> dict[str, Word]:
    return {v: assignment[v] for v in variables}


def _rewrite_connected(
    tbox: TBox, cq: CQ, td: TreeDecomposition, goal: str, cleanup: str
) -> tuple[list[Clause], dict[str, tuple[str, ...]]]:
    index = build_subtree_index(td, cq)
    words = tbox.words()
    root = index.subtrees[0]

    def pred_name(sub: frozenset[int], w: Mapping[str, Word]) -> str:
        if sub == root:
            return goal
        return f"{goal}{index.ident(sub)}<{type_str(w, index.boundary[sub])}>"

    def atom_for(sub: frozenset[int], w: Mapping[str, Word]) -> Atom:
        xs = index.answers[sub]
        plain = tuple(v for v in index.boundary[sub] if v not in xs)
        return Atom(pred_name(sub, w), plain + xs)

    def boundary_types(sub: frozenset[int]) -> list[dict[str, Word]]:
        options = [[()] if v in cq.answer_vars else words for v in index.boundary[sub]]
        return [dict(zip(index.boundary[sub], combo)) for combo in product(*options)]

    params: dict[str, tuple[str, ...]] = {}
    clauses: list[Clause] = []
    bag_types = {d: compatible_types(tbox, td.bags[index.splitter[d]], cq) for d in index.subtrees}

    def clauses_for(sub: frozenset[int], w: dict[str, Word]) -> list[tuple[Clause, list]]:
        out = []
        bag = td.bags[index.splitter[sub]]
        head = atom_for(sub, w)
        for s in bag_types[sub]:
            if any(s[v] != w[v] for v in bag if v in w):
                continue
            merged = {**w, **s}
            requests = [(c, _restrict(merged, index.boundary[c])) for c in index.children[sub]]
            body = at_atoms(cq, s, bag) + [atom_for(c, wc) for c, wc in requests]
            out.append((guarded_clause(head, body), requests))
        return out

    generated: set[str] = set()
    if cleanup == "reachable":
        todo: list[tuple[frozenset[int], dict[str, Word]]] = [(root, {})]
        while todo:
            sub, w = todo.pop(0)
            name = pred_name(sub, w)
            if name in generated:
                continue
            generated.add(name)
            params[name] = index.answers[sub]
            for clause, requests in clauses_for(sub, w):
                clauses.append(clause)
                todo.extend(requests)
    else:
        for sub in index.subtrees:
            for w in boundary_types(sub):
                name = pred_name(sub, w)
                generated.add(name)
                params[name] = index.answers[sub]
                clauses.extend(c for c, _ in clauses_for(sub, w))
    if cleanup != "none":
        clauses = drop_dead_clauses(clauses, generated)
        defined = {c.head.pred for c in clauses}
        params = {k: v for k, v in params.items() if k in defined}
    return clauses, params


def drop_dead_clauses(clauses: list[Clause], generated: set[str]) -> list[Clause]:
    """Remove clauses whose body needs a generated predicate that has no clauses, to a fixpoint."""
    while True:
        defined = {c.head.pred for c in clauses}
        kept = [c for c in clauses if all(a.pred in defined or a.pred not in generated for a in c.body)]
        if len(kept) == len(clauses):
            return kept
        clauses = kept


CLEANUPS = ("none", "dead", "reachable")


def rewrite_td(
    tbox: TBox, cq: CQ, td: TreeDecomposition | None = None, cleanup: str = "dead"
) -> Program:
    """Ordered NDL rewriting over H-complete ABoxes with goal ``G``.

    ``cleanup`` selects the post-processing: ``none`` emits a clause for
    every subtree and every boundary type, ``dead`` (default) then removes
    clauses that need a predicate without clauses, and ``reachable`` also
    skips predicates the goal never refers to.  Disconnected queries are
    rewritten per component and joined by a product clause.
    """
    if cleanup not in CLEANUPS:
        raise ValueError(f"cleanup must be one of {CLEANUPS}")
    if not tbox.normalized:
        tbox = normalize(tbox)
    if tbox.depth == OMEGA:
        raise InfiniteDepth("the TBox has infinite depth")
    comps = cq.components()
    if len(comps) <= 1:
        td = td or tree_decomposition(cq)
        td.check(cq)
        clauses, params = _rewrite_connected(tbox, cq, td, "G", cleanup)
        return Program(clauses, "G", len(cq.answer_vars), params)
    if td is not None:
        raise Disconnected("a user decomposition needs a connected query")
    clauses: list[Clause] = []
    params: dict[str, tuple[str, ...]] = {}
    body = []
    for i, comp in enumerate(comps):
        sub = cq.restrict(comp)
        goal = f"C{i}.G"
        cl, pr = _rewrite_connected(tbox, sub, tree_decomposition(sub), goal, cleanup)
        clauses += cl
        params.update(pr)
        body.append(Atom(goal, sub.answer_vars))
    clauses.append(Clause(Atom("G", cq.answer_vars), tuple(body)))
    params["G"] = cq.answer_vars
    return Program(clauses, "G", len(cq.answer_vars), params)
