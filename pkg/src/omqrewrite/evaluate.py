"""Evaluation engines for NDL programs over ABoxes.

``eval_seminaive`` computes the whole goal relation bottom-up.
``eval_linear`` decides one candidate tuple by reachability in the
grounding graph of a linear ordered program.  ``eval_circuit`` decides
one candidate tuple by building and evaluating a monotone Boolean
circuit for a skinny program.
"""

from __future__ import annotations

import logging
import time
from collections import defaultdict, deque
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Iterator, Sequence

from .dl import ABox, Atom, Const, Term
from .errors import ArityMismatch, NotLinear, NotOrdered, NotSkinny
from .ndl import EQ, Clause, Program, _head_param_vars, topological_order, validate

log = logging.getLogger(__name__)

GroundAtom = tuple[str, tuple[str, ...]]


@dataclass
class EvalStats:
    vertices: int = 0
    edges: int = 0
    gates: int = 0
    depth: int = 0
    runtime_ms: float = 0.0

    def as_dict(self) -> dict:
        return {
            "vertices": self.vertices,
            "edges": self.edges,
            "gates": self.gates,
            "depth": self.depth,
            "runtime_ms": round(self.runtime_ms, 3),
        }


class _Database:
    """Relations by predicate with lazily built hash indexes."""

    def __init__(self, abox: ABox):
        self.rel: dict[str, frozenset[tuple[str, ...]] | set[tuple[str, ...]]] = dict(abox.relations)
        self.domain = sorted(abox.individuals)
        self._domain_set = frozenset(abox.individuals)
        self._index: dict[tuple[str, tuple[int, ...]], dict[tuple, list[tuple[str, ...]]]] = {}

    def set(self, pred: str, rows: set[tuple[str, ...]]) -> None:
        self.rel[pred] = rows
        for key in [k for k in self._index if k[0] == pred]:
            del self._index[key]

    def size(self, pred: str) -> int:
        if pred == EQ:
            return len(self.domain)
        return len(self.rel.get(pred, ()))

    def contains(self, pred: str, row: tuple[str, ...]) -> bool:
        if pred == EQ:
            return row[0] == row[1] and row[0] in self._domain_set
        return row in self.rel.get(pred, ())

    def lookup(self, pred: str, positions: tuple[int, ...], values: tuple) -> Sequence[tuple[str, ...]]:
        rows = self.rel.get(pred, ())
        if not positions:
            return list(rows)
        key = (pred, positions)
        idx = self._index.get(key)
        if idx is None:
            idx = defaultdict(list)
            for r in rows:
                idx[tuple(r[i] for i in positions)].append(r)
            self._index[key] = idx
        return idx.get(values, ())


def _value(t: Term, binding: dict[str, str]) -> str | None:
    if isinstance(t, Const):
        return t.value
    return binding.get(t)


def _join(atoms: Sequence[Atom], binding: dict[str, str], db: _Database) -> Iterator[dict[str, str]]:
    """All extensions of ``binding`` satisfying every atom in ``atoms``."""
    if not atoms:
        yield binding
        return
    best_i, best_key = 0, None
    for i, a in enumerate(atoms):
        bound = sum(1 for t in a.args if _value(t, binding) is not None)
        key = (-bound, db.size(a.pred) if bound < len(a.args) else 0, i)
        if best_key is None or key < best_key:
            best_i, best_key = i, key
    atom = atoms[best_i]
    rest = [*atoms[:best_i], *atoms[best_i + 1 :]]
    values = [_value(t, binding) for t in atom.args]

    if atom.pred == EQ:
        left, right = values
        if left is not None and right is not None:
            if db.contains(EQ, (left, right)):
                yield from _join(rest, binding, db)
            return
        if left is not None or right is not None:
            known = left if left is not None else right
            if known not in db._domain_set:
                return
            free = atom.args[1] if left is not None else atom.args[0]
            yield from _join(rest, {**binding, free: known}, db)  # type: ignore[dict-item]
            return
        x, y = atom.args
        for c in db.domain:
            yield from _join(rest, {**binding, x: c, y: c}, db)  # type: ignore[dict-item]
        return

    positions = tuple(i for i, v in enumerate(values) if v is not None)
    key_vals = tuple(values[i] for i in positions)
    for row in db.lookup(atom.pred, positions, key_vals):
        new = binding
        ok = True
        for t, v in zip(atom.args, row):
            cur = _value(t, new)
            if cur is None:
                if new is binding:
                    new = dict(binding)
                new[t] = v  # type: ignore[index]
            elif cur != v:
                ok = False
                break
        if ok:
            yield from _join(rest, new, db)


def _ground(atom: Atom, binding: dict[str, str]) -> tuple[str, ...]:
    return tuple(_value(t, binding) for t in atom.args)  # type: ignore[misc]


def _unify(atom: Atom, row: tuple[str, ...], binding: dict[str, str]) -> dict[str, str] | None:
    new = dict(binding)
    for t, v in zip(atom.args, row):
        cur = _value(t, new)
        if cur is None:
            new[t] = v  # type: ignore[index]
        elif cur != v:
            return None
    return new


def _warn_unknown(program: Program, abox: ABox) -> None:
    missing = sorted(p for p in program.edb if p != EQ and p not in abox.relations)
    if missing:
        log.debug("EDB predicates absent from the ABox (treated as empty): %s", ", ".join(missing))


# ---------------------------------------------------------------- bottom-up

def eval_seminaive(program: Program, abox: ABox, goal: str | None = None) -> list[tuple[str, ...]]:
    """All goal tuples, sorted lexicographically.

    The program is nonrecursive, so each IDB predicate is computed once,
    in topological order, from relations that are already final.
    """
    validate(program)
    _warn_unknown(program, abox)
    goal = goal or program.goal
    db = _Database(abox)
    by_head: dict[str, list[Clause]] = defaultdict(list)
    for c in program.clauses:
        by_head[c.head.pred].append(c)
    for pred in topological_order(program):
        rows: set[tuple[str, ...]] = set()
        for c in by_head[pred]:
            for b in _join(c.body, {}, db):
                rows.add(_ground(c.head, b))
        db.set(pred, rows)
    return sorted(db.rel.get(goal, ()))


# ---------------------------------------------------------------- grounding graph

def _check_candidate(program: Program, goal: str, candidate: Sequence[str]) -> None:
    arity = program.arities.get(goal, program.goal_arity)
    if len(candidate) != arity:
        raise ArityMismatch(f"candidate has {len(candidate)} values, goal {goal} has arity {arity}")


def _param_vars(program: Program, goal: str) -> list[tuple[Clause, list[tuple[str, str]]]]:
    """Each clause with its (parameter name, head variable) pairs, checked against the goal."""
    names = set(program.param_names(goal))
    out = []
    for c in program.clauses:
        pairs = list(_head_param_vars(program, c).items())
        for name, _ in pairs:
            if name not in names:
                raise NotOrdered(f"parameter {name} of {c.head.pred} is not a goal parameter")
        out.append((c, pairs))
    return out


def _param_bindings(
    program: Program,
    goal: str,
    candidate: Sequence[str],
    prepared: list[tuple[Clause, list[tuple[str, str]]]] | None = None,
) -> list[tuple[Clause, dict[str, str]]]:
    """Clauses with their head parameters fixed to candidate values; conflicting clauses are dropped."""
    value = dict(zip(program.param_names(goal), candidate))
    out = []
    for c, pairs in prepared if prepared is not None else _param_vars(program, goal):
        binding: dict[str, str] = {}
        ok = True
        for name, var in pairs:
            if binding.setdefault(var, value[name]) != value[name]:
                ok = False
                break
        if ok:
            out.append((c, binding))
    return out


class LinearSearch:
    """Candidate decisions for one linear ordered program over one ABox.

    Validation and ABox indexes are prepared once, so sweeping many
    candidates only pays for the searches themselves.
    """

    def __init__(self, program: Program, abox: ABox):
        report = validate(program)
        if not report.linear:
            raise NotLinear("every clause body may contain at most one IDB atom")
        if program.params is None:
            raise NotOrdered("the linear engine needs declared parameters")
        self.program = program
        self.db = _Database(abox)
        self._split = {
            id(c): ([a for a in c.body if a.pred in program.idb], [a for a in c.body if a.pred not in program.idb])
            for c in program.clauses
        }
        # successor lists and source sets are reused across candidates
        self._succ: dict[tuple, list[GroundAtom]] = {}
        self._sources: dict[tuple, set[GroundAtom]] = {}
        self._prepared: dict[str, list[tuple[Clause, list[tuple[str, str]]]]] = {}

    def decide(self, candidate: Sequence[str], goal: str | None = None, stats: EvalStats | None = None) -> bool:
        started = time.perf_counter()
        program, db = self.program, self.db
        goal = goal or program.goal
        candidate = tuple(candidate)
        _check_candidate(program, goal, candidate)
        if goal not in program.idb:
            return db.contains(goal, candidate)
        sources: set[GroundAtom] = set()
        by_body: dict[str, list[tuple[tuple, Clause, Atom, list[Atom], dict[str, str]]]] = defaultdict(list)
        if goal not in self._prepared:
            self._prepared[goal] = _param_vars(program, goal)
        for c, binding in _param_bindings(program, goal, candidate, self._prepared[goal]):
            idb, edb = self._split[id(c)]
            key = (id(c), tuple(sorted(binding.items())))
            if idb:
                by_body[idb[0].pred].append((key, c, idb[0], edb, binding))
            else:
                if key not in self._sources:
                    self._sources[key] = {(c.head.pred, _ground(c.head, b)) for b in _join(edb, binding, db)}
                sources |= self._sources[key]

        target = (goal, candidate)
        seen = set(sources)
        edges: set[tuple[GroundAtom, GroundAtom]] = set()
        queue = deque(sorted(sources))
        found = target in seen
        while queue and not found:
            vertex = queue.popleft()
            for key, c, body_atom, edb, binding in by_body.get(vertex[0], ()):
                succ = self._succ.get((key, vertex))
                if succ is None:
                    start = _unify(body_atom, vertex[1], binding)
                    succ = [] if start is None else sorted({(c.head.pred, _ground(c.head, b)) for b in _join(edb, start, db)})
                    self._succ[(key, vertex)] = succ
                for nxt in succ:
                    edges.add((vertex, nxt))
                    if nxt not in seen:
                        seen.add(nxt)
                        queue.append(nxt)
                        if nxt == target:
                            found = True
        if stats is not None:
            stats.vertices += len(seen)
            stats.edges += len(edges)
            stats.runtime_ms += (time.perf_counter() - started) * 1000
        return found


def eval_linear(
    program: Program,
    abox: ABox,
    candidate: Sequence[str],
    goal: str | None = None,
    stats: EvalStats | None = None,
    search: LinearSearch | None = None,
) -> bool:
    """Decide ``goal(candidate)`` by forward search in the grounding graph."""
    search = search or LinearSearch(program, abox)
    return search.decide(candidate, goal, stats)


# ---------------------------------------------------------------- circuits

class Circuit:
    """A lazily built monotone circuit shared across candidates of one program and ABox.

    OR gates are ground IDB atoms, AND gates are ground clause bodies and
    inputs are ground EDB atoms.  AND gates with an absent EDB input are
    never created.  Body variables that no EDB atom binds are instantiated
    from the derivable tuples of the first IDB atom mentioning them (a
    tabled top-down lookup), instead of ranging over all of ind(A).
    IDB atoms that are already ground become child gates whatever their
    value.
    """

    def __init__(self, program: Program, abox: ABox):
        report = validate(program)
        if not report.skinny:
            raise NotSkinny("every clause body may contain at most two atoms")
        self.program = program
        self.db = _Database(abox)
        self.by_head: dict[str, list[Clause]] = defaultdict(list)
        for c in program.clauses:
            self.by_head[c.head.pred].append(c)
        self.ands: dict[GroundAtom, list[tuple[GroundAtom, ...]]] = {}
        self.inputs: set[GroundAtom] = set()
        self.order: list[GroundAtom] = []
        self.value: dict[GroundAtom, bool] = {}
        self.level: dict[GroundAtom, int] = {}
        self.and_count = 0
        self._table: dict[tuple[str, tuple[int, ...], tuple], list[tuple[str, ...]]] = {}
        self._evaluated = 0

    def _rows(self, pred: str, positions: tuple[int, ...], values: tuple) -> Sequence[tuple[str, ...]]:
        if pred not in self.program.idb:
            if pred != EQ:
                return self.db.lookup(pred, positions, values)
            if len(set(values)) > 1 or (values and values[0] not in self.db._domain_set):
                return ()
            return [(values[0], values[0])] if values else [(c, c) for c in self.db.domain]
        key = (pred, positions, values)
        if key not in self._table:
            rows: set[tuple[str, ...]] = set()
            for c in self.by_head.get(pred, ()):
                start: dict[str, str] | None = {}
                for i, v in zip(positions, values):
                    start = _unify(Atom(pred, (c.head.args[i],)), (v,), start)  # type: ignore[arg-type]
                    if start is None:
                        break
                if start is None:
                    continue
                for b in self._bindings(c.body, start, check_ground=True):
                    rows.add(_ground(c.head, b))
            self._table[key] = sorted(rows)
        return self._table[key]

    def _bindings(self, atoms: Sequence[Atom], binding: dict[str, str], check_ground: bool) -> Iterator[dict[str, str]]:
        """Extensions of ``binding`` over ``atoms``; ground IDB atoms are only checked if ``check_ground``."""
        if not atoms:
            yield binding
            return
        best_i, best_key = 0, None
        for i, a in enumerate(atoms):
            bound = sum(1 for t in a.args if _value(t, binding) is not None)
            size = self.db.size(a.pred) if a.pred not in self.program.idb else len(self.db.domain)
            key = (-bound if bound < len(a.args) else -99, size, i)
            if best_key is None or key < best_key:
                best_i, best_key = i, key
        atom = atoms[best_i]
        rest = [*atoms[:best_i], *atoms[best_i + 1 :]]
        values = [_value(t, binding) for t in atom.args]
        if atom.pred in self.program.idb and None not in values and not check_ground:
            yield from self._bindings(rest, binding, check_ground)
            return
        positions = tuple(i for i, v in enumerate(values) if v is not None)
        for row in self._rows(atom.pred, positions, tuple(values[i] for i in positions)):
            new = _unify(atom, row, binding)
            if new is not None:
                yield from self._bindings(rest, new, check_ground)

    def _expand(self, gate: GroundAtom) -> list[tuple[GroundAtom, ...]]:
        pred, row = gate
        bodies: list[tuple[GroundAtom, ...]] = []
        seen: set[tuple[GroundAtom, ...]] = set()
        for c in self.by_head.get(pred, ()):
            start = _unify(c.head, row, {})
            if start is None:
                continue
            for b in self._bindings(c.body, start, check_ground=False):
                body = tuple((a.pred, _ground(a, b)) for a in c.body)
                if body not in seen:
                    seen.add(body)
                    bodies.append(body)
        return bodies

    def build(self, root: GroundAtom) -> None:
        """Create every gate below ``root`` and record a topological order."""
        if root in self.ands:
            return
        stack: list[tuple[GroundAtom, bool]] = [(root, False)]
        while stack:
            gate, done = stack.pop()
            if done:
                self.order.append(gate)
                continue
            if gate in self.ands:
                continue
            bodies = self._expand(gate)
            self.ands[gate] = bodies
            self.and_count += len(bodies)
            stack.append((gate, True))
            for body in bodies:
                for g in body:
                    if g[0] in self.program.idb:
                        if g not in self.ands:
                            stack.append((g, False))
                    else:
                        self.inputs.add(g)

    def evaluate(self) -> None:
        """Evaluate gates added since the last call; ``order`` is bottom-up."""
        pending = self.order[self._evaluated :]
        self._evaluated = len(self.order)
        for gate in pending:
            if gate in self.value:
                continue
            val = False
            lvl = 1
            for body in self.ands[gate]:
                ok = True
                depth = 0
                for g in body:
                    if g[0] in self.program.idb:
                        ok = ok and self.value[g]
                        depth = max(depth, self.level[g])
                if ok:
                    val = True
                lvl = max(lvl, depth + 1)
            self.value[gate] = val
            self.level[gate] = lvl

    def decide(self, gate: GroundAtom) -> bool:
        if gate[0] not in self.program.idb:
            return self.db.contains(*gate)
        self.build(gate)
        self.evaluate()
        return self.value[gate]

    @property
    def gate_count(self) -> int:
        return len(self.ands) + self.and_count + len(self.inputs)


def eval_circuit(
    program: Program,
    abox: ABox,
    candidate: Sequence[str],
    goal: str | None = None,
    stats: EvalStats | None = None,
    circuit: Circuit | None = None,
) -> bool:
    """Decide ``goal(candidate)`` with a monotone circuit; pass ``circuit`` to share gates across calls."""
    started = time.perf_counter()
    circuit = circuit or Circuit(program, abox)
    goal = goal or program.goal
    candidate = tuple(candidate)
    _check_candidate(program, goal, candidate)
    result = circuit.decide((goal, candidate))
    if stats is not None:
        stats.gates = circuit.gate_count
        stats.depth = max(stats.depth, circuit.level.get((goal, candidate), 0))
        stats.runtime_ms += (time.perf_counter() - started) * 1000
    return result


def candidates(abox: ABox, arity: int) -> Iterable[tuple[str, ...]]:
    return product(sorted(abox.individuals), repeat=arity)


def all_answers(
    program: Program, abox: ABox, engine: str = "seminaive", stats: EvalStats | None = None
) -> list[tuple[str, ...]]:
    """Answer set via any engine; candidate-based engines sweep ind(A)^k."""
    if engine == "seminaive":
        started = time.perf_counter()
        out = eval_seminaive(program, abox)
        if stats is not None:
            stats.runtime_ms += (time.perf_counter() - started) * 1000
        return out
    if engine == "linear":
        search = LinearSearch(program, abox)
        return [c for c in candidates(abox, program.goal_arity) if search.decide(c, stats=stats)]
    if engine == "circuit":
        circuit = Circuit(program, abox)
        return [
            c
            for c in candidates(abox, program.goal_arity)
            if eval_circuit(program, abox, c, stats=stats, circuit=circuit)
        ]
    raise ValueError(f"unknown engine {engine!r}")
