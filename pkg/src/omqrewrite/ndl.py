"""Nonrecursive datalog programs: representation, analysis and transformations.

A program is a list of clauses plus a goal predicate.  Ordered programs
also declare, per IDB predicate, the names of the answer variables that
occupy its trailing argument positions (its parameters).  Equality is
the built-in EDB predicate ``=``.
"""

from __future__ import annotations

import heapq
import math
import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .dl import Atom, Concept, Const, Exists, Role, TBox, Term
from .errors import (
    NotLinear,
    OrderedViolation,
    ParseError,
    RecursionDetected,
    UnsafeHead,
)

EQ = "="


@dataclass(frozen=True)
class Clause:
    head: Atom
    body: tuple[Atom, ...]

    def __str__(self) -> str:
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- {', '.join(str(a) for a in self.body)}."

    @property
    def variables(self) -> tuple[str, ...]:
        out: list[str] = []
        for a in (self.head, *self.body):
            for t in a.args:
                if isinstance(t, str) and t not in out:
                    out.append(t)
        return tuple(out)


def guarded_clause(head: Atom, body: Iterable[Atom]) -> Clause:
    """Clause with ``v = v`` added for head variables the body leaves unbound."""
    body = list(body)
    present = {t for a in body for t in a.variables}
    body += [Atom(EQ, (v, v)) for v in head.variables if v not in present]
    return Clause(head, tuple(body))


class Program:
    """An NDL program with a designated goal predicate."""

    def __init__(
        self,
        clauses: Iterable[Clause],
        goal: str,
        goal_arity: int,
        params: Mapping[str, tuple[str, ...]] | None = None,
    ):
        self.clauses: tuple[Clause, ...] = tuple(clauses)
        self.goal = goal
        self.goal_arity = goal_arity
        self.params: dict[str, tuple[str, ...]] | None = (
            None if params is None else {k: tuple(v) for k, v in params.items()}
        )
        self.idb: frozenset[str] = frozenset(c.head.pred for c in self.clauses)
        arities: dict[str, int] = {}
        for c in self.clauses:
            for a in (c.head, *c.body):
                arities.setdefault(a.pred, len(a.args))
        arities.setdefault(goal, goal_arity)
        self.arities = arities

    @property
    def edb(self) -> frozenset[str]:
        return frozenset(p for p in self.arities if p not in self.idb)

    @property
    def ordered(self) -> bool:
        return self.params is not None

    def param_names(self, pred: str) -> tuple[str, ...]:
        if self.params is None:
            return ()
        return self.params.get(pred, ())

    def clauses_for(self, pred: str) -> list[Clause]:
        return [c for c in self.clauses if c.head.pred == pred]

    def dependence_graph(self) -> dict[str, set[str]]:
        g: dict[str, set[str]] = defaultdict(set)
        for c in self.clauses:
            g[c.head.pred].update(a.pred for a in c.body)
        return g

    def __len__(self) -> int:
        return len(self.clauses)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Program):
            return NotImplemented
        return (
            self.clauses == other.clauses
            and self.goal == other.goal
            and self.goal_arity == other.goal_arity
            and self.params == other.params
        )

    def __repr__(self) -> str:
        return f"Program({len(self.clauses)} clauses, goal={self.goal}/{self.goal_arity})"


# ---------------------------------------------------------------- analysis

@dataclass
class ValidationReport:
    nonrecursive: bool
    ordered: bool
    linear: bool
    skinny: bool
    depth: int
    width: int
    arity: int
    strata: list[list[str]] = field(default_factory=list)


def topological_order(program: Program) -> list[str]:
    """IDB predicates, dependencies first; raises on recursion."""
    graph = program.dependence_graph()
    state: dict[str, int] = {}
    order: list[str] = []
    stack_path: list[str] = []

    def visit(p: str) -> None:
        state[p] = 1
        stack_path.append(p)
        for q in sorted(graph.get(p, ())):
            if q not in program.idb:
                continue
            if state.get(q) == 1:
                i = stack_path.index(q)
                raise RecursionDetected(stack_path[i:] + [q])
            if q not in state:
                visit(q)
        stack_path.pop()
        state[p] = 2
        order.append(p)

    for p in sorted(program.idb):
        if p not in state:
            visit(p)
    return order


def _head_param_vars(program: Program, clause: Clause) -> dict[str, Term]:
    names = program.param_names(clause.head.pred)
    if not names:
        return {}
    args = clause.head.args
    return dict(zip(names, args[len(args) - len(names):]))


def _check_ordered(program: Program) -> None:
    assert program.params is not None
    goal_params = program.param_names(program.goal)
    if len(goal_params) != program.goal_arity:
        raise OrderedViolation(f"goal {program.goal} must have all {program.goal_arity} positions as parameters")
    for c in program.clauses:
        for a in (c.head, *c.body):
            names = program.param_names(a.pred)
            if len(names) > len(a.args):
                raise OrderedViolation(f"{a.pred} declares more parameters than its arity")
        head_params = _head_param_vars(program, c)
        for v in head_params.values():
            if not isinstance(v, str):
                raise OrderedViolation(f"parameter position holds a constant in {c}")
        for a in c.body:
            if a.pred not in program.idb:
                continue
            names = program.param_names(a.pred)
            tail = a.args[len(a.args) - len(names):] if names else ()
            for name, var in zip(names, tail):
                if name not in head_params or head_params[name] != var:
                    raise OrderedViolation(
                        f"parameter {name} of {a.pred} does not propagate to the head in {c}"
                    )


def validate(program: Program) -> ValidationReport:
    """Structural report; raises on recursion, unsafe heads or broken parameters."""
    for c in program.clauses:
        if c.head.pred == EQ:
            raise UnsafeHead(f"equality in head: {c}")
        body_vars = {t for a in c.body for t in a.args if isinstance(t, str)}
        missing = [t for t in c.head.args if isinstance(t, str) and t not in body_vars]
        if missing:
            raise UnsafeHead(f"head variables {missing} missing from the body of {c}")
        for a in c.body:
            if a.pred == EQ and len(a.args) != 2:
                raise UnsafeHead(f"equality atom with {len(a.args)} arguments")
    order = topological_order(program)
    if program.params is not None:
        _check_ordered(program)

    graph = program.dependence_graph()
    memo: dict[str, int] = {}

    def depth_of(p: str) -> int:
        if p not in program.idb:
            return 0
        if p not in memo:
            memo[p] = max((1 + depth_of(q) for q in graph.get(p, ())), default=0)
        return memo[p]

    depth = depth_of(program.goal) if program.goal in program.idb else 0
    width = 0
    for c in program.clauses:
        params = set(_head_param_vars(program, c).values())
        width = max(width, sum(1 for v in c.variables if v not in params))
    linear = all(sum(1 for a in c.body if a.pred in program.idb) <= 1 for c in program.clauses)
    skinny = all(len(c.body) <= 2 for c in program.clauses)
    level: dict[str, int] = {}
    for p in order:
        level[p] = max((level.get(q, 0) + 1 for q in graph.get(p, ()) if q in program.idb), default=1)
    strata: dict[int, list[str]] = defaultdict(list)
    for p in order:
        strata[level[p]].append(p)
    return ValidationReport(
        nonrecursive=True,
        ordered=program.params is not None,
        linear=linear,
        skinny=skinny,
        depth=depth,
        width=width,
        arity=max(program.arities.values(), default=0),
        strata=[strata[k] for k in sorted(strata)],
    )


def infer_weight_function(program: Program, goal: str | None = None) -> dict[str, int]:
    """Pointwise-least weight function: EDB predicates 0, IDB predicates at least 1."""
    del goal
    nu: dict[str, int] = {p: 0 for p in program.arities if p not in program.idb}
    by_head: dict[str, list[Clause]] = defaultdict(list)
    for c in program.clauses:
        by_head[c.head.pred].append(c)
    for p in topological_order(program):
        best = 1
        for c in by_head[p]:
            best = max(best, sum(nu.get(a.pred, 0) for a in c.body))
        nu[p] = best
    return nu


def is_weight_function(program: Program, nu: Mapping[str, int]) -> bool:
    for p in program.idb:
        if nu.get(p, 0) <= 0:
            return False
    for c in program.clauses:
        if nu.get(c.head.pred, 0) < sum(nu.get(a.pred, 0) for a in c.body):
            return False
    return True


# ---------------------------------------------------------------- transformations

def _ordered_args(
    variables: Iterable[str], head_params: Mapping[str, Term]
) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Split ``variables`` into (argument list, parameter names) for a fresh predicate."""
    vs = list(dict.fromkeys(variables))
    names: list[str] = []
    pvars: list[str] = []
    for name, var in head_params.items():
        if var in vs and var not in pvars:
            names.append(name)
            pvars.append(var)  # type: ignore[arg-type]
    plain = [v for v in vs if v not in pvars]
    return tuple(plain + pvars), tuple(names)


def to_skinny(program: Program, goal: str | None = None) -> Program:
    """Binarise long clause bodies into trees of fresh binary clauses.

    Body atoms are merged greedily, two at a time, always picking the two
    nodes whose sub-derivations are currently shallowest (ties go to the
    node created first).  A merged node is one level deeper than its
    deeper child, so each tree minimises the depth of its head.
    """
    validate(program)
    del goal
    clauses: list[Clause] = []
    params = dict(program.params) if program.params is not None else None
    by_head: dict[str, list[int]] = defaultdict(list)
    for ci, c in enumerate(program.clauses):
        by_head[c.head.pred].append(ci)
    depth: dict[str, int] = {}
    rebuilt: dict[int, list[Clause]] = {}
    for pred in topological_order(program):
        best = 0
        for ci in by_head[pred]:
            c = program.clauses[ci]
            if len(c.body) <= 2:
                rebuilt[ci] = [c]
                best = max(best, max((depth.get(a.pred, 0) + 1 for a in c.body), default=0))
                continue
            head_params = _head_param_vars(program, c)
            heap: list[tuple[int, int, Atom]] = []
            seq = 0
            for a in c.body:
                heapq.heappush(heap, (depth.get(a.pred, 0), seq, a))
                seq += 1
            produced: list[Clause] = []
            fresh = 0
            while len(heap) > 2:
                d1, _, a1 = heapq.heappop(heap)
                d2, _, a2 = heapq.heappop(heap)
                args, names = _ordered_args([*a1.variables, *a2.variables], head_params)
                name = f"@p{ci}_{fresh}"
                fresh += 1
                node = Atom(name, args)
                produced.append(Clause(node, (a1, a2)))
                if params is not None:
                    params[name] = names
                heapq.heappush(heap, (max(d1, d2) + 1, seq, node))
                seq += 1
            d1, _, a1 = heapq.heappop(heap)
            d2, _, a2 = heapq.heappop(heap)
            produced.append(Clause(c.head, (a1, a2)))
            rebuilt[ci] = produced
            best = max(best, max(d1, d2) + 1)
        depth[pred] = best
    for ci in range(len(program.clauses)):
        clauses.extend(rebuilt[ci])
    return Program(clauses, program.goal, program.goal_arity, params)


def _role_atom(role: Role, u: Term, v: Term) -> Atom:
    return Atom(role.name, (v, u)) if role.inverse else Atom(role.name, (u, v))


def lift_to_arbitrary(program: Program, goal: str | None, tbox: TBox) -> Program:
    """Rename every predicate ``S`` to ``S*`` and add bridging clauses from raw ABox predicates."""
    del goal

    def star(p: str) -> str:
        return p if p == EQ else p + "*"

    clauses = [
        Clause(
            Atom(star(c.head.pred), c.head.args),
            tuple(Atom(star(a.pred), a.args) for a in c.body),
        )
        for c in program.clauses
    ]
    for p in sorted(program.edb - {EQ}):
        arity = program.arities[p]
        if arity == 1:
            head = Atom(star(p), ("x",))
            subs = program_concept_subs(tbox, p)
            for b in subs:
                if isinstance(b, Concept):
                    clauses.append(Clause(head, (Atom(b.name, ("x",)),)))
            for b in subs:
                if isinstance(b, Exists):
                    clauses.append(Clause(head, (_role_atom(b.role, "x", "y"),)))
        elif arity == 2:
            head = Atom(star(p), ("x", "y"))
            for r in sorted(tbox.role_subs(Role(p))):
                clauses.append(Clause(head, (_role_atom(r, "x", "y"),)))
        else:
            args = tuple(f"x{i}" for i in range(arity))
            clauses.append(Clause(Atom(star(p), args), (Atom(p, args),)))
    params = None
    if program.params is not None:
        params = {star(k): v for k, v in program.params.items()}
    return Program(clauses, star(program.goal), program.goal_arity, params)


def program_concept_subs(tbox: TBox, name: str) -> list:
    """Basic concepts below ``name`` in a deterministic order."""
    from .dl import concept_key

    return sorted(tbox.concept_subs(Concept(name)), key=concept_key)


def _upsilon(tbox: TBox, atom: Atom, fresh: str) -> list[Atom]:
    if len(atom.args) == 1:
        (u,) = atom.args
        out: list[Atom] = []
        subs = program_concept_subs(tbox, atom.pred)
        out += [Atom(b.name, (u,)) for b in subs if isinstance(b, Concept)]
        out += [_role_atom(b.role, u, fresh) for b in subs if isinstance(b, Exists)]
        return out
    if len(atom.args) == 2:
        u, v = atom.args
        return [_role_atom(r, u, v) for r in sorted(tbox.role_subs(Role(atom.pred)))]
    return [atom]


def lift_linear(program: Program, goal: str | None, tbox: TBox) -> Program:
    """Linearity-preserving lift to arbitrary ABoxes.

    Each clause ``H <- I, EQ, E1..En`` becomes a chain that checks one
    EDB atom at a time, trying every atom that implies it under the TBox.
    Chain predicates carry only the variables still needed downstream.
    """
    del goal
    report = validate(program)
    if not report.linear:
        raise NotLinear("lift_linear needs at most one IDB atom per body")
    params = dict(program.params) if program.params is not None else None
    out: list[Clause] = []
    for ci, c in enumerate(program.clauses):
        idb = [a for a in c.body if a.pred in program.idb]
        eqs = [a for a in c.body if a.pred == EQ]
        edb = [a for a in c.body if a.pred not in program.idb and a.pred != EQ]
        head_params = _head_param_vars(program, c)
        taken = set(c.variables)

        def needed_after(i: int) -> set[str]:
            vs = set(c.head.variables)
            for a in eqs:
                vs.update(a.variables)
            for a in edb[i:]:
                vs.update(a.variables)
            return vs

        prev: Atom | None = None
        if idb:
            keep = [v for v in idb[0].variables if v in needed_after(0)]
            args, names = _ordered_args(keep, head_params)
            prev = Atom(f"@h{ci}_0", args)
            out.append(Clause(prev, (idb[0],)))
            if params is not None:
                params[prev.pred] = names
        for i, e in enumerate(edb):
            fresh = f"u{i}"
            while fresh in taken:
                fresh = "_" + fresh
            taken.add(fresh)
            have = list(prev.variables) if prev is not None else []
            keep = [v for v in [*have, *e.variables] if v in needed_after(i + 1)]
            args, names = _ordered_args(keep, head_params)
            nxt = Atom(f"@h{ci}_{i + 1}", args)
            if params is not None:
                params[nxt.pred] = names
            for alt in _upsilon(tbox, e, fresh):
                body = (prev, alt) if prev is not None else (alt,)
                out.append(Clause(nxt, body))
            prev = nxt
        body = ((prev,) if prev is not None else ()) + tuple(eqs)
        out.append(Clause(c.head, body))
    return Program(out, program.goal, program.goal_arity, params)


# ---------------------------------------------------------------- text format

def inline_equalities(program: Program) -> Program:
    """Eliminate ``u = v`` atoms between variables by unifying them."""
    clauses = []
    for c in program.clauses:
        parent: dict[str, str] = {}

        def find(v: str) -> str:
            while parent.get(v, v) != v:
                v = parent[v]
            return v

        rank = {v: i for i, v in enumerate(c.variables)}
        kept: list[Atom] = []
        for a in c.body:
            if a.pred == EQ and all(isinstance(t, str) for t in a.args):
                r1, r2 = find(a.args[0]), find(a.args[1])  # type: ignore[arg-type]
                if r1 != r2:
                    lo, hi = sorted((r1, r2), key=lambda v: rank[v])
                    parent[hi] = lo
            else:
                kept.append(a)

        def sub(a: Atom) -> Atom:
            return Atom(a.pred, tuple(find(t) if isinstance(t, str) else t for t in a.args))

        body = tuple(dict.fromkeys(sub(a) for a in kept))
        head = sub(c.head)
        if not body and head.args:
            # keep one equality so that the head stays safe
            body = (Atom(EQ, (head.args[0], head.args[0])),)
        clauses.append(Clause(head, body))
    return Program(clauses, program.goal, program.goal_arity, program.params)


def format_program(program: Program, eq: str = "explicit") -> str:
    """Render the program; ``eq='inline'`` unifies equal variables first."""
    if eq == "inline":
        program = inline_equalities(program)
    lines = [f"% goal: {program.goal}/{program.goal_arity}"]
    if program.params is not None:
        for pred in sorted(program.params):
            names = program.params[pred]
            if pred in program.idb or pred == program.goal:
                lines.append(f"% params: {pred} {' '.join(names)}".rstrip())
    lines += [str(c) for c in program.clauses]
    return "\n".join(lines) + "\n"


def _split_top(text: str) -> list[str]:
    parts, depth, cur = [], 0, []
    in_quote = False
    for ch in text:
        if ch == '"':
            in_quote = not in_quote
        if not in_quote:
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif ch == "," and depth == 0:
                parts.append("".join(cur))
                cur = []
                continue
        cur.append(ch)
    if "".join(cur).strip():
        parts.append("".join(cur))
    return parts


_TERM_RE = re.compile(r'"[^"]*"|[A-Za-z0-9_.@]+')


def _parse_term(tok: str, lineno: int) -> Term:
    tok = tok.strip()
    if not _TERM_RE.fullmatch(tok):
        raise ParseError(f"invalid term {tok!r}", lineno)
    if tok.startswith('"'):
        return Const(tok[1:-1])
    return tok


def _parse_program_atom(text: str, lineno: int) -> Atom:
    text = text.strip()
    if "(" not in text:
        if "=" not in text:
            raise ParseError(f"malformed atom {text!r}", lineno)
        left, right = text.split("=", 1)
        return Atom(EQ, (_parse_term(left, lineno), _parse_term(right, lineno)))
    i = text.index("(")
    if not text.endswith(")"):
        raise ParseError(f"malformed atom {text!r}", lineno)
    pred = text[:i].strip()
    if not pred or re.search(r"[\s(),]", pred):
        raise ParseError(f"invalid predicate name {pred!r}", lineno)
    inner = text[i + 1 : -1]
    args = tuple(_parse_term(t, lineno) for t in _split_top(inner)) if inner.strip() else ()
    return Atom(pred, args)


def parse_program(text: str) -> Program:
    goal: str | None = None
    goal_arity = 0
    params: dict[str, tuple[str, ...]] | None = None
    clauses: list[Clause] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("%"):
            m = re.match(r"%\s*goal:\s*(\S+)/(\d+)\s*$", line)
            if m:
                goal, goal_arity = m.group(1), int(m.group(2))
                continue
            m = re.match(r"%\s*params:\s*(\S+)((?:\s+\S+)*)\s*$", line)
            if m:
                params = params or {}
                params[m.group(1)] = tuple(m.group(2).split())
            continue
        if not line.endswith("."):
            raise ParseError("clause must end with '.'", lineno, len(raw))
        line = line[:-1]
        parts = re.split(r"\s:-\s|\s:-$|^:-\s", line, maxsplit=1)
        if ":-" in line and len(parts) == 1:
            parts = line.split(":-", 1)
        head = _parse_program_atom(parts[0], lineno)
        body = tuple(_parse_program_atom(p, lineno) for p in _split_top(parts[1])) if len(parts) > 1 else ()
        clauses.append(Clause(head, body))
    if goal is None:
        if not clauses:
            raise ParseError("empty program without a goal declaration")
        goal, goal_arity = clauses[0].head.pred, len(clauses[0].head.args)
    return Program(clauses, goal, goal_arity, params)


def log2_ceil(x: float) -> int:
    return math.ceil(math.log2(x)) if x > 1 else 0
