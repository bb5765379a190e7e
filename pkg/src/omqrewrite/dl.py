"""OWL 2 QL syntax: roles, basic concepts, TBoxes, ABoxes and conjunctive queries.

The TBox keeps its subsumption closures precomputed so that every later
stage (chase, rewriters, lifting) can ask ``subsumes_*`` questions in
constant time.  Subsumption is the positive syntactic closure: stated
inclusions, reflexivity, transitivity and the lift ``R <= S`` implies
``ex R <= ex S``.  Disjointness axioms never feed into it.
"""

from __future__ import annotations

import math
import re
from collections import defaultdict, deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Union

from .errors import InfiniteDepth, NameCollision, ParseError

NAME_RE = re.compile(r"[A-Za-z0-9_.]+")
OMEGA = math.inf
RESERVED_PREFIXES = ("@ex_", "@exinv_")


# ---------------------------------------------------------------- terms

@dataclass(frozen=True, order=True)
class Role:
    name: str
    inverse: bool = False

    @property
    def inv(self) -> Role:
        return Role(self.name, not self.inverse)

    def __str__(self) -> str:
        return self.name + ("-" if self.inverse else "")

    @staticmethod
    def parse(token: str) -> Role:
        if token.endswith("-"):
            return Role(token[:-1], True)
        return Role(token)


@dataclass(frozen=True, order=True)
class Concept:
    """An atomic concept name."""

    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, order=True)
class Exists:
    """The basic concept ``ex R``."""

    role: Role

    def __str__(self) -> str:
        return f"ex {self.role}"


BasicConcept = Union[Concept, Exists]


def concept_key(b: BasicConcept) -> tuple:
    if isinstance(b, Concept):
        return (0, b.name, False)
    return (1, b.role.name, b.role.inverse)


def exists_name(role: Role) -> str:
    """Reserved concept name standing for ``ex role`` in normal form."""
    return ("@exinv_" if role.inverse else "@ex_") + role.name


def is_reserved(name: str) -> bool:
    return name.startswith(RESERVED_PREFIXES)


@dataclass(frozen=True, order=True)
class Const:
    """A constant term inside an NDL program."""

    value: str

    def __str__(self) -> str:
        return f'"{self.value}"'


Term = Union[str, Const]


@dataclass(frozen=True, order=True)
class Atom:
    pred: str
    args: tuple[Term, ...]

    def __str__(self) -> str:
        if self.pred == "=":
            return f"{_term_str(self.args[0])} = {_term_str(self.args[1])}"
        return f"{self.pred}({','.join(_term_str(a) for a in self.args)})"

    @property
    def variables(self) -> tuple[str, ...]:
        out: list[str] = []
        for a in self.args:
            if isinstance(a, str) and a not in out:
                out.append(a)
        return tuple(out)


def _term_str(t: Term) -> str:
    return str(t)


# ---------------------------------------------------------------- closures

def _reflexive_transitive(nodes: Iterable, edges: Iterable[tuple]) -> dict:
    adj: dict = defaultdict(set)
    for a, b in edges:
        adj[a].add(b)
    out = {}
    for n in nodes:
        seen = {n}
        stack = [n]
        while stack:
            cur = stack.pop()
            for nxt in adj[cur]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        out[n] = frozenset(seen)
    return out


def _invert(sup: dict) -> dict:
    sub: dict = defaultdict(set)
    for a, ups in sup.items():
        for b in ups:
            sub[b].add(a)
    return {k: frozenset(v) for k, v in sub.items()}


class TBox:
    """An OWL 2 QL TBox with eagerly computed subsumption closures.

    Role inclusions are stored closed under inversion.  ``generating_roles``
    are the roles ``R`` such that some stated (non-normalization) axiom has
    ``ex R`` on its right-hand side; only those roles create anonymous
    elements in the canonical model.
    """

    def __init__(
        self,
        concept_inclusions: Iterable[tuple[BasicConcept, BasicConcept]] = (),
        role_inclusions: Iterable[tuple[Role, Role]] = (),
        concept_disjointness: Iterable[tuple[BasicConcept, BasicConcept]] = (),
        role_disjointness: Iterable[tuple[Role, Role]] = (),
        normalized: bool = False,
    ):
        ris = set()
        for r1, r2 in role_inclusions:
            ris.add((r1, r2))
            ris.add((r1.inv, r2.inv))
        rds = set()
        for r1, r2 in role_disjointness:
            rds.add((r1, r2))
            rds.add((r1.inv, r2.inv))
        self.concept_inclusions = frozenset(concept_inclusions)
        self.role_inclusions = frozenset(ris)
        self.concept_disjointness = frozenset(concept_disjointness)
        self.role_disjointness = frozenset(rds)
        self.normalized = normalized

        names: set[str] = set()
        role_names: set[str] = set()
        for pair in self.concept_inclusions | self.concept_disjointness:
            for b in pair:
                if isinstance(b, Concept):
                    names.add(b.name)
                else:
                    role_names.add(b.role.name)
        for pair in self.role_inclusions | self.role_disjointness:
            for r in pair:
                role_names.add(r.name)
        self.concept_names = frozenset(names)
        self.role_names = frozenset(role_names)
        self.roles = frozenset(
            Role(n, inv) for n in role_names for inv in (False, True)
        )
        self.generating_roles = frozenset(
            rhs.role
            for lhs, rhs in self.concept_inclusions
            if isinstance(rhs, Exists)
            and not (isinstance(lhs, Concept) and is_reserved(lhs.name))
        )

        self._role_sup = _reflexive_transitive(self.roles, self.role_inclusions)
        self._role_sub = _invert(self._role_sup)
        nodes: set[BasicConcept] = {Concept(n) for n in names}
        nodes |= {Exists(r) for r in self.roles}
        edges = set(self.concept_inclusions)
        for r in self.roles:
            for s in self._role_sup[r]:
                edges.add((Exists(r), Exists(s)))
        self._con_sup = _reflexive_transitive(nodes, edges)
        self._con_sub = _invert(self._con_sup)

    # -- subsumption ---------------------------------------------------
    def subsumes_role(self, r1: Role, r2: Role) -> bool:
        """True iff ``r1 <=_T r2``."""
        return r1 == r2 or r2 in self._role_sup.get(r1, ())

    def subsumes_concept(self, b1: BasicConcept, b2: BasicConcept) -> bool:
        """True iff ``b1 <=_T b2``."""
        return b1 == b2 or b2 in self._con_sup.get(b1, ())

    def role_supers(self, r: Role) -> frozenset[Role]:
        return self._role_sup.get(r, frozenset({r}))

    def role_subs(self, r: Role) -> frozenset[Role]:
        return self._role_sub.get(r, frozenset({r}))

    def concept_supers(self, b: BasicConcept) -> frozenset[BasicConcept]:
        return self._con_sup.get(b, frozenset({b}))

    def concept_subs(self, b: BasicConcept) -> frozenset[BasicConcept]:
        return self._con_sub.get(b, frozenset({b}))

    def closure_pairs(self) -> Iterator[tuple]:
        for a, ups in self._role_sup.items():
            for b in ups:
                yield a, b
        for a, ups in self._con_sup.items():
            for b in ups:
                yield a, b

    # -- words ---------------------------------------------------------
    def word_successors(self, r: Role) -> tuple[Role, ...]:
        """Roles that may follow ``r`` in a word of the canonical model."""
        return self._word_graph.get(r, ())

    @cached_property
    def _word_graph(self) -> dict[Role, tuple[Role, ...]]:
        gen = sorted(self.generating_roles)
        graph = {}
        for r in gen:
            graph[r] = tuple(
                s
                for s in gen
                if self.subsumes_concept(Exists(r.inv), Exists(s))
                and not self.subsumes_role(r.inv, s)
            )
        return graph

    @cached_property
    def depth(self) -> float:
        """Maximal word length, or ``OMEGA`` when the word graph has a cycle."""
        graph = self._word_graph
        longest: dict[Role, int] = {}
        state: dict[Role, int] = {}  # 1 = on stack, 2 = done

        def visit(r: Role) -> bool:
            state[r] = 1
            best = 0
            for s in graph[r]:
                st = state.get(s)
                if st == 1:
                    return False
                if st is None and not visit(s):
                    return False
                best = max(best, longest[s])
            state[r] = 2
            longest[r] = best + 1
            return True

        for r in sorted(graph):
            if r not in state and not visit(r):
                return OMEGA
        return max(longest.values(), default=0)

    def words(self, max_len: int | None = None) -> list[tuple[Role, ...]]:
        """All words (empty word first) ordered by length then role order."""
        if max_len is None:
            if self.depth == OMEGA:
                raise InfiniteDepth("the TBox has infinitely many words")
            max_len = int(self.depth)
        out: list[tuple[Role, ...]] = [()]
        frontier: list[tuple[Role, ...]] = [(r,) for r in sorted(self.generating_roles)]
        length = 1
        while frontier and length <= max_len:
            out.extend(frontier)
            frontier = [w + (s,) for w in frontier for s in self.word_successors(w[-1])]
            length += 1
        return out

    # -- misc ----------------------------------------------------------
    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TBox):
            return NotImplemented
        return (
            self.concept_inclusions == other.concept_inclusions
            and self.role_inclusions == other.role_inclusions
            and self.concept_disjointness == other.concept_disjointness
            and self.role_disjointness == other.role_disjointness
            and self.normalized == other.normalized
        )

    def __hash__(self) -> int:
        return hash((self.concept_inclusions, self.role_inclusions))

    def __repr__(self) -> str:
        return (
            f"TBox({len(self.concept_inclusions)} concept inclusions, "
            f"{len(self.role_inclusions)} role inclusions, normalized={self.normalized})"
        )


def normalize(tbox: TBox) -> TBox:
    """Add ``A_R == ex R`` for every role of the TBox (idempotent)."""
    if tbox.normalized:
        return tbox
    for n in tbox.concept_names:
        if is_reserved(n):
            raise NameCollision(f"concept name {n!r} uses a reserved prefix")
    cis = set(tbox.concept_inclusions)
    for r in tbox.roles:
        a = Concept(exists_name(r))
        cis.add((a, Exists(r)))
        cis.add((Exists(r), a))
    return TBox(
        cis,
        tbox.role_inclusions,
        tbox.concept_disjointness,
        tbox.role_disjointness,
        normalized=True,
    )


def subsumes_concept(tbox: TBox, b1: BasicConcept, b2: BasicConcept) -> bool:
    return tbox.subsumes_concept(b1, b2)


def subsumes_role(tbox: TBox, r1: Role, r2: Role) -> bool:
    return tbox.subsumes_role(r1, r2)


def tbox_depth(tbox: TBox, cutoff: int = 64) -> float:
    """Depth of the TBox: an integer, or ``OMEGA``.

    Computed by cycle detection on the word graph; ``cutoff`` is accepted
    for interface compatibility and never consulted.
    """
    del cutoff
    return tbox.depth


# ---------------------------------------------------------------- ABox

class ABox:
    """A finite set of ground facts ``A(a)`` and ``P(a,b)``."""

    def __init__(
        self,
        concept_facts: Iterable[tuple[str, str]] = (),
        role_facts: Iterable[tuple[str, str, str]] = (),
    ):
        self.concept_facts = frozenset(concept_facts)
        self.role_facts = frozenset(role_facts)
        rel: dict[str, set[tuple[str, ...]]] = defaultdict(set)
        inds: set[str] = set()
        for a, i in self.concept_facts:
            rel[a].add((i,))
            inds.add(i)
        for p, i, j in self.role_facts:
            rel[p].add((i, j))
            inds.update((i, j))
        for name, rows in rel.items():
            if len({len(r) for r in rows}) > 1:
                raise ValueError(f"predicate {name!r} is used with two arities")
        self.relations: dict[str, frozenset[tuple[str, ...]]] = {
            k: frozenset(v) for k, v in rel.items()
        }
        self.individuals = frozenset(inds)

    def has_concept(self, name: str, a: str) -> bool:
        return (a,) in self.relations.get(name, ())

    def has_role(self, role: Role, a: str, b: str) -> bool:
        pair = (b, a) if role.inverse else (a, b)
        return pair in self.relations.get(role.name, ())

    def role_pairs(self, role: Role) -> Iterator[tuple[str, str]]:
        for a, b in self.relations.get(role.name, ()):
            yield (b, a) if role.inverse else (a, b)

    def union(self, other: ABox) -> ABox:
        return ABox(self.concept_facts | other.concept_facts, self.role_facts | other.role_facts)

    def __len__(self) -> int:
        return len(self.concept_facts) + len(self.role_facts)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ABox):
            return NotImplemented
        return self.concept_facts == other.concept_facts and self.role_facts == other.role_facts

    def __hash__(self) -> int:
        return hash((self.concept_facts, self.role_facts))

    def __repr__(self) -> str:
        return f"ABox({len(self.individuals)} individuals, {len(self)} facts)"


def h_complete(tbox: TBox, abox: ABox) -> ABox:
    """Close the ABox under role and concept subsumption on its individuals."""
    roles = set()
    for p, a, b in abox.role_facts:
        for s in tbox.role_supers(Role(p)):
            roles.add((s.name, b, a) if s.inverse else (s.name, a, b))
    holds: dict[str, set[BasicConcept]] = defaultdict(set)
    for c, a in abox.concept_facts:
        holds[a].add(Concept(c))
    for p, a, b in roles:
        holds[a].add(Exists(Role(p)))
        holds[b].add(Exists(Role(p, True)))
    concepts = set(abox.concept_facts)
    for a, bs in holds.items():
        for b in bs:
            for sup in tbox.concept_supers(b):
                if isinstance(sup, Concept):
                    concepts.add((sup.name, a))
    return ABox(concepts, roles)


# ---------------------------------------------------------------- CQ

class CQ:
    """A conjunctive query: an ordered atom list plus answer variables."""

    def __init__(self, atoms: Iterable[Atom], answer_vars: Iterable[str] = (), name: str = "q"):
        seen: list[Atom] = []
        for a in atoms:
            if a.pred == "=" or len(a.args) not in (1, 2):
                raise ValueError(f"unsupported query atom {a}")
            if any(not isinstance(t, str) for t in a.args):
                raise ValueError("queries may not contain constants")
            if a not in seen:
                seen.append(a)
        self.atoms: tuple[Atom, ...] = tuple(seen)
        self.answer_vars: tuple[str, ...] = tuple(answer_vars)
        self.name = name
        order: list[str] = []
        for a in self.atoms:
            for v in a.args:
                if v not in order:
                    order.append(v)
        self.variables: tuple[str, ...] = tuple(order)
        missing = [x for x in self.answer_vars if x not in order]
        if missing:
            raise ValueError(f"answer variables {missing} do not occur in the body")

    @property
    def existential_vars(self) -> tuple[str, ...]:
        return tuple(v for v in self.variables if v not in self.answer_vars)

    @property
    def is_boolean(self) -> bool:
        return not self.answer_vars

    @cached_property
    def gaifman(self) -> dict[str, frozenset[str]]:
        adj: dict[str, set[str]] = {v: set() for v in self.variables}
        for a in self.atoms:
            if len(a.args) == 2 and a.args[0] != a.args[1]:
                u, v = a.args
                adj[u].add(v)
                adj[v].add(u)
        return {k: frozenset(v) for k, v in adj.items()}

    def components(self) -> list[tuple[str, ...]]:
        """Connected components of the Gaifman graph in first-occurrence order."""
        seen: set[str] = set()
        comps = []
        for v in self.variables:
            if v in seen:
                continue
            comp = []
            queue = deque([v])
            seen.add(v)
            while queue:
                cur = queue.popleft()
                comp.append(cur)
                for n in self.gaifman[cur]:
                    if n not in seen:
                        seen.add(n)
                        queue.append(n)
            comps.append(tuple(x for x in self.variables if x in set(comp)))
        return comps

    def is_connected(self) -> bool:
        return len(self.components()) <= 1

    def is_tree_shaped(self) -> bool:
        edges = sum(len(n) for n in self.gaifman.values()) // 2
        return self.is_connected() and edges == max(len(self.variables) - 1, 0)

    def restrict(self, variables: Iterable[str]) -> CQ:
        vs = set(variables)
        return CQ(
            [a for a in self.atoms if set(a.args) <= vs],
            [x for x in self.answer_vars if x in vs],
            self.name,
        )

    def __str__(self) -> str:
        body = ", ".join(str(a) for a in self.atoms)
        return f"{self.name}({','.join(self.answer_vars)}) :- {body}"

    def __repr__(self) -> str:
        return f"CQ({self})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CQ):
            return NotImplemented
        return set(self.atoms) == set(other.atoms) and self.answer_vars == other.answer_vars

    def __hash__(self) -> int:
        return hash((frozenset(self.atoms), self.answer_vars))


# ---------------------------------------------------------------- parsing

def _strip_comment(line: str) -> str:
    i = line.find("#")
    return line if i < 0 else line[:i]


def _tokens(line: str) -> list[tuple[str, int]]:
    return [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", line)]


def _parse_role_token(tok: str, lineno: int, col: int) -> Role:
    base = tok[:-1] if tok.endswith("-") else tok
    if not NAME_RE.fullmatch(base):
        raise ParseError(f"invalid role {tok!r}", lineno, col)
    return Role.parse(tok)


def _parse_concept(toks: list[tuple[str, int]], i: int, lineno: int) -> tuple[BasicConcept, int]:
    if i >= len(toks):
        col = toks[-1][1] + len(toks[-1][0]) if toks else 1
        raise ParseError("expected a concept", lineno, col)
    tok, col = toks[i]
    if tok == "ex":
        if i + 1 >= len(toks):
            raise ParseError("expected a role after 'ex'", lineno, col)
        return Exists(_parse_role_token(toks[i + 1][0], lineno, toks[i + 1][1])), i + 2
    if not NAME_RE.fullmatch(tok):
        raise ParseError(f"invalid concept name {tok!r}", lineno, col)
    return Concept(tok), i + 1


def parse_tbox(text: str) -> TBox:
    """Parse the line-oriented TBox syntax (``sub``, ``rsub``, ``disj``, ``rdisj``)."""
    cis, ris, cds, rds = [], [], [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        toks = _tokens(_strip_comment(raw))
        if not toks:
            continue
        if len(toks) == 3 and toks[1][0] in ("rsub", "rdisj"):
            r1 = _parse_role_token(toks[0][0], lineno, toks[0][1])
            r2 = _parse_role_token(toks[2][0], lineno, toks[2][1])
            (ris if toks[1][0] == "rsub" else rds).append((r1, r2))
            continue
        lhs, i = _parse_concept(toks, 0, lineno)
        if i >= len(toks) or toks[i][0] not in ("sub", "disj"):
            col = toks[i][1] if i < len(toks) else len(raw) + 1
            raise ParseError("expected 'sub', 'disj', 'rsub' or 'rdisj'", lineno, col)
        kind = toks[i][0]
        rhs, j = _parse_concept(toks, i + 1, lineno)
        if j != len(toks):
            raise ParseError(f"unexpected token {toks[j][0]!r}", lineno, toks[j][1])
        (cis if kind == "sub" else cds).append((lhs, rhs))
    return TBox(cis, ris, cds, rds)


def format_tbox(tbox: TBox) -> str:
    def c(b: BasicConcept) -> str:
        return str(b)

    lines = []
    for a, b in sorted(tbox.concept_inclusions, key=lambda p: (concept_key(p[0]), concept_key(p[1]))):
        lines.append(f"{c(a)} sub {c(b)}")
    for a, b in sorted(tbox.role_inclusions):
        lines.append(f"{a} rsub {b}")
    for a, b in sorted(tbox.concept_disjointness, key=lambda p: (concept_key(p[0]), concept_key(p[1]))):
        lines.append(f"{c(a)} disj {c(b)}")
    for a, b in sorted(tbox.role_disjointness):
        lines.append(f"{a} rdisj {b}")
    return "\n".join(lines) + ("\n" if lines else "")


_FACT_RE = re.compile(r"^\s*([A-Za-z0-9_.@]+)\s*\(\s*([^()]*?)\s*\)\s*\.?\s*$")


def parse_abox(text: str) -> ABox:
    """Parse one fact per line: ``A(a)`` or ``P(a,b)``; ``#`` starts a comment."""
    cfs, rfs = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        m = _FACT_RE.match(line)
        if not m:
            raise ParseError(f"malformed fact {line.strip()!r}", lineno, 1)
        args = [a.strip() for a in m.group(2).split(",")]
        for a in args:
            if not NAME_RE.fullmatch(a):
                raise ParseError(f"invalid individual {a!r}", lineno, line.find(a) + 1)
        if len(args) == 1:
            cfs.append((m.group(1), args[0]))
        elif len(args) == 2:
            rfs.append((m.group(1), args[0], args[1]))
        else:
            raise ParseError("facts must be unary or binary", lineno, 1)
    try:
        return ABox(cfs, rfs)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def format_abox(abox: ABox) -> str:
    lines = [f"{c}({a})" for c, a in sorted(abox.concept_facts)]
    lines += [f"{p}({a},{b})" for p, a, b in sorted(abox.role_facts)]
    return "\n".join(lines) + ("\n" if lines else "")


_ATOM_RE = re.compile(r"\s*([A-Za-z0-9_.@]+)\s*\(([^()]*)\)\s*")


def parse_atoms(body: str, lineno: int = 1, offset: int = 0) -> list[Atom]:
    atoms = []
    pos = 0
    body_stripped = body.rstrip().rstrip(".")
    while pos < len(body_stripped):
        m = _ATOM_RE.match(body_stripped, pos)
        if not m:
            raise ParseError("expected an atom", lineno, offset + pos + 1)
        args = tuple(a.strip() for a in m.group(2).split(",")) if m.group(2).strip() else ()
        for a in args:
            if not NAME_RE.fullmatch(a):
                raise ParseError(f"invalid term {a!r}", lineno, offset + m.start(2) + 1)
        atoms.append(Atom(m.group(1), args))
        pos = m.end()
        if pos < len(body_stripped):
            if body_stripped[pos] != ",":
                raise ParseError("expected ','", lineno, offset + pos + 1)
            pos += 1
    return atoms


def parse_cq(text: str) -> CQ:
    """Parse ``q(x1,...,xk) :- atom, ..., atom`` (a single logical line)."""
    lines = [(i, _strip_comment(l)) for i, l in enumerate(text.splitlines(), start=1)]
    lines = [(i, l) for i, l in lines if l.strip()]
    if len(lines) != 1:
        raise ParseError("a query file must contain exactly one query line", lines[1][0] if len(lines) > 1 else 1)
    lineno, line = lines[0]
    if ":-" not in line:
        raise ParseError("missing ':-'", lineno, 1)
    head, body = line.split(":-", 1)
    m = re.fullmatch(r"\s*([A-Za-z0-9_.]+)\s*\(([^()]*)\)\s*", head)
    if not m:
        raise ParseError("malformed query head", lineno, 1)
    avars = tuple(v.strip() for v in m.group(2).split(",")) if m.group(2).strip() else ()
    for v in avars:
        if not NAME_RE.fullmatch(v):
            raise ParseError(f"invalid answer variable {v!r}", lineno, 1)
    atoms = parse_atoms(body, lineno, len(head) + 2)
    for a in atoms:
        if len(a.args) not in (1, 2):
            raise ParseError(f"atom {a} must be unary or binary", lineno, 1)
    try:
        return CQ(atoms, avars, m.group(1))
    except ValueError as exc:
        raise ParseError(str(exc), lineno, 1) from exc
