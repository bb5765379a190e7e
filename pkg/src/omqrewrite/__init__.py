"""Ontology-mediated query rewriting into nonrecursive datalog.

DL-Lite TBoxes, conjunctive queries and ABoxes live in :mod:`omqrewrite.dl`;
the chase-based reference semantics in :mod:`omqrewrite.chase`; programs,
transformations and engines in :mod:`omqrewrite.ndl` and
:mod:`omqrewrite.evaluate`; the three rewriters in ``rewrite_td``,
``rewrite_slice`` and ``rewrite_tw``.
"""

from .bench import example_ontology, example_query, linear_query
from .chase import certain_answers, is_consistent, tree_witnesses
from .dl import CQ, ABox, Atom, Role, TBox, h_complete, normalize, parse_abox, parse_cq, parse_tbox
from .errors import InconsistentInput, OMQError, ParseError, PreconditionError
from .evaluate import Circuit, EvalStats, LinearSearch, all_answers, eval_circuit, eval_linear, eval_seminaive
from .ndl import Clause, Program, format_program, lift_linear, lift_to_arbitrary, parse_program, to_skinny, validate
from .pipeline import rewrite
from .rewrite_slice import rewrite_slice
from .rewrite_td import rewrite_td, tree_decomposition
from .rewrite_tw import rewrite_tw

__version__ = "0.1.0"

__all__ = [
    "ABox", "Atom", "CQ", "Circuit", "Clause", "EvalStats", "InconsistentInput", "LinearSearch",
    "OMQError", "ParseError", "PreconditionError", "Program", "Role", "TBox", "all_answers",
    "certain_answers", "eval_circuit", "example_ontology", "example_query", "eval_linear", "eval_seminaive", "format_program",
    "h_complete", "is_consistent", "lift_linear", "lift_to_arbitrary", "linear_query", "normalize", "parse_abox",
    "parse_cq", "parse_program", "parse_tbox", "rewrite", "rewrite_slice", "rewrite_td",
    "rewrite_tw", "to_skinny", "tree_decomposition", "tree_witnesses", "validate",
]
