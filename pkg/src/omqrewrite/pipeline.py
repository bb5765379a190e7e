"""One entry point for the three rewriters plus the optional lifting and binarisation steps."""

from __future__ import annotations

from .dl import CQ, TBox, normalize
from .ndl import Program, lift_linear, lift_to_arbitrary, to_skinny
from .rewrite_slice import rewrite_slice
from .rewrite_td import TreeDecomposition, rewrite_td
from .rewrite_tw import rewrite_tw

METHODS = ("td", "slice", "tw")
ABOX_MODES = ("hcomplete", "arbitrary")


def rewrite(
    method: str,
    tbox: TBox,
    cq: CQ,
    abox_mode: str = "hcomplete",
    root: str | None = None,
    td: TreeDecomposition | None = None,
    skinny: bool = False,
    cleanup: str = "dead",
) -> Program:
    """Rewrite ``(tbox, cq)`` with the chosen method.

    With ``abox_mode='arbitrary'`` the program is lifted so that it can be
    evaluated over ABoxes that are not H-complete; the slice rewriting
    uses the linearity-preserving lift.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    if abox_mode not in ABOX_MODES:
        raise ValueError(f"unknown ABox mode {abox_mode!r}")
    if not tbox.normalized:
        tbox = normalize(tbox)
    if method == "td":
        program = rewrite_td(tbox, cq, td, cleanup=cleanup)
    elif method == "slice":
        program = rewrite_slice(tbox, cq, root)
    else:
        program = rewrite_tw(tbox, cq)
    if abox_mode == "arbitrary":
        if method == "slice":
            program = lift_linear(program, None, tbox)
        else:
            program = lift_to_arbitrary(program, None, tbox)
    if skinny:
        program = to_skinny(program)
    return program
