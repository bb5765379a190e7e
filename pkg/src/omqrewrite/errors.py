"""Exception hierarchy shared by every module.

The command-line front end maps the three top-level families onto exit
codes: parse errors (2), precondition violations (3) and semantic errors
such as inconsistent input (4).
"""

from __future__ import annotations


class OMQError(Exception):
    """Base class for all errors raised by the toolkit."""


class ParseError(OMQError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class PreconditionError(OMQError):
    """An operation was called on input outside its domain."""

    kind = "PreconditionViolation"

    def __init__(self, message: str = ""):
        super().__init__(f"{self.kind}: {message}" if message else self.kind)


class InfiniteDepth(PreconditionError):
    kind = "InfiniteDepth"


class NotTreeShaped(PreconditionError):
    kind = "NotTreeShaped"


class Disconnected(PreconditionError):
    kind = "Disconnected"


class NotLinear(PreconditionError):
    kind = "NotLinear"


class NotSkinny(PreconditionError):
    kind = "NotSkinny"


class NotOrdered(PreconditionError):
    kind = "NotOrdered"


class NotBoolean(PreconditionError):
    kind = "NotBoolean"


class ArityMismatch(PreconditionError):
    kind = "ArityMismatch"


class OutOfRange(PreconditionError):
    kind = "OutOfRange"


class NameCollision(PreconditionError):
    kind = "NameCollision"


class InvalidUserDecomposition(PreconditionError):
    kind = "InvalidUserDecomposition"


class RecursionDetected(PreconditionError):
    kind = "RecursionDetected"

    def __init__(self, cycle: list[str]):
        self.cycle = cycle
        super().__init__(" -> ".join(cycle))


class UnsafeHead(PreconditionError):
    kind = "UnsafeHead"


class OrderedViolation(PreconditionError):
    kind = "OrderedViolation"


class InconsistentInput(OMQError):
    def __init__(self, message: str = ""):
        super().__init__("InconsistentInput" + (f": {message}" if message else ""))


class NoSplitter(RuntimeError):
    """Internal invariant violation: no node satisfies the splitting bounds."""
