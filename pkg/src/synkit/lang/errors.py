"""Diagnostics shared by the frontend passes."""

from __future__ import annotations

from .ast import NO_POS, Pos


class LangError(Exception):
    """Parse or analysis failure with a source position.

    kind is a stable machine-readable tag (syntax, type, undefined,
    multiple-definition, causality, ...); expected lists tokens the
    parser would have accepted at the failure point.
    """

    def __init__(self, kind: str, message: str, pos: Pos = NO_POS,
                 expected: tuple[str, ...] = ()):
        self.kind = kind
        self.message = message
        self.pos = pos
        self.expected = expected
        where = f"{pos.line}:{pos.col}: " if pos != NO_POS else ""
        extra = f" (expected {', '.join(expected)})" if expected else ""
        super().__init__(f"{where}{kind}: {message}{extra}")
