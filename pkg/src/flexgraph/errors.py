"""Error types shared across the stack.

Storage and retrieval errors mirror the retrieval interface's error enum;
compiler errors carry positions (Diagnostic) or offending aliases.
"""

from __future__ import annotations


class FlexgraphError(Exception):
    """Base class for all errors raised by this package."""


# --- schema ---------------------------------------------------------------

class SchemaError(FlexgraphError):
    """First schema invariant violation: kind is one of
    'duplicate_name', 'dangling_type', 'bad_primary_key', 'bad_property_dtype'."""

    def __init__(self, kind: str, offending_name: str):
        super().__init__(f"{kind}: {offending_name}")
        self.kind = kind
        self.offending_name = offending_name


# --- retrieval ------------------------------------------------------------

class UnsupportedCapability(FlexgraphError):
    pass


class UnknownType(FlexgraphError):
    pass


class UnknownProperty(FlexgraphError):
    pass


class UnknownVersion(FlexgraphError):
    pass


class IndexOutOfRange(FlexgraphError):
    pass


class InvalidVertex(FlexgraphError):
    pass


class NotFound(FlexgraphError):
    pass


# --- store construction / mutation -----------------------------------------

class DanglingEdge(FlexgraphError):
    def __init__(self, etype: str, missing_pk: object):
        super().__init__(f"edge type {etype!r} references unknown key {missing_pk!r}")
        self.etype = etype
        self.missing_pk = missing_pk


class DuplicatePk(FlexgraphError):
    def __init__(self, vtype: str, pk: object):
        super().__init__(f"duplicate primary key {pk!r} for vertex type {vtype!r}")
        self.vtype = vtype
        self.pk = pk


class UnknownVertexError(FlexgraphError):
    pass


class WriterBusy(FlexgraphError):
    pass


class HorizonTooNew(FlexgraphError):
    pass


# --- archive ----------------------------------------------------------------

class ArchiveIoError(FlexgraphError):
    pass


class NonEmptyDir(FlexgraphError):
    pass


class BadMagic(FlexgraphError):
    pass


class UnsupportedVersion(FlexgraphError):
    pass


class CorruptChunk(FlexgraphError):
    def __init__(self, path: str, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason


class CsvParseError(FlexgraphError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class SchemaMismatch(FlexgraphError):
    pass


# --- IR / frontends ---------------------------------------------------------

class PlanTypeError(FlexgraphError):
    """Schema check failure when wiring operators (the IR's type error)."""

    def __init__(self, alias: str, expected: str = "", found: str = ""):
        detail = f"alias {alias!r}"
        if expected or found:
            detail += f" (expected {expected or '?'}, found {found or 'nothing'})"
        super().__init__(detail)
        self.alias = alias
        self.expected = expected
        self.found = found


class DagCycleError(FlexgraphError):
    pass


class Diagnostic(FlexgraphError):
    """Frontend diagnostic with a source position."""

    def __init__(self, line: int, col: int, message: str):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col
        self.message = message

    def to_json(self) -> dict:
        return {"line": self.line, "col": self.col, "message": self.message}


# --- optimizer ----------------------------------------------------------------

class PatternTooLarge(FlexgraphError):
    pass


class CatalogTooLarge(FlexgraphError):
    pass


# --- runtime -------------------------------------------------------------------

class UnloweredOp(FlexgraphError):
    pass


class ExecError(FlexgraphError):
    def __init__(self, op: str, cause: str):
        super().__init__(f"{op}: {cause}")
        self.op = op
        self.cause = cause


class ParamUnbound(FlexgraphError):
    def __init__(self, name: str):
        super().__init__(f"parameter ${name} is not bound")
        self.name = name


# --- service ---------------------------------------------------------------------

class ConfigError(FlexgraphError):
    pass
