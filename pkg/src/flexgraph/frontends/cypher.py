"""Cypher-subset frontend.

Grammar (see docs/cypher-subset.md for the EBNF):

    query  := (MATCH chain {,chain} [WHERE expr] | WITH items [WHERE expr])*
              RETURN items [ORDER BY key {,key}] [LIMIT n]
    chain  := (node) (edge (node))*
    node   := ( [alias] [:Label] [{prop: value, ...}] )
    edge   := -[ [alias] :Type [*min..max] [{...}] ]->  |  <-[...]-  |  -[...]-

Parsing is total: every input yields a DAG or a Diagnostic with a source
position. WHERE lowers to a SELECT placed after its MATCH; inline property
maps are pattern constraints and live on the pattern directly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ..errors import Diagnostic
from ..ir import (
    Aggregate,
    Arith,
    BoolOp,
    Cmp,
    Expr,
    FieldRef,
    FromEdgeSpec,
    GetVertex,
    Group,
    InList,
    Join,
    LimitOp,
    Literal,
    LogicalDag,
    Match,
    Order,
    Param,
    PathExpand,
    PatternEdge,
    PatternGraph,
    PatternVertex,
    Project,
    PropAccess,
    ScanSpec,
    Select,
    Sink,
)
from ..ir.exprs import has_aggregate
from ..model import DataKind, Direction, PropertyGraphSchema

KEYWORDS = {
    "match", "where", "with", "return", "order", "by", "limit", "asc",
    "desc", "as", "and", "or", "not", "in", "null", "true", "false",
}
AGG_NAMES = {"count", "sum", "min", "max", "avg", "collect"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|//[^\n]*|/\*.*?\*/)
  | (?P<number>\d+(\.\d+)?([eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>'(?:[^'\\]|\\.)*'|"(?:[^"\\]|\\.)*")
  | (?P<param>\$[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct><=|>=|<>|!=|->|\.\.|[-<>=+*/()\[\]{},:.|])
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True)
class Token:
    kind: str  # kw ident number string param punct eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> List[Token]:
    out: List[Token] = []
    pos = 0
    line, col = 1, 1
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise Diagnostic(line, col, f"unexpected character {text[pos]!r}")
        lexeme = m.group(0)
        kind = m.lastgroup
        if kind == "ident":
            low = lexeme.lower()
            out.append(Token("kw" if low in KEYWORDS else "ident", lexeme,
                             line, col))
        elif kind != "ws":
            out.append(Token(kind, lexeme, line, col))
        for ch in lexeme:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
        pos += len(lexeme)
    out.append(Token("eof", "", line, col))
    return out


# --- AST ---------------------------------------------------------------------

@dataclass
class NodePat:
    alias: str
    anonymous: bool
    label: Optional[str]
    props: List[Tuple[str, Expr]]
    line: int
    col: int


@dataclass
class EdgePat:
    alias: Optional[str]
    etype: str
    direction: Direction
    var: Optional[Tuple[int, int]]  # (min,max) hops for variable length
    props: List[Tuple[str, Expr]]
    line: int
    col: int


@dataclass
class ChainPat:
    nodes: List[NodePat]
    edges: List[EdgePat]


@dataclass
class MatchClause:
    chains: List[ChainPat]
    where: Optional[Expr] = None


@dataclass
class WithClause:
    items: List[Tuple[Expr, Optional[str]]]
    where: Optional[Expr] = None


@dataclass
class ReturnClause:
    items: List[Tuple[Expr, Optional[str]]]
    order: List[Tuple[Expr, bool]] = field(default_factory=list)
    limit: Optional[int] = None


@dataclass
class QueryAst:
    clauses: List[object]  # MatchClause | WithClause
    ret: ReturnClause


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self._anon = 0

    # -- token helpers --

    @property
    def cur(self) -> Token:
        return self.toks[self.i]

    def err(self, message: str, tok: Optional[Token] = None) -> Diagnostic:
        t = tok or self.cur
        return Diagnostic(t.line, t.col, message)

    def at_kw(self, word: str) -> bool:
        return self.cur.kind == "kw" and self.cur.text.lower() == word

    def eat_kw(self, word: str) -> Token:
        if not self.at_kw(word):
            raise self.err(f"expected {word.upper()}")
        t = self.cur
        self.i += 1
        return t

    def at_punct(self, p: str) -> bool:
        return self.cur.kind == "punct" and self.cur.text == p

    def eat_punct(self, p: str) -> Token:
        if not self.at_punct(p):
            raise self.err(f"expected {p!r}")
        t = self.cur
        self.i += 1
        return t

    def fresh_anon(self) -> str:
        self._anon += 1
        return f"$a{self._anon}"

    # -- query --

    def parse(self) -> QueryAst:
        clauses: List[object] = []
        while True:
            if self.at_kw("match"):
                clauses.append(self.parse_match())
            elif self.at_kw("with"):
                clauses.append(self.parse_with())
            elif self.at_kw("return"):
                ret = self.parse_return()
                if self.cur.kind != "eof":
                    raise self.err("unexpected input after the query")
                if not any(isinstance(c, MatchClause) for c in clauses):
                    raise self.err("query needs at least one MATCH")
                return QueryAst(clauses, ret)
            else:
                raise self.err("expected MATCH, WITH, or RETURN")

    def parse_match(self) -> MatchClause:
        self.eat_kw("match")
        chains = [self.parse_chain()]
        while self.at_punct(","):
            self.i += 1
            chains.append(self.parse_chain())
        where = None
        if self.at_kw("where"):
            self.i += 1
            where = self.parse_expr()
        return MatchClause(chains, where)

    def parse_with(self) -> WithClause:
        self.eat_kw("with")
        items = self.parse_items()
        where = None
        if self.at_kw("where"):
            self.i += 1
            where = self.parse_expr()
        return WithClause(items, where)

    def parse_return(self) -> ReturnClause:
        self.eat_kw("return")
        items = self.parse_items()
        order: List[Tuple[Expr, bool]] = []
        limit = None
        if self.at_kw("order"):
            self.i += 1
            self.eat_kw("by")
            while True:
                key = self.parse_expr()
                asc = True
                if self.at_kw("asc"):
                    self.i += 1
                elif self.at_kw("desc"):
                    self.i += 1
                    asc = False
                order.append((key, asc))
                if self.at_punct(","):
                    self.i += 1
                    continue
                break
        if self.at_kw("limit"):
            self.i += 1
            t = self.cur
            if t.kind != "number" or "." in t.text:
                raise self.err("LIMIT expects an integer")
            self.i += 1
            limit = int(t.text)
        return ReturnClause(items, order, limit)

    def parse_items(self) -> List[Tuple[Expr, Optional[str]]]:
        items = []
        while True:
            e = self.parse_expr()
            name = None
            if self.at_kw("as"):
                self.i += 1
                t = self.cur
                if t.kind not in ("ident", "kw"):
                    raise self.err("expected a name after AS")
                name = t.text
                self.i += 1
            items.append((e, name))
            if self.at_punct(","):
                self.i += 1
                continue
            return items

    # -- patterns --

    def at_left_arrow(self) -> bool:
        return (self.at_punct("<")
                and self.toks[self.i + 1].text == "-"
                and self.toks[self.i + 2].text == "[")

    def parse_chain(self) -> ChainPat:
        nodes = [self.parse_node()]
        edges: List[EdgePat] = []
        while self.at_punct("-") or self.at_left_arrow():
            edges.append(self.parse_edge())
            nodes.append(self.parse_node())
        return ChainPat(nodes, edges)

    def parse_node(self) -> NodePat:
        t0 = self.eat_punct("(")
        alias = None
        label = None
        props: List[Tuple[str, Expr]] = []
        if self.cur.kind == "ident":
            alias = self.cur.text
            self.i += 1
        if self.at_punct(":"):
            self.i += 1
            if self.cur.kind not in ("ident", "kw"):
                raise self.err("expected a label")
            label = self.cur.text
            self.i += 1
        if self.at_punct("{"):
            props = self.parse_prop_map()
        self.eat_punct(")")
        anonymous = alias is None
        return NodePat(alias or self.fresh_anon(), anonymous, label, props,
                       t0.line, t0.col)

    def parse_edge(self) -> EdgePat:
        if self.at_left_arrow():
            t0 = self.eat_punct("<")
            self.eat_punct("-")
            left_arrow = True
        else:
            t0 = self.eat_punct("-")
            left_arrow = False
        self.eat_punct("[")
        alias = None
        if self.cur.kind == "ident":
            alias = self.cur.text
            self.i += 1
        if not self.at_punct(":"):
            raise self.err("edge type is required, e.g. [:Knows]")
        self.i += 1
        if self.cur.kind not in ("ident", "kw"):
            raise self.err("expected an edge type")
        etype = self.cur.text
        self.i += 1
        var = None
        if self.at_punct("*"):
            self.i += 1
            lo = 1
            hi = None
            if self.cur.kind == "number":
                lo = int(self.cur.text)
                self.i += 1
            if self.at_punct(".."):
                self.i += 1
                if self.cur.kind == "number":
                    hi = int(self.cur.text)
                    self.i += 1
                else:
                    raise self.err("bounded max hops required, e.g. *1..3")
            var = (lo, hi if hi is not None else lo)
        props: List[Tuple[str, Expr]] = []
        if self.at_punct("{"):
            props = self.parse_prop_map()
        self.eat_punct("]")
        if left_arrow:
            self.eat_punct("-")
            direction = Direction.IN
        elif self.at_punct("->"):
            self.i += 1
            direction = Direction.OUT
        else:
            self.eat_punct("-")
            direction = Direction.BOTH
        return EdgePat(alias, etype, direction, var, props, t0.line, t0.col)

    def parse_prop_map(self) -> List[Tuple[str, Expr]]:
        self.eat_punct("{")
        out = []
        while True:
            if self.cur.kind not in ("ident", "kw"):
                raise self.err("expected a property name")
            name = self.cur.text
            self.i += 1
            self.eat_punct(":")
            out.append((name, self.parse_expr()))
            if self.at_punct(","):
                self.i += 1
                continue
            break
        self.eat_punct("}")
        return out

    # -- expressions (precedence climbing) --

    def parse_expr(self) -> Expr:
        return self.parse_or()

    def parse_or(self) -> Expr:
        left = self.parse_and()
        args = [left]
        while self.at_kw("or"):
            self.i += 1
            args.append(self.parse_and())
        return args[0] if len(args) == 1 else BoolOp("or", tuple(args))

    def parse_and(self) -> Expr:
        left = self.parse_not()
        args = [left]
        while self.at_kw("and"):
            self.i += 1
            args.append(self.parse_not())
        return args[0] if len(args) == 1 else BoolOp("and", tuple(args))

    def parse_not(self) -> Expr:
        if self.at_kw("not"):
            self.i += 1
            return BoolOp("not", (self.parse_not(),))
        return self.parse_comparison()

    def parse_comparison(self) -> Expr:
        left = self.parse_additive()
        if self.cur.kind == "punct" and self.cur.text in ("=", "!=", "<>", "<",
                                                          "<=", ">", ">="):
            op = self.cur.text
            self.i += 1
            right = self.parse_additive()
            return Cmp("!=" if op == "<>" else op, left, right)
        if self.at_kw("in"):
            self.i += 1
            return InList(left, self.parse_additive())
        return left

    def parse_additive(self) -> Expr:
        left = self.parse_multiplicative()
        while self.cur.kind == "punct" and self.cur.text in ("+", "-"):
            op = self.cur.text
            self.i += 1
            left = Arith(op, left, self.parse_multiplicative())
        return left

    def parse_multiplicative(self) -> Expr:
        left = self.parse_unary()
        while self.cur.kind == "punct" and self.cur.text in ("*", "/"):
            op = self.cur.text
            self.i += 1
            left = Arith(op, left, self.parse_unary())
        return left

    def parse_unary(self) -> Expr:
        if self.at_punct("-"):
            self.i += 1
            inner = self.parse_unary()
            if isinstance(inner, Literal) and isinstance(inner.value, (int, float)):
                return Literal(-inner.value)
            return Arith("-", Literal(0), inner)
        return self.parse_postfix()

    def parse_postfix(self) -> Expr:
        e = self.parse_primary()
        while self.at_punct("."):
            # property access binds to a field reference
            self.i += 1
            if self.cur.kind not in ("ident", "kw"):
                raise self.err("expected a property name")
            prop = self.cur.text
            self.i += 1
            if not isinstance(e, FieldRef):
                raise self.err("property access needs an alias on the left")
            e = PropAccess(e.alias, prop)
        return e

    def parse_primary(self) -> Expr:
        t = self.cur
        if t.kind == "number":
            self.i += 1
            return Literal(float(t.text) if "." in t.text or "e" in t.text.lower()
                           else int(t.text))
        if t.kind == "string":
            self.i += 1
            body = t.text[1:-1]
            return Literal(re.sub(r"\\(.)", r"\1", body))
        if t.kind == "param":
            self.i += 1
            return Param(t.text[1:])
        if t.kind == "kw":
            low = t.text.lower()
            if low == "null":
                self.i += 1
                return Literal(None)
            if low in ("true", "false"):
                self.i += 1
                return Literal(low == "true")
            raise self.err(f"unexpected keyword {t.text!r}")
        if t.kind == "ident":
            low = t.text.lower()
            if low in AGG_NAMES and self.toks[self.i + 1].text == "(":
                self.i += 2
                arg = self.parse_expr()
                self.eat_punct(")")
                return Aggregate(low, arg)
            self.i += 1
            return FieldRef(t.text)
        if self.at_punct("("):
            self.i += 1
            e = self.parse_expr()
            self.eat_punct(")")
            return e
        if self.at_punct("["):
            self.i += 1
            items = []
            if not self.at_punct("]"):
                while True:
                    item = self.parse_expr()
                    if not isinstance(item, Literal):
                        raise self.err("list literals hold literals only")
                    items.append(item.value)
                    if self.at_punct(","):
                        self.i += 1
                        continue
                    break
            self.eat_punct("]")
            return Literal(items)
        raise self.err(f"unexpected token {t.text!r}")


def parse_query(text: str) -> QueryAst:
    """Parse to the clause AST (no schema resolution yet)."""
    return _Parser(text).parse()


# --- unparse (round-trip support) -------------------------------------------------

def _expr_text(e: Expr) -> str:
    if isinstance(e, Literal):
        v = e.value
        if v is None:
            return "null"
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, str):
            return "'" + v.replace("\\", "\\\\").replace("'", "\\'") + "'"
        if isinstance(v, list):
            return "[" + ", ".join(_expr_text(Literal(x)) for x in v) + "]"
        return repr(v)
    if isinstance(e, FieldRef):
        return e.alias
    if isinstance(e, PropAccess):
        return f"{e.alias}.{e.prop}"
    if isinstance(e, Param):
        return f"${e.name}"
    if isinstance(e, Arith):
        return f"({_expr_text(e.left)} {e.op} {_expr_text(e.right)})"
    if isinstance(e, Cmp):
        return f"({_expr_text(e.left)} {e.op} {_expr_text(e.right)})"
    if isinstance(e, BoolOp):
        if e.op == "not":
            return f"(NOT {_expr_text(e.args[0])})"
        return "(" + f" {e.op.upper()} ".join(_expr_text(a) for a in e.args) + ")"
    if isinstance(e, InList):
        return f"({_expr_text(e.item)} IN {_expr_text(e.items)})"
    if isinstance(e, Aggregate):
        return f"{e.fn.upper()}({_expr_text(e.arg)})"
    raise ValueError(f"cannot unparse {e!r}")


def unparse(ast: QueryAst) -> str:
    """Text that reparses to an equivalent query."""
    parts: List[str] = []
    for c in ast.clauses:
        if isinstance(c, MatchClause):
            chains = []
            for ch in c.chains:
                s = _node_text(ch.nodes[0])
                for edge, node in zip(ch.edges, ch.nodes[1:]):
                    s += _edge_text(edge) + _node_text(node)
                chains.append(s)
            parts.append("MATCH " + ", ".join(chains))
            if c.where is not None:
                parts.append("WHERE " + _expr_text(c.where))
        else:
            parts.append("WITH " + _items_text(c.items))
            if c.where is not None:
                parts.append("WHERE " + _expr_text(c.where))
    parts.append("RETURN " + _items_text(ast.ret.items))
    if ast.ret.order:
        keys = ", ".join(_expr_text(k) + ("" if asc else " DESC")
                         for k, asc in ast.ret.order)
        parts.append("ORDER BY " + keys)
    if ast.ret.limit is not None:
        parts.append(f"LIMIT {ast.ret.limit}")
    return "\n".join(parts)


def _items_text(items) -> str:
    return ", ".join(_expr_text(e) + (f" AS {n}" if n else "")
                     for e, n in items)


def _node_text(n: NodePat) -> str:
    s = "" if n.anonymous else n.alias
    if n.label:
        s += f":{n.label}"
    if n.props:
        s += " {" + ", ".join(f"{k}: {_expr_text(v)}" for k, v in n.props) + "}"
    return f"({s})"


def _edge_text(e: EdgePat) -> str:
    body = e.alias or ""
    body += f":{e.etype}"
    if e.var:
        body += f"*{e.var[0]}..{e.var[1]}"
    if e.props:
        body += " {" + ", ".join(f"{k}: {_expr_text(v)}" for k, v in e.props) + "}"
    if e.direction is Direction.OUT:
        return f"-[{body}]->"
    if e.direction is Direction.IN:
        return f"<-[{body}]-"
    return f"-[{body}]-"


# --- lowering to the IR --------------------------------------------------------------


class _NodeInfo:
    __slots__ = ("alias", "anonymous", "vtype", "preds", "line", "col")

    def __init__(self, alias, anonymous, line, col):
        self.alias = alias
        self.anonymous = anonymous
        self.vtype: Optional[int] = None
        self.preds: List[Expr] = []
        self.line = line
        self.col = col


class _Lowerer:
    def __init__(self, schema: PropertyGraphSchema):
        self.schema = schema
        self.dag: Optional[LogicalDag] = None
        self.head: Optional[int] = None
        self._anon_path = 0

    # scope = output schema of the head op
    def scope(self) -> set:
        if self.dag is None or self.head is None:
            return set()
        return set(self.dag.schema_of(self.head).names())

    def _emit(self, op) -> int:
        oid = self.dag.add(op)
        if self.head is not None:
            self.dag.connect(self.head, oid)
        self.head = oid
        return oid

    def lower(self, ast: QueryAst) -> LogicalDag:
        self.dag = LogicalDag(self.schema)
        for clause in ast.clauses:
            if isinstance(clause, MatchClause):
                self.lower_match(clause)
            else:
                self.lower_with(clause.items, clause.where)
        self.lower_return(ast.ret)
        self._emit(Sink())
        self.dag.validate()
        return self.dag

    # -- MATCH --

    def lower_match(self, clause: MatchClause) -> None:
        nodes: Dict[str, _NodeInfo] = {}
        fixed_edges: List[Tuple[str, str, int, Direction, Optional[str]]] = []
        var_links: List[Tuple[str, EdgePat, str]] = []
        edge_preds: Dict[int, List[Expr]] = {}

        def visit_node(n: NodePat) -> str:
            info = nodes.get(n.alias)
            if info is None:
                info = _NodeInfo(n.alias, n.anonymous, n.line, n.col)
                nodes[n.alias] = info
            if n.label is not None:
                if not self.schema.has_vtype(n.label):
                    raise Diagnostic(n.line, n.col, f"unknown label {n.label!r}")
                vt = self.schema.vtype_ordinal(n.label)
                if info.vtype is not None and info.vtype != vt:
                    raise Diagnostic(n.line, n.col,
                                     f"conflicting labels for {n.alias!r}")
                info.vtype = vt
            for pname, value in n.props:
                info.preds.append(Cmp("=", PropAccess(n.alias, pname), value))
            return n.alias

        for chain in clause.chains:
            left = visit_node(chain.nodes[0])
            for edge, node in zip(chain.edges, chain.nodes[1:]):
                right = visit_node(node)
                if not self.schema.has_etype(edge.etype):
                    raise Diagnostic(edge.line, edge.col,
                                     f"unknown edge type {edge.etype!r}")
                et = self.schema.etype_ordinal(edge.etype)
                if edge.var is not None:
                    if edge.props or edge.alias in self.scope():
                        raise Diagnostic(edge.line, edge.col,
                                         "variable-length edges take no "
                                         "property map")
                    var_links.append((left, edge, right))
                else:
                    idx = len(fixed_edges)
                    # prop-map constraints on an anonymous edge need an
                    # internal alias for their predicate to name
                    e_alias = edge.alias or (f"$e{idx}" if edge.props else None)
                    fixed_edges.append((left, right, et, edge.direction,
                                        e_alias))
                    for pname, value in edge.props:
                        edge_preds.setdefault(idx, []).append(
                            Cmp("=", PropAccess(e_alias, pname), value))
                left = right

        self._infer_vertex_types(nodes, fixed_edges, var_links)

        # connected components over fixed edges (var links do not merge)
        parent: Dict[str, str] = {a: a for a in nodes}

        def find(x: str) -> str:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b, *_ in fixed_edges:
            parent[find(a)] = find(b)

        comp_edges: Dict[str, list] = {}
        comp_nodes: Dict[str, list] = {}
        order: List[str] = []
        for alias in nodes:
            root = find(alias)
            if root not in comp_nodes:
                comp_nodes[root] = []
                comp_edges[root] = []
                order.append(root)
            comp_nodes[root].append(alias)
        for i, fe in enumerate(fixed_edges):
            comp_edges[find(fe[0])].append((i, fe))

        pending_comps = [r for r in order
                         if comp_edges[find(r)] or len(comp_nodes[r]) > 0]
        # drop components that are single nodes already in scope and carry
        # nothing new (pure re-mentions add predicates via a SELECT)
        emitted: set = set()
        pending_links = list(var_links)

        def comp_has_new(root: str) -> bool:
            return (bool(comp_edges[root])
                    or any(a not in self.scope() for a in comp_nodes[root]))

        while pending_comps or pending_links:
            progress = False
            for root in list(pending_comps):
                aliases = comp_nodes[root]
                in_scope = [a for a in aliases if a in self.scope()]
                isolated_mention = (not comp_edges[root] and len(aliases) == 1
                                    and aliases[0] in self.scope())
                if isolated_mention:
                    info = nodes[aliases[0]]
                    for p in info.preds:
                        self._emit(Select(p))
                    pending_comps.remove(root)
                    emitted.update(aliases)
                    progress = True
                    continue
                if in_scope or self.head is None or not self.scope():
                    self._emit_component(nodes, comp_edges[root], aliases,
                                         edge_preds, bound=in_scope)
                    pending_comps.remove(root)
                    emitted.update(aliases)
                    progress = True
            for link in list(pending_links):
                left, edge, right = link
                if left in self.scope():
                    self._emit_var_link(nodes, left, edge, right)
                    pending_links.remove(link)
                    progress = True
                elif right in self.scope():
                    flipped = EdgePat(edge.alias, edge.etype,
                                      _flip(edge.direction), edge.var,
                                      edge.props, edge.line, edge.col)
                    self._emit_var_link(nodes, right, flipped, left)
                    pending_links.remove(link)
                    progress = True
            if not progress and pending_comps:
                # no shared aliases anywhere: cartesian product via JOIN
                root = pending_comps.pop(0)
                self._emit_component(nodes, comp_edges[root], comp_nodes[root],
                                     edge_preds, bound=[])
                emitted.update(comp_nodes[root])
                progress = True
            if not progress:
                break
        if pending_comps or pending_links:
            first = nodes[comp_nodes[pending_comps[0]][0]] if pending_comps \
                else nodes[pending_links[0][0]]
            raise Diagnostic(first.line, first.col,
                             "pattern part cannot be reached from the scope")

        if clause.where is not None:
            self._check_where(clause.where)
            self._emit(Select(clause.where))

    def _check_where(self, e: Expr) -> None:
        if has_aggregate(e):
            raise Diagnostic(1, 1, "aggregates are not allowed in WHERE")

    def _infer_vertex_types(self, nodes, fixed_edges, var_links) -> None:
        changed = True
        while changed:
            changed = False
            for a, b, et, direction, _alias in fixed_edges:
                decl = self.schema.edge_types[et]
                s = self.schema.vtype_ordinal(decl.src_type)
                d = self.schema.vtype_ordinal(decl.dst_type)
                if direction is Direction.OUT:
                    want = ((a, s), (b, d))
                elif direction is Direction.IN:
                    want = ((a, d), (b, s))
                elif s == d:
                    want = ((a, s), (b, s))
                else:
                    continue
                for alias, vt in want:
                    info = nodes[alias]
                    if info.vtype is None:
                        info.vtype = vt
                        changed = True
                    elif info.vtype != vt:
                        raise Diagnostic(
                            info.line, info.col,
                            f"{alias!r} cannot be "
                            f"{self.schema.vertex_types[info.vtype].name} here")
            for left, edge, right in var_links:
                et = self.schema.etype_ordinal(edge.etype)
                decl = self.schema.edge_types[et]
                s = self.schema.vtype_ordinal(decl.src_type)
                d = self.schema.vtype_ordinal(decl.dst_type)
                if edge.direction is Direction.BOTH and s != d:
                    raise Diagnostic(edge.line, edge.col,
                                     "undirected variable-length over "
                                     "asymmetric edge types is unsupported")
                pairs = (((left, s), (right, d)) if edge.direction is Direction.OUT
                         else ((left, d), (right, s)) if edge.direction is Direction.IN
                         else ((left, s), (right, s)))
                for alias, vt in pairs:
                    info = nodes[alias]
                    if edge.var and edge.var[0] == 0 and alias == right:
                        continue  # zero hops can stop at the anchor type
                    if info.vtype is None:
                        info.vtype = vt
                        changed = True
                    elif info.vtype != vt:
                        raise Diagnostic(info.line, info.col,
                                         f"label of {alias!r} conflicts with "
                                         f"edge type {edge.etype}")

    def _emit_component(self, nodes, indexed_edges, aliases, edge_preds,
                        bound) -> None:
        pvs = []
        for alias in aliases:
            info = nodes[alias]
            pred = None
            for p in info.preds:
                pred = p if pred is None else BoolOp("and", (pred, p))
            pvs.append(PatternVertex(alias, info.vtype, pred))
        pes = []
        for i, (a, b, et, direction, alias) in indexed_edges:
            pred = None
            for p in edge_preds.get(i, []):
                pred = p if pred is None else BoolOp("and", (pred, p))
            pes.append(PatternEdge(a, b, et, direction, pred, alias))
        pattern = PatternGraph(tuple(pvs), tuple(pes))
        match = Match(pattern, bound=tuple(sorted(bound)))
        if bound or self.head is None:
            self._emit(match)
        else:
            # disjoint from the current stream: cartesian join
            src = self.dag.add(match)
            join = self.dag.add(Join(on=()))
            self.dag.connect(self.head, join)
            self.dag.connect(src, join)
            self.head = join

    def _emit_var_link(self, nodes, left: str, edge: EdgePat, right: str) -> None:
        et = self.schema.etype_ordinal(edge.etype)
        lo, hi = edge.var
        if hi < lo or hi < 1:
            raise Diagnostic(edge.line, edge.col, "bad hop bounds")
        path_alias = edge.alias or self._fresh_path()
        self._emit(PathExpand(left, edge.direction, et, lo, hi, path_alias))
        info = nodes[right]
        self._emit(GetVertex(right, from_edge=FromEdgeSpec(path_alias, "end")))
        for p in info.preds:
            self._emit(Select(p))

    def _fresh_path(self) -> str:
        self._anon_path += 1
        return f"$p{self._anon_path}"

    # -- WITH / RETURN --

    def _item_name(self, e: Expr, name: Optional[str], pos: int) -> str:
        if name:
            return name
        if isinstance(e, FieldRef):
            return e.alias
        if isinstance(e, PropAccess):
            return f"{e.alias}.{e.prop}"
        return f"col{pos}"

    def lower_with(self, items, where) -> None:
        self._project_or_group(items)
        if where is not None:
            self._check_where(where)
            self._emit(Select(where))

    def _project_or_group(self, items) -> None:
        named = [(e, self._item_name(e, n, i)) for i, (e, n) in enumerate(items)]
        seen = set()
        for _e, n in named:
            if n in seen:
                raise Diagnostic(1, 1, f"duplicate output name {n!r}")
            seen.add(n)
        if any(has_aggregate(e) for e, _ in named):
            keys = []
            aggs = []
            for e, n in named:
                if isinstance(e, Aggregate):
                    aggs.append((e, n))
                elif has_aggregate(e):
                    raise Diagnostic(1, 1,
                                     "aggregates cannot be nested in "
                                     "expressions here")
                else:
                    keys.append((e, n))
            self._emit(Group(tuple(keys), tuple(aggs)))
        else:
            self._emit(Project(tuple(named)))

    def lower_return(self, ret: ReturnClause) -> None:
        named = [(e, self._item_name(e, n, i))
                 for i, (e, n) in enumerate(ret.items)]
        self._project_or_group(ret.items)
        if ret.order:
            # sort keys matching a projected expression refer to its column
            by_expr = {e: name for e, name in named}
            keys = tuple((FieldRef(by_expr[k]) if k in by_expr else k, asc)
                         for k, asc in ret.order)
            self._emit(Order(keys, limit=ret.limit))
        elif ret.limit is not None:
            self._emit(LimitOp(ret.limit))


def _flip(d: Direction) -> Direction:
    if d is Direction.OUT:
        return Direction.IN
    if d is Direction.IN:
        return Direction.OUT
    return Direction.BOTH


def cypher_parse(text: str, schema: PropertyGraphSchema) -> LogicalDag:
    """Parse and lower; raises Diagnostic (line/col) on any problem."""
    ast = parse_query(text)
    try:
        return _Lowerer(schema).lower(ast)
    except Diagnostic:
        raise
    except Exception as e:  # schema-check failures carry no position
        raise Diagnostic(1, 1, str(e)) from e
