"""Term language: global types, processes, sessions, expressions, actions.

All terms are immutable values. Source spans, when present, are carried
outside structural equality so that parsed and hand-built terms compare equal.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterator, Mapping, Optional, Union


@dataclass(frozen=True)
class SourceSpan:
    """Half-open region of a source file; positions are 1-based."""
    file: str
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def __str__(self) -> str:
        return f"{self.file}:{self.start_line}:{self.start_col}"


# Roles, message labels and variable names are plain strings; equality is
# string equality and identifiers are case-sensitive.
Role = str
Label = str
VarName = str
RecVarName = str

_SPAN = dict(default=None, compare=False, repr=False)


def _cached_hash(cls):
    """Cache the dataclass-generated structural hash per instance.

    Terms produced by unfolding recursion can grow large, and state-space
    construction hashes them constantly; without caching that is quadratic.
    """
    generated = cls.__hash__

    def __hash__(self):
        value = self.__dict__.get("_hash")
        if value is None:
            value = generated(self)
            object.__setattr__(self, "_hash", value)
        return value

    cls.__hash__ = __hash__
    return cls


class PayloadType(enum.Enum):
    """Closed universe of message payload types."""
    UNIT = "Unit"
    BOOL = "Bool"
    NAT = "Nat"
    INT = "Int"
    STR = "Str"

    def __str__(self) -> str:
        return self.value


PAYLOAD_TYPES = {t.value: t for t in PayloadType}


@_cached_hash
@dataclass(frozen=True)
class GlobalAction:
    """One communication event: sender -> receiver : label(payload)."""
    sender: Role
    receiver: Role
    label: Label
    payload: PayloadType

    def __post_init__(self) -> None:
        if self.sender == self.receiver:
            raise ValueError(f"action sender and receiver coincide: {self.sender}")

    @property
    def roles(self) -> frozenset[Role]:
        return frozenset((self.sender, self.receiver))

    def sort_key(self) -> tuple[str, str, str, str]:
        return (self.sender, self.receiver, self.label, self.payload.value)

    def __str__(self) -> str:
        return f"{self.sender}->{self.receiver}:{self.label}({self.payload})"


# ---------------------------------------------------------------------------
# Global types


class GlobalType:
    """Base class for global-type terms."""
    __slots__ = ()


@_cached_hash
@dataclass(frozen=True)
class GBranch:
    """One alternative of a communication: label(payload) . continuation."""
    label: Label
    payload: PayloadType
    cont: GlobalType


@_cached_hash
@dataclass(frozen=True)
class GComm(GlobalType):
    """Communication choice: sender -> receiver { branches }."""
    sender: Role
    receiver: Role
    branches: tuple[GBranch, ...]
    span: Optional[SourceSpan] = field(**_SPAN)


@_cached_hash
@dataclass(frozen=True)
class GMu(GlobalType):
    """Recursion binder: mu X . body."""
    var: RecVarName
    body: GlobalType
    span: Optional[SourceSpan] = field(**_SPAN)


@_cached_hash
@dataclass(frozen=True)
class GVar(GlobalType):
    """Recursion variable occurrence."""
    var: RecVarName
    span: Optional[SourceSpan] = field(**_SPAN)


@_cached_hash
@dataclass(frozen=True)
class GEnd(GlobalType):
    """Terminated protocol."""
    span: Optional[SourceSpan] = field(**_SPAN)


@_cached_hash
@dataclass(frozen=True)
class GPar(GlobalType):
    """Interleaving of two protocols over disjoint role sets."""
    left: GlobalType
    right: GlobalType
    span: Optional[SourceSpan] = field(**_SPAN)


# ---------------------------------------------------------------------------
# Expressions


class Expr:
    """Base class for data expressions."""
    __slots__ = ()


@_cached_hash
@dataclass(frozen=True)
class UnitLit(Expr):
    span: Optional[SourceSpan] = field(**_SPAN)


@_cached_hash
@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool
    span: Optional[SourceSpan] = field(**_SPAN)


@_cached_hash
@dataclass(frozen=True)
class NatLit(Expr):
    value: int
    span: Optional[SourceSpan] = field(**_SPAN)

    def __post_init__(self) -> None:
        if self.value < 0:
            raise ValueError("natural literal must be non-negative")


@_cached_hash
@dataclass(frozen=True)
class IntLit(Expr):
    value: int
    span: Optional[SourceSpan] = field(**_SPAN)


@_cached_hash
@dataclass(frozen=True)
class StrLit(Expr):
    value: str
    span: Optional[SourceSpan] = field(**_SPAN)


@_cached_hash
@dataclass(frozen=True)
class VarRef(Expr):
    name: VarName
    span: Optional[SourceSpan] = field(**_SPAN)


@_cached_hash
@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr
    span: Optional[SourceSpan] = field(**_SPAN)


@_cached_hash
@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr
    span: Optional[SourceSpan] = field(**_SPAN)


@_cached_hash
@dataclass(frozen=True)
class Eq(Expr):
    left: Expr
    right: Expr
    span: Optional[SourceSpan] = field(**_SPAN)


Value = Union[UnitLit, BoolLit, NatLit, IntLit, StrLit]


def is_value(e: Expr) -> bool:
    return isinstance(e, (UnitLit, BoolLit, NatLit, IntLit, StrLit))


# ---------------------------------------------------------------------------
# Processes


class Process:
    """Base class for per-role process terms."""
    __slots__ = ()


@_cached_hash
@dataclass(frozen=True)
class RecvBranch:
    """One alternative of a receive: label(binder: annot) . continuation."""
    label: Label
    binder: VarName
    annot: PayloadType
    cont: Process


@_cached_hash
@dataclass(frozen=True)
class PSend(Process):
    """Send label(payload) to a role, then continue."""
    to: Role
    label: Label
    payload: Expr
    cont: Process
    span: Optional[SourceSpan] = field(**_SPAN)


@_cached_hash
@dataclass(frozen=True)
class PRecv(Process):
    """Receive one of several labelled messages from a role."""
    from_: Role
    branches: tuple[RecvBranch, ...]
    span: Optional[SourceSpan] = field(**_SPAN)


@_cached_hash
@dataclass(frozen=True)
class PLet(Process):
    binder: VarName
    rhs: Expr
    cont: Process
    span: Optional[SourceSpan] = field(**_SPAN)


@_cached_hash
@dataclass(frozen=True)
class PIf(Process):
    cond: Expr
    then: Process
    orelse: Process
    span: Optional[SourceSpan] = field(**_SPAN)


@_cached_hash
@dataclass(frozen=True)
class PRec(Process):
    var: RecVarName
    body: Process
    span: Optional[SourceSpan] = field(**_SPAN)


@_cached_hash
@dataclass(frozen=True)
class PVar(Process):
    var: RecVarName
    span: Optional[SourceSpan] = field(**_SPAN)


@_cached_hash
@dataclass(frozen=True)
class PEnd(Process):
    span: Optional[SourceSpan] = field(**_SPAN)


@_cached_hash
@dataclass(frozen=True)
class Session:
    """Finite family of processes, at most one per role.

    The role-indexed mapping representation absorbs the commutativity and
    associativity of parallel composition: two sessions are equal iff they
    implement the same roles by equal processes.
    """
    entries: tuple[tuple[Role, Process], ...]

    def __post_init__(self) -> None:
        roles = [r for r, _ in self.entries]
        if not roles:
            raise ValueError("a session must implement at least one role")
        if len(set(roles)) != len(roles):
            raise ValueError("a session may implement each role at most once")
        object.__setattr__(self, "entries", tuple(sorted(self.entries)))

    @classmethod
    def of(cls, mapping: Mapping[Role, Process]) -> "Session":
        return cls(tuple(mapping.items()))

    @property
    def roles(self) -> tuple[Role, ...]:
        return tuple(r for r, _ in self.entries)

    def get(self, role: Role) -> Optional[Process]:
        for r, p in self.entries:
            if r == role:
                return p
        return None

    def with_process(self, role: Role, proc: Process) -> "Session":
        return Session(tuple((r, proc if r == role else p) for r, p in self.entries))


# ---------------------------------------------------------------------------
# obj and role extraction


def obj(p: Process) -> Optional[Role]:
    """Communication partner of a send/receive head; None otherwise."""
    if isinstance(p, PSend):
        return p.to
    if isinstance(p, PRecv):
        return p.from_
    return None


def term_nodes(g: GlobalType, limit: int) -> int:
    """Node count of a global type, clamped at limit + 1 (iterative)."""
    count = 0
    stack = [g]
    while stack:
        count += 1
        if count > limit:
            return count
        t = stack.pop()
        if isinstance(t, GComm):
            stack.extend(b.cont for b in t.branches)
        elif isinstance(t, GMu):
            stack.append(t.body)
        elif isinstance(t, GPar):
            stack.append(t.left)
            stack.append(t.right)
    return count


def roles_of(g: GlobalType) -> frozenset[Role]:
    """All roles occurring syntactically as a sender or receiver."""
    if isinstance(g, GComm):
        acc = {g.sender, g.receiver}
        for b in g.branches:
            acc |= roles_of(b.cont)
        return frozenset(acc)
    if isinstance(g, GMu):
        return roles_of(g.body)
    if isinstance(g, GPar):
        return roles_of(g.left) | roles_of(g.right)
    return frozenset()


# ---------------------------------------------------------------------------
# Free variables and substitution


def free_global_vars(g: GlobalType) -> frozenset[RecVarName]:
    if isinstance(g, GVar):
        return frozenset((g.var,))
    if isinstance(g, GMu):
        return free_global_vars(g.body) - {g.var}
    if isinstance(g, GComm):
        out: frozenset[RecVarName] = frozenset()
        for b in g.branches:
            out |= free_global_vars(b.cont)
        return out
    if isinstance(g, GPar):
        return free_global_vars(g.left) | free_global_vars(g.right)
    return frozenset()


def free_process_rec_vars(p: Process) -> frozenset[RecVarName]:
    if isinstance(p, PVar):
        return frozenset((p.var,))
    if isinstance(p, PRec):
        return free_process_rec_vars(p.body) - {p.var}
    if isinstance(p, PSend):
        return free_process_rec_vars(p.cont)
    if isinstance(p, PRecv):
        out: frozenset[RecVarName] = frozenset()
        for b in p.branches:
            out |= free_process_rec_vars(b.cont)
        return out
    if isinstance(p, PLet):
        return free_process_rec_vars(p.cont)
    if isinstance(p, PIf):
        return free_process_rec_vars(p.then) | free_process_rec_vars(p.orelse)
    return frozenset()


def free_expr_vars(e: Expr) -> frozenset[VarName]:
    if isinstance(e, VarRef):
        return frozenset((e.name,))
    if isinstance(e, (Add, Mul, Eq)):
        return free_expr_vars(e.left) | free_expr_vars(e.right)
    return frozenset()


def free_data_vars(p: Process) -> frozenset[VarName]:
    if isinstance(p, PSend):
        return free_expr_vars(p.payload) | free_data_vars(p.cont)
    if isinstance(p, PRecv):
        out: frozenset[VarName] = frozenset()
        for b in p.branches:
            out |= free_data_vars(b.cont) - {b.binder}
        return out
    if isinstance(p, PLet):
        return free_expr_vars(p.rhs) | (free_data_vars(p.cont) - {p.binder})
    if isinstance(p, PIf):
        return free_expr_vars(p.cond) | free_data_vars(p.then) | free_data_vars(p.orelse)
    if isinstance(p, PRec):
        return free_data_vars(p.body)
    return frozenset()


def _fresh(name: str, avoid: frozenset[str]) -> str:
    candidate = name
    n = 1
    while candidate in avoid:
        candidate = f"{name}_{n}"
        n += 1
    return candidate


def substitute_global(g: GlobalType, x: RecVarName, replacement: GlobalType) -> GlobalType:
    """Capture-avoiding substitution of free occurrences of x in g."""
    if isinstance(g, GVar):
        return replacement if g.var == x else g
    if isinstance(g, GEnd):
        return g
    if isinstance(g, GComm):
        return replace(g, branches=tuple(
            replace(b, cont=substitute_global(b.cont, x, replacement)) for b in g.branches))
    if isinstance(g, GPar):
        return replace(g,
                       left=substitute_global(g.left, x, replacement),
                       right=substitute_global(g.right, x, replacement))
    if isinstance(g, GMu):
        if g.var == x:
            return g
        if g.var in free_global_vars(replacement):
            avoid = free_global_vars(replacement) | free_global_vars(g.body) | {x}
            renamed = _fresh(g.var, avoid)
            body = substitute_global(g.body, g.var, GVar(renamed))
            return replace(g, var=renamed, body=substitute_global(body, x, replacement))
        return replace(g, body=substitute_global(g.body, x, replacement))
    raise TypeError(f"not a global type: {g!r}")


def substitute_process_rec(p: Process, x: RecVarName, replacement: Process) -> Process:
    """Capture-avoiding substitution of the recursion variable x in p."""
    if isinstance(p, PVar):
        return replacement if p.var == x else p
    if isinstance(p, PEnd):
        return p
    if isinstance(p, PSend):
        return replace(p, cont=substitute_process_rec(p.cont, x, replacement))
    if isinstance(p, PRecv):
        return replace(p, branches=tuple(
            replace(b, cont=substitute_process_rec(b.cont, x, replacement)) for b in p.branches))
    if isinstance(p, PLet):
        return replace(p, cont=substitute_process_rec(p.cont, x, replacement))
    if isinstance(p, PIf):
        return replace(p,
                       then=substitute_process_rec(p.then, x, replacement),
                       orelse=substitute_process_rec(p.orelse, x, replacement))
    if isinstance(p, PRec):
        if p.var == x:
            return p
        if p.var in free_process_rec_vars(replacement):
            avoid = free_process_rec_vars(replacement) | free_process_rec_vars(p.body) | {x}
            renamed = _fresh(p.var, avoid)
            body = substitute_process_rec(p.body, p.var, PVar(renamed))
            return replace(p, var=renamed, body=substitute_process_rec(body, x, replacement))
        return replace(p, body=substitute_process_rec(p.body, x, replacement))
    raise TypeError(f"not a process: {p!r}")


def substitute_expr(e: Expr, x: VarName, v: Expr) -> Expr:
    if isinstance(e, VarRef):
        return v if e.name == x else e
    if isinstance(e, (Add, Mul, Eq)):
        return replace(e, left=substitute_expr(e.left, x, v), right=substitute_expr(e.right, x, v))
    return e


def substitute_process_val(p: Process, x: VarName, v: Expr) -> Process:
    """Substitute the data variable x by value v, respecting Let/Recv binders."""
    if isinstance(p, PSend):
        return replace(p,
                       payload=substitute_expr(p.payload, x, v),
                       cont=substitute_process_val(p.cont, x, v))
    if isinstance(p, PRecv):
        return replace(p, branches=tuple(
            b if b.binder == x else replace(b, cont=substitute_process_val(b.cont, x, v))
            for b in p.branches))
    if isinstance(p, PLet):
        rhs = substitute_expr(p.rhs, x, v)
        if p.binder == x:
            return replace(p, rhs=rhs)
        return replace(p, rhs=rhs, cont=substitute_process_val(p.cont, x, v))
    if isinstance(p, PIf):
        return replace(p,
                       cond=substitute_expr(p.cond, x, v),
                       then=substitute_process_val(p.then, x, v),
                       orelse=substitute_process_val(p.orelse, x, v))
    if isinstance(p, PRec):
        return replace(p, body=substitute_process_val(p.body, x, v))
    return p


# ---------------------------------------------------------------------------
# Well-formedness


@dataclass(frozen=True)
class WfViolation:
    """One well-formedness defect with a human-readable description."""
    code: str
    message: str
    span: Optional[SourceSpan] = field(**_SPAN)

    def __str__(self) -> str:
        where = f" at {self.span}" if self.span else ""
        return f"{self.code}: {self.message}{where}"


def check_wellformed_global(g: GlobalType) -> list[WfViolation]:
    """Report every violated invariant of a global type; empty means ok.

    Checks: duplicate branch labels, self-communication, unguarded or unbound
    recursion, shadowed binders, overlapping or recursion-crossing Par
    operands.
    """
    out: list[WfViolation] = []

    def walk(t: GlobalType, bound: frozenset[str], unguarded: frozenset[str]) -> None:
        if isinstance(t, GEnd):
            return
        if isinstance(t, GVar):
            if t.var not in bound:
                out.append(WfViolation("unbound-var", f"recursion variable {t.var} is unbound", t.span))
            elif t.var in unguarded:
                out.append(WfViolation("unguarded", f"recursion variable {t.var} occurs unguarded", t.span))
            return
        if isinstance(t, GMu):
            if t.var in bound:
                out.append(WfViolation("shadowed-binder", f"mu binder {t.var} shadows an outer binder", t.span))
            walk(t.body, bound | {t.var}, unguarded | {t.var})
            return
        if isinstance(t, GComm):
            if not t.branches:
                out.append(WfViolation("empty-choice", "communication with no branches", t.span))
            if t.sender == t.receiver:
                out.append(WfViolation("self-communication",
                                       f"role {t.sender} sends to itself", t.span))
            seen: set[str] = set()
            for b in t.branches:
                if b.label in seen:
                    out.append(WfViolation("duplicate-label",
                                           f"branch label {b.label} repeated in one choice", t.span))
                seen.add(b.label)
                walk(b.cont, bound, frozenset())
            return
        if isinstance(t, GPar):
            overlap = roles_of(t.left) & roles_of(t.right)
            if overlap:
                out.append(WfViolation("par-overlap",
                                       "par operands share roles: " + ", ".join(sorted(overlap)), t.span))
            # A recursion variable bound outside a par would re-introduce the
            # whole type inside one operand on unfolding, breaking the role
            # disjointness the rule relies on.
            crossing = (free_global_vars(t.left) | free_global_vars(t.right)) & bound
            if crossing:
                out.append(WfViolation("rec-crosses-par",
                                       "recursion variable bound outside par occurs inside: "
                                       + ", ".join(sorted(crossing)), t.span))
            walk(t.left, bound, unguarded)
            walk(t.right, bound, unguarded)
            return
        raise TypeError(f"not a global type: {t!r}")

    walk(g, frozenset(), frozenset())
    return out


def check_wellformed_process(p: Process) -> list[WfViolation]:
    """Report every violated invariant of a process; empty means ok.

    Checks: duplicate receive labels, recursion that is not message-guarded,
    unbound recursion variables, unbound data variables, shadowed binders.
    """
    out: list[WfViolation] = []

    def walk(t: Process, bound: frozenset[str], unguarded: frozenset[str],
             data: frozenset[str]) -> None:
        if isinstance(t, PEnd):
            return
        if isinstance(t, PVar):
            if t.var not in bound:
                out.append(WfViolation("unbound-var", f"recursion variable {t.var} is unbound", t.span))
            elif t.var in unguarded:
                out.append(WfViolation("not-message-guarded",
                                       f"recursion variable {t.var} occurs under no send/receive", t.span))
            return
        if isinstance(t, PRec):
            if t.var in bound:
                out.append(WfViolation("shadowed-binder", f"rec binder {t.var} shadows an outer binder", t.span))
            walk(t.body, bound | {t.var}, unguarded | {t.var}, data)
            return
        if isinstance(t, PSend):
            check_expr(t.payload, data)
            walk(t.cont, bound, frozenset(), data)
            return
        if isinstance(t, PRecv):
            seen: set[str] = set()
            if not t.branches:
                out.append(WfViolation("empty-choice", "receive with no branches", t.span))
            for b in t.branches:
                if b.label in seen:
                    out.append(WfViolation("duplicate-label",
                                           f"receive label {b.label} repeated in one branching", t.span))
                seen.add(b.label)
                walk(b.cont, bound, frozenset(), data | {b.binder})
            return
        if isinstance(t, PLet):
            check_expr(t.rhs, data)
            walk(t.cont, bound, unguarded, data | {t.binder})
            return
        if isinstance(t, PIf):
            check_expr(t.cond, data)
            walk(t.then, bound, unguarded, data)
            walk(t.orelse, bound, unguarded, data)
            return
        raise TypeError(f"not a process: {t!r}")

    def check_expr(e: Expr, data: frozenset[str]) -> None:
        for name in sorted(free_expr_vars(e) - data):
            out.append(WfViolation("unbound-var", f"data variable {name} is unbound",
                                   getattr(e, "span", None)))

    walk(p, frozenset(), frozenset(), frozenset())
    return out


# ---------------------------------------------------------------------------
# Pretty printing (the inverse of the surface grammar)


def pretty_payload(t: PayloadType) -> str:
    return t.value


def pretty_expr(e: Expr) -> str:
    return _pretty_expr(e, 0)


# Precedence levels: == (1) < + (2) < * (3).
def _pretty_expr(e: Expr, level: int) -> str:
    if isinstance(e, UnitLit):
        return "unit"
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, NatLit):
        return str(e.value)
    if isinstance(e, IntLit):
        return f"+{e.value}" if e.value >= 0 else str(e.value)
    if isinstance(e, StrLit):
        escaped = e.value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(e, VarRef):
        return e.name
    if isinstance(e, Eq):
        s = f"{_pretty_expr(e.left, 2)} == {_pretty_expr(e.right, 2)}"
        return f"({s})" if level > 1 else s
    if isinstance(e, Add):
        s = f"{_pretty_expr(e.left, 2)} + {_pretty_expr(e.right, 2)}"
        return f"({s})" if level > 2 else s
    if isinstance(e, Mul):
        s = f"{_pretty_expr(e.left, 3)} * {_pretty_expr(e.right, 3)}"
        return f"({s})" if level > 3 else s
    raise TypeError(f"not an expression: {e!r}")


def pretty_global(g: GlobalType) -> str:
    if isinstance(g, GEnd):
        return "end"
    if isinstance(g, GVar):
        return g.var
    if isinstance(g, GMu):
        return f"mu {g.var} . {pretty_global(g.body)}"
    if isinstance(g, GPar):
        return f"par {{ {pretty_global(g.left)} || {pretty_global(g.right)} }}"
    if isinstance(g, GComm):
        branches = [f"{b.label}({b.payload}) . {pretty_global(b.cont)}" for b in g.branches]
        if len(branches) == 1:
            return f"{g.sender} -> {g.receiver}: {branches[0]}"
        return f"{g.sender} -> {g.receiver} {{ {', '.join(branches)} }}"
    raise TypeError(f"not a global type: {g!r}")


def pretty_process(p: Process) -> str:
    if isinstance(p, PEnd):
        return "end"
    if isinstance(p, PVar):
        return p.var
    if isinstance(p, PRec):
        return f"rec {p.var} . {pretty_process(p.body)}"
    if isinstance(p, PSend):
        return f"send {p.to} {p.label}({pretty_expr(p.payload)}) . {pretty_process(p.cont)}"
    if isinstance(p, PRecv):
        branches = [f"{b.label}({b.binder}: {b.annot}) . {pretty_process(b.cont)}"
                    for b in p.branches]
        return f"recv {p.from_} {{ {', '.join(branches)} }}"
    if isinstance(p, PLet):
        return f"let {p.binder} = {pretty_expr(p.rhs)} in {pretty_process(p.cont)}"
    if isinstance(p, PIf):
        return f"if {pretty_expr(p.cond)} then {pretty_process(p.then)} else {pretty_process(p.orelse)}"
    raise TypeError(f"not a process: {p!r}")


def summarize_process(p: Process, limit: int = 48) -> str:
    """Shortened rendering for diagnostics and derivation trees."""
    text = pretty_process(p)
    if len(text) <= limit:
        return text
    return text[: limit - 1] + "…"


def iter_subprocesses(p: Process) -> Iterator[Process]:
    yield p
    if isinstance(p, PSend):
        yield from iter_subprocesses(p.cont)
    elif isinstance(p, PRecv):
        for b in p.branches:
            yield from iter_subprocesses(b.cont)
    elif isinstance(p, PLet):
        yield from iter_subprocesses(p.cont)
    elif isinstance(p, PIf):
        yield from iter_subprocesses(p.then)
        yield from iter_subprocesses(p.orelse)
    elif isinstance(p, PRec):
        yield from iter_subprocesses(p.body)


def is_message_guarded(body: Process, var: RecVarName) -> bool:
    """True when every occurrence of var in body sits under a send or receive."""

    def walk(t: Process, guarded: bool) -> bool:
        if isinstance(t, PVar):
            return guarded or t.var != var
        if isinstance(t, PEnd):
            return True
        if isinstance(t, PRec):
            if t.var == var:
                return True
            return walk(t.body, guarded)
        if isinstance(t, PSend):
            return walk(t.cont, True)
        if isinstance(t, PRecv):
            return all(walk(b.cont, True) for b in t.branches)
        if isinstance(t, PLet):
            return walk(t.cont, guarded)
        if isinstance(t, PIf):
            return walk(t.then, guarded) and walk(t.orelse, guarded)
        raise TypeError(f"not a process: {t!r}")

    return walk(body, False)
