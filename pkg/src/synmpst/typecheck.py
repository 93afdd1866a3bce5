"""Process and session typing directly against MLTS states.

All rules except skipping are syntax-directed and applied first; when a
send/receive head finds its role disabled at the current state, the skip rule
takes over, computing future obligations from the reachability relations. The
two phases are mutually exclusive, so checking always terminates on a finite
classifier.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .lts import active, reach_strong_without, reach_without, step_with
from .mlts import Mlts
from .terms import (Add, BoolLit, Eq, Expr, IntLit, Mul, NatLit, PayloadType,
                    PEnd, PIf, PLet, PRec, PRecv, Process, PSend, PVar,
                    Role, Session, SourceSpan, StrLit, UnitLit, VarRef,
                    is_message_guarded, obj, pretty_expr, summarize_process)

RULE_SEND = "⊢-Send"
RULE_RECV = "⊢-Recv"
RULE_SKIP = "⊢-Skip"
RULE_END = "⊢-End"
RULE_LET = "⊢-Let"
RULE_IF = "⊢-If"
RULE_REC = "⊢-Rec"
RULE_VAR = "⊢-Var"
RULE_COMP = "⊢-Comp"

UNEXPECTED_SEND = "UnexpectedSend"
MISSING_RECV_BRANCH = "MissingRecvBranch"
PAYLOAD_MISMATCH = "PayloadMismatch"
SKIP_FAILED = "SkipFailed"
NOT_TERMINABLE = "NotTerminable"
VAR_STATE_UNREACHABLE = "VarStateUnreachable"
UNBOUND_VAR = "UnboundVar"
ROLE_CLASH = "RoleClash"
ROLE_UNIMPLEMENTED = "RoleUnimplemented"
EXPR_ILL_TYPED = "ExprIllTyped"

DataEnv = tuple[tuple[str, PayloadType], ...]
SessEnv = tuple[tuple[str, int], ...]


@dataclass(frozen=True)
class TcError:
    """A typing failure, naming the role under check and the state reached."""
    kind: str
    role: Role
    state: int
    message: str
    premise: Optional[int] = None
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        extra = f" (premise {self.premise})" if self.premise is not None else ""
        return f"{self.kind}{extra}: {self.message}"

    def to_json_obj(self) -> dict:
        return {
            "severity": "error",
            "kind": self.kind,
            "role": self.role,
            "state": self.state,
            "premise": self.premise,
            "span": str(self.span) if self.span else None,
            "message": self.message,
        }


@dataclass(frozen=True)
class Derivation:
    """Tree of applied typing rules; children follow the rule's premises."""
    rule: str
    role: Role
    state: int
    proc: str
    children: tuple["Derivation", ...] = ()
    obligations: tuple[int, ...] = ()
    term: Optional[Process] = field(default=None, repr=False)
    gamma: DataEnv = field(default=(), repr=False)
    delta: SessEnv = field(default=(), repr=False)

    def iter_nodes(self):
        yield self
        for c in self.children:
            yield from c.iter_nodes()


def render_derivation(d: Derivation, indent: int = 0) -> str:
    pad = "  " * indent
    extra = f"  [obligations: {', '.join(f's{o}' for o in d.obligations)}]" if d.obligations else ""
    lines = [f"{pad}{d.rule} {d.role} @ s{d.state}  {d.proc}{extra}"]
    for c in d.children:
        lines.append(render_derivation(c, indent + 1))
    return "\n".join(lines)


class _Fail(Exception):
    def __init__(self, err: TcError):
        super().__init__(str(err))
        self.err = err


def _lookup(env, name):
    for key, value in reversed(env):
        if key == name:
            return value
    return None


def type_expr(env: DataEnv, e: Expr) -> Union[PayloadType, TcError]:
    """Type of an expression in env, or the error that rules it out."""
    try:
        return _type_expr(env, e)
    except _Fail as f:
        return f.err


def _type_expr(env: DataEnv, e: Expr) -> PayloadType:
    if isinstance(e, UnitLit):
        return PayloadType.UNIT
    if isinstance(e, BoolLit):
        return PayloadType.BOOL
    if isinstance(e, NatLit):
        return PayloadType.NAT
    if isinstance(e, IntLit):
        return PayloadType.INT
    if isinstance(e, StrLit):
        return PayloadType.STR
    if isinstance(e, VarRef):
        t = _lookup(env, e.name)
        if t is None:
            raise _Fail(TcError(UNBOUND_VAR, "", -1, f"variable {e.name} is unbound", span=e.span))
        return t
    if isinstance(e, (Add, Mul)):
        op = "+" if isinstance(e, Add) else "*"
        t1 = _type_expr(env, e.left)
        t2 = _type_expr(env, e.right)
        if t1 == t2 and t1 in (PayloadType.NAT, PayloadType.INT):
            return t1
        raise _Fail(TcError(EXPR_ILL_TYPED, "", -1,
                            f"operator {op} needs two Nat or two Int operands, got {t1} and {t2}",
                            span=e.span))
    if isinstance(e, Eq):
        t1 = _type_expr(env, e.left)
        t2 = _type_expr(env, e.right)
        if t1 != t2:
            raise _Fail(TcError(EXPR_ILL_TYPED, "", -1,
                                f"== compares a {t1} with a {t2}", span=e.span))
        return PayloadType.BOOL
    raise TypeError(f"not an expression: {e!r}")


class Checker:
    """Typing judgements against one fixed classifier.

    strict_var replaces the reachability premise of the recursion-variable
    rule by state equality; it exists as a regression guard for the relaxed
    rule and is off by default.
    """

    def __init__(self, m: Mlts, *, strict_var: bool = False):
        self.m = m
        self.strict_var = strict_var
        self._memo: dict = {}

    # -- public -------------------------------------------------------------

    def check_process(self, role: Role, p: Process, state: Optional[int] = None,
                      gamma: DataEnv = (), delta: SessEnv = ()) -> Derivation:
        """Derivation for gamma; delta |- p at role |> state, or raise _Fail."""
        s = self.m.initial if state is None else state
        return self._check(gamma, delta, role, p, s)

    # -- rules ---------------------------------------------------------------

    def _check(self, gamma: DataEnv, delta: SessEnv, role: Role, p: Process,
               s: int) -> Derivation:
        key = (role, p, s, gamma, delta)
        hit = self._memo.get(key)
        if hit is not None:
            if isinstance(hit, Derivation):
                return hit
            raise _Fail(hit)
        try:
            result = self._apply(gamma, delta, role, p, s)
        except _Fail as f:
            self._memo[key] = f.err
            raise
        self._memo[key] = result
        return result

    def _node(self, rule, role, s, p, gamma, delta, children=(), obligations=()):
        return Derivation(rule, role, s, summarize_process(p), tuple(children),
                          tuple(obligations), p, gamma, delta)

    def _expr_type(self, gamma: DataEnv, e: Expr, role: Role, s: int) -> PayloadType:
        try:
            return _type_expr(gamma, e)
        except _Fail as f:
            raise _Fail(TcError(f.err.kind, role, s, f.err.message, span=f.err.span)) from None

    def _apply(self, gamma: DataEnv, delta: SessEnv, role: Role, p: Process,
               s: int) -> Derivation:
        m = self.m

        if isinstance(p, PEnd):
            # Terminating is allowed when the role can never act again along
            # role-free futures.
            for n in reach_without(m, s, (role,)):
                if step_with(m, n, (role,)):
                    raise _Fail(TcError(
                        NOT_TERMINABLE, role, s,
                        f"{role} ends, but state s{n} (reachable without {role}) "
                        f"still involves {role}", span=p.span))
            return self._node(RULE_END, role, s, p, gamma, delta)

        if isinstance(p, PVar):
            bound = _lookup(delta, p.var)
            if bound is None:
                raise _Fail(TcError(UNBOUND_VAR, role, s,
                                    f"recursion variable {p.var} is unbound", span=p.span))
            if self.strict_var:
                ok = bound == s
            else:
                ok = s in reach_without(m, bound, (role,))
            if not ok:
                raise _Fail(TcError(
                    VAR_STATE_UNREACHABLE, role, s,
                    f"recursion variable {p.var} was bound at state s{bound}, which does not "
                    f"reach s{s} without {role}", span=p.span))
            return self._node(RULE_VAR, role, s, p, gamma, delta)

        if isinstance(p, PLet):
            t = self._expr_type(gamma, p.rhs, role, s)
            child = self._check(gamma + ((p.binder, t),), delta, role, p.cont, s)
            return self._node(RULE_LET, role, s, p, gamma, delta, (child,))

        if isinstance(p, PIf):
            t = self._expr_type(gamma, p.cond, role, s)
            if t != PayloadType.BOOL:
                raise _Fail(TcError(EXPR_ILL_TYPED, role, s,
                                    f"if condition has type {t}, expected Bool", span=p.span))
            then = self._check(gamma, delta, role, p.then, s)
            orelse = self._check(gamma, delta, role, p.orelse, s)
            return self._node(RULE_IF, role, s, p, gamma, delta, (then, orelse))

        if isinstance(p, PRec):
            if not is_message_guarded(p.body, p.var):
                raise ValueError(
                    f"process for {role} is not message-guarded on {p.var}; "
                    "well-formedness must be checked before typing")
            child = self._check(gamma, delta + ((p.var, s),), role, p.body, s)
            return self._node(RULE_REC, role, s, p, gamma, delta, (child,))

        if isinstance(p, PSend):
            t = self._expr_type(gamma, p.payload, role, s)
            matches = [(a, dst) for a, dst in m.transitions_from(s)
                       if a.sender == role and a.receiver == p.to
                       and a.label == p.label and a.payload == t]
            if matches:
                failure: Optional[_Fail] = None
                for _, dst in matches:
                    try:
                        child = self._check(gamma, delta, role, p.cont, dst)
                        return self._node(RULE_SEND, role, s, p, gamma, delta, (child,))
                    except _Fail as f:
                        failure = failure or f
                assert failure is not None
                raise failure
            if not step_with(m, s, (role,)):
                return self._skip(gamma, delta, role, p, s)
            mistyped = sorted(a.payload.value for a, _ in m.transitions_from(s)
                              if a.sender == role and a.receiver == p.to and a.label == p.label)
            if mistyped:
                raise _Fail(TcError(
                    PAYLOAD_MISMATCH, role, s,
                    f"{role} sends {p.label}({pretty_expr(p.payload)}) of type {t}, but state "
                    f"s{s} specifies {p.label}({', '.join(mistyped)})", span=p.span))
            raise _Fail(TcError(
                UNEXPECTED_SEND, role, s,
                f"state s{s} does not let {role} send {p.label} to {p.to}", span=p.span))

        if isinstance(p, PRecv):
            incoming = [(a, dst) for a, dst in m.transitions_from(s)
                        if a.sender == p.from_ and a.receiver == role]
            if not incoming:
                if not step_with(m, s, (role,)):
                    return self._skip(gamma, delta, role, p, s)
                raise _Fail(TcError(
                    ROLE_CLASH, role, s,
                    f"state s{s} involves {role}, but not in a receive from {p.from_}",
                    span=p.span))
            by_label = {b.label: b for b in p.branches}
            children = []
            for a, dst in incoming:
                branch = by_label.get(a.label)
                if branch is None:
                    raise _Fail(TcError(
                        MISSING_RECV_BRANCH, role, s,
                        f"state s{s} specifies a receive of {a.label} from {p.from_}, but "
                        f"{role} implements no such branch", span=p.span))
                if branch.annot != a.payload:
                    raise _Fail(TcError(
                        PAYLOAD_MISMATCH, role, s,
                        f"branch {a.label}({branch.binder}: {branch.annot}) does not match "
                        f"payload type {a.payload} at state s{s}", span=p.span))
                children.append(self._check(
                    gamma + ((branch.binder, a.payload),), delta, role, branch.cont, dst))
            return self._node(RULE_RECV, role, s, p, gamma, delta, children)

        raise TypeError(f"not a process: {p!r}")

    def _skip(self, gamma: DataEnv, delta: SessEnv, role: Role, p: Process,
              s: int) -> Derivation:
        obligations = self._try_skip(gamma, delta, role, p, s)
        children = [self._check(gamma, delta, role, p, d) for d in obligations]
        return self._node(RULE_SKIP, role, s, p, gamma, delta, children, obligations)

    def _try_skip(self, gamma: DataEnv, delta: SessEnv, role: Role, p: Process,
                  s: int) -> tuple[int, ...]:
        """Check the skip premises at s; return the obligation states.

        Premises, in reporting order: (1) the role is disabled now; (2) from
        every near future a state enabling the role is strongly reachable;
        (3) the process must re-check at each such state (done by the caller);
        (4) a direct communication with the process's partner never becomes
        available through transitions involving neither of them.
        """
        m = self.m
        partner = obj(p)
        if partner is None:
            raise ValueError("skip applies only to send/receive processes")

        if step_with(m, s, (role,)):
            raise _Fail(TcError(
                SKIP_FAILED, role, s,
                f"{role} is enabled at state s{s}, so it may not skip", premise=1, span=p.span))

        near_futures = reach_without(m, s, (role,))
        obligations: set[int] = set()
        for n in near_futures:
            targets = [d for d in reach_strong_without(m, n, (role,))
                       if step_with(m, d, (role,))]
            if not targets:
                raise _Fail(TcError(
                    SKIP_FAILED, role, s,
                    f"from near future s{n}, no state enabling {role} is strongly reachable",
                    premise=2, span=p.span))
            obligations.update(targets)

        for n in near_futures:
            if step_with(m, n, (role,)):
                continue
            for w in reach_without(m, n, (role, partner)):
                if step_with(m, w, (role, partner)):
                    raise _Fail(TcError(
                        SKIP_FAILED, role, s,
                        f"a direct {role}/{partner} communication becomes available at s{w} "
                        f"without either of them acting (near future s{n})",
                        premise=4, span=p.span))

        return tuple(sorted(obligations))


def type_process(m: Mlts, gamma: DataEnv, delta: SessEnv, role: Role, p: Process,
                 s: int, *, strict_var: bool = False) -> Union[Derivation, TcError]:
    """Type p as an implementation of role at state s of m."""
    try:
        return Checker(m, strict_var=strict_var).check_process(role, p, s, gamma, delta)
    except _Fail as f:
        return f.err


def try_skip(m: Mlts, gamma: DataEnv, delta: SessEnv, role: Role, p: Process,
             s: int) -> Union[tuple[int, ...], TcError]:
    """Skip premises at s; the obligation states on success."""
    try:
        return Checker(m)._try_skip(gamma, delta, role, p, s)
    except _Fail as f:
        return f.err


def type_session(m: Mlts, sess: Session, roles_required: frozenset[Role] = frozenset(),
                 *, strict_var: bool = False
                 ) -> Union[dict[Role, Derivation], list[TcError]]:
    """Type every process of a session at the initial state of m.

    Every role in roles_required, and every role active at the initial state,
    must be implemented. All failures are collected rather than reported
    one at a time.
    """
    errors: list[TcError] = []
    implemented = set(sess.roles)
    required = set(roles_required)
    required.update(r for r in m.roles if active(m, m.initial, r))
    for missing in sorted(required - implemented):
        errors.append(TcError(
            ROLE_UNIMPLEMENTED, missing, m.initial,
            f"role {missing} occurs in the protocol but is not implemented"))

    checker = Checker(m, strict_var=strict_var)
    derivations: dict[Role, Derivation] = {}
    for role, proc in sess.entries:
        try:
            derivations[role] = checker.check_process(role, proc)
        except _Fail as f:
            errors.append(f.err)
    if errors:
        return errors
    return derivations
