"""Surface syntax: a textual DSL for global types, processes and sessions,
plus the JSON format for explicit MLTSs.

Lexical conventions: keywords are reserved; message labels, recursion
variables and declaration names start uppercase; roles and data variables
start lowercase. `//` starts a line comment. Int literals carry their sign
(`+7`, `-3`); unsigned numerals are Nat literals.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Union

from .mlts import Mlts
from .terms import (Add, BoolLit, Eq, Expr, GBranch, GComm, GEnd, GlobalAction,
                    GlobalType, GMu, GPar, GVar, IntLit, Mul, NatLit,
                    PayloadType, PAYLOAD_TYPES, PEnd, PIf, PLet, PRec, PRecv,
                    Process, PSend, PVar, RecvBranch, Role, Session,
                    SourceSpan, StrLit, UnitLit, VarRef,
                    check_wellformed_global, check_wellformed_process,
                    pretty_global, pretty_process)

KEYWORDS = {
    "global", "process", "session", "at", "of", "mu", "end", "par",
    "send", "recv", "let", "in", "if", "then", "else", "rec",
    "true", "false", "unit",
}

_SYMBOLS = ["->", "==", "||", "(", ")", "{", "}", "[", "]",
            ".", ",", ":", ";", "=", "+", "*"]

_EXPR_ENDERS = {"NAT", "INT", "STRING", "LOWER", ")", "true", "false", "unit"}


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    message: str
    span: SourceSpan

    def __str__(self) -> str:
        return f"{self.span}: {self.severity}: {self.message}"


@dataclass(frozen=True)
class Token:
    kind: str      # keyword text, symbol text, or UPPER/LOWER/NAT/INT/STRING/EOF
    text: str
    line: int
    col: int

    def span(self, file: str) -> SourceSpan:
        width = max(len(self.text), 1)
        return SourceSpan(file, self.line, self.col, self.line, self.col + width - 1)


class ParseAbort(Exception):
    def __init__(self, diagnostic: Diagnostic):
        super().__init__(str(diagnostic))
        self.diagnostic = diagnostic


def tokenize(text: str, path: str) -> list[Token]:
    tokens: list[Token] = []
    line, col, i = 1, 1, 0
    n = len(text)

    def error(message: str, ln: int, cl: int) -> ParseAbort:
        return ParseAbort(Diagnostic("error", message, SourceSpan(path, ln, cl, ln, cl)))

    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == '"':
            start_line, start_col = line, col
            i += 1
            col += 1
            chars: list[str] = []
            while True:
                if i >= n or text[i] == "\n":
                    raise error("unterminated string literal", start_line, start_col)
                c = text[i]
                if c == '"':
                    i += 1
                    col += 1
                    break
                if c == "\\":
                    if i + 1 >= n or text[i + 1] not in '"\\':
                        raise error("unsupported escape in string literal", line, col)
                    chars.append(text[i + 1])
                    i += 2
                    col += 2
                    continue
                chars.append(c)
                i += 1
                col += 1
            tokens.append(Token("STRING", "".join(chars), start_line, start_col))
            continue
        if ch in "+-" and i + 1 < n and text[i + 1].isdigit():
            # A sign starts an Int literal unless the previous token could end
            # an expression, in which case + is the binary operator.
            prev = tokens[-1].kind if tokens else None
            if ch == "-" or prev not in _EXPR_ENDERS:
                start_col = col
                j = i + 1
                while j < n and text[j].isdigit():
                    j += 1
                tokens.append(Token("INT", text[i:j], line, start_col))
                col += j - i
                i = j
                continue
        if ch.isdigit():
            start_col = col
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(Token("NAT", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            start_col = col
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            if word in KEYWORDS:
                kind = word
            elif word in PAYLOAD_TYPES:
                kind = "PTYPE"
            elif word[0].isupper():
                kind = "UPPER"
            else:
                kind = "LOWER"
            tokens.append(Token(kind, word, line, start_col))
            col += j - i
            i = j
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(Token(sym, sym, line, col))
                i += len(sym)
                col += len(sym)
                break
        else:
            raise error(f"unexpected character {ch!r}", line, col)
    tokens.append(Token("EOF", "", line, col))
    return tokens


@dataclass(frozen=True)
class SessionDecl:
    name: str
    global_name: str
    bindings: tuple[tuple[Role, str], ...]
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass
class ProtocolFile:
    path: str
    globals: dict[str, GlobalType]
    processes: dict[str, tuple[Role, Process]]
    sessions: dict[str, SessionDecl]
    order: tuple[tuple[str, str], ...]
    diagnostics: tuple[Diagnostic, ...] = ()

    def session(self, name: str) -> Session:
        decl = self.sessions[name]
        return Session(tuple((role, self.processes[pname][1])
                             for role, pname in decl.bindings))


class _Parser:
    def __init__(self, tokens: list[Token], path: str):
        self.tokens = tokens
        self.path = path
        self.pos = 0

    # -- token plumbing -----------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def at(self, kind: str) -> bool:
        return self.peek().kind == kind

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def accept(self, kind: str) -> Optional[Token]:
        if self.at(kind):
            return self.advance()
        return None

    def expect(self, kind: str, what: Optional[str] = None) -> Token:
        if self.at(kind):
            return self.advance()
        tok = self.peek()
        want = what or f"'{kind}'"
        found = tok.text or "end of file"
        raise ParseAbort(Diagnostic("error", f"expected {want}, found {found!r}",
                                    tok.span(self.path)))

    def expect_lower(self, what: str) -> Token:
        return self.expect("LOWER", what)

    def expect_upper(self, what: str) -> Token:
        return self.expect("UPPER", what)

    def span_from(self, start: Token) -> SourceSpan:
        end = self.tokens[max(self.pos - 1, 0)]
        end_col = end.col + max(len(end.text), 1) - 1
        return SourceSpan(self.path, start.line, start.col, end.line, end_col)

    # -- declarations -------------------------------------------------------

    def parse_file(self) -> tuple[dict, dict, dict, tuple]:
        globals_: dict[str, GlobalType] = {}
        processes: dict[str, tuple[Role, Process]] = {}
        sessions: dict[str, SessionDecl] = {}
        order: list[tuple[str, str]] = []
        while not self.at("EOF"):
            tok = self.peek()
            if tok.kind == "global":
                self.advance()
                name = self.expect_upper("a global-type name").text
                self.expect("=")
                term = self.gtype()
                self._declare(globals_, processes, sessions, "global", name, tok)
                globals_[name] = term
                order.append(("global", name))
            elif tok.kind == "process":
                self.advance()
                name = self.expect_upper("a process name").text
                self.expect("at")
                role = self.expect_lower("a role").text
                self.expect("=")
                term = self.proc()
                self._declare(globals_, processes, sessions, "process", name, tok)
                processes[name] = (role, term)
                order.append(("process", name))
            elif tok.kind == "session":
                self.advance()
                name = self.expect_upper("a session name").text
                self.expect("of")
                gname = self.expect_upper("a global-type name").text
                self.expect("=")
                self.expect("{")
                bindings = [self.binding()]
                while self.accept(","):
                    bindings.append(self.binding())
                self.expect("}")
                self._declare(globals_, processes, sessions, "session", name, tok)
                sessions[name] = SessionDecl(name, gname, tuple(bindings), self.span_from(tok))
                order.append(("session", name))
            else:
                raise ParseAbort(Diagnostic(
                    "error", f"expected a declaration, found {tok.text or 'end of file'!r}",
                    tok.span(self.path)))
            self.expect(";")
        return globals_, processes, sessions, tuple(order)

    def _declare(self, globals_, processes, sessions, kind: str, name: str, tok: Token) -> None:
        table = {"global": globals_, "process": processes, "session": sessions}[kind]
        if name in table:
            raise ParseAbort(Diagnostic("error", f"duplicate {kind} declaration {name}",
                                        tok.span(self.path)))

    def binding(self) -> tuple[Role, str]:
        role = self.expect_lower("a role").text
        self.expect(":")
        pname = self.expect_upper("a process name").text
        return role, pname

    # -- global types ---------------------------------------------------------

    def gtype(self) -> GlobalType:
        tok = self.peek()
        if tok.kind == "end":
            self.advance()
            return GEnd(span=tok.span(self.path))
        if tok.kind == "mu":
            self.advance()
            var = self.expect_upper("a recursion variable").text
            self.expect(".")
            body = self.gtype()
            return GMu(var, body, span=self.span_from(tok))
        if tok.kind == "par":
            self.advance()
            self.expect("{")
            left = self.gtype()
            self.expect("||")
            right = self.gtype()
            self.expect("}")
            return GPar(left, right, span=self.span_from(tok))
        if tok.kind == "UPPER":
            self.advance()
            return GVar(tok.text, span=tok.span(self.path))
        if tok.kind == "LOWER":
            sender = self.advance().text
            self.expect("->")
            receivers = self.rcvr()
            if self.accept(":"):
                branches = (self.gbranch(),)
            else:
                self.expect("{")
                parsed = [self.gbranch()]
                while self.accept(","):
                    parsed.append(self.gbranch())
                self.expect("}")
                branches = tuple(parsed)
            span = self.span_from(tok)
            if len(receivers) > 1 and len(branches) > 1:
                raise ParseAbort(Diagnostic(
                    "error", "multicast shorthand needs exactly one branch", span))
            return self._expand_multicast(sender, receivers, branches, span)
        raise ParseAbort(Diagnostic("error", f"expected a global type, found {tok.text!r}",
                                    tok.span(self.path)))

    def rcvr(self) -> list[Role]:
        if self.accept("["):
            receivers = [self.expect_lower("a role").text]
            while self.accept(","):
                receivers.append(self.expect_lower("a role").text)
            self.expect("]")
            return receivers
        return [self.expect_lower("a role").text]

    def _expand_multicast(self, sender: Role, receivers: list[Role],
                          branches: tuple[GBranch, ...], span: SourceSpan) -> GlobalType:
        # p -> [q1,q2]: L(t) . G  is  p -> q1: L(t) . p -> q2: L(t) . G
        last = receivers[-1]
        term: GlobalType = GComm(sender, last, branches, span=span)
        for receiver in reversed(receivers[:-1]):
            b = branches[0]
            term = GComm(sender, receiver, (GBranch(b.label, b.payload, term),), span=span)
        return term

    def gbranch(self) -> GBranch:
        label = self.expect_upper("a message label").text
        self.expect("(")
        payload = self.ptype()
        self.expect(")")
        self.expect(".")
        return GBranch(label, payload, self.gtype())

    def ptype(self) -> PayloadType:
        tok = self.expect("PTYPE", "a payload type (Unit, Bool, Nat, Int or Str)")
        return PAYLOAD_TYPES[tok.text]

    # -- processes -------------------------------------------------------------

    def proc(self) -> Process:
        tok = self.peek()
        if tok.kind == "end":
            self.advance()
            return PEnd(span=tok.span(self.path))
        if tok.kind == "send":
            self.advance()
            to = self.expect_lower("a role").text
            label = self.expect_upper("a message label").text
            self.expect("(")
            payload = self.expr()
            self.expect(")")
            self.expect(".")
            cont = self.proc()
            return PSend(to, label, payload, cont, span=self.span_from(tok))
        if tok.kind == "recv":
            self.advance()
            from_ = self.expect_lower("a role").text
            self.expect("{")
            branches = [self.pbranch()]
            while self.accept(","):
                branches.append(self.pbranch())
            self.expect("}")
            return PRecv(from_, tuple(branches), span=self.span_from(tok))
        if tok.kind == "let":
            self.advance()
            binder = self.expect_lower("a variable").text
            self.expect("=")
            rhs = self.expr()
            self.expect("in")
            cont = self.proc()
            return PLet(binder, rhs, cont, span=self.span_from(tok))
        if tok.kind == "if":
            self.advance()
            cond = self.expr()
            self.expect("then")
            then = self.proc()
            self.expect("else")
            orelse = self.proc()
            return PIf(cond, then, orelse, span=self.span_from(tok))
        if tok.kind == "rec":
            self.advance()
            var = self.expect_upper("a recursion variable").text
            self.expect(".")
            body = self.proc()
            return PRec(var, body, span=self.span_from(tok))
        if tok.kind == "UPPER":
            self.advance()
            return PVar(tok.text, span=tok.span(self.path))
        raise ParseAbort(Diagnostic("error", f"expected a process, found {tok.text!r}",
                                    tok.span(self.path)))

    def pbranch(self) -> RecvBranch:
        label = self.expect_upper("a message label").text
        self.expect("(")
        binder = self.expect_lower("a variable").text
        self.expect(":")
        annot = self.ptype()
        self.expect(")")
        self.expect(".")
        return RecvBranch(label, binder, annot, self.proc())

    # -- expressions -----------------------------------------------------------
    # Precedence: == lowest, then +, then *; all left-associative.

    def expr(self) -> Expr:
        left = self.additive()
        while self.at("=="):
            tok = self.advance()
            right = self.additive()
            left = Eq(left, right, span=SourceSpan(self.path, tok.line, tok.col, tok.line, tok.col + 1))
        return left

    def additive(self) -> Expr:
        left = self.multiplicative()
        while self.at("+"):
            tok = self.advance()
            right = self.multiplicative()
            left = Add(left, right, span=tok.span(self.path))
        return left

    def multiplicative(self) -> Expr:
        left = self.atom()
        while self.at("*"):
            tok = self.advance()
            right = self.atom()
            left = Mul(left, right, span=tok.span(self.path))
        return left

    def atom(self) -> Expr:
        tok = self.peek()
        if tok.kind == "NAT":
            self.advance()
            return NatLit(int(tok.text), span=tok.span(self.path))
        if tok.kind == "INT":
            self.advance()
            return IntLit(int(tok.text), span=tok.span(self.path))
        if tok.kind == "STRING":
            self.advance()
            return StrLit(tok.text, span=tok.span(self.path))
        if tok.kind == "true":
            self.advance()
            return BoolLit(True, span=tok.span(self.path))
        if tok.kind == "false":
            self.advance()
            return BoolLit(False, span=tok.span(self.path))
        if tok.kind == "unit":
            self.advance()
            return UnitLit(span=tok.span(self.path))
        if tok.kind == "LOWER":
            self.advance()
            return VarRef(tok.text, span=tok.span(self.path))
        if tok.kind == "(":
            self.advance()
            inner = self.expr()
            self.expect(")")
            return inner
        raise ParseAbort(Diagnostic("error", f"expected an expression, found {tok.text!r}",
                                    tok.span(self.path)))


def parse_file(text: str, path: str = "<input>", *,
               allow_unresolved_globals: bool = False
               ) -> Union[ProtocolFile, list[Diagnostic]]:
    """Parse a protocol file; a list of diagnostics signals failure.

    A returned ProtocolFile may still carry well-formedness diagnostics for
    individual declarations; terms are structurally intact in that case.
    """
    try:
        tokens = tokenize(text, path)
        parser = _Parser(tokens, path)
        globals_, processes, sessions, order = parser.parse_file()
    except ParseAbort as abort:
        return [abort.diagnostic]

    errors: list[Diagnostic] = []
    attached: list[Diagnostic] = []
    top = SourceSpan(path, 1, 1, 1, 1)

    def span_of(term) -> SourceSpan:
        return getattr(term, "span", None) or top

    for name, term in globals_.items():
        for v in check_wellformed_global(term):
            attached.append(Diagnostic("error", f"global {name}: {v.code}: {v.message}",
                                       v.span or span_of(term)))
    for name, (role, term) in processes.items():
        for v in check_wellformed_process(term):
            attached.append(Diagnostic("error", f"process {name}: {v.code}: {v.message}",
                                       v.span or span_of(term)))
    for name, decl in sessions.items():
        seen_roles: set[str] = set()
        where = decl.span or top
        if decl.global_name not in globals_ and not allow_unresolved_globals:
            errors.append(Diagnostic(
                "error", f"session {name} references unknown global {decl.global_name}", where))
        for role, pname in decl.bindings:
            if role in seen_roles:
                errors.append(Diagnostic(
                    "error", f"session {name} binds role {role} twice", where))
            seen_roles.add(role)
            if pname not in processes:
                errors.append(Diagnostic(
                    "error", f"session {name} references unknown process {pname}", where))
            elif processes[pname][0] != role:
                errors.append(Diagnostic(
                    "error",
                    f"session {name} binds {pname} to role {role}, but it is declared "
                    f"at role {processes[pname][0]}", where))

    if errors:
        return errors
    return ProtocolFile(path, globals_, processes, sessions, order, tuple(attached))


def pretty_file(pf: ProtocolFile) -> str:
    """Inverse of parse_file up to whitespace and comments."""
    parts: list[str] = []
    for kind, name in pf.order:
        if kind == "global":
            parts.append(f"global {name} = {pretty_global(pf.globals[name])};")
        elif kind == "process":
            role, term = pf.processes[name]
            parts.append(f"process {name} at {role} = {pretty_process(term)};")
        else:
            decl = pf.sessions[name]
            bindings = ", ".join(f"{r}: {p}" for r, p in decl.bindings)
            parts.append(f"session {name} of {decl.global_name} = {{ {bindings} }};")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# MLTS JSON


def parse_mlts(text: str, path: str = "<mlts>") -> Union[Mlts, list[Diagnostic]]:
    """Load an explicit MLTS from its JSON schema; diagnostics on failure."""
    lines = text.count("\n") + 1
    whole = SourceSpan(path, 1, 1, lines, max(len(text.splitlines()[-1]), 1) if text else 1)

    def fail(message: str) -> list[Diagnostic]:
        return [Diagnostic("error", message, whole)]

    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        span = SourceSpan(path, e.lineno, e.colno, e.lineno, e.colno)
        return [Diagnostic("error", f"invalid JSON: {e.msg}", span)]

    if not isinstance(doc, dict):
        return fail("MLTS document must be a JSON object")
    states = doc.get("states")
    if not isinstance(states, list) or not states or not all(isinstance(s, str) for s in states):
        return fail('"states" must be a non-empty array of strings')
    if len(set(states)) != len(states):
        return fail('"states" contains duplicate names')
    index = {name: i for i, name in enumerate(states)}
    initial = doc.get("initial")
    if initial not in index:
        return fail(f'"initial" must name a declared state, got {initial!r}')
    raw_transitions = doc.get("transitions", [])
    if not isinstance(raw_transitions, list):
        return fail('"transitions" must be an array')

    diagnostics: list[Diagnostic] = []
    transitions: set[tuple[int, GlobalAction, int]] = set()
    for k, t in enumerate(raw_transitions):
        if not isinstance(t, dict):
            diagnostics.append(Diagnostic("error", f"transition {k} must be an object", whole))
            continue
        missing = [key for key in ("from", "to", "sender", "receiver", "label", "payload")
                   if not isinstance(t.get(key), str)]
        if missing:
            diagnostics.append(Diagnostic(
                "error", f"transition {k} lacks string field(s): {', '.join(missing)}", whole))
            continue
        problems = []
        if t["from"] not in index:
            problems.append(f"unknown source state {t['from']!r}")
        if t["to"] not in index:
            problems.append(f"unknown target state {t['to']!r}")
        if t["sender"] == t["receiver"]:
            problems.append(f"sender and receiver are both {t['sender']!r}")
        if t["payload"] not in PAYLOAD_TYPES:
            problems.append(f"unknown payload type {t['payload']!r}")
        if problems:
            diagnostics.append(Diagnostic(
                "error", f"transition {k}: " + "; ".join(problems), whole))
            continue
        action = GlobalAction(t["sender"], t["receiver"], t["label"], PAYLOAD_TYPES[t["payload"]])
        transitions.add((index[t["from"]], action, index[t["to"]]))

    if diagnostics:
        return diagnostics
    return Mlts(index[initial], tuple(states), frozenset(transitions))
