"""Executable semantics of sessions: evaluation, stepping, simulation,
exhaustive exploration, and the safety/liveness oracles."""
from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Optional, Union

from .mlts import Mlts
from .terms import (Add, BoolLit, Eq, Expr, GlobalAction, IntLit, Mul, NatLit,
                    PEnd, PIf, PLet, PRec, PRecv, PSend, Role, Session,
                    VarRef, is_value, pretty_expr, substitute_process_rec,
                    substitute_process_val)


class EvalError(Exception):
    """Expression evaluation got stuck; on a well-typed run this is a bug."""


def eval_expr(e: Expr) -> Expr:
    """Big-step evaluation of a closed expression to a value."""
    if is_value(e):
        return e
    if isinstance(e, VarRef):
        raise EvalError(f"free variable {e.name}")
    if isinstance(e, (Add, Mul)):
        v1 = eval_expr(e.left)
        v2 = eval_expr(e.right)
        for kind in (NatLit, IntLit):
            if isinstance(v1, kind) and isinstance(v2, kind):
                result = v1.value + v2.value if isinstance(e, Add) else v1.value * v2.value
                return kind(result)
        raise EvalError(f"arithmetic on non-numbers: {pretty_expr(v1)}, {pretty_expr(v2)}")
    if isinstance(e, Eq):
        # Values of different payload types are simply unequal.
        return BoolLit(eval_expr(e.left) == eval_expr(e.right))
    raise EvalError(f"cannot evaluate {e!r}")


@dataclass(frozen=True)
class CommAction:
    """A synchronous communication, labelled like the matching global action."""
    action: GlobalAction

    def sort_key(self):
        return (0,) + self.action.sort_key()

    def __str__(self) -> str:
        return str(self.action)


@dataclass(frozen=True)
class TauAction:
    """An internal step (let, if, or recursion unfolding) of one role."""
    role: Role

    def sort_key(self):
        return (1, self.role)

    def __str__(self) -> str:
        return f"tau@{self.role}"


RuntimeAction = Union[CommAction, TauAction]


@dataclass(frozen=True)
class Trace:
    """A replayable run: actions applied in order from some initial session."""
    actions: tuple[RuntimeAction, ...]
    terminal: Session


def session_step(sess: Session) -> list[tuple[RuntimeAction, Session]]:
    """All enabled steps of a session, in a fixed deterministic order.

    A communication fires only when sender and receiver are both at matching
    heads (synchronous rendezvous); its payload type is the receive branch's
    annotation. A step whose expression premise gets stuck is simply not
    enabled.
    """
    procs = dict(sess.entries)
    steps: list[tuple[RuntimeAction, Session]] = []
    for role, proc in sess.entries:
        if isinstance(proc, PLet):
            try:
                v = eval_expr(proc.rhs)
            except EvalError:
                continue
            after = substitute_process_val(proc.cont, proc.binder, v)
            steps.append((TauAction(role), sess.with_process(role, after)))
        elif isinstance(proc, PIf):
            try:
                v = eval_expr(proc.cond)
            except EvalError:
                continue
            if isinstance(v, BoolLit):
                after = proc.then if v.value else proc.orelse
                steps.append((TauAction(role), sess.with_process(role, after)))
        elif isinstance(proc, PRec):
            after = substitute_process_rec(proc.body, proc.var, proc)
            steps.append((TauAction(role), sess.with_process(role, after)))
        elif isinstance(proc, PSend):
            partner = procs.get(proc.to)
            if not isinstance(partner, PRecv) or partner.from_ != role:
                continue
            branch = next((b for b in partner.branches if b.label == proc.label), None)
            if branch is None:
                continue
            try:
                v = eval_expr(proc.payload)
            except EvalError:
                continue
            action = CommAction(GlobalAction(role, proc.to, proc.label, branch.annot))
            after = sess.with_process(role, proc.cont).with_process(
                proc.to, substitute_process_val(branch.cont, branch.binder, v))
            steps.append((action, after))
    steps.sort(key=lambda step: step[0].sort_key())
    return steps


def run(sess: Session, seed: int, max_steps: int) -> Trace:
    """Seeded uniform-random scheduler; stops at quiescence or max_steps."""
    rng = random.Random(seed)
    actions: list[RuntimeAction] = []
    current = sess
    for _ in range(max_steps):
        steps = session_step(current)
        if not steps:
            break
        action, current = steps[rng.randrange(len(steps))]
        actions.append(action)
    return Trace(tuple(actions), current)


def replay_trace(sess: Session, trace: Trace) -> Session:
    """Apply the trace's actions from sess; raises if an action is not enabled."""
    current = sess
    for i, action in enumerate(trace.actions):
        matching = [after for a, after in session_step(current) if a == action]
        if not matching:
            raise ValueError(f"trace action {i} ({action}) is not enabled")
        current = matching[0]
    return current


def check_trace(m: Mlts, trace: Trace) -> Optional[int]:
    """Index of the first communication the classifier disallows, or None.

    Communications must follow transitions from the initial state;
    internal actions leave the state unchanged.
    """
    state = m.initial
    for i, action in enumerate(trace.actions):
        if isinstance(action, TauAction):
            continue
        targets = sorted(t for a, t in m.transitions_from(state) if a == action.action)
        if not targets:
            return i
        state = targets[0]
    return None


@dataclass(frozen=True)
class ExploreReport:
    """Verdict of a bounded lockstep exploration of (session, state) configs."""
    configs_visited: int
    depth_reached: int
    complete: bool
    stuck_non_final: tuple[Session, ...]
    tau_cycles: tuple[tuple[tuple[Session, int], ...], ...]
    preservation_breaks: tuple[tuple[Session, RuntimeAction, int], ...]

    @property
    def sound_at_depth(self) -> bool:
        return not (self.stuck_non_final or self.tau_cycles or self.preservation_breaks)


_WITNESS_CAP = 20


def explore(m: Mlts, sess: Session, max_depth: int) -> ExploreReport:
    """Breadth-first search over session/state pairs, in lockstep with m.

    Every communication must be matched by a transition of the paired state
    (else it is a preservation break); a quiescent configuration with a
    non-terminated process is stuck; a cycle of internal steps alone is a
    divergence witness.
    """
    initial = (sess, m.initial)
    visited = {initial}
    frontier = [initial]
    stuck: list[Session] = []
    breaks: list[tuple[Session, RuntimeAction, int]] = []
    tau_edges: dict[tuple[Session, int], list[tuple[Session, int]]] = {}
    depth = 0
    complete = True

    while frontier and depth < max_depth:
        next_frontier: list[tuple[Session, int]] = []
        for config in frontier:
            current, state = config
            steps = session_step(current)
            if not steps:
                if any(not isinstance(p, PEnd) for _, p in current.entries):
                    if len(stuck) < _WITNESS_CAP:
                        stuck.append(current)
                continue
            for action, after in steps:
                if isinstance(action, CommAction):
                    targets = sorted(t for a, t in m.transitions_from(state)
                                     if a == action.action)
                    if not targets:
                        if len(breaks) < _WITNESS_CAP:
                            breaks.append((current, action, state))
                        continue
                    succ = (after, targets[0])
                else:
                    succ = (after, state)
                    tau_edges.setdefault(config, []).append(succ)
                if succ not in visited:
                    visited.add(succ)
                    next_frontier.append(succ)
        frontier = next_frontier
        if frontier:
            depth += 1
    if frontier:
        complete = False

    return ExploreReport(
        configs_visited=len(visited),
        depth_reached=depth,
        complete=complete,
        stuck_non_final=tuple(stuck),
        tau_cycles=tuple(_tau_cycles(tau_edges)),
        preservation_breaks=tuple(breaks),
    )


def _tau_cycles(edges: dict) -> list[tuple]:
    """Cycles in the internal-step subgraph of the explored configurations."""
    cycles: list[tuple] = []
    done: set = set()
    for root in edges:
        if root in done:
            continue
        path: list = []
        on_path: set = set()

        def visit(node) -> None:
            if len(cycles) >= _WITNESS_CAP:
                return
            path.append(node)
            on_path.add(node)
            for succ in edges.get(node, ()):
                if succ in on_path:
                    cycles.append(tuple(path[path.index(succ):]))
                elif succ not in done:
                    visit(succ)
            on_path.discard(node)
            done.add(path.pop())

        visit(root)
    return cycles


# ---------------------------------------------------------------------------
# Serialisation


def trace_to_json_lines(trace: Trace) -> str:
    lines = []
    for action in trace.actions:
        if isinstance(action, CommAction):
            a = action.action
            lines.append(json.dumps({"kind": "comm", "from": a.sender, "to": a.receiver,
                                     "label": a.label, "payload": a.payload.value}))
        else:
            lines.append(json.dumps({"kind": "tau", "role": action.role}))
    return "\n".join(lines) + ("\n" if lines else "")


def render_message_sequence(trace: Trace) -> str:
    """Plain-text message sequence: one line per action, taus indented."""
    lines = []
    for action in trace.actions:
        if isinstance(action, CommAction):
            a = action.action
            lines.append(f"{a.sender} -> {a.receiver}: {a.label}({a.payload})")
        else:
            lines.append(f"  [{action.role}] tau")
    return "\n".join(lines) + ("\n" if lines else "")
