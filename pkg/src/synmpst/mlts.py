"""Finite multiparty LTSs and the four well-behavedness conditions.

States are dense integer ids with display labels; actions are GlobalAction
values whose sender and receiver always differ. Both LTSs built from global
types and LTSs loaded from JSON are presented through this one type, so the
type checker never sees where a classifier came from.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional

from .terms import GlobalAction

SENDER_DETERMINACY = "SenderDeterminacy"
DETERMINISM = "Determinism"
CONDITIONAL_COMMUTATIVITY = "ConditionalCommutativity"
DIAMOND = "Diamond"

_WITNESS_CAP = 50


def receiver_disjoint(a1: GlobalAction, a2: GlobalAction) -> bool:
    """Neither action's receiver is involved in the other action."""
    return (a1.receiver not in (a2.sender, a2.receiver)
            and a2.receiver not in (a1.sender, a1.receiver))


@dataclass(frozen=True)
class Mlts:
    """Explicit finite multiparty LTS."""
    initial: int
    labels: tuple[str, ...]
    transitions: frozenset[tuple[int, GlobalAction, int]]

    def __post_init__(self) -> None:
        n = len(self.labels)
        if not 0 <= self.initial < n:
            raise ValueError("initial state out of range")
        for src, _, dst in self.transitions:
            if not (0 <= src < n and 0 <= dst < n):
                raise ValueError("transition endpoint out of range")

    @property
    def states(self) -> range:
        return range(len(self.labels))

    @cached_property
    def _outgoing(self) -> tuple[tuple[tuple[GlobalAction, int], ...], ...]:
        table: list[list[tuple[GlobalAction, int]]] = [[] for _ in self.labels]
        for src, action, dst in self.transitions:
            table[src].append((action, dst))
        return tuple(tuple(sorted(row, key=lambda at: (at[0].sort_key(), at[1])))
                     for row in table)

    def transitions_from(self, s: int) -> tuple[tuple[GlobalAction, int], ...]:
        return self._outgoing[s]

    @cached_property
    def actions(self) -> frozenset[GlobalAction]:
        return frozenset(a for _, a, _ in self.transitions)

    @cached_property
    def roles(self) -> frozenset[str]:
        out: set[str] = set()
        for a in self.actions:
            out |= {a.sender, a.receiver}
        return frozenset(out)


def as_mlts(lts) -> Mlts:
    """Present any classifier (an Mlts, or a built global-type LTS) as an Mlts."""
    if isinstance(lts, Mlts):
        return lts
    return lts.to_mlts()


@dataclass(frozen=True)
class WbViolation:
    """Witness of one failed well-behavedness condition.

    The witness fields replay against the offending MLTS: states lists the
    states involved and actions the transitions' labels, in the shape fixed
    per condition by replay_violation.
    """
    condition: str
    states: tuple[int, ...]
    actions: tuple[GlobalAction, ...]
    message: str

    def __str__(self) -> str:
        return f"{self.condition}: {self.message}"


def check_well_behaved(m: Mlts) -> list[WbViolation]:
    """Exhaustively check all four conditions; empty list means well-behaved.

    Violations are data, not failures; collection is capped per condition to
    keep reports readable.
    """
    out: list[WbViolation] = []
    counts = {SENDER_DETERMINACY: 0, DETERMINISM: 0, CONDITIONAL_COMMUTATIVITY: 0, DIAMOND: 0}

    def emit(v: WbViolation) -> None:
        if counts[v.condition] < _WITNESS_CAP:
            out.append(v)
        counts[v.condition] += 1

    for s in m.states:
        outgoing = m.transitions_from(s)

        # 1. Sender determinacy: co-initial actions are receiver-disjoint or
        # share both sender and receiver.
        for i, (a1, _) in enumerate(outgoing):
            for a2, _ in outgoing[i + 1:]:
                if a1 == a2:
                    continue
                same_pair = a1.sender == a2.sender and a1.receiver == a2.receiver
                if not (receiver_disjoint(a1, a2) or same_pair):
                    emit(WbViolation(
                        SENDER_DETERMINACY, (s,), (a1, a2),
                        f"state {s} offers {a1} and {a2}"))

        # 2. Determinism: one action, one target.
        targets: dict[GlobalAction, set[int]] = {}
        for a, dst in outgoing:
            targets.setdefault(a, set()).add(dst)
        for a, dsts in sorted(targets.items(), key=lambda kv: kv[0].sort_key()):
            if len(dsts) > 1:
                d1, d2 = sorted(dsts)[:2]
                emit(WbViolation(
                    DETERMINISM, (s, d1, d2), (a,),
                    f"state {s} reaches both {d1} and {d2} via {a}"))

        # 3. Conditional commutativity: an already-available communication
        # stays reorderable with an unrelated one taken first.
        for a1, s1 in outgoing:
            for a2, s_prime in m.transitions_from(s1):
                if a2.roles & a1.roles:
                    continue
                pair_at_s = any(b.sender == a2.sender and b.receiver == a2.receiver
                                for b, _ in outgoing)
                if not pair_at_s:
                    continue
                commutes = any(
                    b == a2 and any(c == a1 and t2 == s_prime
                                    for c, t2 in m.transitions_from(mid))
                    for b, mid in outgoing)
                if not commutes:
                    emit(WbViolation(
                        CONDITIONAL_COMMUTATIVITY, (s, s1, s_prime), (a1, a2),
                        f"{a1} then {a2} from state {s} cannot be reordered"))

        # 4. Diamond: receiver-disjoint co-initial actions converge.
        for i, (a1, s1) in enumerate(outgoing):
            for a2, s2 in outgoing[i + 1:]:
                if a1 == a2 or not receiver_disjoint(a1, a2):
                    continue
                closes = any(
                    b == a2 and any(c == a1 and t2 == t1
                                    for c, t2 in m.transitions_from(s2))
                    for b, t1 in m.transitions_from(s1))
                if not closes:
                    emit(WbViolation(
                        DIAMOND, (s, s1, s2), (a1, a2),
                        f"{a1} and {a2} from state {s} do not close a diamond"))

    return out


def replay_violation(m: Mlts, v: WbViolation) -> bool:
    """True iff the witness genuinely falsifies its named condition on m."""
    def has(src: int, action: GlobalAction, dst: Optional[int] = None) -> bool:
        return any(a == action and (dst is None or t == dst)
                   for a, t in m.transitions_from(src))

    if v.condition == SENDER_DETERMINACY:
        (s,), (a1, a2) = v.states, v.actions
        same_pair = a1.sender == a2.sender and a1.receiver == a2.receiver
        return (has(s, a1) and has(s, a2)
                and not (receiver_disjoint(a1, a2) or same_pair))
    if v.condition == DETERMINISM:
        (s, d1, d2), (a,) = v.states, v.actions
        return has(s, a, d1) and has(s, a, d2) and d1 != d2
    if v.condition == CONDITIONAL_COMMUTATIVITY:
        (s, s1, s_prime), (a1, a2) = v.states, v.actions
        if not (has(s, a1, s1) and has(s1, a2, s_prime)):
            return False
        if a1.roles & a2.roles:
            return False
        if not any(b.sender == a2.sender and b.receiver == a2.receiver
                   for b, _ in m.transitions_from(s)):
            return False
        return not any(b == a2 and has(mid, a1, s_prime)
                       for b, mid in m.transitions_from(s))
    if v.condition == DIAMOND:
        (s, s1, s2), (a1, a2) = v.states, v.actions
        if not (has(s, a1, s1) and has(s, a2, s2) and receiver_disjoint(a1, a2)):
            return False
        return not any(b == a2 and has(s2, a1, t1)
                       for b, t1 in m.transitions_from(s1))
    raise ValueError(f"unknown condition {v.condition}")


def violations_to_json(violations: Iterable[WbViolation]) -> str:
    records = [{
        "condition": v.condition,
        "states": list(v.states),
        "actions": [str(a) for a in v.actions],
        "message": v.message,
    } for v in violations]
    return json.dumps(records, indent=2, sort_keys=False)
