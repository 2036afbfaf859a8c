"""Services: stateful reply functions and their composition with threads.

A service holds a state together with an effect function (state change per
method) and a yield function (reply per method: true, false, or blocked).
Once a method yields blocked, every later method must yield blocked too; the
register-file service below guarantees this with an absorbing undefined
state.

`use` composes a thread with a service at a focus: basic actions at that
focus are answered by the service (each costs one tau step) and disappear
from the result, a blocked reply is inaction, and everything else passes
through with the service state threaded along.
"""

import enum
from dataclasses import dataclass, replace
from typing import Any, Callable

from .instructions import CoreInstruction, FwdJump, Halt, NegTest, Plain, PosTest, render
from .pga import parse_stream
from .polyadic import RegisterFileState
from .threads import (
    DEAD,
    STOP,
    TAU,
    Basic,
    Post,
    ThreadGraph,
    ThreadNode,
    gc,
)


class Reply(enum.Enum):
    TRUE = "T"
    FALSE = "F"
    BLOCKED = "B"


@dataclass(frozen=True)
class Service:
    """A reply-and-effect machine over hashable states."""

    state: Any
    effect: Callable[[str, Any], Any]
    replies: Callable[[str, Any], Reply]

    def process(self, method: str) -> tuple[Reply, "Service"]:
        reply = self.replies(method, self.state)
        return reply, replace(self, state=self.effect(method, self.state))


# === instruction register file ===


class _Undef:
    """Absorbing failure state of the register file."""

    __slots__ = ()

    def __repr__(self):
        return "undef"


UNDEF = _Undef()


@dataclass(frozen=True)
class IrfConfig:
    """Registers 1..register_count holding primitives from a fixed alphabet."""

    register_count: int
    alphabet: tuple[CoreInstruction, ...]

    def __post_init__(self):
        if self.register_count < 0:
            raise ValueError("register count must be >= 0")
        toks = [render(u) for u in self.alphabet]
        if sorted(set(toks)) != sorted(toks):
            raise ValueError("alphabet instructions must be distinct")
        order = sorted(self.alphabet, key=render)
        object.__setattr__(self, "alphabet", tuple(order))

    def state_count(self) -> int:
        return (len(self.alphabet) + 1) ** self.register_count


def theta(cfg: IrfConfig, sigma: RegisterFileState) -> int:
    """1-based rank of a state: registers read most-significant first, an
    empty register before any alphabet instruction."""
    digits = []
    bound = dict(sigma.entries)
    for reg in sigma.domain():
        if reg > cfg.register_count:
            raise ValueError(f"register {reg} outside the configured file")
    for reg in range(1, cfg.register_count + 1):
        instr = bound.get(reg)
        if instr is None:
            digits.append(0)
        else:
            try:
                digits.append(1 + cfg.alphabet.index(instr))
            except ValueError:
                raise ValueError(
                    f"register {reg} holds {render(instr)!r}, not in the alphabet"
                ) from None
    rank = 0
    base = len(cfg.alphabet) + 1
    for d in digits:
        rank = rank * base + d
    return rank + 1


def theta_inv(cfg: IrfConfig, rank: int) -> RegisterFileState:
    if not 1 <= rank <= cfg.state_count():
        raise ValueError(f"rank {rank} outside 1..{cfg.state_count()}")
    value = rank - 1
    base = len(cfg.alphabet) + 1
    entries = []
    for reg in range(cfg.register_count, 0, -1):
        d = value % base
        value //= base
        if d:
            entries.append((reg, cfg.alphabet[d - 1]))
    return RegisterFileState(tuple(entries))


def enumerate_states(cfg: IrfConfig):
    """All register file states in rank order."""
    for rank in range(1, cfg.state_count() + 1):
        yield theta_inv(cfg, rank)


def irf_service(cfg: IrfConfig, sigma: RegisterFileState) -> Service:
    """The register-file service.

    Methods: `put:i:u` stores alphabet instruction u in register i and yields
    true; `eq:j` yields true exactly when the current state has rank j.  Any
    other method, including puts outside the configuration, moves to the
    absorbing undefined state and yields blocked.
    """
    theta(cfg, sigma)  # validate

    def decode(method: str, state) -> RegisterFileState | None:
        if isinstance(state, _Undef):
            return None
        parts = method.split(":", 2)
        if parts[0] == "put" and len(parts) == 3:
            try:
                reg = int(parts[1])
                instr = parse_stream(parts[2]).prefix
            except ValueError:
                return None
            if len(instr) != 1 or instr[0] not in cfg.alphabet:
                return None
            if not 1 <= reg <= cfg.register_count:
                return None
            return state.set(reg, instr[0])
        if parts[0] == "eq" and len(parts) == 2:
            try:
                rank = int(parts[1])
            except ValueError:
                return None
            if not 1 <= rank <= cfg.state_count():
                return None
            return state
        return None

    def effect(method: str, state):
        out = decode(method, state)
        return UNDEF if out is None else out

    def replies(method: str, state):
        out = decode(method, state)
        if out is None:
            return Reply.BLOCKED
        parts = method.split(":", 1)
        if parts[0] == "eq":
            return Reply.TRUE if theta(cfg, state) == int(parts[1]) else Reply.FALSE
        return Reply.TRUE

    return Service(sigma, effect, replies)


# === thread-service composition ===


def use(g: ThreadGraph, focus: str, svc: Service) -> ThreadGraph:
    """Answer every basic action at the given focus with the service.

    Replies true and false become a tau step into the matching branch with
    the service state advanced; a blocked reply is inaction.  Other actions,
    including internal ones, keep the service state alongside.
    """
    ids: dict[tuple[int, Any], int] = {}
    nodes: list[ThreadNode] = []
    queue: list[tuple[int, Any]] = []

    def node_for(i: int, state) -> int:
        key = (i, state)
        if key not in ids:
            ids[key] = len(nodes)
            nodes.append(DEAD)
            queue.append(key)
        return ids[key]

    root = node_for(g.root, svc.state)
    while queue:
        key = queue.pop()
        i, state = key
        at = ids[key]
        n = g.nodes[i]
        if not isinstance(n, Post):
            nodes[at] = n
        elif isinstance(n.action, Basic) and n.action.focus == focus:
            reply = svc.replies(n.action.method, state)
            if reply is Reply.BLOCKED:
                nodes[at] = DEAD
            else:
                derived = svc.effect(n.action.method, state)
                branch = n.t if reply is Reply.TRUE else n.f
                succ = node_for(branch, derived)
                nodes[at] = Post(TAU, succ, succ)
        else:
            nodes[at] = Post(n.action, node_for(n.t, state), node_for(n.f, state))
    return gc(ThreadGraph(tuple(nodes), root))
