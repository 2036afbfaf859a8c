"""Regular threads: finite behaviour graphs with postconditional branching.

A thread is either successful termination, inaction, or a two-way branch on
the reply to an action.  Actions are basic (an optional focus qualifying a
method) or internal ('tau', 'gnl'); a branch on an internal action must have
structurally identical branches, which the node constructor enforces.

Graphs are immutable node tuples indexed by position, with a designated root.
Operations: depth-bounded projection, bisimulation checking by partition
refinement, canonical minimization, and abstraction from an internal action
(contracting chains, mapping pure cycles of the hidden action to inaction).
"""

import sys
from dataclasses import dataclass

from .errors import ParseError

_INTERNAL_NAMES = ("tau", "gnl")
_SEGMENT_OK = frozenset("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_")


# === actions ===


@dataclass(frozen=True)
class Basic:
    """A basic action: method name, optionally qualified by a focus.

    The method may carry ':'-separated parameter segments; segments are stored
    without the braces that quote non-alphanumeric text in the surface syntax.
    """

    method: str
    focus: str | None = None

    def __post_init__(self):
        if not self.method:
            raise ValueError("basic action method must be non-empty")

    def render(self) -> str:
        text = render_method(self.method)
        return f"{self.focus}.{text}" if self.focus is not None else text


@dataclass(frozen=True)
class Internal:
    """An internal action; only 'tau' and 'gnl' exist."""

    name: str

    def __post_init__(self):
        if self.name not in _INTERNAL_NAMES:
            raise ValueError(f"unknown internal action {self.name!r}")

    def render(self) -> str:
        return self.name


TAU = Internal("tau")
GNL = Internal("gnl")

Action = Basic | Internal


def render_method(method: str) -> str:
    """Render a method string, quoting segments that need it in braces."""
    parts = method.split(":")
    out = []
    for i, part in enumerate(parts):
        if part and all(c in _SEGMENT_OK for c in part) and (i > 0 or part[0].islower()):
            out.append(part)
        else:
            out.append("{" + part + "}")
    return ":".join(out)


# === nodes and graphs ===


@dataclass(frozen=True)
class Stop:
    """Successful termination."""


@dataclass(frozen=True)
class Dead:
    """Inaction: the thread can make no further step."""


@dataclass(frozen=True)
class Post:
    """Branch on the reply to an action: `t` on a positive reply, `f` on a
    negative one.  Internal actions ignore the reply, so both branches must
    coincide."""

    action: Action
    t: int
    f: int

    def __post_init__(self):
        if isinstance(self.action, Internal) and self.t != self.f:
            raise ValueError("internal action node must have equal branches")


ThreadNode = Stop | Dead | Post

STOP = Stop()
DEAD = Dead()


@dataclass(frozen=True)
class ThreadGraph:
    nodes: tuple[ThreadNode, ...]
    root: int

    def __post_init__(self):
        if not self.nodes:
            raise ValueError("thread graph needs at least one node")
        if not 0 <= self.root < len(self.nodes):
            raise ValueError("root index out of range")
        for n in self.nodes:
            if isinstance(n, Post):
                if not (0 <= n.t < len(self.nodes) and 0 <= n.f < len(self.nodes)):
                    raise ValueError("successor index out of range")

    def __len__(self) -> int:
        return len(self.nodes)


def stop_graph() -> ThreadGraph:
    return ThreadGraph((STOP,), 0)


def dead_graph() -> ThreadGraph:
    return ThreadGraph((DEAD,), 0)


def prefixed(action: Action, g: ThreadGraph) -> ThreadGraph:
    """action followed by g, regardless of the reply."""
    shifted = _shift(g.nodes, 1)
    return ThreadGraph((Post(action, g.root + 1, g.root + 1),) + shifted, 0)


def branching(action: Action, on_true: ThreadGraph, on_false: ThreadGraph) -> ThreadGraph:
    """Branch on action's reply between two subgraphs."""
    off_f = 1 + len(on_true.nodes)
    nodes = (Post(action, on_true.root + 1, on_false.root + off_f),)
    nodes += _shift(on_true.nodes, 1) + _shift(on_false.nodes, off_f)
    return ThreadGraph(nodes, 0)


def _shift(nodes: tuple[ThreadNode, ...], k: int) -> tuple[ThreadNode, ...]:
    return tuple(
        Post(n.action, n.t + k, n.f + k) if isinstance(n, Post) else n for n in nodes
    )


def gc(g: ThreadGraph) -> ThreadGraph:
    """Drop nodes unreachable from the root, renumbering in discovery order."""
    order: dict[int, int] = {}
    queue = [g.root]
    while queue:
        i = queue.pop()
        if i in order:
            continue
        order[i] = len(order)
        n = g.nodes[i]
        if isinstance(n, Post):
            queue.append(n.f)
            queue.append(n.t)
    if len(order) == len(g.nodes):
        return g
    nodes: list[ThreadNode] = [STOP] * len(order)
    for old, new in order.items():
        n = g.nodes[old]
        nodes[new] = Post(n.action, order[n.t], order[n.f]) if isinstance(n, Post) else n
    return ThreadGraph(tuple(nodes), order[g.root])


# === projection ===


def project(depth: int, g: ThreadGraph) -> ThreadGraph:
    """Approximation of g up to the given depth; everything deeper becomes
    inaction."""
    if depth < 0:
        raise ValueError("projection depth must be >= 0")
    memo: dict[tuple[int, int], int] = {}
    nodes: list[ThreadNode] = []

    def go(d: int, i: int) -> int:
        key = (d, i)
        got = memo.get(key)
        if got is not None:
            return got
        n = g.nodes[i]
        if d == 0:
            node: ThreadNode = DEAD
        elif isinstance(n, Post):
            node = Post(n.action, go(d - 1, n.t), go(d - 1, n.f))
        else:
            node = n
        nodes.append(node)
        memo[key] = len(nodes) - 1
        return memo[key]

    root = go(depth, g.root)
    return ThreadGraph(tuple(nodes), root)


# === bisimulation ===


def _node_label(n: ThreadNode):
    if isinstance(n, Stop):
        return ("S",)
    if isinstance(n, Dead):
        return ("D",)
    return ("P", n.action)


def _refine(nodes: list[ThreadNode]) -> list[int]:
    """Partition refinement; returns a block id per node."""
    labels = [_node_label(n) for n in nodes]
    seen: dict[tuple, int] = {}
    block = [seen.setdefault(lab, len(seen)) for lab in labels]
    count = len(seen)
    while True:
        sigs = []
        for i, n in enumerate(nodes):
            if isinstance(n, Post):
                sigs.append((block[i], block[n.t], block[n.f]))
            else:
                sigs.append((block[i],))
        seen = {}
        nxt = [seen.setdefault(s, len(seen)) for s in sigs]
        if len(seen) == count:
            return nxt
        block, count = nxt, len(seen)


def bisimilar(g1: ThreadGraph, g2: ThreadGraph) -> bool:
    """Whether the two roots are behaviourally indistinguishable."""
    union = list(g1.nodes) + [
        Post(n.action, n.t + len(g1.nodes), n.f + len(g1.nodes)) if isinstance(n, Post) else n
        for n in g2.nodes
    ]
    block = _refine(union)
    return block[g1.root] == block[len(g1.nodes) + g2.root]


def minimize(g: ThreadGraph) -> ThreadGraph:
    """Bisimulation quotient in canonical form: breadth-first numbering from
    the root, positive branch before negative.  Bisimilar graphs minimize to
    structurally equal values."""
    g = gc(g)
    block = _refine(list(g.nodes))
    rep: dict[int, int] = {}
    for i, b in enumerate(block):
        rep.setdefault(b, i)
    order: dict[int, int] = {}
    queue = [block[g.root]]
    qi = 0
    while qi < len(queue):
        b = queue[qi]
        qi += 1
        if b in order:
            continue
        order[b] = len(order)
        n = g.nodes[rep[b]]
        if isinstance(n, Post):
            for succ in (block[n.t], block[n.f]):
                if succ not in order:
                    queue.append(succ)
    nodes: list[ThreadNode] = [STOP] * len(order)
    for b, new in order.items():
        n = g.nodes[rep[b]]
        nodes[new] = (
            Post(n.action, order[block[n.t]], order[block[n.f]]) if isinstance(n, Post) else n
        )
    return ThreadGraph(tuple(nodes), order[block[g.root]])


# === abstraction ===

_DIVERGE = -1


def abstract_internal(iota: Internal, g: ThreadGraph) -> ThreadGraph:
    """Hide one internal action: chains of iota steps are contracted and a
    cycle consisting solely of iota steps becomes inaction."""
    if not isinstance(iota, Internal):
        raise ValueError("can only abstract an internal action")

    def is_iota(n: ThreadNode) -> bool:
        return isinstance(n, Post) and n.action == iota

    # resolve[i]: first non-iota node reached from i, or _DIVERGE
    resolve: dict[int, int] = {}
    for start in range(len(g.nodes)):
        if start in resolve:
            continue
        path = []
        i = start
        on_path = set()
        while i not in resolve and is_iota(g.nodes[i]) and i not in on_path:
            path.append(i)
            on_path.add(i)
            i = g.nodes[i].t
        target = resolve[i] if i in resolve else (_DIVERGE if i in on_path else i)
        for p in path:
            resolve[p] = target
        resolve.setdefault(start, target)

    builder: dict[int, int] = {}
    nodes: list[ThreadNode] = []
    dead_id = -1

    def emit_dead() -> int:
        nonlocal dead_id
        if dead_id < 0:
            nodes.append(DEAD)
            dead_id = len(nodes) - 1
        return dead_id

    def emit(i: int) -> int:
        i = resolve[i]
        if i == _DIVERGE:
            return emit_dead()
        if i in builder:
            return builder[i]
        builder[i] = len(nodes)
        nodes.append(STOP)  # placeholder until successors exist
        n = g.nodes[i]
        if isinstance(n, Post):
            nodes[builder[i]] = Post(n.action, emit(n.t), emit(n.f))
        else:
            nodes[builder[i]] = n
        return builder[i]

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 4 * len(g.nodes) + 100))
    try:
        root = emit(g.root)
    finally:
        sys.setrecursionlimit(old)
    return gc(ThreadGraph(tuple(nodes), root))


# === text format ===


def render_action(a: Action) -> str:
    return a.render()


def parse_action(text: str, line: int | None = None) -> Action:
    text = text.strip()
    if text in _INTERNAL_NAMES:
        return Internal(text)
    focus = None
    body = text
    dot = text.find(".")
    if dot > 0 and ":" not in text[:dot] and "{" not in text[:dot]:
        focus, body = text[:dot], text[dot + 1 :]
    method = parse_method(body, line)
    return Basic(method, focus)


def parse_method(text: str, line: int | None = None) -> str:
    """Inverse of render_method: strip brace quoting from segments."""
    segs = []
    i = 0
    cur = []
    while i < len(text):
        c = text[i]
        if c == "{":
            end = text.find("}", i + 1)
            if end < 0:
                raise ParseError("unterminated '{' in method", line)
            cur.append(text[i + 1 : end])
            i = end + 1
        elif c == ":":
            segs.append("".join(cur))
            cur = []
            i += 1
        else:
            cur.append(c)
            i += 1
    segs.append("".join(cur))
    if any(not s for s in segs) or not segs[0]:
        raise ParseError(f"malformed method {text!r}", line)
    return ":".join(segs)


def format_graph(g: ThreadGraph) -> str:
    """One node per line: `<id>: S`, `<id>: D`, or `<id>: <action> -> t, f`.

    The root must be node 0; callers normally print minimize(g)."""
    if g.root != 0:
        g = gc(ThreadGraph(g.nodes, g.root))
    lines = []
    for i, n in enumerate(g.nodes):
        if isinstance(n, Stop):
            lines.append(f"{i}: S")
        elif isinstance(n, Dead):
            lines.append(f"{i}: D")
        else:
            lines.append(f"{i}: {render_action(n.action)} -> {n.t}, {n.f}")
    return "\n".join(lines)


def parse_graph(text: str) -> ThreadGraph:
    entries: dict[int, ThreadNode] = {}
    raw: dict[int, tuple] = {}
    for ln, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        head, sep, rest = line.partition(":")
        if not sep:
            raise ParseError("expected '<id>: <node>'", ln)
        try:
            ident = int(head.strip())
        except ValueError:
            raise ParseError(f"bad node id {head.strip()!r}", ln) from None
        if ident in raw:
            raise ParseError(f"duplicate node id {ident}", ln)
        rest = rest.strip()
        if rest == "S":
            raw[ident] = ("S",)
        elif rest == "D":
            raw[ident] = ("D",)
        else:
            body, arrow, succ = rest.partition("->")
            if not arrow:
                raise ParseError("expected 'S', 'D', or '<action> -> t, f'", ln)
            parts = succ.split(",")
            if len(parts) != 2:
                raise ParseError("expected two successor ids", ln)
            try:
                t, f = (int(p.strip()) for p in parts)
            except ValueError:
                raise ParseError("bad successor id", ln) from None
            raw[ident] = ("P", parse_action(body, ln), t, f)
    if not raw:
        raise ParseError("empty graph", 1)
    if sorted(raw) != list(range(len(raw))):
        raise ParseError("node ids must be contiguous from 0", 1)
    for ident, entry in raw.items():
        if entry[0] == "S":
            entries[ident] = STOP
        elif entry[0] == "D":
            entries[ident] = DEAD
        else:
            _, action, t, f = entry
            if not (0 <= t < len(raw) and 0 <= f < len(raw)):
                raise ParseError(f"successor of node {ident} out of range", 1)
            entries[ident] = Post(action, t, f)
    return ThreadGraph(tuple(entries[i] for i in range(len(raw))), 0)
