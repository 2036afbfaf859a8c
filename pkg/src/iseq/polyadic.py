"""Fragment vectors and thread extraction across switching fragments.

A register file maps instruction registers to core primitives.  A fragment
vector holds indexed program fragments, each tagged with the notation it is
written in.  Extraction starts in a main sequence; `put` stores a primitive
(one internal `tau` step), `get` placeholders load the stored primitive when a
fragment is projected and substituted, and switch-over `@i` abandons the
current sequence (one internal `gnl` step) for fragment i, loaded under the
current register file.  A switch to a fragment that still contains unresolved
placeholders is inaction; a switch-over index outside the vector terminates.
"""

from dataclasses import dataclass

from .errors import ParseError
from .instructions import (
    CoreInstruction,
    FwdJump,
    Get,
    Halt,
    NegTest,
    Plain,
    PosTest,
    Put,
    Swo,
    parse_one,
    render,
    Cursor,
)
from .notations import (
    NotationIndex,
    PgldProgram,
    PglcProgram,
    format_pgld,
    format_pglc,
    parse_notation,
    parse_pgld,
    parse_pglc,
    pgld_to_pga,
    pglc_to_pga,
)
from .pga import InstructionStream, normalize
from .threads import DEAD, GNL, STOP, TAU, Post, ThreadGraph, ThreadNode, gc


# === register file states ===


@dataclass(frozen=True)
class RegisterFileState:
    """Partial map from register numbers (>= 1) to core primitives, kept in
    register order."""

    entries: tuple[tuple[int, CoreInstruction], ...] = ()

    def __post_init__(self):
        seen = set()
        for reg, instr in self.entries:
            if reg < 1:
                raise ValueError("register number must be >= 1")
            if reg in seen:
                raise ValueError(f"register {reg} bound twice")
            if not isinstance(instr, (Plain, PosTest, NegTest, FwdJump, Halt)):
                raise ValueError("register contents must be a core primitive")
            seen.add(reg)
        object.__setattr__(self, "entries", tuple(sorted(self.entries)))

    @classmethod
    def of(cls, mapping: dict[int, CoreInstruction]) -> "RegisterFileState":
        return cls(tuple(mapping.items()))

    def get(self, register: int) -> CoreInstruction | None:
        for reg, instr in self.entries:
            if reg == register:
                return instr
        return None

    def set(self, register: int, instr: CoreInstruction) -> "RegisterFileState":
        kept = tuple((r, u) for r, u in self.entries if r != register)
        return RegisterFileState(kept + ((register, instr),))

    def domain(self) -> tuple[int, ...]:
        return tuple(r for r, _ in self.entries)


EMPTY_STATE = RegisterFileState()


def parse_state(text: str, line: int | None = None) -> RegisterFileState:
    """Parse `1=#2,3=!`; the empty string is the empty state."""
    text = text.strip()
    if not text:
        return EMPTY_STATE
    entries = []
    for part in text.split(","):
        reg_text, sep, instr_text = part.partition("=")
        if not sep:
            raise ParseError(f"expected 'register=instruction' in {part.strip()!r}", line)
        try:
            reg = int(reg_text.strip())
        except ValueError:
            raise ParseError(f"bad register number {reg_text.strip()!r}", line) from None
        c = Cursor(instr_text.strip(), line)
        instr = parse_one(c)
        if not c.at_end():
            raise c.error("trailing text after instruction")
        if not isinstance(instr, (Plain, PosTest, NegTest, FwdJump, Halt)):
            raise ParseError("register contents must be a core primitive", line)
        entries.append((reg, instr))
    return RegisterFileState(tuple(entries))


def format_state(sigma: RegisterFileState) -> str:
    return ",".join(f"{reg}={render(instr)}" for reg, instr in sigma.entries)


# === fragment vectors ===

Fragment = PgldProgram | PglcProgram


@dataclass(frozen=True)
class FragmentVector:
    """1-based vector of (fragment, notation) pairs."""

    fragments: tuple[tuple[Fragment, NotationIndex], ...] = ()

    def __len__(self) -> int:
        return len(self.fragments)

    def fragment(self, i: int) -> Fragment:
        self._check(i)
        return self.fragments[i - 1][0]

    def notation(self, i: int) -> NotationIndex:
        self._check(i)
        return self.fragments[i - 1][1]

    def _check(self, i: int):
        if not 1 <= i <= len(self.fragments):
            raise IndexError(f"fragment index {i} outside 1..{len(self.fragments)}")


def parse_vector(text: str) -> FragmentVector:
    """One fragment per line: `<notation-letter>: <program>`.  Blank lines
    and lines starting with '#' are skipped."""
    fragments = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        letter, sep, body = line.partition(":")
        if not sep:
            raise ParseError("expected '<notation>: <program>'", ln)
        notation = parse_notation(letter, ln)
        if notation is NotationIndex.D:
            frag: Fragment = parse_pgld(body.strip(), ln)
        else:
            frag = parse_pglc(body.strip(), ln)
        fragments.append((frag, notation))
    return FragmentVector(tuple(fragments))


def format_vector(alpha: FragmentVector) -> str:
    lines = []
    for frag, notation in alpha.fragments:
        body = format_pgld(frag) if notation is NotationIndex.D else format_pglc(frag)
        lines.append(f"{notation.value}: {body}")
    return "\n".join(lines)


# === substitution and projection ===


def substitute(s: InstructionStream, sigma: RegisterFileState) -> InstructionStream:
    """Replace each `get(i)` with the contents of register i where bound;
    unbound placeholders and put payloads stay untouched."""

    def repl(u):
        if isinstance(u, Get):
            stored = sigma.get(u.register)
            if stored is not None:
                return stored
        return u

    return s.map(repl)


def project_fragment(alpha: FragmentVector, i: int) -> InstructionStream:
    """Stream semantics of fragment i under its notation's projection."""
    frag = alpha.fragment(i)
    if alpha.notation(i) is NotationIndex.D:
        return normalize(pgld_to_pga(frag))
    return pglc_to_pga(frag)


def is_valid(alpha: FragmentVector, i: int, sigma: RegisterFileState) -> bool:
    """Whether fragment i loads cleanly: substitution under sigma leaves no
    placeholder behind."""
    loaded = substitute(project_fragment(alpha, i), sigma)
    return not any(isinstance(u, Get) for u in loaded.instructions())


# === polyadic extraction ===


def extract_polyadic(
    main: InstructionStream,
    sigma: RegisterFileState,
    alpha: FragmentVector,
) -> ThreadGraph:
    """Behaviour of a main sequence that can store primitives and switch over
    to fragments of alpha.

    The main sequence runs as instruction sequences do; additionally
    `put(i,u)` makes a tau step and updates the register file, `get(i)` in a
    running sequence is inaction, and `@i` makes a gnl step into fragment i
    loaded under the current register file (the rest of the running sequence
    is discarded).  Out-of-range switch-over terminates; a fragment that does
    not load cleanly is inaction.
    """
    n = len(alpha)
    stream_ids: dict[InstructionStream, int] = {}
    by_id: list[InstructionStream] = []

    def intern(s: InstructionStream) -> int:
        sid = stream_ids.get(s)
        if sid is None:
            sid = len(by_id)
            stream_ids[s] = sid
            by_id.append(s)
        return sid

    def stream_of(sid: int) -> InstructionStream:
        return by_id[sid]

    instance_cache: dict[tuple[int, RegisterFileState], tuple[int, bool]] = {}

    def instance(i: int, sig: RegisterFileState) -> tuple[int, bool]:
        key = (i, sig)
        got = instance_cache.get(key)
        if got is None:
            loaded = substitute(project_fragment(alpha, i), sig)
            ok = not any(isinstance(u, Get) for u in loaded.instructions())
            got = (intern(loaded), ok)
            instance_cache[key] = got
        return got

    main_id = intern(main)

    _OFF = 0

    def resolve(sid: int, pos: int) -> int:
        s = stream_of(sid)
        seen = set()
        while True:
            p = s.norm(pos)
            u = s.at(p)
            if u is None:
                return _OFF
            if not isinstance(u, FwdJump):
                return p
            if u.counter == 0 or p in seen:
                return _OFF
            seen.add(p)
            pos = p + u.counter

    ids: dict[tuple, int] = {}
    nodes: list[ThreadNode] = []
    queue: list[tuple] = []

    def node_for(sid: int, pos: int, sig: RegisterFileState) -> int:
        p = resolve(sid, pos)
        if p == _OFF:
            key: tuple = ("dead",)
        else:
            u = stream_of(sid).at(p)
            if isinstance(u, Get):
                key = ("dead",)
            elif isinstance(u, Halt):
                key = ("stop",)
            else:
                key = (sid, p, sig)
        if key not in ids:
            ids[key] = len(nodes)
            nodes.append(STOP if key == ("stop",) else DEAD)
            if len(key) == 3:
                queue.append(key)
        return ids[key]

    root = node_for(main_id, 1, sigma)
    while queue:
        sid, p, sig = queue.pop()
        i = ids[(sid, p, sig)]
        u = stream_of(sid).at(p)
        if isinstance(u, Plain):
            succ = node_for(sid, p + 1, sig)
            nodes[i] = Post(u.basic, succ, succ)
        elif isinstance(u, PosTest):
            nodes[i] = Post(u.basic, node_for(sid, p + 1, sig), node_for(sid, p + 2, sig))
        elif isinstance(u, NegTest):
            nodes[i] = Post(u.basic, node_for(sid, p + 2, sig), node_for(sid, p + 1, sig))
        elif isinstance(u, Put):
            succ = node_for(sid, p + 1, sig.set(u.register, u.payload))
            nodes[i] = Post(TAU, succ, succ)
        elif isinstance(u, Swo):
            if u.index == 0 or u.index > n:
                nodes[i] = STOP
            else:
                target_id, ok = instance(u.index, sig)
                if not ok:
                    nodes[i] = DEAD
                else:
                    succ = node_for(target_id, 1, sig)
                    nodes[i] = Post(GNL, succ, succ)
        else:  # pragma: no cover
            raise AssertionError(u)
    return gc(ThreadGraph(tuple(nodes), root))
