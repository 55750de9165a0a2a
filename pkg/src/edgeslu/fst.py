"""Weighted finite-state transducers over the tropical semiring.

Weights are plain floats holding negative log-probabilities: ``min`` is the
semiring sum, ``+`` the semiring product, ``0.0`` the product identity and
``math.inf`` the absorbing zero (no path).  Label id 0 is reserved for
epsilon on both tapes.

Fst values are treated as immutable once built: every operation in
:mod:`edgeslu.fst_ops` returns a new machine, so built graphs can be shared
freely across decoding sessions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

from .errors import FstError

EPSILON = 0

ZERO = math.inf
ONE = 0.0

NO_STATE = -1


def tropical_plus(a: float, b: float) -> float:
    return a if a <= b else b


def tropical_times(a: float, b: float) -> float:
    return a + b


@dataclass(slots=True)
class Arc:
    ilabel: int
    olabel: int
    weight: float
    nextstate: int


class SymbolTable:
    """Bidirectional dense map between symbol strings and integer ids.

    Id 0 is always the epsilon symbol.
    """

    def __init__(self, epsilon: str = "<eps>"):
        self._symbols: list[str] = [epsilon]
        self._ids: dict[str, int] = {epsilon: 0}

    def add(self, symbol: str) -> int:
        """Add a symbol (idempotent) and return its id."""
        sid = self._ids.get(symbol)
        if sid is None:
            sid = len(self._symbols)
            self._symbols.append(symbol)
            self._ids[symbol] = sid
        return sid

    def id(self, symbol: str) -> int:
        try:
            return self._ids[symbol]
        except KeyError:
            raise KeyError(f"symbol not in table: {symbol!r}") from None

    def get(self, symbol: str, default: int | None = None) -> int | None:
        return self._ids.get(symbol, default)

    def symbol(self, sid: int) -> str:
        try:
            return self._symbols[sid]
        except IndexError:
            raise KeyError(f"id not in table: {sid}") from None

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._ids

    def __len__(self) -> int:
        return len(self._symbols)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SymbolTable) and other._symbols == self._symbols

    def __iter__(self) -> Iterator[str]:
        return iter(self._symbols)

    def items(self) -> Iterator[tuple[str, int]]:
        return ((s, i) for i, s in enumerate(self._symbols))

    def copy(self) -> "SymbolTable":
        out = SymbolTable.__new__(SymbolTable)
        out._symbols = list(self._symbols)
        out._ids = dict(self._ids)
        return out

    def to_text(self) -> str:
        return "".join(f"{s}\t{i}\n" for i, s in enumerate(self._symbols))

    @classmethod
    def from_text(cls, text: str) -> "SymbolTable":
        pairs = []
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != 2:
                raise FstError(f"symbol table line {lineno}: expected 'symbol id'")
            pairs.append((fields[0], int(fields[1])))
        pairs.sort(key=lambda p: p[1])
        if not pairs or pairs[0][1] != 0:
            raise FstError("symbol table must define id 0 (epsilon)")
        table = cls(epsilon=pairs[0][0])
        for sym, sid in pairs[1:]:
            if sid != len(table._symbols):
                raise FstError(f"symbol table ids not dense at id {sid}")
            table.add(sym)
        return table


class Fst:
    """Mutable-while-building weighted transducer.

    States are dense integers.  Arcs live in per-state lists; final states
    map to their final weight.  ``input_sorted``/``output_sorted`` report
    whether :func:`edgeslu.fst_ops.arc_sort` ordered the arcs, which lazy
    composition requires.
    """

    def __init__(self, isymbols: SymbolTable | None = None,
                 osymbols: SymbolTable | None = None):
        self._arcs: list[list[Arc]] = []
        self._finals: dict[int, float] = {}
        self.start = NO_STATE
        self.isymbols = isymbols
        self.osymbols = osymbols
        self.input_sorted = False
        self.output_sorted = False

    # -- construction -----------------------------------------------------

    def add_state(self) -> int:
        self._arcs.append([])
        return len(self._arcs) - 1

    def add_states(self, n: int) -> int:
        """Add n states, returning the id of the first."""
        first = len(self._arcs)
        for _ in range(n):
            self._arcs.append([])
        return first

    def add_arc(self, state: int, ilabel: int, olabel: int,
                weight: float, nextstate: int) -> None:
        if not (0 <= state < len(self._arcs)) or not (0 <= nextstate < len(self._arcs)):
            raise FstError(f"arc endpoints out of range: {state} -> {nextstate}")
        self._arcs[state].append(Arc(ilabel, olabel, weight, nextstate))
        self.input_sorted = False
        self.output_sorted = False

    def set_start(self, state: int) -> None:
        if not 0 <= state < len(self._arcs):
            raise FstError(f"start state out of range: {state}")
        self.start = state

    def set_final(self, state: int, weight: float = ONE) -> None:
        if not 0 <= state < len(self._arcs):
            raise FstError(f"final state out of range: {state}")
        if weight == ZERO:
            self._finals.pop(state, None)
        else:
            self._finals[state] = weight

    # -- inspection --------------------------------------------------------

    def num_states(self) -> int:
        return len(self._arcs)

    def num_arcs(self) -> int:
        return sum(len(a) for a in self._arcs)

    def states(self) -> range:
        return range(len(self._arcs))

    def arcs(self, state: int) -> list[Arc]:
        return self._arcs[state]

    def final(self, state: int) -> float:
        return self._finals.get(state, ZERO)

    def is_final(self, state: int) -> bool:
        return state in self._finals

    def finals(self) -> Iterator[tuple[int, float]]:
        return iter(self._finals.items())

    def is_empty(self) -> bool:
        return self.start == NO_STATE

    def is_acceptor(self) -> bool:
        return all(arc.ilabel == arc.olabel
                   for arcs in self._arcs for arc in arcs)

    def __repr__(self) -> str:
        return (f"Fst(states={self.num_states()}, arcs={self.num_arcs()}, "
                f"finals={len(self._finals)})")

    def copy(self) -> "Fst":
        out = Fst(self.isymbols, self.osymbols)
        out._arcs = [[Arc(a.ilabel, a.olabel, a.weight, a.nextstate) for a in arcs]
                     for arcs in self._arcs]
        out._finals = dict(self._finals)
        out.start = self.start
        out.input_sorted = self.input_sorted
        out.output_sorted = self.output_sorted
        return out

    # -- convenience constructors -----------------------------------------

    @classmethod
    def from_path(cls, labels: Iterable[int], weight: float = ONE,
                  isymbols: SymbolTable | None = None,
                  osymbols: SymbolTable | None = None) -> "Fst":
        """Single-path acceptor for a label sequence; weight on the last arc."""
        fst = cls(isymbols, osymbols)
        labels = list(labels)
        cur = fst.add_state()
        fst.set_start(cur)
        for label in labels:
            nxt = fst.add_state()
            fst.add_arc(cur, label, label, ONE, nxt)
            cur = nxt
        fst.set_final(cur, weight)
        return fst

    @classmethod
    def union_of_paths(cls, paths: Iterable[tuple[Iterable[int], float]],
                       isymbols: SymbolTable | None = None,
                       osymbols: SymbolTable | None = None) -> "Fst":
        """Acceptor for a finite weighted language, one branch per entry."""
        fst = cls(isymbols, osymbols)
        root = fst.add_state()
        fst.set_start(root)
        for labels, weight in paths:
            cur = root
            for label in labels:
                nxt = fst.add_state()
                fst.add_arc(cur, label, label, ONE, nxt)
                cur = nxt
            fst.set_final(cur, tropical_plus(fst.final(cur), weight))
        return fst


# -- AT&T text format ---------------------------------------------------------


def write_fst_text(fst: Fst) -> str:
    """Serialize in AT&T text format: arc lines then final lines.

    Labels are numeric ids; symbol tables are serialized separately.  The
    start state is the source of the first arc line (or the first final
    line for arc-less machines), following the usual convention.
    """
    if fst.is_empty():
        return ""
    lines = []
    order = [fst.start] + [s for s in fst.states() if s != fst.start]
    for state in order:
        for arc in fst.arcs(state):
            lines.append(f"{state} {arc.nextstate} {arc.ilabel} {arc.olabel} "
                         f"{arc.weight!r}")
    emitted_start = any(fst.arcs(fst.start)) or fst.is_final(fst.start)
    if not emitted_start:
        # start state with no arcs and no final weight: keep it recoverable
        lines.append(f"{fst.start} {ZERO!r}")
    for state in order:
        if fst.is_final(state):
            lines.append(f"{state} {fst.final(state)!r}")
    return "\n".join(lines) + "\n"


def read_fst_text(text: str, isymbols: SymbolTable | None = None,
                  osymbols: SymbolTable | None = None,
                  acceptor: bool = False,
                  symbol_lookup: Callable[[str, SymbolTable | None], int] | None = None) -> Fst:
    """Parse the AT&T text format.

    With symbol tables given, label fields may be symbol strings (resolved,
    and added when missing); otherwise they must be integer ids.  With
    ``acceptor=True`` arc lines carry a single label column.
    """

    def parse_label(token: str, table: SymbolTable | None) -> int:
        if symbol_lookup is not None:
            return symbol_lookup(token, table)
        if table is not None and not token.lstrip("-").isdigit():
            return table.add(token)
        return int(token)

    fst = Fst(isymbols, osymbols)

    def ensure_state(sid: int) -> int:
        while fst.num_states() <= sid:
            fst.add_state()
        return sid

    start_seen = False
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        fields = line.split()
        try:
            arc_width = 3 if acceptor else 4
            if len(fields) in (arc_width, arc_width + 1):
                src = ensure_state(int(fields[0]))
                dst = ensure_state(int(fields[1]))
                il = parse_label(fields[2], isymbols)
                ol = il if acceptor else parse_label(fields[3], osymbols)
                weight = float(fields[arc_width]) if len(fields) > arc_width else ONE
                fst.add_arc(src, il, ol, weight, dst)
                if not start_seen:
                    fst.set_start(src)
                    start_seen = True
            elif len(fields) in (1, 2):
                state = ensure_state(int(fields[0]))
                weight = float(fields[1]) if len(fields) == 2 else ONE
                if weight != ZERO:
                    fst.set_final(state, weight)
                if not start_seen:
                    fst.set_start(state)
                    start_seen = True
            else:
                raise ValueError("unexpected field count")
        except (ValueError, KeyError) as exc:
            raise FstError(f"FST text line {lineno}: {exc}") from exc
    return fst
