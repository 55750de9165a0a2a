"""Algorithms on tropical-semiring FSTs.

Composition uses the classic three-state epsilon filter so that every
interleaving of epsilon moves maps to exactly one composed path (no path
double-counting under the tropical min).  Determinization is a weighted
subset construction that treats epsilon like an ordinary label, which is
the usual convention for the back-off n-gram machines built here.
"""

from __future__ import annotations

import heapq
from collections import deque

from .errors import (AlphabetError, DeterminizationBudgetError, FstError,
                     MissingClassError)
from .fst import EPSILON, NO_STATE, ONE, ZERO, Arc, Fst, tropical_plus


def arc_sort(fst: Fst, tape: str = "input") -> Fst:
    """Return a copy with each state's arcs ordered by the chosen tape."""
    if tape not in ("input", "output"):
        raise FstError(f"unknown tape: {tape!r}")
    out = fst.copy()
    if tape == "input":
        key = lambda a: (a.ilabel, a.olabel, a.weight, a.nextstate)
    else:
        key = lambda a: (a.olabel, a.ilabel, a.weight, a.nextstate)
    for arcs in out._arcs:
        arcs.sort(key=key)
    out.input_sorted = tape == "input"
    out.output_sorted = tape == "output"
    return out


def connect(fst: Fst) -> Fst:
    """Trim states that are not on some accepting path."""
    if fst.is_empty():
        return Fst(fst.isymbols, fst.osymbols)
    accessible = set()
    stack = [fst.start]
    while stack:
        s = stack.pop()
        if s in accessible:
            continue
        accessible.add(s)
        for arc in fst.arcs(s):
            if arc.nextstate not in accessible:
                stack.append(arc.nextstate)
    preds: dict[int, list[int]] = {}
    for s in accessible:
        for arc in fst.arcs(s):
            preds.setdefault(arc.nextstate, []).append(s)
    coaccessible = set()
    stack = [s for s, _ in fst.finals() if s in accessible]
    while stack:
        s = stack.pop()
        if s in coaccessible:
            continue
        coaccessible.add(s)
        for p in preds.get(s, ()):
            if p not in coaccessible:
                stack.append(p)
    keep = sorted(accessible & coaccessible)
    remap = {s: i for i, s in enumerate(keep)}
    out = Fst(fst.isymbols, fst.osymbols)
    out.add_states(len(keep))
    for s in keep:
        for arc in fst.arcs(s):
            if arc.nextstate in remap:
                out.add_arc(remap[s], arc.ilabel, arc.olabel, arc.weight,
                            remap[arc.nextstate])
        if fst.is_final(s):
            out.set_final(remap[s], fst.final(s))
    if fst.start in remap:
        out.set_start(remap[fst.start])
    return out


def _check_alphabets(a: Fst, b: Fst) -> None:
    if a.osymbols is not None and b.isymbols is not None and a.osymbols != b.isymbols:
        raise AlphabetError("left output alphabet differs from right input alphabet")


def compose_static(a: Fst, b: Fst) -> Fst:
    """Static composition with the three-state epsilon filter.

    Filter states: 0 = free, 1 = committed to right-only epsilon moves,
    2 = committed to left-only epsilon moves.  Between two matched labels
    this admits exactly one interleaving of the epsilon moves of both
    machines.
    """
    _check_alphabets(a, b)
    out = Fst(a.isymbols, b.osymbols)
    if a.is_empty() or b.is_empty():
        return out

    match_index: dict[tuple[int, int], list[Arc]] = {}
    for s2 in b.states():
        for arc in b.arcs(s2):
            match_index.setdefault((s2, arc.ilabel), []).append(arc)

    state_ids: dict[tuple[int, int, int], int] = {}

    def state_of(key: tuple[int, int, int]) -> int:
        sid = state_ids.get(key)
        if sid is None:
            sid = out.add_state()
            state_ids[key] = sid
            queue.append(key)
        return sid

    queue: deque[tuple[int, int, int]] = deque()
    start_key = (a.start, b.start, 0)
    out.set_start(state_of(start_key))
    while queue:
        key = queue.popleft()
        s1, s2, f = key
        sid = state_ids[key]
        fa, fb = a.final(s1), b.final(s2)
        if fa != ZERO and fb != ZERO:
            out.set_final(sid, fa + fb)
        for arc1 in a.arcs(s1):
            if arc1.olabel != EPSILON:
                for arc2 in match_index.get((s2, arc1.olabel), ()):
                    out.add_arc(sid, arc1.ilabel, arc2.olabel,
                                arc1.weight + arc2.weight,
                                state_of((arc1.nextstate, arc2.nextstate, 0)))
            else:
                if f in (0, 2):  # left moves alone
                    out.add_arc(sid, arc1.ilabel, EPSILON, arc1.weight,
                                state_of((arc1.nextstate, s2, 2)))
                if f == 0:  # both move on their own epsilons
                    for arc2 in match_index.get((s2, EPSILON), ()):
                        out.add_arc(sid, arc1.ilabel, arc2.olabel,
                                    arc1.weight + arc2.weight,
                                    state_of((arc1.nextstate, arc2.nextstate, 0)))
        if f in (0, 1):  # right moves alone
            for arc2 in match_index.get((s2, EPSILON), ()):
                out.add_arc(sid, EPSILON, arc2.olabel, arc2.weight,
                            state_of((s1, arc2.nextstate, 1)))
    return out


def determinize(fst: Fst, state_budget: int = 1_000_000) -> Fst:
    """Weighted subset construction over (ilabel, olabel) pair labels.

    Epsilon is treated as an ordinary label, so back-off epsilon arcs
    survive as at most one arc per state; the weighted language is
    unchanged.  Raises when more than ``state_budget`` subset states are
    created, which signals a non-determinizable or pathological input.
    """
    out = Fst(fst.isymbols, fst.osymbols)
    if fst.is_empty():
        return out

    subset_ids: dict[tuple[tuple[int, float], ...], int] = {}
    queue: deque[tuple[tuple[int, float], ...]] = deque()

    def state_of(subset: tuple[tuple[int, float], ...]) -> int:
        sid = subset_ids.get(subset)
        if sid is None:
            if len(subset_ids) >= state_budget:
                raise DeterminizationBudgetError(
                    f"determinization exceeded {state_budget} states")
            sid = out.add_state()
            subset_ids[subset] = sid
            queue.append(subset)
        return sid

    out.set_start(state_of(((fst.start, 0.0),)))
    while queue:
        subset = queue.popleft()
        sid = subset_ids[subset]
        final = ZERO
        moves: dict[tuple[int, int], dict[int, float]] = {}
        for q, residual in subset:
            fw = fst.final(q)
            if fw != ZERO:
                final = tropical_plus(final, residual + fw)
            for arc in fst.arcs(q):
                targets = moves.setdefault((arc.ilabel, arc.olabel), {})
                w = residual + arc.weight
                prev = targets.get(arc.nextstate)
                if prev is None or w < prev:
                    targets[arc.nextstate] = w
        if final != ZERO:
            out.set_final(sid, final)
        for (il, ol), targets in sorted(moves.items()):
            base = min(targets.values())
            nxt = tuple(sorted((q, w - base) for q, w in targets.items()))
            out.add_arc(sid, il, ol, base, state_of(nxt))
    return out


def is_deterministic(fst: Fst) -> bool:
    """At most one arc per (ilabel, olabel) pair out of every state."""
    for s in fst.states():
        seen = set()
        for arc in fst.arcs(s):
            key = (arc.ilabel, arc.olabel)
            if key in seen:
                return False
            seen.add(key)
    return True


def _distances_to_final(fst: Fst) -> list[float]:
    """Shortest accepting-continuation weight from every state."""
    dist = [ZERO] * fst.num_states()
    preds: dict[int, list[tuple[int, float]]] = {}
    for s in fst.states():
        for arc in fst.arcs(s):
            preds.setdefault(arc.nextstate, []).append((s, arc.weight))
    worklist = deque()
    for s, w in fst.finals():
        dist[s] = w
        worklist.append(s)
    while worklist:
        s = worklist.popleft()
        d = dist[s]
        for p, w in preds.get(s, ()):
            nd = w + d
            if nd < dist[p] - 1e-15:
                dist[p] = nd
                worklist.append(p)
    return dist


def push(fst: Fst, mode: str = "weights") -> Fst:
    """Push weights or output labels toward the start state.

    Both modes preserve the weighted language exactly.  When the residue at
    the start cannot be folded into its outgoing arcs (the start state lies
    on a cycle), a fresh initial state is prepended instead.
    """
    if mode == "weights":
        return _push_weights(fst)
    if mode == "labels":
        return _push_labels(fst)
    raise FstError(f"unknown push mode: {mode!r}")


def _push_weights(fst: Fst) -> Fst:
    if fst.is_empty():
        return fst.copy()
    trimmed = connect(fst)
    if trimmed.is_empty():
        return trimmed
    dist = _distances_to_final(trimmed)
    out = Fst(trimmed.isymbols, trimmed.osymbols)
    out.add_states(trimmed.num_states())
    start = trimmed.start
    residue = dist[start]
    has_incoming = any(arc.nextstate == start
                       for s in trimmed.states() for arc in trimmed.arcs(s))
    fold_at_start = residue == 0.0 or not has_incoming
    for s in trimmed.states():
        base = 0.0 if (fold_at_start and s == start) else dist[s]
        for arc in trimmed.arcs(s):
            out.add_arc(s, arc.ilabel, arc.olabel,
                        arc.weight + dist[arc.nextstate] - base, arc.nextstate)
        if trimmed.is_final(s):
            out.set_final(s, trimmed.final(s) - base)
    if fold_at_start:
        out.set_start(start)
    else:
        s0 = out.add_state()
        out.add_arc(s0, EPSILON, EPSILON, residue, start)
        out.set_start(s0)
    return out


def _suffix_label_potentials(fst: Fst) -> list[tuple[int, ...]]:
    """Longest common prefix of the output strings of all accepting
    continuations, per state.  Non-coaccessible states get ()."""
    TOP = None  # lcp identity

    def lcp(x, y):
        if x is TOP:
            return y
        if y is TOP:
            return x
        n = 0
        for xa, ya in zip(x, y):
            if xa != ya:
                break
            n += 1
        return x[:n]

    pot: list = [TOP] * fst.num_states()
    for s, _ in fst.finals():
        pot[s] = ()
    changed = True
    while changed:
        changed = False
        for s in fst.states():
            acc = () if fst.is_final(s) else TOP
            for arc in fst.arcs(s):
                nxt = pot[arc.nextstate]
                if nxt is TOP:
                    continue
                contrib = ((arc.olabel,) if arc.olabel != EPSILON else ()) + nxt
                acc = lcp(acc, contrib)
            if acc is not TOP and acc != pot[s]:
                pot[s] = acc
                changed = True
    return [p if p is not TOP else () for p in pot]


def _push_labels(fst: Fst) -> Fst:
    if fst.is_empty():
        return fst.copy()
    trimmed = connect(fst)
    if trimmed.is_empty():
        return trimmed
    pot = _suffix_label_potentials(trimmed)
    start = trimmed.start
    has_incoming = any(arc.nextstate == start
                       for s in trimmed.states() for arc in trimmed.arcs(s))
    fold_at_start = not pot[start] or not has_incoming
    out = Fst(trimmed.isymbols, trimmed.osymbols)
    out.add_states(trimmed.num_states())

    def emit(src: int, ilabel: int, weight: float, labels: tuple[int, ...],
             dst: int) -> None:
        if len(labels) <= 1:
            out.add_arc(src, ilabel, labels[0] if labels else EPSILON, weight, dst)
            return
        cur = src
        for i, label in enumerate(labels[:-1]):
            mid = out.add_state()
            out.add_arc(cur, ilabel if i == 0 else EPSILON, label,
                        weight if i == 0 else ONE, mid)
            cur = mid
        out.add_arc(cur, EPSILON, labels[-1], ONE, dst)

    for s in trimmed.states():
        prefix = () if (fold_at_start and s == start) else pot[s]
        for arc in trimmed.arcs(s):
            seq = ((arc.olabel,) if arc.olabel != EPSILON else ()) + pot[arc.nextstate]
            if seq[:len(prefix)] != prefix:
                raise FstError("label pushing invariant violated")
            emit(s, arc.ilabel, arc.weight, seq[len(prefix):], arc.nextstate)
        if trimmed.is_final(s):
            out.set_final(s, trimmed.final(s))
    if fold_at_start:
        out.set_start(start)
    else:
        cur = out.add_state()
        out.set_start(cur)
        for i, label in enumerate(pot[start]):
            nxt = start if i == len(pot[start]) - 1 else out.add_state()
            out.add_arc(cur, EPSILON, label, ONE, nxt)
            cur = nxt
    return out


def rm_epsilon(fst: Fst) -> Fst:
    """Remove epsilon:epsilon arcs, folding their weights into neighbors."""
    if fst.is_empty():
        return fst.copy()
    closures: list[dict[int, float]] = []
    for s in fst.states():
        closure = {s: 0.0}
        worklist = deque([s])
        while worklist:
            q = worklist.popleft()
            for arc in fst.arcs(q):
                if arc.ilabel == EPSILON and arc.olabel == EPSILON:
                    w = closure[q] + arc.weight
                    if w < closure.get(arc.nextstate, ZERO) - 1e-15:
                        closure[arc.nextstate] = w
                        worklist.append(arc.nextstate)
        closures.append(closure)
    out = Fst(fst.isymbols, fst.osymbols)
    out.add_states(fst.num_states())
    out.set_start(fst.start)
    for s in fst.states():
        best: dict[tuple[int, int, int], float] = {}
        final = ZERO
        for q, wq in closures[s].items():
            fw = fst.final(q)
            if fw != ZERO:
                final = tropical_plus(final, wq + fw)
            for arc in fst.arcs(q):
                if arc.ilabel == EPSILON and arc.olabel == EPSILON:
                    continue
                key = (arc.ilabel, arc.olabel, arc.nextstate)
                w = wq + arc.weight
                prev = best.get(key)
                if prev is None or w < prev:
                    best[key] = w
        for (il, ol, nxt), w in sorted(best.items()):
            out.add_arc(s, il, ol, w, nxt)
        if final != ZERO:
            out.set_final(s, final)
    return connect(out)


def minimize(fst: Fst) -> Fst:
    """Merge equivalent states of a deterministic machine.

    Weights are first pushed toward the start so that states with identical
    suffix behavior carry bit-identical arc weights, then a Moore-style
    partition refinement computes the quotient.
    """
    if not is_deterministic(fst):
        raise FstError("minimize requires a deterministic input")
    if fst.is_empty():
        return fst.copy()
    pushed = _push_weights(fst)
    if pushed.is_empty():
        return pushed
    n = pushed.num_states()
    block = [0] * n
    key0: dict[tuple, int] = {}
    for s in range(n):
        sig = (pushed.is_final(s), round(pushed.final(s), 12) if pushed.is_final(s) else 0.0)
        block[s] = key0.setdefault(sig, len(key0))
    while True:
        keys: dict[tuple, int] = {}
        nxt = [0] * n
        for s in range(n):
            sig = (block[s], tuple(sorted(
                (a.ilabel, a.olabel, round(a.weight, 12), block[a.nextstate])
                for a in pushed.arcs(s))))
            nxt[s] = keys.setdefault(sig, len(keys))
        if nxt == block:
            break
        block = nxt
    reps: dict[int, int] = {}
    out = Fst(pushed.isymbols, pushed.osymbols)
    order = [pushed.start] + [s for s in range(n) if s != pushed.start]
    for s in order:
        if block[s] not in reps:
            reps[block[s]] = out.add_state()
    emitted = set()
    for s in order:
        b = block[s]
        if b in emitted:
            continue
        emitted.add(b)
        sid = reps[b]
        for arc in pushed.arcs(s):
            out.add_arc(sid, arc.ilabel, arc.olabel, arc.weight,
                        reps[block[arc.nextstate]])
        if pushed.is_final(s):
            out.set_final(sid, pushed.final(s))
    out.set_start(reps[block[pushed.start]])
    return out


def replace(root: Fst, substitutions: dict[int, Fst],
            class_labels: set[int] | None = None) -> Fst:
    """Splice a sub-FST over every arc labeled with a class symbol.

    Each class arc of weight w becomes an epsilon entry arc of weight w
    into a fresh copy of the substitution, with epsilon exit arcs carrying
    the copy's final weights.  One nesting level only: substitutions may
    not contain class labels themselves.
    """
    classes = set(substitutions) if class_labels is None else set(class_labels)
    for label, sub in substitutions.items():
        for s in sub.states():
            for arc in sub.arcs(s):
                if arc.ilabel in classes or arc.olabel in classes:
                    raise MissingClassError(
                        f"substitution for label {label} contains class label "
                        f"{arc.ilabel if arc.ilabel in classes else arc.olabel}")
    out = Fst(root.isymbols, root.osymbols)
    out.add_states(root.num_states())
    if root.is_empty():
        return out
    out.set_start(root.start)
    for s in root.states():
        if root.is_final(s):
            out.set_final(s, root.final(s))
        for arc in root.arcs(s):
            is_class = arc.ilabel in classes or arc.olabel in classes
            if not is_class:
                out.add_arc(s, arc.ilabel, arc.olabel, arc.weight, arc.nextstate)
                continue
            if arc.ilabel != arc.olabel:
                raise FstError("class arcs must carry the class label on both tapes")
            sub = substitutions.get(arc.ilabel)
            if sub is None:
                raise MissingClassError(f"no substitution for class label {arc.ilabel}")
            if sub.is_empty():
                continue
            offset = out.add_states(sub.num_states())
            for q in sub.states():
                for sarc in sub.arcs(q):
                    out.add_arc(offset + q, sarc.ilabel, sarc.olabel,
                                sarc.weight, offset + sarc.nextstate)
            out.add_arc(s, EPSILON, EPSILON, arc.weight, offset + sub.start)
            for q, fw in sub.finals():
                out.add_arc(offset + q, EPSILON, EPSILON, fw, arc.nextstate)
    return out


def shortest_path(fst, n: int = 1, expansion_budget: int = 1_000_000
                  ) -> list[tuple[tuple[tuple[int, ...], tuple[int, ...]], float]]:
    """n best accepting paths, ascending by weight.

    Returns ``[((input_labels, output_labels), weight), ...]`` with ties
    broken by the output-label sequence.  Works on a static ``Fst`` or a
    ``LazyFst`` (which is fully expanded first).  A* over exact
    suffix distances; each state may be popped at most n times, which
    bounds the search even on cyclic machines.
    """
    if n < 1:
        raise FstError("n must be >= 1")
    if hasattr(fst, "expand"):
        fst = fst.expand()
    if fst.is_empty():
        return []
    dist = _distances_to_final(fst)
    if dist[fst.start] == ZERO:
        return []
    results = []
    pops: dict[int, int] = {}
    counter = 0
    # entries: (priority weight, olabels, done flag, tiebreak counter, state, g, ilabels)
    heap = [(dist[fst.start], (), False, 0, fst.start, 0.0, ())]
    expansions = 0
    while heap and len(results) < n:
        expansions += 1
        if expansions > expansion_budget:
            raise FstError("shortest_path expansion budget exceeded")
        prio, oseq, done, _, state, g, iseq = heapq.heappop(heap)
        if done:
            results.append(((iseq, oseq), prio))
            continue
        seen = pops.get(state, 0)
        if seen >= n:
            continue
        pops[state] = seen + 1
        fw = fst.final(state)
        if fw != ZERO:
            counter += 1
            heapq.heappush(heap, (g + fw, oseq, True, counter, state, g + fw, iseq))
        for arc in fst.arcs(state):
            ng = g + arc.weight
            h = dist[arc.nextstate]
            if h == ZERO:
                continue
            counter += 1
            noseq = oseq + (arc.olabel,) if arc.olabel != EPSILON else oseq
            niseq = iseq + (arc.ilabel,) if arc.ilabel != EPSILON else iseq
            heapq.heappush(heap, (ng + h, noseq, False, counter, arc.nextstate,
                                  ng, niseq))
    return results


def weighted_language(fst, max_len: int = 8,
                      relaxation_budget: int = 2_000_000
                      ) -> dict[tuple[tuple[int, ...], tuple[int, ...]], float]:
    """Min-aggregated weight of every accepted string pair up to max_len.

    The configuration space (state, input-so-far, output-so-far) is relaxed
    to a fixpoint, so the result is exact for arbitrary epsilon structure
    as long as there is no negative cycle.  This is the reference oracle
    for the language-equality tests.
    """
    if hasattr(fst, "expand"):
        fst = fst.expand()
    if fst.is_empty():
        return {}
    dist: dict[tuple[int, tuple[int, ...], tuple[int, ...]], float] = {}
    start = (fst.start, (), ())
    dist[start] = 0.0
    worklist = deque([start])
    steps = 0
    while worklist:
        steps += 1
        if steps > relaxation_budget:
            raise FstError("weighted_language relaxation budget exceeded")
        cfg = worklist.popleft()
        state, iseq, oseq = cfg
        d = dist[cfg]
        for arc in fst.arcs(state):
            niseq = iseq
            if arc.ilabel != EPSILON:
                if len(iseq) >= max_len:
                    continue
                niseq = iseq + (arc.ilabel,)
            noseq = oseq
            if arc.olabel != EPSILON:
                if len(oseq) >= max_len:
                    continue
                noseq = oseq + (arc.olabel,)
            ncfg = (arc.nextstate, niseq, noseq)
            nd = d + arc.weight
            if nd < dist.get(ncfg, ZERO) - 1e-15:
                dist[ncfg] = nd
                worklist.append(ncfg)
    language: dict[tuple[tuple[int, ...], tuple[int, ...]], float] = {}
    for (state, iseq, oseq), d in dist.items():
        fw = fst.final(state)
        if fw != ZERO:
            key = (iseq, oseq)
            w = d + fw
            if w < language.get(key, ZERO):
                language[key] = w
    return language


def acceptor_language(fst, max_len: int = 8) -> dict[tuple[int, ...], float]:
    """weighted_language keyed by the single label sequence of an acceptor."""
    out: dict[tuple[int, ...], float] = {}
    for (iseq, oseq), w in weighted_language(fst, max_len).items():
        if iseq != oseq:
            raise FstError("acceptor_language called on a transducer")
        if w < out.get(iseq, ZERO):
            out[iseq] = w
    return out


def isomorphic(a: Fst, b: Fst, weight_tol: float = 1e-12) -> bool:
    """Structural equality up to state renumbering.

    Requires a deterministic arc pairing, which holds for machines whose
    per-state arcs are unique by (ilabel, olabel, nextstate-role); arcs are
    matched after sorting by labels and weight.
    """
    if a.num_states() != b.num_states() or a.num_arcs() != b.num_arcs():
        return False
    if a.is_empty() and b.is_empty():
        return True
    if a.is_empty() != b.is_empty():
        return False
    mapping = {a.start: b.start}
    queue = deque([a.start])
    visited = {a.start}
    while queue:
        s = queue.popleft()
        t = mapping[s]
        if a.is_final(s) != b.is_final(t):
            return False
        if a.is_final(s) and abs(a.final(s) - b.final(t)) > weight_tol:
            return False
        arcs_a = sorted(a.arcs(s), key=lambda x: (x.ilabel, x.olabel, x.weight))
        arcs_b = sorted(b.arcs(t), key=lambda x: (x.ilabel, x.olabel, x.weight))
        if len(arcs_a) != len(arcs_b):
            return False
        for arc_a, arc_b in zip(arcs_a, arcs_b):
            if (arc_a.ilabel, arc_a.olabel) != (arc_b.ilabel, arc_b.olabel):
                return False
            if abs(arc_a.weight - arc_b.weight) > weight_tol:
                return False
            prev = mapping.get(arc_a.nextstate)
            if prev is None:
                mapping[arc_a.nextstate] = arc_b.nextstate
            elif prev != arc_b.nextstate:
                return False
            if arc_a.nextstate not in visited:
                visited.add(arc_a.nextstate)
                queue.append(arc_a.nextstate)
    return True
