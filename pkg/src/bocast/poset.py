"""Finite partial orders: width, maximum antichains, chain covers.

The width (maximum antichain size) is computed exactly through a maximum
bipartite matching on the strict comparability relation: a poset of n
elements has a minimum chain cover of size n - |maximum matching|, and
that size equals the width.  The matching also yields a maximum antichain
witness (via a minimum vertex cover) and a concrete chain decomposition,
which is what turns a delivery order of width <= k into k total-order
channels.

A brute-force maximum-antichain enumerator over element subsets is kept
as an independent oracle for small posets; the two must always agree.
"""

from __future__ import annotations

from .rng import SplitMix64


class PosetError(ValueError):
    """The given relation is not a strict partial order."""


class BoundViolation(ValueError):
    """Width exceeds the requested channel bound; carries a witness."""

    def __init__(self, k: int, antichain: list):
        self.k = k
        self.antichain = antichain
        super().__init__(f"width {len(antichain)} exceeds bound k={k}; antichain {antichain}")


class Poset:
    """Strict partial order over hashable elements, stored transitively closed.

    ``less`` maps each element to the set of elements strictly above it.
    ``key`` fixes the deterministic element ordering used in outputs.
    """

    def __init__(self, elements, less: dict, key=None):
        self.key = key if key is not None else lambda x: x
        self.elements = sorted(elements, key=self.key)
        self.less = {x: frozenset(less.get(x, ())) for x in self.elements}
        self._validate()
        self._index = {x: i for i, x in enumerate(self.elements)}
        self._matching = None

    def _validate(self) -> None:
        known = set(self.elements)
        if len(known) != len(self.elements):
            raise PosetError("duplicate elements")
        for x, ups in self.less.items():
            if x in ups:
                raise PosetError(f"irreflexivity violated at {x!r}")
            for y in ups:
                if y not in known:
                    raise PosetError(f"unknown element {y!r} above {x!r}")
                if x in self.less[y]:
                    raise PosetError(f"antisymmetry violated between {x!r} and {y!r}")
                if not self.less[y] <= ups:
                    raise PosetError(f"transitivity violated at {x!r} < {y!r}")

    # --- queries ---------------------------------------------------------

    def lt(self, x, y) -> bool:
        return y in self.less[x]

    def comparable(self, x, y) -> bool:
        return x == y or self.lt(x, y) or self.lt(y, x)

    def is_antichain(self, xs) -> bool:
        xs = list(xs)
        return all(
            not self.comparable(xs[i], xs[j])
            for i in range(len(xs))
            for j in range(i + 1, len(xs))
        )

    def is_chain(self, xs) -> bool:
        xs = list(xs)
        return all(self.lt(xs[i], xs[i + 1]) for i in range(len(xs) - 1))

    # --- matching machinery ------------------------------------------------

    def _adjacency(self) -> list[list[int]]:
        idx = self._index
        return [
            sorted(idx[y] for y in self.less[x])
            for x in self.elements
        ]

    def _max_matching(self):
        if self._matching is not None:
            return self._matching
        n = len(self.elements)
        adj = self._adjacency()
        match_l = [-1] * n
        match_r = [-1] * n

        def augment(u: int, visited: set) -> bool:
            for v in adj[u]:
                if v in visited:
                    continue
                visited.add(v)
                if match_r[v] == -1 or augment(match_r[v], visited):
                    match_l[u] = v
                    match_r[v] = u
                    return True
            return False

        for u in range(n):
            augment(u, set())
        self._matching = (match_l, match_r, adj)
        return self._matching

    def width(self) -> int:
        if not self.elements:
            return 0
        match_l, _, _ = self._max_matching()
        matched = sum(1 for v in match_l if v != -1)
        return len(self.elements) - matched

    def max_antichain(self) -> list:
        """A maximum antichain, derived from a minimum vertex cover."""
        if not self.elements:
            return []
        match_l, match_r, adj = self._max_matching()
        n = len(self.elements)
        in_zl = [False] * n
        in_zr = [False] * n
        queue = [u for u in range(n) if match_l[u] == -1]
        for u in queue:
            in_zl[u] = True
        while queue:
            u = queue.pop()
            for v in adj[u]:
                if in_zr[v]:
                    continue
                in_zr[v] = True
                w = match_r[v]
                if w != -1 and not in_zl[w]:
                    in_zl[w] = True
                    queue.append(w)
        antichain = [self.elements[i] for i in range(n) if in_zl[i] and not in_zr[i]]
        if len(antichain) != self.width():
            raise PosetError("internal: antichain size disagrees with width")
        return sorted(antichain, key=self.key)

    def min_chain_cover(self) -> list[list]:
        """Chains (each totally ordered, bottom-up) covering all elements."""
        if not self.elements:
            return []
        match_l, match_r, _ = self._max_matching()
        heads = [i for i in range(len(self.elements)) if match_r[i] == -1]
        chains = []
        for head in heads:
            chain = []
            cur = head
            while cur != -1:
                chain.append(self.elements[cur])
                cur = match_l[cur]
            chains.append(chain)
        chains.sort(key=lambda ch: self.key(ch[0]))
        return chains

    def decompose_channels(self, k: int) -> tuple[dict, list[list]]:
        """Partition into <= k chains; map element -> channel in [1..#chains].

        Raises BoundViolation carrying a maximum antichain when width > k.
        """
        if self.width() > k:
            raise BoundViolation(k, self.max_antichain())
        chains = self.min_chain_cover()
        assignment = {}
        for ch_no, chain in enumerate(chains, start=1):
            for x in chain:
                assignment[x] = ch_no
        return assignment, chains


# --- independent brute-force oracle ------------------------------------------


def brute_force_width(poset: Poset) -> int:
    """Maximum antichain size by exhaustive subset search (bitmask DP).

    Independent of the matching path; intended for posets of <= ~20
    elements.
    """
    n = len(poset.elements)
    if n == 0:
        return 0
    if n > 20:
        raise ValueError("brute force oracle limited to 20 elements")
    conflict = [0] * n
    for i, x in enumerate(poset.elements):
        for j, y in enumerate(poset.elements):
            if i != j and poset.comparable(x, y):
                conflict[i] |= 1 << j
    best = [0] * (1 << n)
    for mask in range(1, 1 << n):
        v = (mask & -mask).bit_length() - 1
        bit = 1 << v
        skip = best[mask ^ bit]
        take = 1 + best[mask & ~(conflict[v] | bit)]
        best[mask] = skip if skip > take else take
    return best[(1 << n) - 1]


def brute_force_antichain(elements, comparable, key=None) -> list:
    """Maximum antichain witness by exhaustive subset DP.

    ``comparable`` is a predicate over element pairs.  Works on any
    irreflexive relation (no transitivity needed), limited to 20 elements.
    """
    elements = sorted(elements, key=key) if key else sorted(elements)
    n = len(elements)
    if n == 0:
        return []
    if n > 20:
        raise ValueError("brute force oracle limited to 20 elements")
    conflict = [0] * n
    for i in range(n):
        for j in range(n):
            if i != j and comparable(elements[i], elements[j]):
                conflict[i] |= 1 << j
    best = [0] * (1 << n)
    for mask in range(1, 1 << n):
        v = (mask & -mask).bit_length() - 1
        bit = 1 << v
        skip = best[mask ^ bit]
        take = 1 + best[mask & ~(conflict[v] | bit)]
        best[mask] = skip if skip > take else take
    picked = []
    mask = (1 << n) - 1
    while mask:
        v = (mask & -mask).bit_length() - 1
        bit = 1 << v
        if best[mask] == best[mask ^ bit]:
            mask ^= bit
        else:
            picked.append(elements[v])
            mask &= ~(conflict[v] | bit)
    return picked


# --- generators ---------------------------------------------------------------


def from_edges(elements, edges, key=None) -> Poset:
    """Poset from cover/arbitrary forward edges; closes transitively.

    ``edges`` must respect the element list order (x before y) or at least
    be acyclic; cycles surface as PosetError.
    """
    elements = list(elements)
    succ = {x: set() for x in elements}
    for x, y in edges:
        succ[x].add(y)
    less = {x: set() for x in elements}
    state = {}

    def close(x):
        if state.get(x) == "done":
            return less[x]
        if state.get(x) == "busy":
            raise PosetError(f"cycle through {x!r}")
        state[x] = "busy"
        acc = set()
        for y in succ[x]:
            acc.add(y)
            acc |= close(y)
        less[x] = acc
        state[x] = "done"
        return acc

    for x in elements:
        close(x)
    return Poset(elements, less, key=key)


def intersect_orders(sequences, key=None) -> Poset:
    """Poset from the intersection of total orders over a common element set."""
    if not sequences:
        return Poset([], {}, key=key)
    elements = list(sequences[0])
    pos = [{x: i for i, x in enumerate(seq)} for seq in sequences]
    less = {x: set() for x in elements}
    for x in elements:
        for y in elements:
            if x != y and all(p[x] < p[y] for p in pos):
                less[x].add(y)
    return Poset(elements, less, key=key)


def random_poset(seed: int, max_elems: int = 12) -> Poset:
    """Seeded random poset: either a closed random DAG or an intersection
    of a few random total orders (the delivery-order shape)."""
    rng = SplitMix64(seed)
    n = rng.randrange(max_elems + 1)
    elements = list(range(n))
    if rng.randrange(2) == 0:
        threshold = rng.randrange(101)
        edges = [
            (i, j)
            for i in range(n)
            for j in range(i + 1, n)
            if rng.randrange(100) < threshold
        ]
        return from_edges(elements, edges)
    orders = []
    for _ in range(1 + rng.randrange(4)):
        perm = list(elements)
        rng.shuffle(perm)
        orders.append(perm)
    return intersect_orders(orders)
