"""Edge streams: single-pass enforcement, pre-scan census, colorability gate.

The stream abstraction materializes its source once (file or generator),
then hands out strictly sequential single-consumption passes.  Arrival
order is a deterministic shuffle of the source order by the stream seed,
so every run exercises an arbitrary-looking but reproducible order.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from streamcolor._kernels import uf_roots, uf_union_batch
from streamcolor.params import rng_for


class StreamError(RuntimeError):
    pass


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass
class StreamMeta:
    n: int
    m: int | None = None        # filled after a completed pass
    delta: int | None = None    # filled by census, or declared by a generator
    seed: int = 0


class EdgeStream:
    """One pass over the edges; pulling after exhaustion raises.

    Re-opening (a fresh pass from the same source) is reserved for the
    pre-pass/main-pass pair, the verifier, and test-harness shadows.
    """

    def __init__(self, meta: StreamMeta, edges: np.ndarray):
        self.meta = meta
        self._edges = edges
        self._cursor = 0
        self.consumed = False

    def __len__(self) -> int:
        return self._edges.shape[0]

    def chunks(self, size: int = 4096):
        """Yield (k, 2) int64 edge blocks exactly once."""
        if self.consumed:
            raise StreamError("stream already consumed; re-open the source for a new pass")
        total = self._edges.shape[0]
        while self._cursor < total:
            block = self._edges[self._cursor : self._cursor + size]
            self._cursor += block.shape[0]
            yield block
        self.consumed = True
        self.meta.m = total

    def __iter__(self):
        for block in self.chunks():
            for u, v in block:
                yield int(u), int(v)


class StreamSource:
    """Parsed edge data that opens seeded single-pass streams and counts them."""

    def __init__(self, n: int, edges: np.ndarray, seed: int = 0, name: str = "<edges>"):
        if n < 1:
            raise ParseError("vertex count must be >= 1")
        self.n = n
        self.seed = seed
        self.name = name
        self._edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        self.passes = 0
        order = rng_for(seed, "stream").permutation(self._edges.shape[0])
        self._delivery = self._edges[order]

    @property
    def m(self) -> int:
        return self._edges.shape[0]

    def open(self) -> EdgeStream:
        """Start a new pass (same delivery order every time)."""
        self.passes += 1
        return EdgeStream(StreamMeta(n=self.n, seed=self.seed), self._delivery)

    @classmethod
    def from_file(cls, path: str, seed: int = 0) -> "StreamSource":
        n = None
        edges: list[tuple[int, int]] = []
        seen: set[tuple[int, int]] = set()
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if n is None:
                    try:
                        n = int(line)
                    except ValueError:
                        raise ParseError(f"expected vertex count, got {line!r}", lineno)
                    if n < 1:
                        raise ParseError("vertex count must be >= 1", lineno)
                    continue
                parts = line.split()
                if len(parts) != 2:
                    raise ParseError(f"expected 'u v', got {line!r}", lineno)
                try:
                    u, v = int(parts[0]), int(parts[1])
                except ValueError:
                    raise ParseError(f"non-integer endpoint in {line!r}", lineno)
                if u == v:
                    raise ParseError(f"self-loop {u}", lineno)
                if not (0 <= u < n and 0 <= v < n):
                    raise ParseError(f"endpoint out of range in {line!r}", lineno)
                key = (min(u, v), max(u, v))
                if key in seen:
                    raise ParseError(f"duplicate edge {key}", lineno)
                seen.add(key)
                edges.append(key)
        if n is None:
            raise ParseError("empty input: missing vertex-count header")
        arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        return cls(n, arr, seed=seed, name=os.path.basename(path))


def open_stream(source: str, seed: int = 0) -> EdgeStream:
    """Open a single pass over a file path or a generator spec string."""
    return stream_source(source, seed=seed).open()


def stream_source(source: str, seed: int = 0) -> StreamSource:
    from streamcolor.generators import is_generator_spec, source_from_spec

    if is_generator_spec(source):
        return source_from_spec(source, seed=seed)
    return StreamSource.from_file(source, seed=seed)


# ---------------------------------------------------------------------------
# Pre-scan statistics
# ---------------------------------------------------------------------------


@dataclass
class ComponentStat:
    vertices: list[int]
    vcount: int
    ecount: int
    max_degree: int
    min_degree: int


@dataclass
class ComponentCensus:
    """Union-find view of one full pass: per-component counts and degrees."""

    n: int
    roots: np.ndarray
    degrees: np.ndarray

    def components(self) -> list[ComponentStat]:
        out = []
        for root in np.unique(self.roots):
            members = np.flatnonzero(self.roots == root)
            degs = self.degrees[members]
            out.append(
                ComponentStat(
                    vertices=[int(v) for v in members],
                    vcount=members.size,
                    ecount=int(degs.sum()) // 2,  # every edge stays inside its component
                    max_degree=int(degs.max()),
                    min_degree=int(degs.min()),
                )
            )
        return out


def degree_census(stream: EdgeStream) -> tuple[np.ndarray, StreamMeta]:
    """Per-vertex degrees (and max degree) from one full pass, O(n) words."""
    n = stream.meta.n
    degrees = np.zeros(n, dtype=np.int64)
    for block in stream.chunks():
        degrees += np.bincount(block[:, 0], minlength=n)
        degrees += np.bincount(block[:, 1], minlength=n)
    meta = stream.meta
    meta.delta = int(degrees.max()) if n else 0
    return degrees, meta


def component_census(stream: EdgeStream) -> tuple[ComponentCensus, StreamMeta]:
    """Degrees plus union-find component structure from one pass, O(n) words."""
    n = stream.meta.n
    degrees = np.zeros(n, dtype=np.int64)
    parent = np.arange(n, dtype=np.int64)
    for block in stream.chunks():
        degrees += np.bincount(block[:, 0], minlength=n)
        degrees += np.bincount(block[:, 1], minlength=n)
        uf_union_batch(parent, np.ascontiguousarray(block[:, 0]), np.ascontiguousarray(block[:, 1]))
    roots = uf_roots(parent)
    meta = stream.meta
    meta.delta = int(degrees.max()) if n else 0
    return ComponentCensus(n=n, roots=roots, degrees=degrees), meta


COLORABLE = "Colorable"
CLIQUE_COMPONENT = "CliqueComponent"
ODD_CYCLE_COMPONENT = "OddCycleComponent"


@dataclass
class ComponentVerdict:
    verdict: str
    stat: ComponentStat


def check_colorability(census: ComponentCensus, delta: int) -> list[ComponentVerdict]:
    """Flag each component as Colorable unless it is exactly a
    (delta+1)-clique or (at delta=2) an odd cycle - the only graphs with
    no proper coloring in delta colors."""
    if delta != int(census.degrees.max() if census.n else 0):
        raise ValueError(f"delta={delta} inconsistent with census max degree")
    verdicts = []
    for stat in census.components():
        if (
            delta == 2
            and stat.max_degree == 2
            and stat.min_degree == 2
            and stat.vcount % 2 == 1
            and stat.ecount == stat.vcount
        ):
            verdicts.append(ComponentVerdict(ODD_CYCLE_COMPONENT, stat))
        elif (
            stat.vcount == delta + 1
            and stat.ecount == delta * (delta + 1) // 2
            and stat.max_degree == delta
            and stat.min_degree == delta
        ):
            verdicts.append(ComponentVerdict(CLIQUE_COMPONENT, stat))
        else:
            verdicts.append(ComponentVerdict(COLORABLE, stat))
    return verdicts


# ---------------------------------------------------------------------------
# Shadow copy (test harness / reference decomposer; outside the space budget)
# ---------------------------------------------------------------------------


class AdjacencyOracle:
    """Full adjacency structure, flagged out-of-budget for space accounting."""

    out_of_budget = True

    def __init__(self, n: int, edges: np.ndarray):
        self.n = n
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        self.m = edges.shape[0]
        self._sets: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            self._sets[int(u)].add(int(v))
            self._sets[int(v)].add(int(u))
        words = max(1, (n + 63) // 64)
        self._bits = np.zeros((n, words), dtype=np.uint64)
        if self.m:
            us, vs = edges[:, 0], edges[:, 1]
            for a, b in ((us, vs), (vs, us)):
                np.bitwise_or.at(
                    self._bits, (a, b // 64), np.uint64(1) << (b % 64).astype(np.uint64)
                )

    def neighbors(self, v: int) -> set[int]:
        return self._sets[v]

    def degree(self, v: int) -> int:
        return len(self._sets[v])

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._sets[u]

    def common_count(self, u: int, v: int) -> int:
        return int(np.bitwise_count(self._bits[u] & self._bits[v]).sum())

    def mask_of(self, vertices) -> np.ndarray:
        mask = np.zeros(self._bits.shape[1], dtype=np.uint64)
        for v in vertices:
            mask[v // 64] |= np.uint64(1) << np.uint64(v % 64)
        return mask

    def count_in(self, v: int, mask: np.ndarray) -> int:
        """Number of neighbors of v inside the masked vertex set."""
        return int(np.bitwise_count(self._bits[v] & mask).sum())

    def edges(self):
        for u in range(self.n):
            for v in self._sets[u]:
                if u < v:
                    yield u, v


def shadow_copy(stream: EdgeStream) -> AdjacencyOracle:
    """Materialize full adjacency from a fresh stream (harness only)."""
    blocks = [block.copy() for block in stream.chunks()]
    edges = np.concatenate(blocks) if blocks else np.empty((0, 2), dtype=np.int64)
    return AdjacencyOracle(stream.meta.n, edges)
