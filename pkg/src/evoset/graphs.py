"""Bounded-degree graphs exposed through local adjacency queries.

Infinite families (the integer line, lattices, regular trees) never
enumerate their vertex set; everything is driven by ``neighbors``.  Finite
families additionally expose ``vertices()``.

Vertices are :class:`VertexId` objects whose identity is their canonical
label, e.g. ``"z:-3"``, ``"t3:021"`` or ``"pt:5/0110"``.
"""
from __future__ import annotations

import hashlib
import math
import string
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

__all__ = [
    "GraphError",
    "CapExceeded",
    "VertexId",
    "Graph",
    "IntegerLine",
    "HalfLine",
    "Lattice2D",
    "Lattice3D",
    "RegularTree",
    "Cycle",
    "FiniteExplicit",
    "PendantTowerGraph",
    "RadialQuotient",
    "tower_height",
    "neighbors",
    "degree",
    "max_degree",
    "ball",
    "parse_graph",
    "load_edge_list",
]

DEFAULT_BALL_CAP = 5_000_000


class GraphError(ValueError):
    """Invalid vertex label or graph descriptor string."""


class CapExceeded(RuntimeError):
    """A configured resource cap was exceeded."""

    def __init__(self, what: str, cap: int):
        super().__init__(f"{what} exceeded the cap of {cap} vertices; "
                         "raise the cap or use the Monte Carlo routines")
        self.cap = cap


@dataclass(frozen=True, order=True)
class VertexId:
    """Vertex identifier; equality, hashing and ordering follow ``label``.

    ``payload`` is a family-private decoding of the label kept around so
    adjacency queries do not reparse strings.
    """

    label: str
    payload: tuple = field(compare=False, hash=False, repr=False, default=())

    def __str__(self) -> str:
        return self.label


def _bad(label: str, family: str) -> GraphError:
    return GraphError(f"{label!r} is not a vertex of {family}")


class Graph:
    """Base class for simple, undirected, connected, bounded-degree graphs.

    Subclasses implement ``_neighbor_payloads``, ``_label`` and ``_parse``.
    """

    tag = "graph"
    max_degree = 0
    finite = False

    def __init__(self):
        self._nbr_cache = lru_cache(maxsize=1 << 20)(self._compute_neighbors)

    @property
    def spec(self) -> str:
        """Canonical configuration string, e.g. ``graph=z``."""
        return f"graph={self.tag}"

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.spec}>"

    def __eq__(self, other) -> bool:
        return isinstance(other, Graph) and self.spec == other.spec

    def __hash__(self) -> int:
        return hash(self.spec)

    # -- vertex construction -------------------------------------------------
    def vertex(self, label: str | VertexId) -> VertexId:
        """Parse and validate a canonical label."""
        if isinstance(label, VertexId):
            label = label.label
        payload = self._parse(label)
        return VertexId(self._label(payload), payload)

    def _make(self, payload: tuple) -> VertexId:
        return VertexId(self._label(payload), payload)

    def _check(self, v: VertexId) -> VertexId:
        if not isinstance(v, VertexId):
            return self.vertex(v)
        if not v.payload:
            return self.vertex(v.label)
        return v

    @property
    def origin(self) -> VertexId:
        """A distinguished vertex (0, the root, backbone vertex 1, ...)."""
        raise NotImplementedError

    # -- adjacency -----------------------------------------------------------
    def neighbors(self, v: VertexId) -> list[VertexId]:
        v = self._check(v)
        return self._nbr_cache(v)

    def _compute_neighbors(self, v: VertexId) -> list[VertexId]:
        nbrs = [self._make(p) for p in self._neighbor_payloads(v.payload)]
        nbrs.sort()
        return nbrs

    def degree(self, v: VertexId) -> int:
        return len(self.neighbors(v))

    def vertices(self) -> list[VertexId]:
        raise GraphError(f"{self.spec} is infinite; use ball() for finite pieces")

    # -- optional structure --------------------------------------------------
    def radial_quotient(self, center: VertexId) -> "RadialQuotient | None":
        """Distance-from-center chain, when the stabilizer of ``center`` acts
        transitively on every sphere.  ``None`` if not available."""
        return None

    def distance(self, u: VertexId, v: VertexId) -> int:
        raise NotImplementedError(f"no closed-form distance on {self.spec}")

    # -- subclass hooks ------------------------------------------------------
    def _neighbor_payloads(self, p: tuple) -> Iterable[tuple]:
        raise NotImplementedError

    def _label(self, p: tuple) -> str:
        raise NotImplementedError

    def _parse(self, label: str) -> tuple:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Radial quotient
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class RadialQuotient:
    """Birth-death chain of the graph distance from a center vertex.

    Sphere ``k`` holds ``size(k)`` vertices, all of degree ``deg(k)``, each
    with ``up(k)`` neighbours in sphere ``k+1``, ``stay(k)`` in sphere ``k``
    and ``down(k)`` in sphere ``k-1``.  Walk probabilities from the center
    are uniform on spheres, so the lumped chain is exact.

    ``kind`` and ``params`` identify the family; ``radius`` is the largest
    nonempty sphere (``None`` for infinite graphs).
    """

    kind: str
    params: tuple
    radius: int | None = None

    def size(self, k: int) -> int:
        k = int(k)   # numpy integers would overflow in the tree formula
        if k < 0 or (self.radius is not None and k > self.radius):
            return 0
        if self.kind == "line":
            return 1 if k == 0 else 2
        if self.kind == "half":
            return 1
        if self.kind == "tree":
            d, = self.params
            return 1 if k == 0 else d * (d - 1) ** (k - 1)
        if self.kind == "cycle":
            n, = self.params
            if k == 0 or (n % 2 == 0 and k == n // 2):
                return 1
            return 2
        raise AssertionError(self.kind)

    def counts(self, k: int) -> tuple[int, int, int]:
        """``(up, stay, down)`` neighbour counts of a sphere-``k`` vertex."""
        if self.kind == "line":
            return (2, 0, 0) if k == 0 else (1, 0, 1)
        if self.kind == "half":
            return (1, 0, 0) if k == 0 else (1, 0, 1)
        if self.kind == "tree":
            d, = self.params
            return (d, 0, 0) if k == 0 else (d - 1, 0, 1)
        if self.kind == "cycle":
            n, = self.params
            if k == 0:
                return (2, 0, 0)
            if k < self.radius:
                return (1, 0, 1)
            return (0, 0, 2) if n % 2 == 0 else (0, 1, 1)
        raise AssertionError(self.kind)

    def deg(self, k: int) -> int:
        return sum(self.counts(k))

    def pi_sphere(self, k: int) -> int:
        """Total degree of sphere ``k`` (exact integer)."""
        return self.size(k) * self.deg(k)

    def transition_arrays(self, n: int):
        """Arrays ``(p_up, p_stay, p_down)`` for spheres ``0..n-1``.

        Spheres past a finite radius get zero rows.
        """
        import numpy as np

        up = np.zeros(n)
        stay = np.zeros(n)
        down = np.zeros(n)
        top = n if self.radius is None else min(n, self.radius + 1)
        for k in range(top):
            a, b, c = self.counts(k)
            tot = a + b + c
            up[k], stay[k], down[k] = a / tot, b / tot, c / tot
        return up, stay, down


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------
def _parse_int(s: str, label: str, family: str) -> int:
    try:
        return int(s)
    except ValueError:
        raise _bad(label, family) from None


class IntegerLine(Graph):
    tag = "z"
    max_degree = 2

    @property
    def origin(self):
        return self._make((0,))

    def _neighbor_payloads(self, p):
        n, = p
        return ((n - 1,), (n + 1,))

    def _label(self, p):
        return f"z:{p[0]}"

    def _parse(self, label):
        if not label.startswith("z:"):
            raise _bad(label, "Z")
        n = _parse_int(label[2:], label, "Z")
        if self._label((n,)) != label:
            raise _bad(label, "Z")
        return (n,)

    def radial_quotient(self, center):
        self._check(center)
        return RadialQuotient("line", ())

    def distance(self, u, v):
        return abs(self._check(u).payload[0] - self._check(v).payload[0])


class HalfLine(Graph):
    """The positive integers 1, 2, 3, ... with nearest-neighbour edges."""

    tag = "half"
    max_degree = 2

    @property
    def origin(self):
        return self._make((1,))

    def _neighbor_payloads(self, p):
        n, = p
        return ((n - 1,), (n + 1,)) if n > 1 else ((2,),)

    def _label(self, p):
        return f"h:{p[0]}"

    def _parse(self, label):
        if not label.startswith("h:"):
            raise _bad(label, "Z+")
        n = _parse_int(label[2:], label, "Z+")
        if n < 1 or self._label((n,)) != label:
            raise _bad(label, "Z+")
        return (n,)

    def radial_quotient(self, center):
        if self._check(center).payload[0] != 1:
            return None
        return RadialQuotient("half", ())

    def distance(self, u, v):
        return abs(self._check(u).payload[0] - self._check(v).payload[0])


class _Lattice(Graph):
    dim = 0

    @property
    def origin(self):
        return self._make((0,) * self.dim)

    def _neighbor_payloads(self, p):
        out = []
        for i in range(self.dim):
            for s in (-1, 1):
                q = list(p)
                q[i] += s
                out.append(tuple(q))
        return out

    def _label(self, p):
        return f"{self.tag}:" + ",".join(map(str, p))

    def _parse(self, label):
        head = f"{self.tag}:"
        if not label.startswith(head):
            raise _bad(label, self.tag)
        parts = label[len(head):].split(",")
        if len(parts) != self.dim:
            raise _bad(label, self.tag)
        p = tuple(_parse_int(s, label, self.tag) for s in parts)
        if self._label(p) != label:
            raise _bad(label, self.tag)
        return p

    def distance(self, u, v):
        return sum(abs(a - b) for a, b in zip(self._check(u).payload,
                                               self._check(v).payload))


class Lattice2D(_Lattice):
    tag = "z2"
    dim = 2
    max_degree = 4


class Lattice3D(_Lattice):
    tag = "z3"
    dim = 3
    max_degree = 6


_DIGITS = string.digits + string.ascii_lowercase


class RegularTree(Graph):
    """The infinite ``d``-regular tree.

    A vertex is the path of child indices from the root: the root has
    children ``0..d-1``, every other vertex has children ``0..d-2``.
    """

    def __init__(self, d: int = 3):
        if not 3 <= d <= len(_DIGITS):
            raise GraphError(f"regular tree degree must be in [3, {len(_DIGITS)}], got {d}")
        self.d = d
        self.tag = f"tree{d}"
        self.max_degree = d
        super().__init__()

    @property
    def origin(self):
        return self._make(("",))

    def _neighbor_payloads(self, p):
        path, = p
        if path:
            yield (path[:-1],)
            kids = self.d - 1
        else:
            kids = self.d
        for c in _DIGITS[:kids]:
            yield (path + c,)

    def _label(self, p):
        return f"t{self.d}:{p[0]}"

    def _parse(self, label):
        head = f"t{self.d}:"
        if not label.startswith(head):
            raise _bad(label, self.tag)
        path = label[len(head):]
        if path:
            if path[0] not in _DIGITS[:self.d] or any(
                    c not in _DIGITS[:self.d - 1] for c in path[1:]):
                raise _bad(label, self.tag)
        return (path,)

    def radial_quotient(self, center):
        self._check(center)
        return RadialQuotient("tree", (self.d,))

    def distance(self, u, v):
        a = self._check(u).payload[0]
        b = self._check(v).payload[0]
        k = 0
        for x, y in zip(a, b):
            if x != y:
                break
            k += 1
        return len(a) + len(b) - 2 * k


class Cycle(Graph):
    finite = True
    max_degree = 2

    def __init__(self, n: int):
        if n < 3:
            raise GraphError("a simple cycle needs at least 3 vertices")
        self.n = n
        self.tag = f"cycle,n={n}"
        super().__init__()

    @property
    def origin(self):
        return self._make((0,))

    def vertices(self):
        return sorted(self._make((k,)) for k in range(self.n))

    def _neighbor_payloads(self, p):
        k, = p
        return (((k - 1) % self.n,), ((k + 1) % self.n,))

    def _label(self, p):
        return f"c{self.n}:{p[0]}"

    def _parse(self, label):
        head = f"c{self.n}:"
        if not label.startswith(head):
            raise _bad(label, self.tag)
        k = _parse_int(label[len(head):], label, self.tag)
        if not 0 <= k < self.n or self._label((k,)) != label:
            raise _bad(label, self.tag)
        return (k,)

    def radial_quotient(self, center):
        self._check(center)
        return RadialQuotient("cycle", (self.n,), radius=self.n // 2)

    def distance(self, u, v):
        k = abs(self._check(u).payload[0] - self._check(v).payload[0])
        return min(k, self.n - k)


class FiniteExplicit(Graph):
    """A finite graph given by an edge list over arbitrary string labels."""

    finite = True

    def __init__(self, edges: Iterable[tuple[str, str]], name: str = "explicit"):
        adj: dict[str, set[str]] = {}
        for u, v in edges:
            u, v = str(u), str(v)
            if u == v:
                raise GraphError(f"self-loop at {u!r}")
            adj.setdefault(u, set()).add(v)
            adj.setdefault(v, set()).add(u)
        if not adj:
            raise GraphError("empty edge list")
        self._adj = {u: tuple(sorted(vs)) for u, vs in adj.items()}
        self.max_degree = max(len(vs) for vs in self._adj.values())
        self.name = name
        canon = "\n".join(f"{u} {v}" for u in sorted(self._adj) for v in self._adj[u] if u < v)
        self.digest = hashlib.sha256(canon.encode()).hexdigest()[:16]
        self.tag = f"explicit,name={name},sha={self.digest}"
        super().__init__()
        if len(ball(self, self.vertices()[0], len(self._adj))) != len(self._adj):
            raise GraphError("graph is not connected")

    @property
    def origin(self):
        return self.vertices()[0]

    def vertices(self):
        return [self._make((u,)) for u in sorted(self._adj)]

    def _neighbor_payloads(self, p):
        return ((u,) for u in self._adj[p[0]])

    def _label(self, p):
        return p[0]

    def _parse(self, label):
        if label not in self._adj:
            raise _bad(label, self.tag)
        return (label,)


def tower_height(n: int, cap: int) -> int:
    """``min(2↑↑n, cap)`` without ever forming the tower itself."""
    if n < 1:
        raise ValueError("tower index starts at 1")
    h = 2
    for _ in range(n - 1):
        if h >= cap.bit_length() + 1:
            return cap
        h = 2 ** h
    return min(h, cap)


class PendantTowerGraph(Graph):
    """Backbone ``1..N_max`` with a full binary tree ``T_n`` hung off each ``n``.

    ``T_n`` has height ``h_n = min(2↑↑n, H_max)`` unless an explicit height
    schedule is given.  Backbone labels are ``pt:n``; tree vertices are
    ``pt:n/<bits>`` with the root at ``pt:n/``.
    """

    finite = True
    max_degree = 3

    def __init__(self, h_max: int = 20, n_max: int = 64,
                 heights: Sequence[int] | None = None):
        if h_max < 1 or n_max < 1:
            raise GraphError("H_max and N_max must be at least 1")
        self.h_max = h_max
        self.n_max = n_max
        if heights is None:
            hs = tuple(tower_height(n, h_max) for n in range(1, n_max + 1))
            self._custom = False
        else:
            if len(heights) < n_max:
                raise GraphError("height schedule shorter than the backbone")
            hs = tuple(min(int(h), h_max) for h in heights[:n_max])
            if min(hs) < 0:
                raise GraphError("tree heights must be nonnegative")
            self._custom = True
        self.heights = hs
        self.tag = f"pendant_tower,hmax={h_max},nmax={n_max}"
        if self._custom:
            self.tag += ",heights=" + ":".join(map(str, hs))
        super().__init__()

    @property
    def origin(self):
        return self._make(("b", 1))

    def height(self, n: int) -> int:
        return self.heights[n - 1]

    def tree_size(self, n: int) -> int:
        return 2 ** (self.height(n) + 1) - 1

    def vertex_count(self) -> int:
        return self.n_max + sum(self.tree_size(n) for n in range(1, self.n_max + 1))

    def backbone(self, n: int) -> VertexId:
        return self._make(("b", n))

    def tree_vertex(self, n: int, bits: str = "") -> VertexId:
        return self.vertex(f"pt:{n}/{bits}")

    def vertices(self):
        out = []
        for n in range(1, self.n_max + 1):
            out.append(self._make(("b", n)))
            stack = [""]
            while stack:
                b = stack.pop()
                out.append(self._make(("t", n, b)))
                if len(b) < self.height(n):
                    stack.extend((b + "0", b + "1"))
        out.sort()
        return out

    def _neighbor_payloads(self, p):
        if p[0] == "b":
            n = p[1]
            if n > 1:
                yield ("b", n - 1)
            if n < self.n_max:
                yield ("b", n + 1)
            yield ("t", n, "")
        else:
            _, n, bits = p
            yield ("t", n, bits[:-1]) if bits else ("b", n)
            if len(bits) < self.height(n):
                yield ("t", n, bits + "0")
                yield ("t", n, bits + "1")

    def _label(self, p):
        return f"pt:{p[1]}" if p[0] == "b" else f"pt:{p[1]}/{p[2]}"

    def _parse(self, label):
        if not label.startswith("pt:"):
            raise _bad(label, self.tag)
        body = label[3:]
        if "/" in body:
            head, bits = body.split("/", 1)
            n = _parse_int(head, label, self.tag)
            if not 1 <= n <= self.n_max or len(bits) > self.height(n) \
                    or set(bits) - {"0", "1"}:
                raise _bad(label, self.tag)
            p = ("t", n, bits)
        else:
            n = _parse_int(body, label, self.tag)
            if not 1 <= n <= self.n_max:
                raise _bad(label, self.tag)
            p = ("b", n)
        if self._label(p) != label:
            raise _bad(label, self.tag)
        return p

    def depth_descriptor(self, v: VertexId) -> str:
        """``"backbone"`` or ``"T<n>:<depth>"`` (root at depth 0)."""
        p = self._check(v).payload
        return "backbone" if p[0] == "b" else f"T{p[1]}:{len(p[2])}"


# ---------------------------------------------------------------------------
# Module-level operations
# ---------------------------------------------------------------------------
def neighbors(g: Graph, v) -> list[VertexId]:
    return g.neighbors(v)


def degree(g: Graph, v) -> int:
    return g.degree(v)


def max_degree(g: Graph) -> int:
    return g.max_degree


def ball(g: Graph, center, radius: int, max_vertices: int = DEFAULT_BALL_CAP) -> frozenset[VertexId]:
    """Closed graph ball by breadth-first expansion."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    center = g._check(center)
    seen = {center}
    frontier = deque([center])
    for _ in range(radius):
        nxt = deque()
        for v in frontier:
            for u in g.neighbors(v):
                if u not in seen:
                    seen.add(u)
                    nxt.append(u)
        if len(seen) > max_vertices:
            raise CapExceeded("ball", max_vertices)
        if not nxt:
            break
        frontier = nxt
    return frozenset(seen)


def _kv(spec: str) -> dict[str, str]:
    out = {}
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise GraphError(f"malformed graph spec fragment {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def parse_graph(spec: str) -> Graph:
    """Build a graph from a spec string.

    Accepted forms: ``z``, ``half``, ``z2``, ``z3``, ``tree3`` (or
    ``graph=tree,d=3``), ``cycle,n=7``, ``graph=pendant_tower,hmax=20,nmax=64``
    and ``graph=explicit,path=edges.txt``.
    """
    spec = spec.strip()
    if "=" not in spec.split(",")[0]:
        head, _, rest = spec.partition(",")
        spec = f"graph={head}" + ("," + rest if rest else "")
    kv = _kv(spec)
    name = kv.pop("graph", None)
    if name is None:
        raise GraphError(f"graph spec {spec!r} has no graph= entry")
    try:
        if name == "z":
            g = IntegerLine()
        elif name == "half":
            g = HalfLine()
        elif name == "z2":
            g = Lattice2D()
        elif name == "z3":
            g = Lattice3D()
        elif name.startswith("tree"):
            d = int(kv.pop("d", name[4:] or 3))
            g = RegularTree(d)
        elif name == "cycle":
            g = Cycle(int(kv.pop("n")))
        elif name == "pendant_tower":
            heights = kv.pop("heights", None)
            g = PendantTowerGraph(
                h_max=int(kv.pop("hmax", 20)), n_max=int(kv.pop("nmax", 64)),
                heights=[int(h) for h in heights.split(":")] if heights else None)
        elif name == "explicit":
            g = load_edge_list(kv.pop("path"))
            kv.pop("name", None)
            sha = kv.pop("sha", None)
            if sha is not None and sha != g.digest:
                raise GraphError(f"edge list {g.name!r} does not match sha={sha}")
        else:
            raise GraphError(f"unknown graph family {name!r}")
    except (KeyError, ValueError) as exc:
        if isinstance(exc, GraphError):
            raise
        raise GraphError(f"bad parameters in graph spec {spec!r}: {exc}") from None
    if kv:
        raise GraphError(f"unused graph parameters {sorted(kv)}")
    return g


def load_edge_list(path) -> FiniteExplicit:
    """Read ``u v`` pairs, one per line; ``#`` starts a comment."""
    edges = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise GraphError(f"{path}:{lineno}: expected 'u v', got {line!r}")
            edges.append((parts[0], parts[1]))
    g = FiniteExplicit(edges, name=str(path))
    return g
