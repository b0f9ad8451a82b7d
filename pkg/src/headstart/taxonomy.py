"""Is-a hierarchy queries: depth, Wu & Palmer similarity, target-class types.

The taxonomy is a rooted DAG of synset ids connected by child -> parent
edges.  Depth counts nodes along the shortest root path (root = 1), so
``wu_palmer(x, x)`` is exactly 1 and no division by zero can occur at the
root.  Under multiple inheritance the similarity maximizes over common
ancestors and is capped at 1.0; the reported ancestor breaks depth ties
by lexicographically smallest id.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .matrixio import FormatError, LabelSet

__all__ = [
    "TaxonomyError",
    "UnknownNodeError",
    "TargetType",
    "Taxonomy",
    "read_taxonomy",
    "write_taxonomy",
    "read_types",
    "write_types",
    "wordnet_similarity_matrix",
]


class TaxonomyError(ValueError):
    """The edge set does not form a rooted acyclic is-a hierarchy."""


class UnknownNodeError(KeyError):
    """A queried synset id is not in the taxonomy."""


class TargetType(Enum):
    """Relation of a target class to the set of source classes."""

    INCLUDED = "included"  # strict descendant of a source
    INCLUSIVE = "inclusive"  # strict ancestor of a source
    DISJOINT = "disjoint"  # neither

    @classmethod
    def parse(cls, text: str) -> "TargetType":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise FormatError(
                f"unknown target type {text!r}; expected one of "
                f"{[t.value for t in cls]}"
            ) from None


class Taxonomy:
    """Immutable rooted is-a DAG over synset ids.

    Construction validates the invariants: at least one root, no cycles,
    and every node reachable from some root via child edges.
    """

    def __init__(self, parent_edges: dict[str, set[str]]):
        parents: dict[str, frozenset[str]] = {}
        nodes: set[str] = set()
        for child, ps in parent_edges.items():
            nodes.add(child)
            nodes.update(ps)
            parents[child] = frozenset(ps)
        for n in nodes:
            parents.setdefault(n, frozenset())

        roots = {n for n in nodes if not parents[n]}
        if not roots:
            raise TaxonomyError("taxonomy has no root (every node has a parent)")

        children: dict[str, list[str]] = {n: [] for n in nodes}
        for child, ps in parents.items():
            for p in ps:
                children[p].append(child)

        # Multi-source BFS downward from the roots: shortest root path,
        # counted in nodes.  Nodes never reached sit on a cycle or hang
        # from one, which violates the invariants.
        depth: dict[str, int] = {r: 1 for r in roots}
        queue = deque(sorted(roots))
        while queue:
            n = queue.popleft()
            for c in children[n]:
                if c not in depth:
                    depth[c] = depth[n] + 1
                    queue.append(c)
        unreachable = nodes - depth.keys()
        if unreachable:
            raise TaxonomyError(
                f"{len(unreachable)} node(s) unreachable from any root "
                f"(cycle or dangling subgraph), e.g. {sorted(unreachable)[:5]}"
            )

        self._parents = parents
        self._depth = depth
        self.nodes = frozenset(nodes)
        self.roots = frozenset(roots)
        self._ancestors: dict[str, frozenset[str]] = {}

    def __contains__(self, node: str) -> bool:
        return node in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)

    def _check(self, node: str) -> None:
        if node not in self.nodes:
            raise UnknownNodeError(node)

    def parents(self, node: str) -> frozenset[str]:
        self._check(node)
        return self._parents[node]

    def depth(self, node: str) -> int:
        """Nodes on the shortest root-to-node path; roots have depth 1."""
        self._check(node)
        return self._depth[node]

    def ancestors(self, node: str) -> frozenset[str]:
        """All nodes reachable via parent edges, including ``node`` itself."""
        self._check(node)
        cached = self._ancestors.get(node)
        if cached is not None:
            return cached
        # Iterative DFS; memoizes every node it closes over.
        stack = [node]
        seen = {node}
        while stack:
            n = stack.pop()
            for p in self._parents[n]:
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        result = frozenset(seen)
        self._ancestors[node] = result
        return result

    def lcs(self, a: str, b: str) -> tuple[str, int] | None:
        """Deepest common ancestor and its depth; None if the nodes share none.

        Depth ties break toward the lexicographically smallest id.
        """
        common = self.ancestors(a) & self.ancestors(b)
        if not common:
            return None
        best = min(common, key=lambda n: (-self._depth[n], n))
        return best, self._depth[best]

    def wu_palmer(self, a: str, b: str) -> float:
        """2*depth(lcs) / (depth(a) + depth(b)); 0 when no common ancestor.

        Capped at 1.0: with multiple inheritance, shortest-path depth can
        place a common ancestor deeper than one of its descendants, which
        would push the raw ratio above 1.
        """
        self._check(a)
        self._check(b)
        found = self.lcs(a, b)
        if found is None:
            return 0.0
        _, lcs_depth = found
        return min(1.0, 2.0 * lcs_depth / (self._depth[a] + self._depth[b]))

    def is_strict_ancestor(self, anc: str, node: str) -> bool:
        self._check(anc)
        self._check(node)
        return anc != node and anc in self.ancestors(node)

    def classify_target_type(self, target: str, sources: set[str]) -> TargetType:
        """Included beats Inclusive when a target is both (fixed precedence)."""
        self._check(target)
        for s in sources:
            self._check(s)
        if any(self.is_strict_ancestor(s, target) for s in sources):
            return TargetType.INCLUDED
        if any(self.is_strict_ancestor(target, s) for s in sources):
            return TargetType.INCLUSIVE
        return TargetType.DISJOINT


@dataclass(frozen=True)
class _Edge:
    child: str
    parent: str


def read_taxonomy(path: str) -> Taxonomy:
    """Load ``<child_id>\\t<parent_id>`` edge lines; ``#`` comments ignored.

    Nodes appearing only as parents become roots.
    """
    parent_edges: dict[str, set[str]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            ln = raw.strip()
            if not ln or ln.startswith("#"):
                continue
            parts = ln.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise FormatError(
                    f"{path}:{lineno}: expected '<child_id>\\t<parent_id>', got {ln!r}"
                )
            parent_edges.setdefault(parts[0], set()).add(parts[1])
    if not parent_edges:
        raise FormatError(f"{path}: no edges found")
    return Taxonomy(parent_edges)


def write_taxonomy(taxonomy: Taxonomy, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for child in sorted(taxonomy.nodes):
            for parent in sorted(taxonomy.parents(child)):
                fh.write(f"{child}\t{parent}\n")


def read_types(path: str) -> list[TargetType]:
    """Per-target type file: ``<target_index>\\t<type>`` per line."""
    rows: dict[int, TargetType] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            ln = raw.strip()
            if not ln or ln.startswith("#"):
                continue
            parts = ln.split("\t")
            if len(parts) != 2:
                raise FormatError(
                    f"{path}:{lineno}: expected '<index>\\t<type>', got {ln!r}"
                )
            try:
                idx = int(parts[0])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-integer index {parts[0]!r}") from None
            if idx in rows:
                raise FormatError(f"{path}:{lineno}: duplicate index {idx}")
            rows[idx] = TargetType.parse(parts[1])
    if sorted(rows) != list(range(len(rows))):
        raise FormatError(f"{path}: target indices must be exactly 0..{len(rows) - 1}")
    return [rows[i] for i in range(len(rows))]


def write_types(types: list[TargetType], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, t in enumerate(types):
            fh.write(f"{i}\t{t.value}\n")


def wordnet_similarity_matrix(
    taxonomy: Taxonomy, source_labels: LabelSet, target_labels: LabelSet
) -> np.ndarray:
    """Pairwise Wu & Palmer similarities, shape (n_targets, n_sources).

    Every label must carry a synset id present in the taxonomy.
    """

    def synsets(labels: LabelSet, role: str) -> list[str]:
        out = []
        for e in labels.entries:
            if e.synset_id is None:
                raise TaxonomyError(f"{role} label {e.label!r} (index {e.index}) has no synset id")
            if e.synset_id not in taxonomy:
                raise UnknownNodeError(e.synset_id)
            out.append(e.synset_id)
        return out

    src = synsets(source_labels, "source")
    tgt = synsets(target_labels, "target")
    sim = np.empty((len(tgt), len(src)), dtype=np.float64)
    for i, t in enumerate(tgt):
        for j, s in enumerate(src):
            sim[i, j] = taxonomy.wu_palmer(t, s)
    return sim
