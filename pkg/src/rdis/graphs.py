"""Term-variable incidence bookkeeping.

``TermVarGraph`` tracks connected components of the bipartite graph between
active variables and active terms under LIFO remove/restore of entities
(assigned variables, simplified terms).  Deletions are epoch-stamped and
component views are recomputed by breadth-first search on demand; at the
sizes this package targets a rebuild is cheap and trivially matches the
from-scratch oracle.

``Hypergraph`` is the dual view used for variable selection: one vertex per
term and one hyperedge per variable connecting every term that contains it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .expr import ObjectiveFunction


class GraphStateError(RuntimeError):
    """Invalid remove/restore sequence (double removal, non-LIFO restore)."""


@dataclass(frozen=True)
class ComponentView:
    """Connected components of the active bipartite subgraph.

    Each component is a ``(variable indices, term ids)`` pair (frozensets);
    active terms whose variables are all removed appear in
    ``scope_empty_terms``.  Components are ordered by smallest variable
    index for determinism.
    """

    components: tuple
    scope_empty_terms: frozenset

    def __len__(self):
        return len(self.components)


class TermVarGraph:
    """Bipartite incidence between variables and terms with epoch-stamped
    removals.  ``restore`` must exactly undo the most recent ``remove``."""

    def __init__(self, term_scopes: Mapping[int, Iterable[int]]):
        self.term_vars: dict[int, frozenset] = {
            t: frozenset(scope) for t, scope in term_scopes.items()
        }
        self.var_terms: dict[int, set] = {}
        for t, scope in self.term_vars.items():
            for v in scope:
                self.var_terms.setdefault(v, set()).add(t)
        self._active_vars = set(self.var_terms)
        self._active_terms = set(self.term_vars)
        self._stack: list[tuple[str, int]] = []
        self._removed_epoch: dict[tuple[str, int], int] = {}

    @classmethod
    def from_function(cls, f: ObjectiveFunction) -> "TermVarGraph":
        g = cls({t.id: t.scope for t in f.terms})
        # isolated variables (in no term) still participate as singletons
        for v in f.variables:
            g.var_terms.setdefault(v.index, set())
            g._active_vars.add(v.index)
        return g

    # -- state ---------------------------------------------------------------

    @property
    def active_vars(self) -> frozenset:
        return frozenset(self._active_vars)

    @property
    def active_terms(self) -> frozenset:
        return frozenset(self._active_terms)

    def epoch(self) -> int:
        return len(self._stack)

    # -- mutation ------------------------------------------------------------

    def remove_var(self, v: int) -> None:
        if v not in self._active_vars:
            if ("var", v) in self._removed_epoch:
                raise GraphStateError(f"variable {v} already removed")
            raise GraphStateError(f"variable {v} is not part of this graph")
        self._active_vars.discard(v)
        self._stack.append(("var", v))
        self._removed_epoch[("var", v)] = len(self._stack)

    def remove_term(self, t: int) -> None:
        if t not in self._active_terms:
            if ("term", t) in self._removed_epoch:
                raise GraphStateError(f"term {t} already removed")
            raise GraphStateError(f"term {t} is not part of this graph")
        self._active_terms.discard(t)
        self._stack.append(("term", t))
        self._removed_epoch[("term", t)] = len(self._stack)

    def _restore(self, entry: tuple[str, int]) -> None:
        if not self._stack:
            raise GraphStateError("nothing to restore")
        if self._stack[-1] != entry:
            raise GraphStateError(
                f"non-LIFO restore: expected {self._stack[-1]}, got {entry}")
        self._stack.pop()
        del self._removed_epoch[entry]
        kind, ident = entry
        if kind == "var":
            self._active_vars.add(ident)
        else:
            self._active_terms.add(ident)

    def restore_var(self, v: int) -> None:
        self._restore(("var", v))

    def restore_term(self, t: int) -> None:
        self._restore(("term", t))

    # -- queries -------------------------------------------------------------

    def components(self, within_vars: Optional[Iterable[int]] = None,
                   within_terms: Optional[Iterable[int]] = None) -> ComponentView:
        """Connected components of the active subgraph, optionally limited to
        candidate variable/term sets."""
        return self.components_after((), (), within_vars, within_terms)

    def components_after(self, assigned_vars: Iterable[int] = (),
                         removed_terms: Iterable[int] = (),
                         within_vars: Optional[Iterable[int]] = None,
                         within_terms: Optional[Iterable[int]] = None) -> ComponentView:
        """Components of the active subgraph with the given variables and
        terms additionally deleted (non-mutating)."""
        gone_v = set(assigned_vars)
        gone_t = set(removed_terms)
        if within_vars is None:
            vs = self._active_vars - gone_v
        else:
            vs = {v for v in within_vars if v in self._active_vars} - gone_v
        if within_terms is None:
            ts = self._active_terms - gone_t
        else:
            ts = {t for t in within_terms if t in self._active_terms} - gone_t

        scope_empty = frozenset(t for t in ts if not (self.term_vars[t] & vs))
        ts = ts - scope_empty

        comps = []
        seen_v: set[int] = set()
        seen_t: set[int] = set()
        for start in sorted(vs):
            if start in seen_v:
                continue
            cv, ct = set(), set()
            queue = [start]
            seen_v.add(start)
            while queue:
                v = queue.pop()
                cv.add(v)
                for t in self.var_terms[v]:
                    if t not in ts or t in seen_t:
                        continue
                    seen_t.add(t)
                    ct.add(t)
                    for u in self.term_vars[t]:
                        if u in vs and u not in seen_v:
                            seen_v.add(u)
                            queue.append(u)
            comps.append((frozenset(cv), frozenset(ct)))
        return ComponentView(tuple(comps), scope_empty)


# ---------------------------------------------------------------------------
# hypergraph view for variable selection
# ---------------------------------------------------------------------------

@dataclass
class Hypergraph:
    """Vertices are term ids, hyperedges are variable indices whose pins are
    the terms containing that variable.  Weights default to 1 and are kept
    as extension hooks."""

    vertices: list[int]
    pins: dict[int, tuple]  # variable index -> sorted term ids
    vertex_weights: dict[int, int] = field(default_factory=dict)
    edge_weights: dict[int, int] = field(default_factory=dict)

    def vertex_weight(self, v: int) -> int:
        return self.vertex_weights.get(v, 1)

    def edge_weight(self, e: int) -> int:
        return self.edge_weights.get(e, 1)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_pins(self) -> int:
        return sum(len(p) for p in self.pins.values())

    def vertex_edges(self) -> dict[int, list[int]]:
        """Incidence from term id to the variables it pins."""
        inc: dict[int, list[int]] = {v: [] for v in self.vertices}
        for e, ps in self.pins.items():
            for v in ps:
                inc[v].append(e)
        return inc


def build_hypergraph(f: ObjectiveFunction,
                     active_vars: Optional[Iterable[int]] = None,
                     active_terms: Optional[Iterable[int]] = None) -> Hypergraph:
    """Hypergraph over the active subfunction: a vertex per active term, a
    hyperedge per active variable pinning the active terms containing it."""
    av = set(active_vars) if active_vars is not None else set(f.var_by_index)
    if active_terms is None:
        at = [t for t in f.terms]
    else:
        ids = set(active_terms)
        at = [t for t in f.terms if t.id in ids]
    vertices = sorted(t.id for t in at)
    pins: dict[int, list[int]] = {v: [] for v in sorted(av)}
    for t in at:
        for v in t.scope:
            if v in av:
                pins[v].append(t.id)
    return Hypergraph(vertices, {v: tuple(sorted(p)) for v, p in pins.items()})
