"""Streaming k-anonymization core.

Maintains a bounded set of active clusters over the arriving tuple stream.
Each cluster holds buffered tuples plus their generalization: a closed
numeric interval per numeric quasi-identifier, or a category-ID set for
categorized ones. Tuples join the cluster whose information loss grows the
least (subject to a rolling loss threshold); a tuple held for ``delta``
subsequent arrivals forces its cluster out, by bulk release when the cluster
already covers ``k`` distinct individuals, else via generalization reuse,
merging, or a flagged suppression fallback.

The engine is a single sequential state machine: exactly one
ingest/flush call in flight at a time.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from .errors import ContractViolation
from .model import AnonConfig, AttributeValue, Message

#: Tolerance for float comparisons against the loss threshold.
_EPS = 1e-12

NumericInterval = tuple[float, float]
CategorySet = set[int]
#: Mutable per-cluster generalization: attribute -> interval or category set.
Generalization = dict[str, "NumericInterval | CategorySet"]
#: Immutable, hashable snapshot used in released tuples and the reuse list.
FrozenGeneralization = tuple[tuple[str, "NumericInterval | tuple[int, ...]"], ...]


@dataclass
class Cluster:
    id: int
    members: list[Message]
    gen: Generalization
    pids: set[AttributeValue] = field(default_factory=set)


@dataclass(frozen=True)
class ReleasedTuple:
    """An output record: non-QI attributes verbatim, QIs generalized.

    ``attributes`` excludes quasi-identifiers and the identifier attribute;
    the sensitive attribute passes through. ``release_seq`` is the engine's
    arrival head at release time.
    """

    attributes: dict[str, AttributeValue]
    generalization: FrozenGeneralization
    cluster_id: int
    suppressed: bool
    seq: int
    arrival_ns: int
    release_seq: int
    release_ns: int


@dataclass(frozen=True)
class _ReusableGen:
    cluster_id: int
    gen: FrozenGeneralization
    loss: float


def _freeze(gen: Generalization) -> FrozenGeneralization:
    out = []
    for attr, g in gen.items():
        if isinstance(g, set):
            out.append((attr, tuple(sorted(g))))
        else:
            out.append((attr, g))
    return tuple(out)


class Engine:
    """Owner of all clustering state for one stream."""

    def __init__(
        self,
        cfg: AnonConfig,
        debug: bool = False,
        clock: Callable[[], int] = time.monotonic_ns,
    ):
        self.cfg = cfg
        self.debug = debug
        self.clock = clock
        self.categorical = frozenset(cfg.non_categorized_attributes)
        self.clusters: list[Cluster] = []  # sorted by id ascending
        self.reusable_gens: deque[_ReusableGen] = deque(maxlen=cfg.mu)
        self.loss_window: deque[float] = deque(maxlen=cfg.mu)
        self.global_ranges: dict[str, NumericInterval] = {}
        self.universe: dict[str, set[int]] = {a: set() for a in self.categorical}
        self.seq_head = -1
        self.type_dropped = 0
        self._next_cluster_id = 0

    # -- loss metric --------------------------------------------------------

    @property
    def tau(self) -> float:
        """Rolling loss threshold: mean of recent released-cluster losses.

        1.0 while no cluster has been released yet (no history, accept
        anything).
        """
        if not self.loss_window:
            return 1.0
        return sum(self.loss_window) / len(self.loss_window)

    def info_loss(self, gen: Generalization) -> float:
        """Mean per-QI loss in [0, 1].

        Numeric: interval width over the global observed width (0 while the
        global range is still a point). Categorical: set size over the number
        of distinct IDs seen for that attribute.
        """
        total = 0.0
        for qi in self.cfg.quasi_identifiers:
            g = gen[qi]
            if qi in self.categorical:
                assert isinstance(g, set)
                total += len(g) / len(self.universe[qi])
            else:
                lo, hi = g  # type: ignore[misc]
                glo, ghi = self.global_ranges[qi]
                if ghi > glo:
                    total += (hi - lo) / (ghi - glo)
        return total / len(self.cfg.quasi_identifiers)

    def _hull_with(self, gen: Generalization, msg: Message) -> Generalization:
        out: Generalization = {}
        for qi in self.cfg.quasi_identifiers:
            g = gen[qi]
            v = msg.attributes[qi]
            if qi in self.categorical:
                assert isinstance(g, set)
                out[qi] = g | {v}  # type: ignore[operator]
            else:
                lo, hi = g  # type: ignore[misc]
                out[qi] = (min(lo, v), max(hi, v))  # type: ignore[type-var]
        return out

    def _merged_gen(self, a: Generalization, b: Generalization) -> Generalization:
        out: Generalization = {}
        for qi in self.cfg.quasi_identifiers:
            if qi in self.categorical:
                out[qi] = a[qi] | b[qi]  # type: ignore[operator]
            else:
                out[qi] = (min(a[qi][0], b[qi][0]), max(a[qi][1], b[qi][1]))
        return out

    def enlargement(self, c: Cluster, msg: Message) -> float:
        """Information-loss increase if ``msg`` were absorbed; 0 when inside."""
        return self.info_loss(self._hull_with(c.gen, msg)) - self.info_loss(c.gen)

    # -- cluster selection --------------------------------------------------

    def best_cluster(self, msg: Message) -> Cluster | None:
        """Active cluster with minimal enlargement whose post-absorption loss
        stays within tau; ties broken by lowest cluster id."""
        threshold = self.tau
        best: Cluster | None = None
        best_key: tuple[float, int] | None = None
        for c in self.clusters:
            post = self.info_loss(self._hull_with(c.gen, msg))
            if post > threshold + _EPS:
                continue
            key = (post - self.info_loss(c.gen), c.id)
            if best_key is None or key < best_key:
                best, best_key = c, key
        return best

    # -- ingest -------------------------------------------------------------

    def ingest(self, msg: Message) -> list[ReleasedTuple]:
        """Absorb one post-reduction, post-categorization tuple.

        Returns whatever the expiry pass releases. A tuple with a missing or
        wrongly typed quasi-identifier (or missing identifier attribute) is
        dropped and counted; the stream continues.
        """
        self.seq_head = msg.seq
        if not self._well_typed(msg):
            self.type_dropped += 1
            return self._expiry_pass()

        for qi in self.cfg.quasi_identifiers:
            v = msg.attributes[qi]
            if qi in self.categorical:
                self.universe[qi].add(v)  # type: ignore[arg-type]
            else:
                lo, hi = self.global_ranges.get(qi, (v, v))
                self.global_ranges[qi] = (min(lo, v), max(hi, v))

        target = self.best_cluster(msg)
        if target is not None:
            self._absorb(target, msg)
        elif len(self.clusters) < self.cfg.beta:
            self._new_cluster(msg)
        elif len(self.clusters) >= 2:
            # at capacity: merge the two cheapest clusters, then open a new one
            self._merge_cheapest_pair()
            self._new_cluster(msg)
        else:
            # beta == 1: the merge path degenerates to enlargement
            self._absorb(self.clusters[0], msg)

        released = self._expiry_pass()
        if self.debug:
            self._check_hulls()
        return released

    def flush(self) -> list[ReleasedTuple]:
        """Drain every buffered tuple via the expiry policy; engine empties."""
        released = self._expiry_pass(force=True)
        if self.clusters:
            raise ContractViolation("clusters remain after flush")
        return released

    def _well_typed(self, msg: Message) -> bool:
        for qi in self.cfg.quasi_identifiers:
            if qi not in msg.attributes:
                return False
            v = msg.attributes[qi]
            if isinstance(v, bool):
                return False
            if qi in self.categorical:
                if not isinstance(v, int):
                    return False
            elif not isinstance(v, (int, float)):
                return False
        pid_attr = self.cfg.identifier_attribute
        if pid_attr is not None and pid_attr not in msg.attributes:
            return False
        return True

    def _pid_of(self, msg: Message) -> AttributeValue | None:
        if self.cfg.identifier_attribute is None:
            return None
        return msg.attributes[self.cfg.identifier_attribute]

    def _absorb(self, c: Cluster, msg: Message) -> None:
        c.members.append(msg)
        c.gen = self._hull_with(c.gen, msg)
        pid = self._pid_of(msg)
        if pid is not None:
            c.pids.add(pid)

    def _new_cluster(self, msg: Message) -> Cluster:
        gen: Generalization = {}
        for qi in self.cfg.quasi_identifiers:
            v = msg.attributes[qi]
            gen[qi] = {v} if qi in self.categorical else (v, v)  # type: ignore[assignment]
        c = Cluster(id=self._next_cluster_id, members=[msg], gen=gen)
        self._next_cluster_id += 1
        pid = self._pid_of(msg)
        if pid is not None:
            c.pids.add(pid)
        self.clusters.append(c)
        return c

    def _merge(self, a: Cluster, b: Cluster) -> Cluster:
        """Merge b into a (a keeps the lower id by caller convention)."""
        a.members = sorted(a.members + b.members, key=lambda m: m.seq)
        a.gen = self._merged_gen(a.gen, b.gen)
        a.pids |= b.pids
        self.clusters.remove(b)
        return a

    def _merge_cheapest_pair(self) -> None:
        best = None
        best_key = None
        for i, a in enumerate(self.clusters):
            for b in self.clusters[i + 1:]:
                key = (self.info_loss(self._merged_gen(a.gen, b.gen)), a.id, b.id)
                if best_key is None or key < best_key:
                    best, best_key = (a, b), key
        assert best is not None
        self._merge(*best)

    # -- expiry and release -------------------------------------------------

    def _k_ok(self, c: Cluster) -> bool:
        if self.cfg.identifier_attribute is not None:
            return len(c.pids) >= self.cfg.k
        return len(c.members) >= self.cfg.k

    def _engine_individuals(self) -> int:
        if self.cfg.identifier_attribute is not None:
            pids: set[AttributeValue] = set()
            for c in self.clusters:
                pids |= c.pids
            return len(pids)
        return sum(len(c.members) for c in self.clusters)

    def _expiry_pass(self, force: bool = False) -> list[ReleasedTuple]:
        out: list[ReleasedTuple] = []
        while True:
            found = None
            for c in self.clusters:
                for m in c.members:
                    if force or self.seq_head - m.seq >= self.cfg.delta:
                        found = (c, m)
                        break
                if found:
                    break
            if found is None:
                return out
            out.extend(self._expire(*found))

    def _expire(self, c: Cluster, m: Message) -> list[ReleasedTuple]:
        if self._k_ok(c):
            return self._release_cluster(c)

        reusable = self._find_reusable(m)
        if reusable is not None:
            rt = self._make_released(m, reusable.gen, reusable.cluster_id, suppressed=False)
            self._remove_member(c, m)
            return [rt]

        if self._engine_individuals() < self.cfg.k:
            rt = self._make_released(m, self._suppression_gen(), c.id, suppressed=True)
            self._remove_member(c, m)
            return [rt]

        while not self._k_ok(c):
            others = [o for o in self.clusters if o is not c]
            if not others:
                raise ContractViolation("merge target expected but none active")
            partner = min(
                others,
                key=lambda o: (self.info_loss(self._merged_gen(c.gen, o.gen)), o.id),
            )
            survivor, absorbed = (c, partner) if c.id < partner.id else (partner, c)
            c = self._merge(survivor, absorbed)
        return self._release_cluster(c)

    def release_cluster(self, c: Cluster) -> list[ReleasedTuple]:
        """Public alias enforcing the k-criterion precondition."""
        if not self._k_ok(c):
            raise ContractViolation(f"cluster {c.id} released below k")
        return self._release_cluster(c)

    def _release_cluster(self, c: Cluster) -> list[ReleasedTuple]:
        if not self._k_ok(c):
            raise ContractViolation(f"cluster {c.id} released below k")
        loss = self.info_loss(c.gen)
        snapshot = _freeze(c.gen)
        out = [
            self._make_released(m, snapshot, c.id, suppressed=False) for m in c.members
        ]
        self.clusters.remove(c)
        self.reusable_gens.append(_ReusableGen(c.id, snapshot, loss))
        self.loss_window.append(loss)
        return out

    def _remove_member(self, c: Cluster, m: Message) -> None:
        c.members.remove(m)
        if not c.members:
            self.clusters.remove(c)
            return
        # keep the generalization a tight hull of the remaining members
        gen: Generalization = {}
        for qi in self.cfg.quasi_identifiers:
            values = [x.attributes[qi] for x in c.members]
            if qi in self.categorical:
                gen[qi] = set(values)  # type: ignore[arg-type]
            else:
                gen[qi] = (min(values), max(values))  # type: ignore[assignment]
        c.gen = gen
        if self.cfg.identifier_attribute is not None:
            c.pids = {self._pid_of(x) for x in c.members}  # type: ignore[misc]

    def _find_reusable(self, m: Message) -> _ReusableGen | None:
        threshold = self.tau
        best = None
        best_key = None
        for index, entry in enumerate(self.reusable_gens):
            if entry.loss > threshold + _EPS:
                continue
            if not self._covers(entry.gen, m):
                continue
            key = (entry.loss, index)
            if best_key is None or key < best_key:
                best, best_key = entry, key
        return best

    def _covers(self, gen: FrozenGeneralization, m: Message) -> bool:
        table = dict(gen)
        for qi in self.cfg.quasi_identifiers:
            g = table[qi]
            v = m.attributes[qi]
            if qi in self.categorical:
                if v not in g:  # type: ignore[operator]
                    return False
            elif not (g[0] <= v <= g[1]):  # type: ignore[index]
                return False
        return True

    def _suppression_gen(self) -> FrozenGeneralization:
        """Maximal generalization: global ranges / full category universe."""
        out = []
        for qi in self.cfg.quasi_identifiers:
            if qi in self.categorical:
                out.append((qi, tuple(sorted(self.universe[qi]))))
            else:
                out.append((qi, self.global_ranges[qi]))
        return tuple(out)

    def _make_released(
        self,
        m: Message,
        gen: FrozenGeneralization,
        cluster_id: int,
        suppressed: bool,
    ) -> ReleasedTuple:
        excluded = set(self.cfg.quasi_identifiers)
        if self.cfg.identifier_attribute is not None:
            excluded.add(self.cfg.identifier_attribute)
        attributes = {k: v for k, v in m.attributes.items() if k not in excluded}
        return ReleasedTuple(
            attributes=attributes,
            generalization=gen,
            cluster_id=cluster_id,
            suppressed=suppressed,
            seq=m.seq,
            arrival_ns=m.arrival_ns,
            release_seq=self.seq_head,
            release_ns=self.clock(),
        )

    def _check_hulls(self) -> None:
        for c in self.clusters:
            recomputed: Generalization = {}
            for qi in self.cfg.quasi_identifiers:
                values = [m.attributes[qi] for m in c.members]
                if qi in self.categorical:
                    recomputed[qi] = set(values)  # type: ignore[arg-type]
                else:
                    recomputed[qi] = (min(values), max(values))  # type: ignore[assignment]
            if recomputed != c.gen:
                raise ContractViolation(
                    f"cluster {c.id} generalization is not the tight member hull"
                )
