"""Provenance-aware online scene graph.

Entities (rooms, furniture, objects, humans, robot) are nodes; spatial
relations are timestamped, confidence-weighted edges. Conflicting placement
claims are never deleted: every accepted assertion is appended to history and
the single active placement per object is *computed* from the full history,
so resolution is deterministic and independent of arrival order.

Single-writer: all mutation goes through one owner. Snapshots are plain JSON
strings and safe to share across threads.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

from .config import HALF_LIFE_TICKS, SOURCE_RANK


class Kind(str, Enum):
    ROOM = "room"
    FURNITURE = "furniture"
    OBJECT = "object"
    HUMAN = "human"
    ROBOT = "robot"


class Relation(str, Enum):
    ON = "on"
    IN = "in"
    NEAR = "near"
    HELD_BY = "held_by"
    AT = "at"


class Source(str, Enum):
    GEOMETRIC = "geometric"
    VERBAL = "verbal"
    WRITTEN = "written"
    GESTURE = "gesture"
    PRIOR = "prior"


# Relations that locate an object when the subject is an object node. "near"
# is deliberately excluded: it narrows a search but does not place anything.
PLACEMENT_RELATIONS = frozenset(
    {Relation.ON, Relation.IN, Relation.HELD_BY, Relation.AT}
)

# Head nouns treated as furniture categories even when the exact label is not
# in the map; mentions of unknown furniture are rejected rather than invented.
_FURNITURE_HEAD_NOUNS = frozenset(
    {
        "table", "shelf", "sofa", "couch", "bed", "desk", "cabinet",
        "counter", "machine", "chair", "wardrobe", "dresser", "rack",
    }
)

_ARTICLES = ("the", "a", "an")


class GraphError(Exception):
    pass


class UnknownNodeError(GraphError):
    pass


class EmptyLabelError(GraphError, ValueError):
    pass


class RejectedAssertionError(GraphError):
    """Raised when an assertion's landmark cannot be grounded; the graph is
    left unchanged and the caller is expected to log the rejection."""


class SnapshotFormatError(GraphError):
    def __init__(self, message: str, position: str = ""):
        super().__init__(f"{message}{f' at {position}' if position else ''}")
        self.position = position


def normalize_label(raw: str) -> str:
    """Lowercase, trim, collapse internal whitespace, drop one leading article."""
    s = re.sub(r"\s+", " ", raw.strip().lower())
    head, _, rest = s.partition(" ")
    if head in _ARTICLES and rest:
        return rest
    return s


@dataclass
class Pose:
    x: float
    y: float
    z: float = 0.0
    yaw: Optional[float] = None

    def position(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def to_json(self) -> dict:
        return {"position": [self.x, self.y, self.z], "yaw": self.yaw}

    @classmethod
    def from_json(cls, data: dict) -> "Pose":
        x, y, z = data["position"]
        return cls(float(x), float(y), float(z), data.get("yaw"))


@dataclass
class EntityNode:
    id: int
    kind: Kind
    label: str
    pose: Optional[Pose]
    created_at: int
    last_updated: int

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "label": self.label,
            "pose": self.pose.to_json() if self.pose else None,
            "created_at": self.created_at,
            "last_updated": self.last_updated,
        }


@dataclass(frozen=True)
class RelationEdge:
    subject: int
    relation: Relation
    object: int
    confidence: float
    source: Source
    asserted_at: int

    def to_json(self, active: Optional[bool] = None) -> dict:
        doc = {
            "subject": self.subject,
            "relation": self.relation.value,
            "object": self.object,
            "confidence": self.confidence,
            "source": self.source.value,
            "asserted_at": self.asserted_at,
        }
        if active is not None:
            doc["active"] = active
        return doc


@dataclass(frozen=True)
class SemanticAssertion:
    """A (subject, relation, landmark) claim with provenance.

    The universal currency between cue interpretation, geometric relation
    extraction, and the graph. Labels are free text; grounding to nodes
    happens in :meth:`SceneGraph.apply_assertion`.
    """

    subject_label: str
    relation: Relation
    object_label: str
    confidence: float
    source: Source
    asserted_at: int

    def __post_init__(self):
        if not normalize_label(self.subject_label):
            raise EmptyLabelError("assertion subject label is empty")
        if not normalize_label(self.object_label):
            raise EmptyLabelError("assertion object label is empty")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")

    def to_json(self) -> dict:
        return {
            "subject_label": self.subject_label,
            "relation": self.relation.value,
            "object_label": self.object_label,
            "confidence": self.confidence,
            "source": self.source.value,
            "asserted_at": self.asserted_at,
        }

    @classmethod
    def from_json(cls, data: dict) -> "SemanticAssertion":
        return cls(
            subject_label=data["subject_label"],
            relation=Relation(data["relation"]),
            object_label=data["object_label"],
            confidence=float(data["confidence"]),
            source=Source(data["source"]),
            asserted_at=int(data["asserted_at"]),
        )


@dataclass
class GraphDelta:
    """What one graph operation changed; feeds the replan check and UI stream.

    `labels` denormalizes node labels for every id the delta references so
    consumers (relevance check, console) need not hold the graph.
    """

    tick: int
    added_nodes: list[int] = field(default_factory=list)
    updated_nodes: list[int] = field(default_factory=list)
    added_edges: list[RelationEdge] = field(default_factory=list)
    superseded_edges: list[RelationEdge] = field(default_factory=list)
    labels: dict[int, str] = field(default_factory=dict)

    def is_empty(self) -> bool:
        return not (self.added_nodes or self.updated_nodes or self.added_edges)

    def to_json(self) -> dict:
        return {
            "tick": self.tick,
            "added_nodes": self.added_nodes,
            "updated_nodes": self.updated_nodes,
            "added_edges": [e.to_json() for e in self.added_edges],
            "superseded_edges": [e.to_json() for e in self.superseded_edges],
            "labels": {str(k): v for k, v in self.labels.items()},
        }


@dataclass
class GroundingResult:
    node_id: Optional[int]
    created: bool = False


@dataclass
class LocationChain:
    """Where an object is believed to be: object -> furniture -> room."""

    object_id: int
    furniture_id: Optional[int]
    room_id: Optional[int]
    confidence: float


def effective_confidence(edge: RelationEdge, now: int) -> float:
    """Source confidence decayed by age with a fixed half-life."""
    return edge.confidence * 0.5 ** ((now - edge.asserted_at) / HALF_LIFE_TICKS)


def _ranking_key(edge: RelationEdge, now: int):
    # Score, then recency, then source rank, then edge content: deterministic
    # and independent of insertion order for any multiset of edges.
    return (
        effective_confidence(edge, now),
        edge.asserted_at,
        SOURCE_RANK[edge.source.value],
        edge.relation.value,
        edge.object,
    )


class SceneGraph:
    """The robot's semantic world model. Not thread-safe; one writer only."""

    def __init__(self, synonyms: Optional[dict[str, str]] = None,
                 furniture_lexicon: Optional[Iterable[str]] = None):
        self.nodes: dict[int, EntityNode] = {}
        self.edges: list[RelationEdge] = []
        self.tick: int = 0
        self._next_id = 1
        self._by_label: dict[str, list[int]] = {}
        self._placements: dict[int, list[RelationEdge]] = {}  # subject -> edges
        # alias -> canonical, both normalized
        self.synonyms: dict[str, str] = dict(synonyms or {})
        self.furniture_lexicon: set[str] = set(furniture_lexicon or ())

    # ── label handling ────────────────────────────────────────────────────

    def canonical(self, label: str) -> str:
        n = normalize_label(label)
        return self.synonyms.get(n, n)

    def add_synonyms(self, table: dict[str, list[str]]) -> None:
        """`table` maps a canonical label to its aliases."""
        for canon, aliases in table.items():
            c = normalize_label(canon)
            for alias in aliases:
                self.synonyms[normalize_label(alias)] = c

    def _is_furniture_category(self, canon: str) -> bool:
        if canon in self.furniture_lexicon:
            return True
        return canon.rsplit(" ", 1)[-1] in _FURNITURE_HEAD_NOUNS

    # ── node management ───────────────────────────────────────────────────

    def add_node(self, kind: Kind, label: str, pose: Optional[Pose],
                 tick: Optional[int] = None) -> EntityNode:
        if tick is None:
            tick = self.tick
        canon = self.canonical(label)
        if not canon:
            raise EmptyLabelError("node label is empty after normalization")
        if kind in (Kind.ROOM, Kind.FURNITURE) and pose is None:
            raise ValueError(f"{kind.value} nodes must carry a pose")
        node = EntityNode(self._next_id, kind, canon, pose, tick, tick)
        self._next_id += 1
        self.nodes[node.id] = node
        self._by_label.setdefault(canon, []).append(node.id)
        if kind == Kind.FURNITURE:
            self.furniture_lexicon.add(canon)
        return node

    def node(self, node_id: int) -> EntityNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNodeError(f"no node with id {node_id}") from None

    def nodes_of_kind(self, kind: Kind) -> list[EntityNode]:
        return [n for n in self.nodes.values() if n.kind == kind]

    def robot_node(self) -> Optional[EntityNode]:
        robots = self.nodes_of_kind(Kind.ROBOT)
        return robots[0] if robots else None

    def set_node_pose(self, node_id: int, pose: Pose, tick: int) -> None:
        n = self.node(node_id)
        n.pose = pose
        n.last_updated = tick
        self.tick = max(self.tick, tick)

    # ── grounding ─────────────────────────────────────────────────────────

    def ground_label(self, label: str, reference_pose: Optional[Pose] = None,
                     create: bool = True) -> GroundingResult:
        """Map free text onto a node.

        Exact match on the canonical label; ambiguity is broken by distance
        to `reference_pose` (then smallest id). Unknown furniture is never
        invented (the map owns furniture); an unknown object category becomes
        a provisional node with no pose when `create` is allowed.
        """
        canon = self.canonical(label)
        if not canon:
            raise EmptyLabelError("cannot ground an empty label")
        matches = [self.nodes[i] for i in self._by_label.get(canon, [])]
        if matches:
            if len(matches) == 1 or reference_pose is None:
                best = min(matches, key=lambda n: n.id)
            else:
                ref = reference_pose.position()
                best = min(
                    matches,
                    key=lambda n: (
                        _distance(n.pose.position(), ref) if n.pose else float("inf"),
                        n.id,
                    ),
                )
            return GroundingResult(best.id)
        if self._is_furniture_category(canon):
            return GroundingResult(None)
        if not create:
            return GroundingResult(None)
        node = self.add_node(Kind.OBJECT, canon, None)
        return GroundingResult(node.id, created=True)

    # ── edges and conflict resolution ─────────────────────────────────────

    def add_edge(self, edge: RelationEdge) -> None:
        """Append an edge without assertion semantics (used for map seeding)."""
        self.node(edge.subject)
        self.node(edge.object)
        self._append_edge(edge)
        self.tick = max(self.tick, edge.asserted_at)

    def _append_edge(self, edge: RelationEdge) -> None:
        self.edges.append(edge)
        if (edge.relation in PLACEMENT_RELATIONS
                and self.nodes[edge.subject].kind == Kind.OBJECT):
            self._placements.setdefault(edge.subject, []).append(edge)

    def _groundable(self, label: str, allow_provisional: bool) -> bool:
        canon = self.canonical(label)
        if self._by_label.get(canon):
            return True
        return allow_provisional and not self._is_furniture_category(canon)

    def apply_assertion(self, a: SemanticAssertion) -> GraphDelta:
        """Ground an assertion and append the resulting edge.

        For placement relations, the landmark must already exist; otherwise
        the whole assertion is rejected and the graph is left untouched
        (groundability is checked before anything mutates). Superseded
        placement edges stay in history and are reported inactive.
        """
        is_placement_relation = a.relation in PLACEMENT_RELATIONS
        if not self._groundable(a.object_label,
                                allow_provisional=not is_placement_relation):
            raise RejectedAssertionError(
                f"landmark {a.object_label!r} does not ground to any node"
            )
        if not self._groundable(a.subject_label, allow_provisional=True):
            raise RejectedAssertionError(
                f"subject {a.subject_label!r} does not ground to any node"
            )

        self.tick = max(self.tick, a.asserted_at)
        delta = GraphDelta(tick=a.asserted_at)
        landmark = self.ground_label(a.object_label,
                                     create=not is_placement_relation)
        landmark_pose = self.node(landmark.node_id).pose
        subject = self.ground_label(a.subject_label, reference_pose=landmark_pose)

        subject_node = self.node(subject.node_id)
        competes = (
            subject_node.kind == Kind.OBJECT and a.relation in PLACEMENT_RELATIONS
        )
        previous = self.resolve_placement(subject.node_id, a.asserted_at) if competes else None

        edge = RelationEdge(
            subject=subject.node_id,
            relation=a.relation,
            object=landmark.node_id,
            confidence=a.confidence,
            source=a.source,
            asserted_at=a.asserted_at,
        )
        self._append_edge(edge)
        if landmark.created:
            delta.added_nodes.append(landmark.node_id)
        if subject.created:
            delta.added_nodes.append(subject.node_id)
        elif subject.node_id not in delta.added_nodes:
            # keep added/updated disjoint when subject and landmark coincide
            subject_node.last_updated = a.asserted_at
            delta.updated_nodes.append(subject.node_id)
        delta.added_edges.append(edge)

        if competes:
            current = self.resolve_placement(subject.node_id, a.asserted_at)
            if previous is not None and current is not previous:
                delta.superseded_edges.append(previous)

        for nid in set(delta.added_nodes + delta.updated_nodes +
                       [e.subject for e in delta.added_edges] +
                       [e.object for e in delta.added_edges]):
            delta.labels[nid] = self.nodes[nid].label
        return delta

    def placement_edges(self, object_id: int) -> list[RelationEdge]:
        node = self.node(object_id)
        if node.kind != Kind.OBJECT:
            raise ValueError(f"node {object_id} is {node.kind.value}, not an object")
        return list(self._placements.get(object_id, ()))

    def resolve_placement(self, object_id: int, now: int) -> Optional[RelationEdge]:
        """The single active placement edge for an object, or None.

        Maximizes age-decayed confidence; ties fall to the newer edge, then
        the more trusted source, then edge content. Because the key never
        looks at insertion order, any arrival order of the same assertions
        resolves identically.
        """
        candidates = self.placement_edges(object_id)
        if not candidates:
            return None
        return max(candidates, key=lambda e: _ranking_key(e, now))

    def locate(self, label: str, now: int) -> Optional[LocationChain]:
        """Believed location chain for an object label, or None."""
        try:
            grounded = self.ground_label(label, create=False)
        except EmptyLabelError:
            return None
        if grounded.node_id is None:
            return None
        node = self.node(grounded.node_id)
        if node.kind != Kind.OBJECT:
            return None
        edge = self.resolve_placement(node.id, now)
        if edge is None:
            return None
        target = self.node(edge.object)
        furniture_id = room_id = None
        if target.kind == Kind.FURNITURE:
            furniture_id = target.id
            room_id = self._room_of(target.id)
        elif target.kind == Kind.ROOM:
            room_id = target.id
        return LocationChain(node.id, furniture_id, room_id,
                             effective_confidence(edge, now))

    def _room_of(self, furniture_id: int) -> Optional[int]:
        for e in self.edges:
            if (e.subject == furniture_id and e.relation == Relation.IN
                    and self.nodes[e.object].kind == Kind.ROOM):
                return e.object
        return None

    def query_contents(self, container_id: int, now: int) -> list[int]:
        """Object ids whose active placement edge targets the container."""
        self.node(container_id)
        out = []
        for n in self.nodes_of_kind(Kind.OBJECT):
            active = self.resolve_placement(n.id, now)
            if active is not None and active.object == container_id:
                out.append(n.id)
        return sorted(out)

    # ── serialization ─────────────────────────────────────────────────────

    def snapshot(self, now: Optional[int] = None) -> str:
        """One JSON document with full edge history and materialized
        `active` flags; placement edges are active only if they win
        resolution at `now` (default: the graph's own tick)."""
        if now is None:
            now = self.tick
        winners: set[int] = set()
        for n in self.nodes_of_kind(Kind.OBJECT):
            w = self.resolve_placement(n.id, now)
            if w is not None:
                # identity, not equality: exact duplicates stay distinguishable
                winners.add(_first_identity_index(self.edges, w))
        edge_docs = []
        for i, e in enumerate(self.edges):
            competes = (
                e.relation in PLACEMENT_RELATIONS
                and self.nodes[e.subject].kind == Kind.OBJECT
            )
            active = (i in winners) if competes else True
            edge_docs.append(e.to_json(active=active))
        doc = {
            "nodes": [n.to_json() for n in sorted(self.nodes.values(), key=lambda n: n.id)],
            "edges": edge_docs,
            "tick": now,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @classmethod
    def restore(cls, data: "str | bytes",
                synonyms: Optional[dict[str, str]] = None,
                furniture_lexicon: Optional[Iterable[str]] = None) -> "SceneGraph":
        if isinstance(data, bytes):
            try:
                data = data.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise SnapshotFormatError("snapshot is not valid UTF-8",
                                          f"byte {exc.start}") from exc
        try:
            doc = json.loads(data)
        except json.JSONDecodeError as exc:
            raise SnapshotFormatError(exc.msg, f"line {exc.lineno} column {exc.colno}") from exc
        if not isinstance(doc, dict):
            raise SnapshotFormatError("snapshot root must be an object", "$")
        graph = cls(synonyms=synonyms, furniture_lexicon=furniture_lexicon)
        try:
            graph.tick = int(doc["tick"])
        except KeyError:
            raise SnapshotFormatError("missing field", "$.tick") from None
        for i, nd in enumerate(_expect_list(doc, "nodes")):
            try:
                node = EntityNode(
                    id=int(nd["id"]),
                    kind=Kind(nd["kind"]),
                    label=nd["label"],
                    pose=Pose.from_json(nd["pose"]) if nd.get("pose") else None,
                    created_at=int(nd["created_at"]),
                    last_updated=int(nd["last_updated"]),
                )
            except (KeyError, ValueError, TypeError) as exc:
                raise SnapshotFormatError(f"bad node ({exc})", f"$.nodes[{i}]") from exc
            graph.nodes[node.id] = node
            graph._by_label.setdefault(node.label, []).append(node.id)
            if node.kind == Kind.FURNITURE:
                graph.furniture_lexicon.add(node.label)
        for i, ed in enumerate(_expect_list(doc, "edges")):
            try:
                edge = RelationEdge(
                    subject=int(ed["subject"]),
                    relation=Relation(ed["relation"]),
                    object=int(ed["object"]),
                    confidence=float(ed["confidence"]),
                    source=Source(ed["source"]),
                    asserted_at=int(ed["asserted_at"]),
                )
            except (KeyError, ValueError, TypeError) as exc:
                raise SnapshotFormatError(f"bad edge ({exc})", f"$.edges[{i}]") from exc
            if edge.subject not in graph.nodes or edge.object not in graph.nodes:
                raise SnapshotFormatError("edge references unknown node", f"$.edges[{i}]")
            graph._append_edge(edge)
        graph._next_id = max(graph.nodes, default=0) + 1
        return graph


def _expect_list(doc: dict, key: str) -> list:
    try:
        value = doc[key]
    except KeyError:
        raise SnapshotFormatError("missing field", f"$.{key}") from None
    if not isinstance(value, list):
        raise SnapshotFormatError("expected a list", f"$.{key}")
    return value


def _first_identity_index(edges: list[RelationEdge], target: RelationEdge) -> int:
    for i, e in enumerate(edges):
        if e is target:
            return i
    raise ValueError("edge not in graph")  # unreachable for resolver output


def _distance(a: tuple[float, float, float], b: tuple[float, float, float]) -> float:
    return ((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2) ** 0.5
