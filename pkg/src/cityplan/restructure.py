"""Change engine: coalescing changelog, fold semantics, undo, marks.

The plan is never stored as a mutated landscape. State is always
``fold(base, entries)``: an ordered ledger of change ops folded over the
immutable base landscape. The ledger coalesces so it reads as a net plan
rather than an event log:

  R1  rename-after-create mutates the Create entry in place
  R2  rename-after-rename replaces the earlier Rename op in place
  R3  move-after-create mutates the Create entry's parent in place
  R4  move-after-move replaces the earlier Move op in place
  R5  delete-of-created removes the Create entry plus, transitively, every
      entry referencing the entity or anything currently inside it
  R6  delete-of-original appends one auto CutCommunication companion per
      live incident link (grouped under the delete), then the Delete entry
  R7  cut-of-created-communication removes its Create entry

Deleted originals are retained in the effective model and only flagged, so
changelog click-through targets stay alive. Undo is cascade removal plus
refold, never inverse ops.

Positional rules: in-place mutation (R1-R4) keeps the entry's id and ledger
position; entry ids strictly increase and are never reused. Created tree
entities and links get ids ``new-<ordinal>``. Fold order is the ledger
order; creates and moves append at the end of the parent's child list.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Union

from . import model as mdl
from .errors import (
    CityPlanError,
    CorruptLedger,
    CyclicMove,
    DuplicateName,
    EntityDeleted,
    InvalidModel,
    InvalidTarget,
    SchemaViolation,
    SelfCommunication,
    UnknownEntity,
    UnknownEntry,
)
from .model import (
    Application,
    Class,
    CommunicationLink,
    Landscape,
    LandscapeIndex,
    Package,
    validate_landscape,
)


# -- change ops ---------------------------------------------------------------

@dataclass(frozen=True)
class CreateApplication:
    name: str
    language: str


@dataclass(frozen=True)
class CreatePackage:
    parent_id: str
    name: str


@dataclass(frozen=True)
class CreateClass:
    parent_package_id: str
    name: str


@dataclass(frozen=True)
class RenameEntity:
    entity_id: str
    new_name: str


@dataclass(frozen=True)
class MoveEntity:
    entity_id: str
    new_parent_id: str


@dataclass(frozen=True)
class DeleteEntity:
    entity_id: str


@dataclass(frozen=True)
class CreateCommunication:
    source_class_id: str
    target_class_id: str
    method_name: str


@dataclass(frozen=True)
class CutCommunication:
    link_id: str


ChangeOp = Union[
    CreateApplication,
    CreatePackage,
    CreateClass,
    RenameEntity,
    MoveEntity,
    DeleteEntity,
    CreateCommunication,
    CutCommunication,
]

_CREATE_OPS = (CreateApplication, CreatePackage, CreateClass, CreateCommunication)

_OP_FIELDS = {
    "CreateApplication": (CreateApplication, [("name", "name"), ("language", "language")]),
    "CreatePackage": (CreatePackage, [("parentId", "parent_id"), ("name", "name")]),
    "CreateClass": (CreateClass, [("parentPackageId", "parent_package_id"), ("name", "name")]),
    "RenameEntity": (RenameEntity, [("entityId", "entity_id"), ("newName", "new_name")]),
    "MoveEntity": (MoveEntity, [("entityId", "entity_id"), ("newParentId", "new_parent_id")]),
    "DeleteEntity": (DeleteEntity, [("entityId", "entity_id")]),
    "CreateCommunication": (
        CreateCommunication,
        [
            ("sourceClassId", "source_class_id"),
            ("targetClassId", "target_class_id"),
            ("methodName", "method_name"),
        ],
    ),
    "CutCommunication": (CutCommunication, [("linkId", "link_id")]),
}


def op_to_dict(op: ChangeOp) -> dict:
    kind = type(op).__name__
    _, fields = _OP_FIELDS[kind]
    doc = {"kind": kind}
    for wire, attr in fields:
        doc[wire] = getattr(op, attr)
    return doc


def op_from_dict(doc) -> ChangeOp:
    if not isinstance(doc, dict):
        raise SchemaViolation("op must be an object")
    kind = doc.get("kind")
    if kind not in _OP_FIELDS:
        raise SchemaViolation(f"unknown op kind {kind!r}")
    cls, fields = _OP_FIELDS[kind]
    allowed = {"kind"} | {wire for wire, _ in fields}
    extras = set(doc) - allowed
    if extras:
        raise SchemaViolation(f"unexpected field {sorted(extras)[0]!r} in {kind} op")
    kwargs = {}
    for wire, attr in fields:
        if wire not in doc or not isinstance(doc[wire], str):
            raise SchemaViolation(f"op {kind} needs string field {wire!r}")
        kwargs[attr] = doc[wire]
    return cls(**kwargs)


def op_references(op: ChangeOp) -> frozenset[str]:
    """Entity ids an op points at (excluding the id it may create)."""
    if isinstance(op, CreateApplication):
        return frozenset()
    if isinstance(op, CreatePackage):
        return frozenset({op.parent_id})
    if isinstance(op, CreateClass):
        return frozenset({op.parent_package_id})
    if isinstance(op, RenameEntity):
        return frozenset({op.entity_id})
    if isinstance(op, MoveEntity):
        return frozenset({op.entity_id, op.new_parent_id})
    if isinstance(op, DeleteEntity):
        return frozenset({op.entity_id})
    if isinstance(op, CreateCommunication):
        return frozenset({op.source_class_id, op.target_class_id})
    return frozenset({op.link_id})


# -- ledger -------------------------------------------------------------------

@dataclass(frozen=True)
class ChangelogEntry:
    id: int
    op: ChangeOp
    author: str
    group_id: int | None = None
    created_entity_id: str | None = None


@dataclass(frozen=True)
class PlanState:
    base: Landscape
    entries: tuple[ChangelogEntry, ...] = ()
    next_entry_id: int = 1
    next_entity_ordinal: int = 1


def fresh_state(base: Landscape) -> PlanState:
    report = validate_landscape(base)
    if report:
        raise InvalidModel(
            "; ".join(f"{v.entity_id}: {v.reason}" for v in report), report=report
        )
    return PlanState(base=base)


@dataclass(frozen=True)
class ChangeDiff:
    """What one apply did to the ledger: new or mutated entries, removed ids."""

    upserted: tuple[ChangelogEntry, ...] = ()
    removed_ids: tuple[int, ...] = ()

    @property
    def affected_entry_ids(self) -> tuple[int, ...]:
        return tuple(e.id for e in self.upserted) + self.removed_ids


# -- marks --------------------------------------------------------------------

class Mark(Enum):
    CREATED = "plus"
    RENAMED = "pencil"
    MOVED = "arrow"
    DELETED = "x-cross"
    LINK_CREATED = "plus-dashed"
    LINK_CUT = "stripe"


_MARK_PRECEDENCE = {
    Mark.DELETED: 4,
    Mark.CREATED: 3,
    Mark.MOVED: 2,
    Mark.RENAMED: 1,
    Mark.LINK_CUT: 2,
    Mark.LINK_CREATED: 1,
}


@dataclass(frozen=True)
class ModificationMark:
    entity_id: str
    mark: Mark


def _entry_mark(entry: ChangelogEntry) -> tuple[str, Mark] | None:
    op = entry.op
    if isinstance(op, (CreateApplication, CreatePackage, CreateClass)):
        return entry.created_entity_id, Mark.CREATED
    if isinstance(op, RenameEntity):
        return op.entity_id, Mark.RENAMED
    if isinstance(op, MoveEntity):
        return op.entity_id, Mark.MOVED
    if isinstance(op, DeleteEntity):
        return op.entity_id, Mark.DELETED
    if isinstance(op, CreateCommunication):
        return entry.created_entity_id, Mark.LINK_CREATED
    if isinstance(op, CutCommunication):
        return op.link_id, Mark.LINK_CUT
    return None


def marks_from_entries(entries: Iterable[ChangelogEntry]) -> tuple[ModificationMark, ...]:
    best: dict[str, Mark] = {}
    for entry in entries:
        derived = _entry_mark(entry)
        if derived is None:
            continue
        entity_id, mark = derived
        current = best.get(entity_id)
        if current is None or _MARK_PRECEDENCE[mark] > _MARK_PRECEDENCE[current]:
            best[entity_id] = mark
    return tuple(ModificationMark(eid, mark) for eid, mark in sorted(best.items()))


def modification_marks(state: PlanState) -> tuple[ModificationMark, ...]:
    """Marks derive solely from the ledger; one mark per entity by precedence
    Deleted > Created > Moved > Renamed (cut beats created for links)."""
    return marks_from_entries(state.entries)


# -- working city (mutable fold target) ---------------------------------------

class _Node:
    __slots__ = ("kind", "id", "name", "language", "methods", "total_calls", "children", "parent")

    def __init__(self, kind, node_id, name, language="", methods=(), total_calls=0, parent=None):
        self.kind = kind
        self.id = node_id
        self.name = name
        self.language = language
        self.methods = methods
        self.total_calls = total_calls
        self.children: list[_Node] = []
        self.parent: _Node | None = parent


class _Link:
    __slots__ = ("id", "source", "target", "method", "count", "cut")

    def __init__(self, link_id, source, target, method, count, cut=False):
        self.id = link_id
        self.source = source
        self.target = target
        self.method = method
        self.count = count
        self.cut = cut


class _City:
    """Mutable fold target; every mutation enforces the model invariants the
    op preconditions demand, so replaying a tampered ledger fails loudly."""

    def __init__(self, base: Landscape):
        self.nodes: dict[str, _Node] = {}
        self.links: dict[str, _Link] = {}
        self.apps: list[_Node] = []
        self.deleted_roots: set[str] = set()

        def add_package(pkg: Package, parent: _Node) -> None:
            node = _Node("package", pkg.id, pkg.name, parent=parent)
            parent.children.append(node)
            self.nodes[pkg.id] = node
            for sub in pkg.sub_packages:
                add_package(sub, node)
            for cls in pkg.classes:
                leaf = _Node(
                    "class", cls.id, cls.name,
                    methods=cls.methods, total_calls=cls.total_calls, parent=node,
                )
                node.children.append(leaf)
                self.nodes[cls.id] = leaf

        for app in base.applications:
            root = _Node("application", app.id, app.name, language=app.language)
            self.apps.append(root)
            self.nodes[app.id] = root
            for pkg in app.root_packages:
                add_package(pkg, root)
        for link in base.links:
            self.links[link.id] = _Link(
                link.id, link.source_class_id, link.target_class_id,
                link.method_name, link.call_count,
            )

    # -- queries --

    def node(self, entity_id: str) -> _Node:
        try:
            return self.nodes[entity_id]
        except KeyError:
            if entity_id in self.links:
                raise InvalidTarget(f"{entity_id!r} is a communication link") from None
            raise UnknownEntity(f"no entity with id {entity_id!r}") from None

    def is_deleted(self, entity_id: str) -> bool:
        node = self.nodes.get(entity_id)
        while node is not None:
            if node.id in self.deleted_roots:
                return True
            node = node.parent
        return False

    def assert_live(self, entity_id: str) -> _Node:
        node = self.node(entity_id)
        if self.is_deleted(entity_id):
            raise EntityDeleted(f"entity {entity_id!r} is marked deleted")
        return node

    def subtree_ids(self, entity_id: str) -> set[str]:
        ids: set[str] = set()

        def walk(node: _Node) -> None:
            ids.add(node.id)
            for child in node.children:
                walk(child)

        walk(self.node(entity_id))
        return ids

    def live_incident_links(self, ids: set[str]) -> list[_Link]:
        return [
            link for link in self.links.values()
            if not link.cut and (link.source in ids or link.target in ids)
        ]

    def _sibling_names(self, parent: _Node | None) -> set[str]:
        if parent is None:
            return {a.name for a in self.apps}
        return {c.name for c in parent.children}

    @staticmethod
    def _check_name(kind: str, name: str) -> None:
        if not name:
            raise InvalidTarget(f"{kind} name must be non-empty")
        if kind in ("package", "class") and "." in name:
            raise InvalidTarget(f"{kind} name must be a simple name (no dots): {name!r}")

    # -- mutations (each validates its own preconditions) --

    def create_application(self, new_id: str, name: str, language: str) -> None:
        self._check_name("application", name)
        if name in self._sibling_names(None):
            raise DuplicateName(f"application named {name!r} already exists")
        node = _Node("application", new_id, name, language=language)
        self.apps.append(node)
        self.nodes[new_id] = node

    def create_package(self, new_id: str, parent_id: str, name: str) -> None:
        self._check_name("package", name)
        parent = self.assert_live(parent_id)
        if parent.kind not in ("application", "package"):
            raise InvalidTarget(f"cannot create a package under a {parent.kind}")
        if name in self._sibling_names(parent):
            raise DuplicateName(f"sibling named {name!r} already exists in {parent_id!r}")
        node = _Node("package", new_id, name, parent=parent)
        parent.children.append(node)
        self.nodes[new_id] = node

    def create_class(self, new_id: str, parent_id: str, name: str) -> None:
        self._check_name("class", name)
        parent = self.assert_live(parent_id)
        if parent.kind != "package":
            raise InvalidTarget(f"cannot create a class under a {parent.kind}")
        if name in self._sibling_names(parent):
            raise DuplicateName(f"sibling named {name!r} already exists in {parent_id!r}")
        node = _Node("class", new_id, name, parent=parent)
        parent.children.append(node)
        self.nodes[new_id] = node

    def rename(self, entity_id: str, new_name: str) -> None:
        node = self.assert_live(entity_id)
        self._check_name(node.kind, new_name)
        siblings = self._sibling_names(node.parent) - {node.name}
        if new_name in siblings:
            raise DuplicateName(f"sibling named {new_name!r} already exists")
        node.name = new_name

    def move(self, entity_id: str, new_parent_id: str) -> None:
        node = self.assert_live(entity_id)
        if node.kind == "application":
            raise InvalidTarget("applications cannot be moved")
        target = self.assert_live(new_parent_id)
        if node.kind == "class" and target.kind != "package":
            raise InvalidTarget(f"cannot move a class into a {target.kind}")
        if node.kind == "package" and target.kind not in ("package", "application"):
            raise InvalidTarget(f"cannot move a package into a {target.kind}")
        if new_parent_id in self.subtree_ids(entity_id):
            raise CyclicMove(f"cannot move {entity_id!r} into itself or a descendant")
        siblings = {c.name for c in target.children if c is not node}
        if node.name in siblings:
            raise DuplicateName(f"sibling named {node.name!r} already exists in {new_parent_id!r}")
        assert node.parent is not None
        node.parent.children.remove(node)
        node.parent = target
        target.children.append(node)

    def delete(self, entity_id: str) -> None:
        self.assert_live(entity_id)
        self.deleted_roots.add(entity_id)

    def link(self, link_id: str) -> _Link:
        try:
            return self.links[link_id]
        except KeyError:
            if link_id in self.nodes:
                raise InvalidTarget(f"{link_id!r} is not a communication link") from None
            raise UnknownEntity(f"no link with id {link_id!r}") from None

    def create_link(self, new_id: str, source_id: str, target_id: str, method_name: str) -> None:
        if source_id == target_id:
            raise SelfCommunication("communication endpoints must differ")
        for endpoint in (source_id, target_id):
            node = self.assert_live(endpoint)
            if node.kind != "class":
                raise InvalidTarget(f"communication endpoint {endpoint!r} is a {node.kind}")
        if not method_name:
            raise InvalidTarget("method name must be non-empty")
        for link in self.links.values():
            if (
                not link.cut
                and link.source == source_id
                and link.target == target_id
                and link.method == method_name
            ):
                raise DuplicateName(
                    f"live communication {source_id!r} -> {target_id!r} ({method_name!r}) already exists"
                )
        self.links[new_id] = _Link(new_id, source_id, target_id, method_name, count=1)

    def cut_link(self, link_id: str) -> None:
        link = self.link(link_id)
        if link.cut:
            raise EntityDeleted(f"link {link_id!r} is already cut")
        link.cut = True

    # -- fold --

    def apply_entry(self, entry: ChangelogEntry) -> None:
        op = entry.op
        if isinstance(op, CreateApplication):
            self._require_created_id(entry)
            self.create_application(entry.created_entity_id, op.name, op.language)
        elif isinstance(op, CreatePackage):
            self._require_created_id(entry)
            self.create_package(entry.created_entity_id, op.parent_id, op.name)
        elif isinstance(op, CreateClass):
            self._require_created_id(entry)
            self.create_class(entry.created_entity_id, op.parent_package_id, op.name)
        elif isinstance(op, RenameEntity):
            self.rename(op.entity_id, op.new_name)
        elif isinstance(op, MoveEntity):
            self.move(op.entity_id, op.new_parent_id)
        elif isinstance(op, DeleteEntity):
            self.delete(op.entity_id)
        elif isinstance(op, CreateCommunication):
            self._require_created_id(entry)
            self.create_link(
                entry.created_entity_id, op.source_class_id, op.target_class_id, op.method_name
            )
        elif isinstance(op, CutCommunication):
            self.cut_link(op.link_id)
        else:  # pragma: no cover
            raise InvalidTarget(f"unknown op type {type(op).__name__}")

    @staticmethod
    def _require_created_id(entry: ChangelogEntry) -> None:
        if not entry.created_entity_id:
            raise InvalidTarget(f"entry {entry.id} creates an entity but has no created id")

    # -- freeze --

    def freeze(self) -> tuple[Landscape, frozenset[str], frozenset[str]]:
        def freeze_pkg(node: _Node) -> Package:
            subs = tuple(freeze_pkg(c) for c in node.children if c.kind == "package")
            classes = tuple(
                Class(id=c.id, name=c.name, methods=c.methods, total_calls=c.total_calls)
                for c in node.children
                if c.kind == "class"
            )
            return Package(id=node.id, name=node.name, sub_packages=subs, classes=classes)

        apps = tuple(
            Application(
                id=a.id,
                name=a.name,
                language=a.language,
                root_packages=tuple(freeze_pkg(c) for c in a.children),
            )
            for a in self.apps
        )
        links = tuple(
            CommunicationLink(
                id=l.id, source_class_id=l.source, target_class_id=l.target,
                method_name=l.method, call_count=l.count,
            )
            for l in self.links.values()
        )
        deleted: set[str] = set()
        for root_id in self.deleted_roots:
            deleted |= self.subtree_ids(root_id)
        cut = frozenset(l.id for l in self.links.values() if l.cut)
        return Landscape(applications=apps, links=links), frozenset(deleted), cut


# -- effective model -----------------------------------------------------------

@dataclass(frozen=True)
class EffectiveModel:
    """fold(base, entries): the landscape with created entities present,
    renames/moves applied, deleted originals retained but flagged."""

    base: Landscape
    landscape: Landscape
    deleted_ids: frozenset[str]
    cut_link_ids: frozenset[str]
    marks: tuple[ModificationMark, ...]

    def index(self) -> LandscapeIndex:
        return LandscapeIndex(self.landscape)


def canonical_model_json(model: EffectiveModel) -> str:
    doc = {
        "landscape": mdl.landscape_to_dict(model.landscape),
        "deleted": sorted(model.deleted_ids),
        "cutLinks": sorted(model.cut_link_ids),
        "marks": [[m.entity_id, m.mark.value] for m in model.marks],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def _fold(base: Landscape, entries: Iterable[ChangelogEntry]) -> _City:
    city = _City(base)
    for entry in entries:
        city.apply_entry(entry)
    return city


def replay(base: Landscape, entries: Iterable[ChangelogEntry]) -> EffectiveModel:
    """Fold the ledger over the base landscape.

    Deterministic: equal inputs produce equal models. A ledger produced by
    apply_change/undo_entry always folds; anything else failing here is a
    bug or tampering, reported as CorruptLedger.
    """
    entries = tuple(entries)
    city = _City(base)
    for entry in entries:
        try:
            city.apply_entry(entry)
        except CityPlanError as exc:
            raise CorruptLedger(f"entry {entry.id} cannot apply: {exc}") from exc
    landscape, deleted, cut = city.freeze()
    return EffectiveModel(
        base=base,
        landscape=landscape,
        deleted_ids=deleted,
        cut_link_ids=cut,
        marks=marks_from_entries(entries),
    )


# -- cascade removal -----------------------------------------------------------

def _cascade_remove(
    entries: list[ChangelogEntry], seed_ids: set[int]
) -> tuple[list[ChangelogEntry], list[int]]:
    """Remove the seeds plus, transitively, every entry referencing an entity
    whose creating entry got removed. Returns (survivors, removed ids)."""
    removed = set(seed_ids)
    while True:
        vanished = {
            e.created_entity_id for e in entries if e.id in removed and e.created_entity_id
        }
        grown = {
            e.id
            for e in entries
            if e.id not in removed and op_references(e.op) & vanished
        }
        if not grown:
            break
        removed |= grown
    survivors = [e for e in entries if e.id not in removed]
    return survivors, sorted(removed)


# -- apply ---------------------------------------------------------------------

def apply_change(
    state: PlanState, op: ChangeOp, author: str
) -> tuple[PlanState, ChangeDiff]:
    """Validate an op against the current effective model and fold it into
    the ledger under rules R1-R7. Returns the new state and the ledger diff.

    Raises UnknownEntity, EntityDeleted, DuplicateName, CyclicMove,
    SelfCommunication, or InvalidTarget; the state is unchanged on error.
    """
    city = _fold(state.base, state.entries)
    entries = list(state.entries)
    created_by: dict[str, ChangelogEntry] = {
        e.created_entity_id: e for e in entries if e.created_entity_id
    }
    next_id = state.next_entry_id
    next_ordinal = state.next_entity_ordinal
    upserted: list[ChangelogEntry] = []
    removed_ids: list[int] = []

    def mutate(old: ChangelogEntry, new_op: ChangeOp) -> None:
        index = next(i for i, e in enumerate(entries) if e.id == old.id)
        mutated = replace(old, op=new_op)
        entries[index] = mutated
        upserted.append(mutated)

    if isinstance(op, _CREATE_OPS):
        _dry_run_create(city, op)
        created_id = f"new-{next_ordinal}"
        next_ordinal += 1
        entry = ChangelogEntry(id=next_id, op=op, author=author, created_entity_id=created_id)
        next_id += 1
        entries.append(entry)
        upserted.append(entry)

    elif isinstance(op, RenameEntity):
        city.rename(op.entity_id, op.new_name)  # validation on a scratch fold
        creator = created_by.get(op.entity_id)
        if creator is not None:
            mutate(creator, _rename_create_op(creator.op, op.new_name))
        else:
            prior = _last_matching(entries, RenameEntity, "entity_id", op.entity_id)
            if prior is not None:
                mutate(prior, op)
            else:
                entry = ChangelogEntry(id=next_id, op=op, author=author)
                next_id += 1
                entries.append(entry)
                upserted.append(entry)

    elif isinstance(op, MoveEntity):
        city.move(op.entity_id, op.new_parent_id)
        creator = created_by.get(op.entity_id)
        if creator is not None:
            mutate(creator, _reparent_create_op(creator.op, op.new_parent_id))
        else:
            prior = _last_matching(entries, MoveEntity, "entity_id", op.entity_id)
            if prior is not None:
                mutate(prior, op)
            else:
                entry = ChangelogEntry(id=next_id, op=op, author=author)
                next_id += 1
                entries.append(entry)
                upserted.append(entry)

    elif isinstance(op, DeleteEntity):
        city.assert_live(op.entity_id)
        subtree = city.subtree_ids(op.entity_id)
        creator = created_by.get(op.entity_id)
        if creator is not None:
            # R5: the entity vanishes entirely; anything that happened inside
            # it (including moves of originals into it) unhappens with it.
            seeds = {creator.id}
            seeds |= {e.id for e in entries if op_references(e.op) & subtree}
            entries, removed_ids = _cascade_remove(entries, seeds)
        else:
            # R7 applies to created incident links; base links get companions.
            index = LandscapeIndex(city.freeze()[0])
            incident = sorted(
                city.live_incident_links(subtree),
                key=lambda l: index.link_fqn(
                    CommunicationLink(l.id, l.source, l.target, l.method, l.count)
                ),
            )
            vanish_seeds = {
                created_by[l.id].id for l in incident if l.id in created_by
            }
            if vanish_seeds:
                entries, removed_ids = _cascade_remove(entries, vanish_seeds)
            base_links = [l for l in incident if l.id not in created_by]
            delete_id = next_id + len(base_links)
            group = delete_id if base_links else None
            for offset, link in enumerate(base_links):
                companion = ChangelogEntry(
                    id=next_id + offset,
                    op=CutCommunication(link_id=link.id),
                    author=author,
                    group_id=delete_id,
                )
                entries.append(companion)
                upserted.append(companion)
            delete_entry = ChangelogEntry(
                id=delete_id, op=op, author=author, group_id=group
            )
            entries.append(delete_entry)
            upserted.append(delete_entry)
            next_id = delete_id + 1

    elif isinstance(op, CutCommunication):
        city.cut_link(op.link_id)
        creator = created_by.get(op.link_id)
        if creator is not None:
            entries, removed_ids = _cascade_remove(entries, {creator.id})
        else:
            entry = ChangelogEntry(id=next_id, op=op, author=author)
            next_id += 1
            entries.append(entry)
            upserted.append(entry)

    else:  # pragma: no cover
        raise InvalidTarget(f"unknown op type {type(op).__name__}")

    candidate = PlanState(
        base=state.base,
        entries=tuple(entries),
        next_entry_id=next_id,
        next_entity_ordinal=next_ordinal,
    )
    # In-place coalescing rewrites history at the entry's original position;
    # refold so a positional conflict rejects the op instead of corrupting
    # the ledger (e.g. renaming a created entity into a name that was still
    # taken back when its Create entry folds).
    _fold(candidate.base, candidate.entries)
    return candidate, ChangeDiff(upserted=tuple(upserted), removed_ids=tuple(removed_ids))


def _dry_run_create(city: _City, op: ChangeOp) -> None:
    probe = "probe-create"
    if isinstance(op, CreateApplication):
        city.create_application(probe, op.name, op.language)
    elif isinstance(op, CreatePackage):
        city.create_package(probe, op.parent_id, op.name)
    elif isinstance(op, CreateClass):
        city.create_class(probe, op.parent_package_id, op.name)
    else:
        city.create_link(probe, op.source_class_id, op.target_class_id, op.method_name)


def _rename_create_op(create_op: ChangeOp, new_name: str) -> ChangeOp:
    return replace(create_op, name=new_name)


def _reparent_create_op(create_op: ChangeOp, new_parent_id: str) -> ChangeOp:
    if isinstance(create_op, CreatePackage):
        return replace(create_op, parent_id=new_parent_id)
    if isinstance(create_op, CreateClass):
        return replace(create_op, parent_package_id=new_parent_id)
    raise InvalidTarget("applications cannot be moved")  # pragma: no cover - move() rejects first


def _last_matching(entries, op_type, attr, value):
    found = None
    for entry in entries:
        if isinstance(entry.op, op_type) and getattr(entry.op, attr) == value:
            found = entry
    return found


# -- undo ------------------------------------------------------------------------

def undo_entry(state: PlanState, entry_id: int) -> tuple[PlanState, ChangeDiff]:
    """Remove an entry, its whole group, and transitively everything that
    referenced entities whose creation got removed; then trim until the
    remaining ledger folds cleanly. Remaining entries keep their ids.
    """
    by_id = {e.id: e for e in state.entries}
    if entry_id not in by_id:
        raise UnknownEntry(f"no changelog entry {entry_id}")
    target = by_id[entry_id]
    group = target.group_id if target.group_id is not None else target.id
    seeds = {e.id for e in state.entries if e.id == group or e.group_id == group}
    seeds.add(entry_id)
    entries, removed = _cascade_remove(list(state.entries), seeds)

    # Removing entries can strand later ones (a rename freed a name that a
    # later create took); trim to the largest prefix-consistent ledger.
    while True:
        try:
            _fold(state.base, entries)
            break
        except CityPlanError:
            for i, entry in enumerate(entries):
                try:
                    _fold(state.base, entries[: i + 1])
                except CityPlanError:
                    entries, extra = _cascade_remove(entries, {entry.id})
                    removed = sorted(set(removed) | set(extra))
                    break

    new_state = PlanState(
        base=state.base,
        entries=tuple(entries),
        next_entry_id=state.next_entry_id,
        next_entity_ordinal=state.next_entity_ordinal,
    )
    return new_state, ChangeDiff(upserted=(), removed_ids=tuple(removed))


# -- summaries --------------------------------------------------------------------

def _base_name(base: Landscape, entity_id: str) -> str | None:
    for ref in mdl.iter_entities(base):
        if ref.entity.id == entity_id:
            return ref.entity.name
    return None


def entry_summary(entry: ChangelogEntry, model: EffectiveModel) -> str:
    """Fixed English template per op kind; golden-stable."""
    index = model.index()
    op = entry.op

    def fqn(entity_id: str) -> str:
        return index.fqn(entity_id)

    def kind(entity_id: str) -> str:
        return index.resolve(entity_id).kind

    if isinstance(op, CreateApplication):
        return f"Created application `{op.name}`"
    if isinstance(op, CreatePackage):
        return f"Created package `{op.name}` in `{fqn(op.parent_id)}`"
    if isinstance(op, CreateClass):
        return f"Created class `{op.name}` in `{fqn(op.parent_package_id)}`"
    if isinstance(op, RenameEntity):
        old = _base_name(model.base, op.entity_id)
        if old is None:
            old = index.resolve(op.entity_id).entity.name
        return f"Renamed {kind(op.entity_id)} `{old}` to `{op.new_name}`"
    if isinstance(op, MoveEntity):
        name = index.resolve(op.entity_id).entity.name
        return f"Moved {kind(op.entity_id)} `{name}` to `{fqn(op.new_parent_id)}`"
    if isinstance(op, DeleteEntity):
        entity_kind = kind(op.entity_id)
        if entity_kind == "class":
            return f"Deleted class `{fqn(op.entity_id)}`"
        return f"Deleted {entity_kind} `{fqn(op.entity_id)}` and its contents"
    if isinstance(op, (CreateCommunication, CutCommunication)):
        link_id = entry.created_entity_id if isinstance(op, CreateCommunication) else op.link_id
        link = index.resolve(link_id).entity
        source = index.resolve(link.source_class_id).entity.name
        target = index.resolve(link.target_class_id).entity.name
        label = f"{source} → {target} ({link.method_name})"
        verb = "Created" if isinstance(op, CreateCommunication) else "Cut"
        return f"{verb} communication `{label}`"
    raise InvalidTarget(f"unknown op type {type(op).__name__}")  # pragma: no cover


# -- changelog export v1 ------------------------------------------------------------

def entry_to_dict(entry: ChangelogEntry, model: EffectiveModel) -> dict:
    doc = {
        "id": entry.id,
        "author": entry.author,
        "summary": entry_summary(entry, model),
        "op": op_to_dict(entry.op),
    }
    if entry.group_id is not None:
        doc["groupId"] = entry.group_id
    if entry.created_entity_id is not None:
        doc["createdEntityId"] = entry.created_entity_id
    return doc


def entry_from_dict(doc) -> ChangelogEntry:
    """Inverse of entry_to_dict for clients that rebuild ledgers from event
    documents; the summary field is display-only and ignored."""
    if not isinstance(doc, dict):
        raise SchemaViolation("changelog entry must be an object")
    entry_id = doc.get("id")
    if not isinstance(entry_id, int) or isinstance(entry_id, bool):
        raise SchemaViolation("changelog entry needs an integer id")
    author = doc.get("author")
    if not isinstance(author, str):
        raise SchemaViolation("changelog entry needs an author string")
    group_id = doc.get("groupId")
    if group_id is not None and (not isinstance(group_id, int) or isinstance(group_id, bool)):
        raise SchemaViolation("groupId must be an integer")
    created = doc.get("createdEntityId")
    if created is not None and not isinstance(created, str):
        raise SchemaViolation("createdEntityId must be a string")
    return ChangelogEntry(
        id=entry_id,
        op=op_from_dict(doc.get("op")),
        author=author,
        group_id=group_id,
        created_entity_id=created,
    )


def changelog_document(state: PlanState, model: EffectiveModel | None = None) -> dict:
    model = model if model is not None else replay(state.base, state.entries)
    return {"version": 1, "entries": [entry_to_dict(e, model) for e in state.entries]}


def serialize_changelog(state: PlanState) -> str:
    return json.dumps(changelog_document(state), indent=2) + "\n"


# -- op-script v1 ---------------------------------------------------------------------

def parse_op_script(document: bytes | str) -> list[tuple[str, ChangeOp]]:
    """Parse op-script v1: ordered (author, op) pairs for scripted replays."""
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    try:
        payload = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"op script is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("version") != 1:
        raise SchemaViolation("unsupported op-script version")
    if not isinstance(payload.get("ops"), list):
        raise SchemaViolation("op script needs an ops array")
    steps = []
    for raw in payload["ops"]:
        if not isinstance(raw, dict):
            raise SchemaViolation("op-script step must be an object")
        author = raw.get("author", "planner")
        if not isinstance(author, str) or not author:
            raise SchemaViolation("op-script author must be a non-empty string")
        op_doc = {k: v for k, v in raw.items() if k != "author"}
        steps.append((author, op_from_dict(op_doc)))
    return steps
