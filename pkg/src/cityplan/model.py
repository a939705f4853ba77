"""Immutable landscape model: applications, package trees, classes, links.

The landscape is the subject of every other module. It is a plain value:
all collections are tuples, "mutation" means building a new value. Entity
identity is an opaque non-empty string id that stays stable across renames
and moves; fully-qualified names are always derived by joining simple names,
never stored.

fqn grammar:
    application  ->  "shop"
    package      ->  "shop/org.store"          (app name, "/", dot-joined packages)
    class        ->  "shop/org.store.Cart"
    link         ->  "<source fqn> -> <target fqn> (<methodName>)"
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .errors import UnknownEntity

EntityId = str


@dataclass(frozen=True)
class Method:
    name: str
    hash: str


@dataclass(frozen=True)
class Class:
    id: EntityId
    name: str
    methods: tuple[Method, ...] = ()
    total_calls: int = 0


@dataclass(frozen=True)
class Package:
    id: EntityId
    name: str
    sub_packages: tuple["Package", ...] = ()
    classes: tuple[Class, ...] = ()


@dataclass(frozen=True)
class Application:
    id: EntityId
    name: str
    language: str
    root_packages: tuple[Package, ...] = ()


@dataclass(frozen=True)
class CommunicationLink:
    id: EntityId
    source_class_id: EntityId
    target_class_id: EntityId
    method_name: str
    call_count: int


@dataclass(frozen=True)
class Landscape:
    applications: tuple[Application, ...] = ()
    links: tuple[CommunicationLink, ...] = ()


@dataclass(frozen=True)
class Violation:
    """One invariant violation found by validate_landscape."""

    entity_id: EntityId
    reason: str


@dataclass(frozen=True)
class EntityRef:
    """Resolved entity: kind, the node itself, and its name chain.

    ``path`` is the chain of simple names from the application root down to
    the entity; empty for links, which live outside the tree.
    """

    kind: str  # application | package | class | link
    entity: object
    path: tuple[str, ...] = ()

    @property
    def fqn(self) -> str:
        if self.kind == "link":
            # needs both endpoints resolved; see LandscapeIndex.link_fqn
            raise ValueError("link fqn requires a LandscapeIndex")
        if len(self.path) == 1:
            return self.path[0]
        return f"{self.path[0]}/" + ".".join(self.path[1:])


def _walk_packages(pkg: Package, prefix: tuple[str, ...]) -> Iterator[tuple[Package, tuple[str, ...]]]:
    path = prefix + (pkg.name,)
    yield pkg, path
    for sub in pkg.sub_packages:
        yield from _walk_packages(sub, path)


def iter_entities(landscape: Landscape) -> Iterator[EntityRef]:
    """Yield every tree entity (applications, packages, classes) with its path."""
    for app in landscape.applications:
        yield EntityRef("application", app, (app.name,))
        for root in app.root_packages:
            for pkg, path in _walk_packages(root, (app.name,)):
                yield EntityRef("package", pkg, path)
                for cls in pkg.classes:
                    yield EntityRef("class", cls, path + (cls.name,))


class LandscapeIndex:
    """Id -> EntityRef lookup built from one traversal.

    Landscapes are immutable, so an index never goes stale. Link refs are
    included; their fqn names both endpoints and the method label.
    """

    def __init__(self, landscape: Landscape):
        self.landscape = landscape
        self._refs: dict[EntityId, EntityRef] = {}
        for ref in iter_entities(landscape):
            self._refs[ref.entity.id] = ref
        for link in landscape.links:
            self._refs[link.id] = EntityRef("link", link, ())

    def resolve(self, entity_id: EntityId) -> EntityRef:
        try:
            return self._refs[entity_id]
        except KeyError:
            raise UnknownEntity(f"no entity with id {entity_id!r}") from None

    def __contains__(self, entity_id: EntityId) -> bool:
        return entity_id in self._refs

    def ids(self) -> set[EntityId]:
        return set(self._refs)

    def fqn(self, entity_id: EntityId) -> str:
        ref = self.resolve(entity_id)
        if ref.kind == "link":
            return self.link_fqn(ref.entity)
        return ref.fqn

    def link_fqn(self, link: CommunicationLink) -> str:
        src = self.resolve(link.source_class_id).fqn
        tgt = self.resolve(link.target_class_id).fqn
        return f"{src} -> {tgt} ({link.method_name})"


def resolve(landscape: Landscape, entity_id: EntityId) -> EntityRef:
    """Resolve an id to its kind and ancestor chain.

    Raises UnknownEntity when the id matches nothing. Builds a throwaway
    index; callers resolving repeatedly should hold a LandscapeIndex.
    """
    return LandscapeIndex(landscape).resolve(entity_id)


def _simple_name_ok(name: str) -> bool:
    return bool(name) and "." not in name


def validate_landscape(landscape: Landscape) -> list[Violation]:
    """Check every model invariant; an empty report means the landscape is valid.

    Violations are data, not errors: callers that require validity wrap a
    non-empty report in InvalidModel themselves.
    """
    report: list[Violation] = []
    seen_ids: set[EntityId] = set()
    seen_hashes: dict[str, EntityId] = {}
    class_ids: set[EntityId] = set()

    def check_id(entity_id: EntityId) -> None:
        if not entity_id:
            report.append(Violation(entity_id, "empty entity id"))
        elif entity_id in seen_ids:
            report.append(Violation(entity_id, "duplicate entity id"))
        seen_ids.add(entity_id)

    app_names: set[str] = set()
    for app in landscape.applications:
        check_id(app.id)
        if not app.name:
            report.append(Violation(app.id, "empty name"))
        if app.name in app_names:
            report.append(Violation(app.id, "duplicate application name"))
        app_names.add(app.name)
        _validate_siblings(app.id, app.root_packages, (), report)
        for root in app.root_packages:
            _validate_package(root, report, check_id, seen_hashes, class_ids)

    for link in landscape.links:
        check_id(link.id)
        if link.source_class_id not in class_ids:
            report.append(Violation(link.id, "dangling link source"))
        if link.target_class_id not in class_ids:
            report.append(Violation(link.id, "dangling link target"))
        if link.source_class_id == link.target_class_id:
            report.append(Violation(link.id, "self link"))
        if link.call_count < 1:
            report.append(Violation(link.id, "invalid call count"))

    return report


def _validate_siblings(parent_id, packages, classes, report) -> None:
    names: set[str] = set()
    for child in list(packages) + list(classes):
        if child.name in names:
            report.append(Violation(child.id, "duplicate sibling name"))
        names.add(child.name)


def _validate_package(pkg: Package, report, check_id, seen_hashes, class_ids) -> None:
    check_id(pkg.id)
    if not _simple_name_ok(pkg.name):
        report.append(Violation(pkg.id, "invalid name"))
    _validate_siblings(pkg.id, pkg.sub_packages, pkg.classes, report)
    for cls in pkg.classes:
        check_id(cls.id)
        class_ids.add(cls.id)
        if not _simple_name_ok(cls.name):
            report.append(Violation(cls.id, "invalid name"))
        if cls.total_calls < 0:
            report.append(Violation(cls.id, "negative total calls"))
        method_names: set[str] = set()
        for method in cls.methods:
            if method.name in method_names:
                report.append(Violation(cls.id, "duplicate method name"))
            method_names.add(method.name)
            if method.hash in seen_hashes:
                report.append(Violation(cls.id, "duplicate method hash"))
            seen_hashes[method.hash] = cls.id
    for sub in pkg.sub_packages:
        _validate_package(sub, report, check_id, seen_hashes, class_ids)


# -- canonical serialization -------------------------------------------------
#
# Canonical dict form doubles as the landscape-file v1 payload and as the
# byte-exact equality witness used by the acceptance suite.

def method_to_dict(method: Method) -> dict:
    return {"name": method.name, "hash": method.hash}


def class_to_dict(cls: Class) -> dict:
    return {
        "id": cls.id,
        "name": cls.name,
        "totalCalls": cls.total_calls,
        "methods": [method_to_dict(m) for m in cls.methods],
    }


def package_to_dict(pkg: Package) -> dict:
    return {
        "id": pkg.id,
        "name": pkg.name,
        "subPackages": [package_to_dict(p) for p in pkg.sub_packages],
        "classes": [class_to_dict(c) for c in pkg.classes],
    }


def landscape_to_dict(landscape: Landscape) -> dict:
    return {
        "version": 1,
        "applications": [
            {
                "id": app.id,
                "name": app.name,
                "language": app.language,
                "packages": [package_to_dict(p) for p in app.root_packages],
            }
            for app in landscape.applications
        ],
        "links": [
            {
                "id": link.id,
                "sourceClassId": link.source_class_id,
                "targetClassId": link.target_class_id,
                "methodName": link.method_name,
                "callCount": link.call_count,
            }
            for link in landscape.links
        ],
    }


def canonical_landscape_json(landscape: Landscape) -> str:
    """Stable byte representation; equal landscapes serialize identically."""
    import json

    return json.dumps(landscape_to_dict(landscape), sort_keys=True, separators=(",", ":"))
