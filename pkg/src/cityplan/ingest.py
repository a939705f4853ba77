"""Parsing and aggregation of structure documents and trace exports.

Three file formats live here (see docs/formats.md for the frozen schemas):

* structure-file v1 - the nested application/package/class/method document
  produced by an instrumentation exporter. Carries no ids; ids are minted
  deterministically as ``base-<fqn>`` so the same document always yields the
  same landscape.
* trace-file v1 - flat span lists from a dynamic-analysis run.
* landscape-file v1 - the annotated landscape (ids, metrics, links) that the
  ``ingest`` CLI command writes and every downstream command reads.

Aggregation turns parent->child span pairs into class-level communication
links; a span whose methodHash matches nothing is skipped, never guessed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

from . import model
from .errors import DanglingLink, InvalidModel, MalformedDocument, SchemaViolation
from .model import (
    Application,
    Class,
    CommunicationLink,
    Landscape,
    LandscapeIndex,
    Method,
    Package,
    validate_landscape,
)


@dataclass(frozen=True)
class Span:
    trace_id: str
    span_id: str
    parent_span_id: str | None
    method_hash: str
    start_nanos: int
    end_nanos: int


@dataclass(frozen=True)
class TraceSet:
    spans: tuple[Span, ...] = ()


@dataclass(frozen=True)
class AggregationResult:
    """Links plus the skip counters the caller may want to surface."""

    links: tuple[CommunicationLink, ...]
    skipped_unresolved: int = 0
    skipped_orphans: int = 0
    dropped_self_calls: int = 0


def _require(obj: dict, key: str, types, where: str):
    if key not in obj:
        raise SchemaViolation(f"missing field {key!r} in {where}")
    value = obj[key]
    if not isinstance(value, types) or isinstance(value, bool):
        raise SchemaViolation(f"field {key!r} in {where} has wrong type")
    return value


def _reject_extras(obj: dict, allowed: set[str], where: str) -> None:
    extras = set(obj) - allowed
    if extras:
        raise SchemaViolation(f"unexpected field {sorted(extras)[0]!r} in {where}")


def _load_json(document: bytes | str, what: str) -> dict:
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedDocument(f"{what} is not valid UTF-8: {exc}") from exc
    try:
        payload = json.loads(document)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"{what} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise SchemaViolation(f"{what} top level must be an object")
    return payload


# -- structure-file v1 -------------------------------------------------------

def parse_structure(document: bytes | str) -> Landscape:
    """Parse a structure-file v1 document into a validated Landscape.

    Ids are minted as ``base-<fqn>``. Sibling order is preserved exactly as
    written. Raises MalformedDocument, SchemaViolation, or InvalidModel.
    """
    payload = _load_json(document, "structure document")
    _reject_extras(payload, {"version", "applications"}, "structure document")
    version = _require(payload, "version", int, "structure document")
    if version != 1:
        raise SchemaViolation(f"unsupported structure-file version {version}")
    apps_raw = _require(payload, "applications", list, "structure document")

    applications = []
    for app_raw in apps_raw:
        if not isinstance(app_raw, dict):
            raise SchemaViolation("application must be an object")
        _reject_extras(app_raw, {"name", "language", "packages"}, "application")
        name = _require(app_raw, "name", str, "application")
        language = _require(app_raw, "language", str, "application")
        pkgs_raw = _require(app_raw, "packages", list, "application")
        roots = tuple(_parse_package(p, (name,)) for p in pkgs_raw)
        applications.append(
            Application(id=f"base-{name}", name=name, language=language, root_packages=roots)
        )

    landscape = Landscape(applications=tuple(applications))
    report = validate_landscape(landscape)
    if report:
        raise InvalidModel(
            "; ".join(f"{v.entity_id}: {v.reason}" for v in report), report=report
        )
    return landscape


def _fqn(path: tuple[str, ...]) -> str:
    return f"{path[0]}/" + ".".join(path[1:])


def _parse_package(raw, prefix: tuple[str, ...]) -> Package:
    if not isinstance(raw, dict):
        raise SchemaViolation("package must be an object")
    _reject_extras(raw, {"name", "subPackages", "classes"}, "package")
    name = _require(raw, "name", str, "package")
    path = prefix + (name,)
    subs = tuple(_parse_package(p, path) for p in _require(raw, "subPackages", list, "package"))
    classes = tuple(_parse_class(c, path) for c in _require(raw, "classes", list, "package"))
    return Package(id=f"base-{_fqn(path)}", name=name, sub_packages=subs, classes=classes)


def _parse_class(raw, prefix: tuple[str, ...]) -> Class:
    if not isinstance(raw, dict):
        raise SchemaViolation("class must be an object")
    _reject_extras(raw, {"name", "methods"}, "class")
    name = _require(raw, "name", str, "class")
    methods = []
    for m in _require(raw, "methods", list, "class"):
        if not isinstance(m, dict):
            raise SchemaViolation("method must be an object")
        _reject_extras(m, {"name", "hash"}, "method")
        methods.append(
            Method(name=_require(m, "name", str, "method"), hash=_require(m, "hash", str, "method"))
        )
    return Class(id=f"base-{_fqn(prefix + (name,))}", name=name, methods=tuple(methods))


def serialize_structure(landscape: Landscape) -> str:
    """Write a landscape back out as structure-file v1 (ids and metrics drop away)."""

    def pkg(p: Package) -> dict:
        return {
            "name": p.name,
            "subPackages": [pkg(s) for s in p.sub_packages],
            "classes": [
                {"name": c.name, "methods": [{"name": m.name, "hash": m.hash} for m in c.methods]}
                for c in p.classes
            ],
        }

    doc = {
        "version": 1,
        "applications": [
            {"name": a.name, "language": a.language, "packages": [pkg(p) for p in a.root_packages]}
            for a in landscape.applications
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


# -- trace-file v1 -----------------------------------------------------------

def parse_traces(document: bytes | str) -> TraceSet:
    """Parse a trace-file v1 document. Span invariants are enforced here."""
    payload = _load_json(document, "trace document")
    _reject_extras(payload, {"version", "spans"}, "trace document")
    version = _require(payload, "version", int, "trace document")
    if version != 1:
        raise SchemaViolation(f"unsupported trace-file version {version}")
    spans = []
    seen: set[tuple[str, str]] = set()
    for raw in _require(payload, "spans", list, "trace document"):
        if not isinstance(raw, dict):
            raise SchemaViolation("span must be an object")
        _reject_extras(
            raw,
            {"traceId", "spanId", "parentSpanId", "methodHash", "startNanos", "endNanos"},
            "span",
        )
        span = Span(
            trace_id=_require(raw, "traceId", str, "span"),
            span_id=_require(raw, "spanId", str, "span"),
            parent_span_id=_require(raw, "parentSpanId", str, "span") if "parentSpanId" in raw else None,
            method_hash=_require(raw, "methodHash", str, "span"),
            start_nanos=_require(raw, "startNanos", int, "span"),
            end_nanos=_require(raw, "endNanos", int, "span"),
        )
        if span.end_nanos < span.start_nanos:
            raise SchemaViolation(f"span {span.span_id!r} ends before it starts")
        key = (span.trace_id, span.span_id)
        if key in seen:
            raise SchemaViolation(f"duplicate span id {span.span_id!r} in trace {span.trace_id!r}")
        seen.add(key)
        spans.append(span)
    return TraceSet(spans=tuple(spans))


def serialize_traces(traces: TraceSet) -> str:
    spans = []
    for s in traces.spans:
        doc = {
            "traceId": s.trace_id,
            "spanId": s.span_id,
            "methodHash": s.method_hash,
            "startNanos": s.start_nanos,
            "endNanos": s.end_nanos,
        }
        if s.parent_span_id is not None:
            doc["parentSpanId"] = s.parent_span_id
        spans.append(doc)
    return json.dumps({"version": 1, "spans": spans}, indent=2) + "\n"


# -- aggregation -------------------------------------------------------------

def method_owner_index(landscape: Landscape) -> dict[str, tuple[Class, str]]:
    """methodHash -> (owning class, method name) over the whole landscape."""
    owners: dict[str, tuple[Class, str]] = {}
    for ref in model.iter_entities(landscape):
        if ref.kind != "class":
            continue
        for method in ref.entity.methods:
            owners[method.hash] = (ref.entity, method.name)
    return owners


def aggregate_traces(traces: TraceSet, landscape: Landscape) -> AggregationResult:
    """Fold parent->child span pairs into class-level communication links.

    One link per (source class, target class, child method name) triple;
    callCount is the number of contributing pairs. Output is sorted by
    (source fqn, target fqn, method name) so aggregation is independent of
    span order. Link ids are minted from the sorted triple.
    """
    index = LandscapeIndex(landscape)
    owners = method_owner_index(landscape)
    by_id = {(s.trace_id, s.span_id): s for s in traces.spans}

    skipped_unresolved = sum(1 for s in traces.spans if s.method_hash not in owners)
    skipped_orphans = 0
    dropped_self = 0
    counts: dict[tuple[str, str, str], int] = {}
    for span in traces.spans:
        if span.parent_span_id is None:
            continue  # root spans have no known caller
        parent = by_id.get((span.trace_id, span.parent_span_id))
        if parent is None:
            skipped_orphans += 1
            continue
        child_owner = owners.get(span.method_hash)
        parent_owner = owners.get(parent.method_hash)
        if child_owner is None or parent_owner is None:
            continue  # already counted in skipped_unresolved
        source_cls, _ = parent_owner
        target_cls, method_name = child_owner
        if source_cls.id == target_cls.id:
            dropped_self += 1
            continue
        counts[(source_cls.id, target_cls.id, method_name)] = (
            counts.get((source_cls.id, target_cls.id, method_name), 0) + 1
        )

    def sort_key(item):
        (src, tgt, method), _ = item
        return (index.resolve(src).fqn, index.resolve(tgt).fqn, method)

    links = []
    for (src, tgt, method), count in sorted(counts.items(), key=sort_key):
        link_id = f"base-link:{index.resolve(src).fqn}->{index.resolve(tgt).fqn}:{method}"
        links.append(
            CommunicationLink(
                id=link_id,
                source_class_id=src,
                target_class_id=tgt,
                method_name=method,
                call_count=count,
            )
        )
    return AggregationResult(
        links=tuple(links),
        skipped_unresolved=skipped_unresolved,
        skipped_orphans=skipped_orphans,
        dropped_self_calls=dropped_self,
    )


def annotate_metrics(landscape: Landscape, links: Iterable[CommunicationLink]) -> Landscape:
    """Attach links to the landscape and set each class's totalCalls to the
    sum of callCounts over links where the class is source or target.
    """
    links = tuple(links)
    index = LandscapeIndex(landscape)
    incident: dict[str, int] = {}
    for link in links:
        for endpoint in (link.source_class_id, link.target_class_id):
            if endpoint not in index:
                raise DanglingLink(f"link {link.id!r} endpoint {endpoint!r} does not resolve")
            incident[endpoint] = incident.get(endpoint, 0) + link.call_count

    def rewrite_class(cls: Class) -> Class:
        return Class(
            id=cls.id, name=cls.name, methods=cls.methods, total_calls=incident.get(cls.id, 0)
        )

    def rewrite_pkg(pkg: Package) -> Package:
        return Package(
            id=pkg.id,
            name=pkg.name,
            sub_packages=tuple(rewrite_pkg(p) for p in pkg.sub_packages),
            classes=tuple(rewrite_class(c) for c in pkg.classes),
        )

    apps = tuple(
        Application(
            id=a.id,
            name=a.name,
            language=a.language,
            root_packages=tuple(rewrite_pkg(p) for p in a.root_packages),
        )
        for a in landscape.applications
    )
    return Landscape(applications=apps, links=links)


# -- landscape-file v1 (annotated output) ------------------------------------

def serialize_landscape(landscape: Landscape) -> str:
    return json.dumps(model.landscape_to_dict(landscape), indent=2) + "\n"


def parse_landscape(document: bytes | str) -> Landscape:
    """Parse landscape-file v1 (the annotated form with ids, metrics, links)."""
    payload = _load_json(document, "landscape document")
    _reject_extras(payload, {"version", "applications", "links"}, "landscape document")
    version = _require(payload, "version", int, "landscape document")
    if version != 1:
        raise SchemaViolation(f"unsupported landscape-file version {version}")

    def parse_cls(raw) -> Class:
        if not isinstance(raw, dict):
            raise SchemaViolation("class must be an object")
        _reject_extras(raw, {"id", "name", "totalCalls", "methods"}, "class")
        methods = []
        for m in _require(raw, "methods", list, "class"):
            if not isinstance(m, dict):
                raise SchemaViolation("method must be an object")
            _reject_extras(m, {"name", "hash"}, "method")
            methods.append(Method(_require(m, "name", str, "method"), _require(m, "hash", str, "method")))
        return Class(
            id=_require(raw, "id", str, "class"),
            name=_require(raw, "name", str, "class"),
            methods=tuple(methods),
            total_calls=_require(raw, "totalCalls", int, "class"),
        )

    def parse_pkg(raw) -> Package:
        if not isinstance(raw, dict):
            raise SchemaViolation("package must be an object")
        _reject_extras(raw, {"id", "name", "subPackages", "classes"}, "package")
        return Package(
            id=_require(raw, "id", str, "package"),
            name=_require(raw, "name", str, "package"),
            sub_packages=tuple(parse_pkg(p) for p in _require(raw, "subPackages", list, "package")),
            classes=tuple(parse_cls(c) for c in _require(raw, "classes", list, "package")),
        )

    apps = []
    for raw in _require(payload, "applications", list, "landscape document"):
        if not isinstance(raw, dict):
            raise SchemaViolation("application must be an object")
        _reject_extras(raw, {"id", "name", "language", "packages"}, "application")
        apps.append(
            Application(
                id=_require(raw, "id", str, "application"),
                name=_require(raw, "name", str, "application"),
                language=_require(raw, "language", str, "application"),
                root_packages=tuple(
                    parse_pkg(p) for p in _require(raw, "packages", list, "application")
                ),
            )
        )
    links = []
    for raw in _require(payload, "links", list, "landscape document"):
        if not isinstance(raw, dict):
            raise SchemaViolation("link must be an object")
        _reject_extras(
            raw, {"id", "sourceClassId", "targetClassId", "methodName", "callCount"}, "link"
        )
        links.append(
            CommunicationLink(
                id=_require(raw, "id", str, "link"),
                source_class_id=_require(raw, "sourceClassId", str, "link"),
                target_class_id=_require(raw, "targetClassId", str, "link"),
                method_name=_require(raw, "methodName", str, "link"),
                call_count=_require(raw, "callCount", int, "link"),
            )
        )

    landscape = Landscape(applications=tuple(apps), links=tuple(links))
    report = validate_landscape(landscape)
    if report:
        raise InvalidModel(
            "; ".join(f"{v.entity_id}: {v.reason}" for v in report), report=report
        )
    return landscape
