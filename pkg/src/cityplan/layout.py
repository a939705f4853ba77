"""Deterministic 3D city layout.

Packages become stacked slabs (districts), classes become buildings whose
footprint tracks method count and whose height tracks aggregated calls.
Applications line up alphabetically along x. The whole computation is pure
and canonical: sibling order in the input is irrelevant (packing sorts),
float output is serialized with fixed 4-decimal formatting, and the layout
hash is a sha256 over that canonical form, so identical inputs hash
identically on every platform.

Packing is plain shelf packing against a near-square target width. Optimal
rectangle packing buys nothing here; verifiability and determinism do.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

from .errors import InvalidModel, MalformedDocument, SchemaViolation
from .model import Class, Landscape, validate_landscape


@dataclass(frozen=True)
class LayoutConfig:
    margin: float = 0.5        # gap between siblings on a shelf
    padding: float = 1.0       # inset between a parent's edge and its children
    slab_height: float = 0.5   # y-extent of every district slab
    app_gap: float = 5.0       # x gap between application bounding boxes
    min_side: float = 1.0      # smallest building footprint side

    def __post_init__(self):
        for name in ("margin", "padding", "slab_height", "app_gap", "min_side"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


DEFAULT_CONFIG = LayoutConfig()


@dataclass(frozen=True)
class Box3D:
    """Axis-aligned box; (x, y, z) is the min corner."""

    x: float
    y: float
    z: float
    width: float
    height: float
    depth: float

    @property
    def top_center(self) -> tuple[float, float, float]:
        return (self.x + self.width / 2, self.y + self.height, self.z + self.depth / 2)


@dataclass(frozen=True)
class CityLayout:
    boxes: dict[str, Box3D]
    link_endpoints: dict[str, tuple[tuple[float, float, float], tuple[float, float, float]]]
    hash: str


def building_dimensions(cls: Class, config: LayoutConfig = DEFAULT_CONFIG) -> tuple[float, float]:
    """Footprint side and height for one class.

    side  = max(minSide, sqrt(1 + methodCount))
    height = 1 + log2(1 + totalCalls)

    Freshly planned classes (no methods, no calls) get the smallest legal
    building, 1 x 1 x 1.
    """
    side = max(config.min_side, math.sqrt(1 + len(cls.methods)))
    height = 1.0 + math.log2(1 + cls.total_calls)
    return side, height


def pack_children(
    children: list[tuple[str, float, float]], config: LayoutConfig = DEFAULT_CONFIG
) -> tuple[dict[str, tuple[float, float]], float, float]:
    """Shelf-pack (id, width, depth) footprints into a near-square region.

    Children are sorted by footprint area descending (ties by id) so the
    result is independent of input order. Returns per-id (x, z) offsets
    relative to the packed region's min corner plus the region's extents.
    """
    m = config.margin
    if not children:
        return {}, config.min_side, config.min_side

    ordered = sorted(children, key=lambda c: (-(c[1] * c[2]), c[0]))
    target_width = math.ceil(math.sqrt(sum((w + m) * (d + m) for _, w, d in ordered)))

    placements: dict[str, tuple[float, float]] = {}
    cursor_x = 0.0
    z_cursor = 0.0
    shelf_depth = 0.0
    shelf_sizes: list[tuple[float, float]] = []  # (used width, depth) per closed shelf
    for child_id, w, d in ordered:
        lead = m if cursor_x > 0 else 0.0
        if cursor_x > 0 and cursor_x + lead + w > target_width:
            shelf_sizes.append((cursor_x, shelf_depth))
            z_cursor += shelf_depth + m
            cursor_x = 0.0
            shelf_depth = 0.0
            lead = 0.0
        placements[child_id] = (cursor_x + lead, z_cursor)
        cursor_x += lead + w
        shelf_depth = max(shelf_depth, d)
    shelf_sizes.append((cursor_x, shelf_depth))

    inner_width = max(width for width, _ in shelf_sizes)
    inner_depth = sum(depth for _, depth in shelf_sizes) + m * (len(shelf_sizes) - 1)
    return placements, inner_width, inner_depth


@dataclass
class _Sized:
    width: float
    depth: float
    placements: dict[str, tuple[float, float]] = field(default_factory=dict)


def layout_landscape(landscape: Landscape, config: LayoutConfig = DEFAULT_CONFIG) -> CityLayout:
    """Compute boxes for every entity and endpoints for every link.

    Stacking rule: the application slab sits at nesting depth 0, a package at
    depth d spans y in [slabHeight*d, slabHeight*(d+1)], and buildings stand
    on their package's top face.
    """
    report = validate_landscape(landscape)
    if report:
        raise InvalidModel(
            "; ".join(f"{v.entity_id}: {v.reason}" for v in report), report=report
        )

    p = config.padding
    sizes: dict[str, _Sized] = {}
    building: dict[str, tuple[float, float]] = {}

    def measure_package(pkg) -> _Sized:
        children: list[tuple[str, float, float]] = []
        for sub in pkg.sub_packages:
            sized = measure_package(sub)
            children.append((sub.id, sized.width, sized.depth))
        for cls in pkg.classes:
            side, height = building_dimensions(cls, config)
            building[cls.id] = (side, height)
            children.append((cls.id, side, side))
        placements, inner_w, inner_d = pack_children(children, config)
        sized = _Sized(inner_w + 2 * p, inner_d + 2 * p, placements)
        sizes[pkg.id] = sized
        return sized

    for app in landscape.applications:
        children = []
        for root in app.root_packages:
            sized = measure_package(root)
            children.append((root.id, sized.width, sized.depth))
        placements, inner_w, inner_d = pack_children(children, config)
        sizes[app.id] = _Sized(inner_w + 2 * p, inner_d + 2 * p, placements)

    boxes: dict[str, Box3D] = {}

    def place_package(pkg, origin_x: float, origin_z: float, depth_level: int) -> None:
        sized = sizes[pkg.id]
        boxes[pkg.id] = Box3D(
            x=origin_x,
            y=config.slab_height * depth_level,
            z=origin_z,
            width=sized.width,
            height=config.slab_height,
            depth=sized.depth,
        )
        for sub in pkg.sub_packages:
            rel_x, rel_z = sized.placements[sub.id]
            place_package(sub, origin_x + p + rel_x, origin_z + p + rel_z, depth_level + 1)
        for cls in pkg.classes:
            rel_x, rel_z = sized.placements[cls.id]
            side, height = building[cls.id]
            boxes[cls.id] = Box3D(
                x=origin_x + p + rel_x,
                y=config.slab_height * (depth_level + 1),
                z=origin_z + p + rel_z,
                width=side,
                height=height,
                depth=side,
            )

    app_x = 0.0
    for app in sorted(landscape.applications, key=lambda a: a.name):
        sized = sizes[app.id]
        boxes[app.id] = Box3D(
            x=app_x, y=0.0, z=0.0, width=sized.width, height=config.slab_height, depth=sized.depth
        )
        for root in app.root_packages:
            rel_x, rel_z = sized.placements[root.id]
            place_package(root, app_x + p + rel_x, p + rel_z, 1)
        app_x += sized.width + config.app_gap

    link_endpoints = {
        link.id: (boxes[link.source_class_id].top_center, boxes[link.target_class_id].top_center)
        for link in landscape.links
    }
    return CityLayout(boxes=boxes, link_endpoints=link_endpoints, hash=layout_hash(boxes))


# -- canonical serialization and layout-file v1 -------------------------------

def _fmt(value: float) -> str:
    text = f"{value:.4f}"
    return "0.0000" if text == "-0.0000" else text


def _box_json(box: Box3D) -> str:
    return (
        '{"x":%s,"y":%s,"z":%s,"width":%s,"height":%s,"depth":%s}'
        % (_fmt(box.x), _fmt(box.y), _fmt(box.z), _fmt(box.width), _fmt(box.height), _fmt(box.depth))
    )


def canonical_boxes(boxes: dict[str, Box3D]) -> str:
    """Boxes sorted by id, numbers pinned to 4 decimals; the hash input."""
    entries = ",".join(f"{json.dumps(bid)}:{_box_json(box)}" for bid, box in sorted(boxes.items()))
    return "{" + entries + "}"


def layout_hash(boxes: dict[str, Box3D]) -> str:
    return hashlib.sha256(canonical_boxes(boxes).encode("utf-8")).hexdigest()


def serialize_layout(layout: CityLayout) -> str:
    """Emit layout-file v1; hand-rolled so numbers stay fixed to 4 decimals."""

    def point(pt: tuple[float, float, float]) -> str:
        return "[%s,%s,%s]" % (_fmt(pt[0]), _fmt(pt[1]), _fmt(pt[2]))

    links = ",".join(
        '%s:{"from":%s,"to":%s}' % (json.dumps(lid), point(src), point(tgt))
        for lid, (src, tgt) in sorted(layout.link_endpoints.items())
    )
    return (
        '{"version":1,"hash":%s,"boxes":%s,"links":{%s}}\n'
        % (json.dumps(layout.hash), canonical_boxes(layout.boxes), links)
    )


def parse_layout(document: bytes | str) -> CityLayout:
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    try:
        payload = json.loads(document)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"layout document is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("version") != 1:
        raise SchemaViolation("unsupported layout-file version")
    boxes = {
        bid: Box3D(b["x"], b["y"], b["z"], b["width"], b["height"], b["depth"])
        for bid, b in payload.get("boxes", {}).items()
    }
    links = {
        lid: (tuple(entry["from"]), tuple(entry["to"]))
        for lid, entry in payload.get("links", {}).items()
    }
    return CityLayout(boxes=boxes, link_endpoints=links, hash=payload.get("hash", ""))
