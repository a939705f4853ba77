"""Builders and randomized generators shared across the test modules."""

from __future__ import annotations

import itertools
import json
import random
from pathlib import Path

from cityplan import ingest
from cityplan.model import (
    Application,
    Class,
    CommunicationLink,
    Landscape,
    Method,
    Package,
)
from cityplan.restructure import (
    ChangeOp,
    CreateClass,
    CreateCommunication,
    CreatePackage,
    CutCommunication,
    DeleteEntity,
    EffectiveModel,
    MoveEntity,
    RenameEntity,
)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

_hash_counter = itertools.count(1)


def load_mini_landscape() -> Landscape:
    return ingest.parse_landscape((FIXTURES / "petclinic-mini.landscape.json").read_bytes())


def shop_landscape() -> Landscape:
    """One app "shop" with org.shop{Cart, Order} + org.shop.util{Helper} and
    a Cart -> Order (create) link; matches the summary goldens."""
    doc = {
        "version": 1,
        "applications": [
            {
                "name": "shop",
                "language": "java",
                "packages": [
                    {
                        "name": "org",
                        "subPackages": [
                            {
                                "name": "shop",
                                "subPackages": [
                                    {
                                        "name": "util",
                                        "subPackages": [],
                                        "classes": [
                                            {
                                                "name": "Helper",
                                                "methods": [{"name": "assist", "hash": "h-helper"}],
                                            }
                                        ],
                                    }
                                ],
                                "classes": [
                                    {
                                        "name": "Cart",
                                        "methods": [
                                            {"name": "checkout", "hash": "h-cart-checkout"},
                                            {"name": "addItem", "hash": "h-cart-add"},
                                        ],
                                    },
                                    {
                                        "name": "Order",
                                        "methods": [{"name": "create", "hash": "h-order-create"}],
                                    },
                                ],
                            }
                        ],
                        "classes": [],
                    }
                ],
            }
        ],
    }
    structure = ingest.parse_structure(json.dumps(doc))
    link = CommunicationLink(
        id="base-link:shop/org.shop.Cart->shop/org.shop.Order:create",
        source_class_id="base-shop/org.shop.Cart",
        target_class_id="base-shop/org.shop.Order",
        method_name="create",
        call_count=2,
    )
    return ingest.annotate_metrics(structure, [link])


CART = "base-shop/org.shop.Cart"
ORDER = "base-shop/org.shop.Order"
HELPER = "base-shop/org.shop.util.Helper"
SHOP_PKG = "base-shop/org.shop"
UTIL_PKG = "base-shop/org.shop.util"
ORG_PKG = "base-shop/org"
SHOP_APP = "base-shop"
CART_ORDER_LINK = "base-link:shop/org.shop.Cart->shop/org.shop.Order:create"


# -- randomized landscapes ------------------------------------------------------

def random_landscape(
    rng: random.Random,
    max_classes: int = 40,
    max_depth: int = 4,
    with_links: bool = True,
) -> Landscape:
    """Valid landscape with randomized shape; ids are unique by counter."""
    counter = itertools.count(1)
    classes_budget = [rng.randint(1, max_classes)]
    all_classes: list[str] = []

    def make_class(prefix: str, ordinal: int) -> Class:
        methods = tuple(
            Method(name=f"m{i}", hash=f"h{next(_hash_counter)}")
            for i in range(rng.randint(0, 6))
        )
        cls = Class(
            id=f"{prefix}.C{ordinal}",
            name=f"C{ordinal}",
            methods=methods,
            total_calls=rng.randint(0, 200),
        )
        all_classes.append(cls.id)
        return cls

    def make_package(prefix: str, ordinal: int, depth: int) -> Package:
        pkg_id = f"{prefix}.p{ordinal}" if "/" in prefix else f"{prefix}/p{ordinal}"
        n_classes = 0
        if classes_budget[0] > 0:
            n_classes = rng.randint(0, min(4, classes_budget[0]))
            classes_budget[0] -= n_classes
        classes = tuple(make_class(pkg_id, i) for i in range(n_classes))
        subs = ()
        if depth < max_depth and classes_budget[0] > 0 and rng.random() < 0.7:
            subs = tuple(
                make_package(pkg_id, i, depth + 1) for i in range(rng.randint(1, 3))
            )
        return Package(id=pkg_id, name=pkg_id.rsplit(".", 1)[-1].rsplit("/", 1)[-1],
                       sub_packages=subs, classes=classes)

    apps = []
    for a in range(rng.randint(1, 3)):
        app_id = f"app{next(counter)}"
        roots = tuple(
            make_package(app_id, i, 1) for i in range(rng.randint(1, 2))
        )
        apps.append(
            Application(id=app_id, name=app_id, language="java", root_packages=roots)
        )

    links: list[CommunicationLink] = []
    if with_links and len(all_classes) >= 2:
        seen: set[tuple[str, str, str]] = set()
        for i in range(rng.randint(0, min(10, len(all_classes)))):
            source, target = rng.sample(all_classes, 2)
            method = f"call{i}"
            if (source, target, method) in seen:
                continue
            seen.add((source, target, method))
            links.append(
                CommunicationLink(
                    id=f"L{i}",
                    source_class_id=source,
                    target_class_id=target,
                    method_name=method,
                    call_count=rng.randint(1, 9),
                )
            )
    return Landscape(applications=tuple(apps), links=tuple(links))


# -- randomized change ops -------------------------------------------------------

def random_op(rng: random.Random, model: EffectiveModel) -> ChangeOp:
    """A plausible op against the current model; may still be rejected
    (deleted targets, duplicate names), which callers treat as a normal
    outcome."""
    packages: list[str] = []
    classes: list[str] = []
    apps: list[str] = []
    for app in model.landscape.applications:
        apps.append(app.id)
        stack = list(app.root_packages)
        while stack:
            pkg = stack.pop()
            packages.append(pkg.id)
            classes.extend(c.id for c in pkg.classes)
            stack.extend(pkg.sub_packages)
    links = [l.id for l in model.landscape.links if l.id not in model.cut_link_ids]
    movable = packages + classes
    entities = apps + movable

    roll = rng.random()
    if roll < 0.20 and packages:
        return CreateClass(
            parent_package_id=rng.choice(packages), name=f"K{rng.randrange(10_000)}"
        )
    if roll < 0.32:
        parent = rng.choice(apps + packages)
        return CreatePackage(parent_id=parent, name=f"q{rng.randrange(10_000)}")
    if roll < 0.52 and entities:
        return RenameEntity(
            entity_id=rng.choice(entities), new_name=f"R{rng.randrange(10_000)}"
        )
    if roll < 0.70 and movable and packages:
        return MoveEntity(
            entity_id=rng.choice(movable), new_parent_id=rng.choice(packages + apps)
        )
    if roll < 0.80 and entities:
        return DeleteEntity(entity_id=rng.choice(entities))
    if roll < 0.92 and len(classes) >= 2:
        source, target = rng.sample(classes, 2)
        return CreateCommunication(
            source_class_id=source, target_class_id=target,
            method_name=f"call{rng.randrange(100)}",
        )
    if links:
        return CutCommunication(link_id=rng.choice(links))
    return CreatePackage(parent_id=rng.choice(apps), name=f"q{rng.randrange(10_000)}")
