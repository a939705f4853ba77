#!/usr/bin/env python3
"""Record a two-user room session as a JSON transcript for the UI tests.

The transcript is everything the first user's browser would see: the
welcome document, the ordered event frames that followed, the layout of
the final effective model, and a summary of the expected end state. The
frontend replays the frames through its projection and must reproduce
exactly this scene. Regenerate with:

    python3 scripts/make_transcript.py
"""

import json
import random
from pathlib import Path

from cityplan import ingest
from cityplan.layout import layout_landscape, serialize_layout
from cityplan.rooms import create_room, handle_message, join

ROOT = Path(__file__).resolve().parent.parent

CUSTOMERS_PKG = "base-customers-service/org.petclinic.customers"
CUSTOMER_CONTROLLER = f"{CUSTOMERS_PKG}.CustomerController"
VISIT_REPOSITORY = "base-visits-service/org.petclinic.visits.VisitRepository"
VISIT_CONTROLLER = "base-visits-service/org.petclinic.visits.VisitController"
INSERT_LINK = (
    "base-link:visits-service/org.petclinic.visits.VisitController"
    "->visits-service/org.petclinic.visits.VisitRepository:insert"
)


def main() -> None:
    base = ingest.parse_landscape(
        (ROOT / "fixtures" / "petclinic-mini.landscape.json").read_bytes()
    )
    room = create_room(base, random.Random(11))
    ann, welcome, _ = join(room, "ann")

    events: list[dict] = []

    def record(outbound) -> None:
        for event in outbound:
            if ann in event.to:
                events.append(event.doc)

    ben, _, out = join(room, "ben")
    record(out)

    def send(user: str, doc: dict) -> None:
        record(handle_message(room, user, doc))

    send(ann, {"type": "op", "op": {
        "kind": "CreateClass", "parentPackageId": CUSTOMERS_PKG, "name": "CustomerValidator",
    }})
    send(ben, {"type": "op", "op": {
        "kind": "RenameEntity", "entityId": VISIT_REPOSITORY, "newName": "VisitStore",
    }})
    send(ben, {"type": "select", "entityId": "new-1"})
    send(ann, {"type": "op", "op": {"kind": "CutCommunication", "linkId": INSERT_LINK}})
    send(ann, {"type": "select", "entityId": CUSTOMER_CONTROLLER})
    send(ben, {"type": "op", "op": {"kind": "DeleteEntity", "entityId": VISIT_CONTROLLER}})

    model = room.model()
    layout_doc = json.loads(serialize_layout(layout_landscape(model.landscape)))
    expected = {
        "seq": room.event_seq,
        "entryIds": [entry.id for entry in room.plan.entries],
        "createdEntityId": "new-1",
        "collaborator": {"userId": ben, "color": room.users[ben].color},
        "marks": [[m.entity_id, m.mark.value] for m in model.marks],
        "selections": dict(room.selections),
        "layoutHash": layout_doc["hash"],
    }
    transcript = {
        "welcome": welcome,
        "events": events,
        "layout": layout_doc,
        "expected": expected,
    }

    out_path = ROOT / "frontend" / "test" / "fixtures" / "transcript.json"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(transcript, indent=2) + "\n", encoding="utf-8")
    print(out_path)


if __name__ == "__main__":
    main()
