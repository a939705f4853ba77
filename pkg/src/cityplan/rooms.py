"""Room engine: membership, selection colors, ordered event broadcast.

Pure state transitions; no transport. The server module owns sockets and
calls in here under a per-room lock, so arrival order is the total order.
Every broadcast event carries a per-room monotone ``seq``; rejections go to
the sender only and do not bump the sequence.
"""

from __future__ import annotations

import random
import string
from dataclasses import dataclass, field

from . import model as mdl
from .errors import (
    CityPlanError,
    MalformedMessage,
    NotMember,
    SchemaViolation,
    UnknownEntity,
    UnknownRoom,
)
from .model import Landscape
from .restructure import (
    EffectiveModel,
    ModificationMark,
    PlanState,
    apply_change,
    entry_to_dict,
    fresh_state,
    op_from_dict,
    replay,
    undo_entry,
)

PALETTE = (
    "#e6194b",
    "#3cb44b",
    "#4363d8",
    "#f58231",
    "#911eb4",
    "#46f0f0",
    "#f032e6",
    "#bcf60c",
)

_ROOM_ALPHABET = string.ascii_lowercase + string.digits


@dataclass
class RoomUser:
    user_id: str
    name: str
    color: str


@dataclass
class Room:
    room_id: str
    plan: PlanState
    users: dict[str, RoomUser] = field(default_factory=dict)
    selections: dict[str, str | None] = field(default_factory=dict)
    event_seq: int = 0
    join_count: int = 0

    def model(self) -> EffectiveModel:
        return replay(self.plan.base, self.plan.entries)


@dataclass(frozen=True)
class Outbound:
    """One event document and the member ids it goes to."""

    to: tuple[str, ...]
    doc: dict


def create_room(base: Landscape, rng: random.Random | None = None) -> Room:
    plan = fresh_state(base)
    rng = rng if rng is not None else random.Random()
    room_id = "".join(rng.choice(_ROOM_ALPHABET) for _ in range(8))
    return Room(room_id=room_id, plan=plan)


def _marks_doc(marks: tuple[ModificationMark, ...]) -> list[list[str]]:
    return [[m.entity_id, m.mark.value] for m in marks]


def _entry_docs(plan: PlanState, model: EffectiveModel) -> list[dict]:
    return [entry_to_dict(e, model) for e in plan.entries]


def snapshot_doc(room: Room) -> dict:
    model = room.model()
    return {
        "landscape": mdl.landscape_to_dict(room.plan.base),
        "entries": _entry_docs(room.plan, model),
        "marks": _marks_doc(model.marks),
        "users": [
            {"userId": u.user_id, "name": u.name, "color": u.color}
            for u in room.users.values()
        ],
        "selections": dict(room.selections),
    }


def join(room: Room, display_name: str) -> tuple[str, dict, list[Outbound]]:
    """Admit a user. Returns (userId, welcome doc for the joiner, events
    for the existing members)."""
    others = tuple(room.users)
    room.join_count += 1
    user_id = f"u{room.join_count}"
    color = PALETTE[(room.join_count - 1) % len(PALETTE)]
    room.users[user_id] = RoomUser(user_id=user_id, name=display_name, color=color)
    room.selections[user_id] = None
    room.event_seq += 1
    joined = {
        "type": "user_joined",
        "seq": room.event_seq,
        "user": {"userId": user_id, "name": display_name, "color": color},
    }
    welcome = {
        "type": "welcome",
        "seq": room.event_seq,
        "roomId": room.room_id,
        "userId": user_id,
        "color": color,
        **snapshot_doc(room),
    }
    events = [Outbound(others, joined)] if others else []
    return user_id, welcome, events


def leave(room: Room, user_id: str) -> list[Outbound]:
    """Drop a member; their selection is gone with them (the user_left
    event implies it, no separate selection event)."""
    if user_id not in room.users:
        raise NotMember(f"user {user_id!r} is not in room {room.room_id!r}")
    del room.users[user_id]
    room.selections.pop(user_id, None)
    remaining = tuple(room.users)
    room.event_seq += 1
    doc = {"type": "user_left", "seq": room.event_seq, "userId": user_id}
    return [Outbound(remaining, doc)] if remaining else []


def handle_message(room: Room, user_id: str, message) -> list[Outbound]:
    """Apply one client message in arrival order.

    Domain failures become a rejected event for the sender only (seq
    unchanged); protocol-shape violations raise MalformedMessage; a message
    from a non-member raises NotMember.
    """
    if user_id not in room.users:
        raise NotMember(f"user {user_id!r} is not in room {room.room_id!r}")
    if not isinstance(message, dict):
        raise MalformedMessage("message must be an object")
    kind = message.get("type")

    if kind == "op":
        try:
            op = op_from_dict(message.get("op"))
        except SchemaViolation as exc:
            raise MalformedMessage(str(exc)) from exc
        author = room.users[user_id].name
        try:
            new_plan, diff = apply_change(room.plan, op, author)
        except CityPlanError as exc:
            return [_rejected(user_id, exc)]
        return _commit(room, new_plan, diff.removed_ids)

    if kind == "undo":
        entry_id = message.get("entryId")
        if not isinstance(entry_id, int) or isinstance(entry_id, bool):
            raise MalformedMessage("undo needs an integer entryId")
        try:
            new_plan, diff = undo_entry(room.plan, entry_id)
        except CityPlanError as exc:
            return [_rejected(user_id, exc)]
        return _commit(room, new_plan, diff.removed_ids)

    if kind == "select":
        if "entityId" not in message:
            raise MalformedMessage("select needs entityId (id or null)")
        entity_id = message["entityId"]
        if entity_id is not None and not isinstance(entity_id, str):
            raise MalformedMessage("entityId must be a string or null")
        if entity_id is not None and entity_id not in room.model().index():
            return [_rejected(user_id, UnknownEntity(f"no entity with id {entity_id!r}"))]
        room.selections[user_id] = entity_id
        room.event_seq += 1
        doc = {
            "type": "selection",
            "seq": room.event_seq,
            "userId": user_id,
            "entityId": entity_id,
        }
        return [Outbound(tuple(room.users), doc)]

    raise MalformedMessage(f"unknown message type {kind!r}")


def _rejected(user_id: str, exc: CityPlanError) -> Outbound:
    return Outbound((user_id,), {"type": "rejected", "reason": exc.kind, "detail": str(exc)})


def _commit(room: Room, new_plan: PlanState, removed_ids: tuple[int, ...]) -> list[Outbound]:
    # addedEntries carries every entry whose export doc changed, not just the
    # directly touched ones: a rename can shift the fqn inside another
    # entry's summary, and clients replace entries by id.
    old_model = room.model()
    old_docs = {e.id: entry_to_dict(e, old_model) for e in room.plan.entries}
    new_model = replay(new_plan.base, new_plan.entries)
    added = []
    for entry in new_plan.entries:
        doc = entry_to_dict(entry, new_model)
        if old_docs.get(entry.id) != doc:
            added.append(doc)
    room.plan = new_plan
    room.event_seq += 1
    applied = {
        "type": "applied",
        "seq": room.event_seq,
        "addedEntries": added,
        "removedEntryIds": list(removed_ids),
        "marks": _marks_doc(new_model.marks),
    }
    events = [Outbound(tuple(room.users), applied)]

    # An apply can vanish entities (R5/R7, undo cascades); stale selections
    # are cleared for everyone, in member order, each with its own seq.
    index = new_model.index()
    for member_id in room.users:
        selected = room.selections.get(member_id)
        if selected is not None and selected not in index:
            room.selections[member_id] = None
            room.event_seq += 1
            events.append(
                Outbound(
                    tuple(room.users),
                    {
                        "type": "selection",
                        "seq": room.event_seq,
                        "userId": member_id,
                        "entityId": None,
                    },
                )
            )
    return events


class RoomRegistry:
    """Rooms by id; the transport layer holds one of these."""

    def __init__(self, rng: random.Random | None = None):
        self._rooms: dict[str, Room] = {}
        self._rng = rng if rng is not None else random.Random()

    def create(self, base: Landscape) -> Room:
        while True:
            room = create_room(base, self._rng)
            if room.room_id not in self._rooms:
                self._rooms[room.room_id] = room
                return room

    def get(self, room_id: str) -> Room:
        try:
            return self._rooms[room_id]
        except KeyError:
            raise UnknownRoom(f"no room {room_id!r}") from None

    def ids(self) -> list[str]:
        return sorted(self._rooms)
