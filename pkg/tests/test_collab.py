"""Room protocol: join/leave, ordered broadcasts, rejection, convergence."""
import json
import random
import re

import pytest

import helpers
from cityplan.errors import InvalidModel, MalformedMessage, NotMember, UnknownRoom
from cityplan.model import Landscape, landscape_to_dict
from cityplan.restructure import (
    PlanState,
    canonical_model_json,
    entry_from_dict,
    replay,
)
from cityplan.rooms import (
    PALETTE,
    RoomRegistry,
    create_room,
    handle_message,
    join,
    leave,
)
from helpers import CART, CART_ORDER_LINK, HELPER, ORDER, SHOP_PKG, UTIL_PKG


def _op(op_doc):
    return {"type": "op", "op": op_doc}


def _rename(entity_id, new_name):
    return _op({"kind": "RenameEntity", "entityId": entity_id, "newName": new_name})


def _delete(entity_id):
    return _op({"kind": "DeleteEntity", "entityId": entity_id})


@pytest.fixture
def room(shop):
    return create_room(shop, random.Random(1))


@pytest.fixture
def trio(room):
    """Room with three members; returns (room, [u1, u2, u3])."""
    users = [join(room, name)[0] for name in ("ann", "ben", "cal")]
    return room, users


# -- rooms and membership --------------------------------------------------------

def test_room_id_shape(shop):
    rng = random.Random(7)
    for _ in range(20):
        assert re.fullmatch(r"[a-z0-9]{8}", create_room(shop, rng).room_id)


def test_create_room_rejects_invalid_base():
    from cityplan.model import Application

    twin = Landscape(applications=(
        Application(id="a", name="x", language="j", root_packages=()),
        Application(id="a", name="y", language="j", root_packages=()),
    ))
    with pytest.raises(InvalidModel):
        create_room(twin)


def test_join_assigns_sequential_ids_and_palette(room):
    seen = []
    for i in range(9):
        user_id, welcome, _ = join(room, f"user{i}")
        seen.append((user_id, welcome["color"]))
    assert seen[0] == ("u1", PALETTE[0])
    assert seen[1] == ("u2", PALETTE[1])
    assert seen[8] == ("u9", PALETTE[0])  # palette wraps after 8


def test_rejoin_keeps_counting(room):
    user_id, _, _ = join(room, "ann")
    leave(room, user_id)
    again, welcome, _ = join(room, "ann")
    assert again == "u2"
    assert welcome["color"] == PALETTE[1]


def test_welcome_shape(room, shop):
    user_id, welcome, events = join(room, "ann")
    assert events == []  # nobody else to notify
    assert welcome["type"] == "welcome"
    assert welcome["seq"] == 1
    assert welcome["roomId"] == room.room_id
    assert welcome["userId"] == user_id == "u1"
    assert welcome["color"] == PALETTE[0]
    assert welcome["landscape"] == landscape_to_dict(shop)
    assert welcome["entries"] == []
    assert welcome["marks"] == []
    assert welcome["users"] == [{"userId": "u1", "name": "ann", "color": PALETTE[0]}]
    assert welcome["selections"] == {"u1": None}


def test_welcome_reflects_room_history(room):
    u1, _, _ = join(room, "ann")
    handle_message(room, u1, _rename(CART, "Basket"))
    handle_message(room, u1, {"type": "select", "entityId": CART})
    u2, welcome, _ = join(room, "ben")
    assert [e["op"]["newName"] for e in welcome["entries"]] == ["Basket"]
    assert welcome["marks"] == [[CART, "pencil"]]
    assert welcome["selections"] == {"u1": CART, "u2": None}
    assert [u["userId"] for u in welcome["users"]] == ["u1", "u2"]


def test_user_joined_goes_to_others_only(trio):
    room, (u1, u2, u3) = trio
    _, _, events = join(room, "dee")
    assert len(events) == 1
    assert set(events[0].to) == {u1, u2, u3}
    assert events[0].doc["type"] == "user_joined"
    assert events[0].doc["user"]["userId"] == "u4"


def test_leave_broadcasts_user_left(trio):
    room, (u1, u2, u3) = trio
    seq_before = room.event_seq
    events = leave(room, u2)
    assert len(events) == 1
    assert set(events[0].to) == {u1, u3}
    assert events[0].doc == {"type": "user_left", "seq": seq_before + 1, "userId": u2}
    assert u2 not in room.users and u2 not in room.selections


def test_leave_of_stranger_raises(room):
    join(room, "ann")
    with pytest.raises(NotMember):
        leave(room, "u9")


def test_message_from_stranger_raises(room):
    join(room, "ann")
    with pytest.raises(NotMember):
        handle_message(room, "u9", _rename(CART, "X"))


# -- ops, undo, rejection -----------------------------------------------------------

def test_applied_goes_to_everyone_including_sender(trio):
    room, users = trio
    events = handle_message(room, users[0], _rename(CART, "Basket"))
    assert len(events) == 1
    applied = events[0]
    assert set(applied.to) == set(users)
    assert applied.doc["type"] == "applied"
    assert applied.doc["seq"] == 4  # three joins happened first
    assert applied.doc["removedEntryIds"] == []
    assert applied.doc["marks"] == [[CART, "pencil"]]
    (entry,) = applied.doc["addedEntries"]
    assert entry["op"]["newName"] == "Basket"
    assert entry["author"] == "ann"  # display name, not user id


def test_rejected_goes_to_sender_only_without_seq(trio):
    room, users = trio
    seq_before = room.event_seq
    events = handle_message(room, users[1], _rename(CART, "Order"))
    assert len(events) == 1
    rejected = events[0]
    assert rejected.to == (users[1],)
    assert rejected.doc["type"] == "rejected"
    assert rejected.doc["reason"] == "DuplicateName"
    assert rejected.doc["detail"]
    assert "seq" not in rejected.doc
    assert room.event_seq == seq_before
    assert room.plan.entries == ()


def test_undo_flow(trio):
    room, users = trio
    handle_message(room, users[0], _rename(CART, "Basket"))
    events = handle_message(room, users[1], {"type": "undo", "entryId": 1})
    assert events[0].doc["type"] == "applied"
    assert events[0].doc["removedEntryIds"] == [1]
    assert events[0].doc["addedEntries"] == []
    assert room.plan.entries == ()


def test_undo_unknown_entry_rejected(trio):
    room, users = trio
    events = handle_message(room, users[0], {"type": "undo", "entryId": 42})
    assert events[0].doc["reason"] == "UnknownEntry"
    assert events[0].to == (users[0],)


def test_coalesced_apply_reports_upsert_not_append(trio):
    room, users = trio
    handle_message(room, users[0], _rename(CART, "Basket"))
    events = handle_message(room, users[1], _rename(CART, "Trolley"))
    (entry,) = events[0].doc["addedEntries"]
    assert entry["id"] == 1  # same entry, rewritten in place
    assert entry["op"]["newName"] == "Trolley"
    assert entry["author"] == "ann"  # original author survives the rewrite


def test_summary_refresh_rides_applied(trio):
    # moving Helper changes the fqn inside the earlier entry's summary, so
    # that entry is re-sent even though the op does not touch it
    room, users = trio
    handle_message(room, users[0], _op(
        {"kind": "CreateClass", "parentPackageId": UTIL_PKG, "name": "Aide"}))
    events = handle_message(room, users[1], _rename(UTIL_PKG, "helpers"))
    docs = events[0].doc["addedEntries"]
    assert [d["id"] for d in docs] == [1, 2]
    assert "helpers" in docs[0]["summary"]


def test_delete_emits_group_entries_and_clears_stale_selection(trio):
    room, users = trio
    handle_message(room, users[2], {"type": "select", "entityId": CART_ORDER_LINK})
    seq_before = room.event_seq
    events = handle_message(room, users[0], _delete(CART))
    applied = events[0].doc
    assert applied["seq"] == seq_before + 1
    assert [d["op"]["kind"] for d in applied["addedEntries"]] == [
        "CutCommunication", "DeleteEntity"]
    # deleted entities stay selectable (they are still rendered); the cut
    # link also survives in the landscape, so no stale-selection clear
    assert len(events) == 1


def test_vanished_entity_clears_selections_in_member_order(trio):
    room, users = trio
    events = handle_message(room, users[0], _op(
        {"kind": "CreateClass", "parentPackageId": SHOP_PKG, "name": "Temp"}))
    created = events[0].doc["addedEntries"][0]["createdEntityId"]
    handle_message(room, users[1], {"type": "select", "entityId": created})
    handle_message(room, users[2], {"type": "select", "entityId": created})
    seq_before = room.event_seq
    events = handle_message(room, users[0], _delete(created))
    assert [e.doc["type"] for e in events] == ["applied", "selection", "selection"]
    assert [e.doc["seq"] for e in events] == [seq_before + 1, seq_before + 2, seq_before + 3]
    assert [e.doc.get("userId") for e in events[1:]] == [users[1], users[2]]
    assert all(e.doc["entityId"] is None for e in events[1:])
    assert all(set(e.to) == set(users) for e in events)


# -- select -----------------------------------------------------------------------

def test_select_and_clear(trio):
    room, users = trio
    events = handle_message(room, users[0], {"type": "select", "entityId": HELPER})
    doc = events[0].doc
    assert doc == {"type": "selection", "seq": 4, "userId": users[0], "entityId": HELPER}
    assert set(events[0].to) == set(users)
    events = handle_message(room, users[0], {"type": "select", "entityId": None})
    assert events[0].doc["entityId"] is None
    assert room.selections[users[0]] is None


def test_select_unknown_entity_rejected(trio):
    room, users = trio
    seq_before = room.event_seq
    events = handle_message(room, users[0], {"type": "select", "entityId": "ghost"})
    assert events[0].doc["reason"] == "UnknownEntity"
    assert room.event_seq == seq_before


def test_select_of_created_entity_allowed(trio):
    room, users = trio
    events = handle_message(room, users[0], _op(
        {"kind": "CreatePackage", "parentId": SHOP_PKG, "name": "api"}))
    created = events[0].doc["addedEntries"][0]["createdEntityId"]
    events = handle_message(room, users[1], {"type": "select", "entityId": created})
    assert events[0].doc["entityId"] == created


# -- malformed messages --------------------------------------------------------------

def test_malformed_messages_raise(trio):
    room, users = trio
    bad = [
        "nope",
        {"type": "op", "op": {"kind": "Nope"}},
        {"type": "op", "op": "x"},
        {"type": "undo"},
        {"type": "undo", "entryId": "1"},
        {"type": "undo", "entryId": True},
        {"type": "select"},
        {"type": "select", "entityId": 5},
        {"type": "mystery"},
        {},
    ]
    for message in bad:
        with pytest.raises(MalformedMessage):
            handle_message(room, users[0], message)
    assert room.event_seq == 3  # nothing leaked into the sequence


# -- registry -------------------------------------------------------------------------

def test_registry_create_get_ids(shop):
    registry = RoomRegistry(random.Random(3))
    one = registry.create(shop)
    two = registry.create(shop)
    assert one.room_id != two.room_id
    assert registry.get(one.room_id) is one
    assert registry.ids() == sorted([one.room_id, two.room_id])
    with pytest.raises(UnknownRoom):
        registry.get("missing0")


# -- convergence ----------------------------------------------------------------------

class _Client:
    """Pure protocol client: rebuilds its model only from event documents."""

    def __init__(self, welcome):
        self.base = _landscape_from_doc(welcome["landscape"])
        self.entries = {e["id"]: e for e in welcome["entries"]}
        self.seq = welcome["seq"]
        self.seqs_seen = [welcome["seq"]]

    def on_event(self, doc):
        assert doc["seq"] == self.seq + 1, "gap or reorder in the event stream"
        self.seq = doc["seq"]
        self.seqs_seen.append(doc["seq"])
        if doc["type"] == "applied":
            for entry_id in doc["removedEntryIds"]:
                self.entries.pop(entry_id, None)
            for entry_doc in doc["addedEntries"]:
                self.entries[entry_doc["id"]] = entry_doc

    def canonical(self) -> str:
        docs = [self.entries[k] for k in sorted(self.entries)]
        model = replay(self.base, tuple(entry_from_dict(d) for d in docs))
        return canonical_model_json(model)


def _landscape_from_doc(doc):
    from cityplan.ingest import parse_landscape

    return parse_landscape(json.dumps(doc))


def _deliver(events, clients):
    for event in events:
        for user_id in event.to:
            if event.doc["type"] != "rejected":
                clients[user_id].on_event(event.doc)


def test_three_clients_converge(mini_landscape):
    rng = random.Random(1234)
    room = create_room(mini_landscape, rng)
    clients = {}
    for name in ("ann", "ben", "cal"):
        user_id, welcome, events = join(room, name)
        _deliver(events, clients)
        clients[user_id] = _Client(welcome)

    rejected = 0
    for _ in range(220):
        sender = rng.choice(list(clients))
        model = room.model()
        op = helpers.random_op(rng, model)
        from cityplan.restructure import op_to_dict

        seq_before = room.event_seq
        events = handle_message(room, sender, _op(op_to_dict(op)))
        if events and events[0].doc["type"] == "rejected":
            rejected += 1
            assert room.event_seq == seq_before
        _deliver(events, clients)

    server_canonical = canonical_model_json(room.model())
    for client in clients.values():
        assert client.canonical() == server_canonical
    # same changelog on every client, byte for byte
    changelogs = {json.dumps(sorted(c.entries.items()), sort_keys=True) for c in clients.values()}
    assert len(changelogs) == 1
    assert rejected > 0  # the walk must exercise the rejection path
    for client in clients.values():
        assert client.seqs_seen == sorted(set(client.seqs_seen))
