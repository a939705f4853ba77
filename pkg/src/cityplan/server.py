"""HTTP/WebSocket transport for the room engine.

One asyncio lock per room serializes message handling, which makes arrival
order the room's total order. The GitLab token stays server-side: browsers
talk to POST /issues, never to GitLab.
"""

from __future__ import annotations

import asyncio
import json
import random

from fastapi import FastAPI, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, Response

from . import ingest, rooms
from .errors import (
    AuthFailed,
    CityPlanError,
    MalformedMessage,
    ProjectNotFound,
    RemoteError,
    SchemaViolation,
    TransportError,
    UnknownRoom,
)
from .issues import GitLabTarget, parse_draft, publish, render_markdown
from .layout import layout_landscape, serialize_layout
from .model import Landscape
from .restructure import changelog_document

_GATEWAY_ERRORS = (AuthFailed, ProjectNotFound, RemoteError, TransportError)


class _Hub:
    def __init__(self, registry: rooms.RoomRegistry):
        self.registry = registry
        self._locks: dict[str, asyncio.Lock] = {}
        self.sockets: dict[str, dict[str, WebSocket]] = {}

    def lock(self, room_id: str) -> asyncio.Lock:
        return self._locks.setdefault(room_id, asyncio.Lock())

    async def deliver(self, room_id: str, events: list[rooms.Outbound]) -> None:
        members = self.sockets.get(room_id, {})
        for event in events:
            payload = json.dumps(event.doc)
            for user_id in event.to:
                socket = members.get(user_id)
                if socket is None:
                    continue
                try:
                    await socket.send_text(payload)
                except Exception:
                    # a dying socket is cleaned up by its own handler
                    pass


def _error_response(exc: CityPlanError) -> JSONResponse:
    if isinstance(exc, (UnknownRoom, ProjectNotFound)):
        status = 404
    elif isinstance(exc, _GATEWAY_ERRORS):
        status = 502
    else:
        status = 400
    return JSONResponse(
        status_code=status, content={"error": exc.kind, "detail": str(exc)}
    )


def _rejected_frame(reason: str, detail: str) -> str:
    return json.dumps({"type": "rejected", "reason": reason, "detail": detail})


def create_app(
    base_landscape: Landscape | None = None,
    registry: rooms.RoomRegistry | None = None,
    gitlab: GitLabTarget | None = None,
    publisher=publish,
    rng: random.Random | None = None,
) -> FastAPI:
    """Build the application. ``base_landscape`` backs POST /rooms bodies
    that omit a landscape; ``publisher`` is injectable for tests."""
    registry = registry if registry is not None else rooms.RoomRegistry(rng)
    hub = _Hub(registry)
    app = FastAPI(title="cityplan", docs_url=None, redoc_url=None)
    app.state.hub = hub

    @app.post("/rooms")
    async def create_room(request: Request):
        raw = await request.body()
        try:
            if raw:
                try:
                    doc = json.loads(raw)
                except json.JSONDecodeError as exc:
                    raise SchemaViolation(f"body is not valid JSON: {exc}") from exc
                if not isinstance(doc, dict):
                    raise SchemaViolation("body must be an object")
                if "landscape" in doc:
                    landscape = ingest.parse_landscape(json.dumps(doc["landscape"]))
                elif base_landscape is not None:
                    landscape = base_landscape
                else:
                    raise SchemaViolation("body needs a landscape field")
            elif base_landscape is not None:
                landscape = base_landscape
            else:
                raise SchemaViolation("body needs a landscape field")
            room = registry.create(landscape)
        except CityPlanError as exc:
            return _error_response(exc)
        return {"roomId": room.room_id}

    @app.get("/rooms/{room_id}/layout")
    async def room_layout(room_id: str):
        try:
            room = registry.get(room_id)
            async with hub.lock(room_id):
                layout = layout_landscape(room.model().landscape)
        except CityPlanError as exc:
            return _error_response(exc)
        return Response(content=serialize_layout(layout), media_type="application/json")

    @app.get("/rooms/{room_id}/changelog")
    async def room_changelog(room_id: str):
        try:
            room = registry.get(room_id)
            async with hub.lock(room_id):
                document = changelog_document(room.plan)
        except CityPlanError as exc:
            return _error_response(exc)
        return document

    @app.post("/issues")
    async def export_issue(request: Request):
        try:
            try:
                doc = json.loads(await request.body())
            except json.JSONDecodeError as exc:
                raise SchemaViolation(f"body is not valid JSON: {exc}") from exc
            if not isinstance(doc, dict):
                raise SchemaViolation("body must be an object")
            room_id = doc.get("room")
            if not isinstance(room_id, str):
                raise SchemaViolation("body needs a room id")
            room = registry.get(room_id)
            draft_doc = {
                key: doc[key]
                for key in ("title", "selectedEntryIds", "comment", "screenshots", "mentions")
                if key in doc
            }
            draft = parse_draft(draft_doc)
            async with hub.lock(room_id):
                changelog = changelog_document(room.plan)
            title, body = render_markdown(draft, changelog)
            if doc.get("dryRun", False):
                return {"dryRun": True, "title": title, "body": body}
            if gitlab is None:
                raise AuthFailed("server has no GitLab target configured")
            ref = publisher(gitlab, title, body, draft.screenshots)
        except CityPlanError as exc:
            return _error_response(exc)
        return {"dryRun": False, "url": ref.url, "iid": ref.iid}

    @app.websocket("/ws")
    async def websocket_session(websocket: WebSocket):
        await websocket.accept()
        try:
            raw = await websocket.receive_text()
        except WebSocketDisconnect:
            return
        try:
            hello = json.loads(raw)
        except json.JSONDecodeError:
            await websocket.send_text(
                _rejected_frame("MalformedMessage", "frame is not valid JSON")
            )
            await websocket.close()
            return
        if (
            not isinstance(hello, dict)
            or hello.get("type") != "join"
            or not isinstance(hello.get("room"), str)
            or not isinstance(hello.get("name"), str)
            or not hello["name"]
        ):
            await websocket.send_text(
                _rejected_frame("MalformedMessage", "first frame must be a join")
            )
            await websocket.close()
            return
        room_id = hello["room"]
        try:
            room = registry.get(room_id)
        except UnknownRoom as exc:
            await websocket.send_text(_rejected_frame(exc.kind, str(exc)))
            await websocket.close()
            return

        async with hub.lock(room_id):
            user_id, welcome, events = rooms.join(room, hello["name"])
            hub.sockets.setdefault(room_id, {})[user_id] = websocket
            await websocket.send_text(json.dumps(welcome))
            await hub.deliver(room_id, events)

        try:
            while True:
                raw = await websocket.receive_text()
                try:
                    message = json.loads(raw)
                except json.JSONDecodeError:
                    await websocket.send_text(
                        _rejected_frame("MalformedMessage", "frame is not valid JSON")
                    )
                    continue
                async with hub.lock(room_id):
                    try:
                        events = rooms.handle_message(room, user_id, message)
                    except MalformedMessage as exc:
                        await websocket.send_text(_rejected_frame(exc.kind, str(exc)))
                        continue
                    await hub.deliver(room_id, events)
        except WebSocketDisconnect:
            pass
        finally:
            async with hub.lock(room_id):
                hub.sockets.get(room_id, {}).pop(user_id, None)
                if user_id in room.users:
                    events = rooms.leave(room, user_id)
                    await hub.deliver(room_id, events)

    return app
