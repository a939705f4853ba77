"""Issue export: render selected changelog entries to Markdown, publish to
GitLab (API v4) or write a dry-run file. Rendering is pure; the token never
reaches rendered output, logs, or error strings.
"""

from __future__ import annotations

import base64
import binascii
import os
import re
import time
from dataclasses import dataclass, field

import requests

from .errors import (
    AuthFailed,
    EmptySelection,
    IoError,
    ProjectNotFound,
    RemoteError,
    SchemaViolation,
    TransportError,
    UnknownEntry,
)

_USERNAME_RE = re.compile(r"^[a-zA-Z0-9_.-]+$")


@dataclass(frozen=True)
class IssueDraft:
    title: str
    selected_entry_ids: tuple[int, ...]
    comment: str | None = None
    screenshots: tuple[tuple[str, bytes], ...] = ()
    mentions: tuple[str, ...] = ()


@dataclass(frozen=True)
class GitLabTarget:
    base_url: str
    project_id: str
    token: str = field(repr=False)

    @classmethod
    def from_env(cls, base_url: str, project_id: str, env=None) -> "GitLabTarget":
        env = env if env is not None else os.environ
        token = env.get("GITLAB_TOKEN", "")
        if not token:
            raise AuthFailed("GITLAB_TOKEN is not set")
        return cls(base_url=base_url.rstrip("/"), project_id=str(project_id), token=token)


@dataclass(frozen=True)
class IssueRef:
    url: str
    iid: int


def _validate_draft(draft: IssueDraft) -> None:
    if not draft.title:
        raise SchemaViolation("issue title must be non-empty")
    for username in draft.mentions:
        if not _USERNAME_RE.match(username):
            raise SchemaViolation(f"invalid GitLab username {username!r}")
    for file_name, data in draft.screenshots:
        if not file_name:
            raise SchemaViolation("screenshot fileName must be non-empty")
        if not isinstance(data, bytes):
            raise SchemaViolation("screenshot data must be bytes")


def render_markdown(draft: IssueDraft, changelog: dict, model=None) -> tuple[str, str]:
    """Render (title, body). ``changelog`` is a changelog export v1 document;
    summaries are taken from it, so no model is needed (the parameter is
    accepted for callers that have one at hand).

    Bullets render in entry-id order regardless of selection order.
    """
    _validate_draft(draft)
    if not draft.selected_entry_ids:
        raise EmptySelection("no changelog entries selected")
    by_id = {e["id"]: e for e in changelog.get("entries", [])}
    selected = sorted(set(draft.selected_entry_ids))
    for entry_id in selected:
        if entry_id not in by_id:
            raise UnknownEntry(f"no changelog entry {entry_id}")

    lines = ["## Planned changes", ""]
    lines += [f"- {by_id[i]['summary']}" for i in selected]
    if draft.comment:
        lines += ["", "## Notes", ""]
        lines += draft.comment.splitlines()
    if draft.screenshots:
        lines.append("")
        lines += [f"![{name}]({name})" for name, _ in draft.screenshots]
    if draft.mentions:
        lines.append("")
        lines.append("/cc " + " ".join(f"@{u}" for u in draft.mentions))
    return draft.title, "\n".join(lines)


def dry_run(draft: IssueDraft, changelog: dict, model=None, out_path=None) -> str:
    """Write ``<title>\\n\\n<body>\\n`` to out_path; no network involved."""
    title, body = render_markdown(draft, changelog, model)
    if out_path is None:
        raise IoError("dry run needs an output path")
    try:
        with open(out_path, "w", encoding="utf-8") as handle:
            handle.write(f"{title}\n\n{body}\n")
    except OSError as exc:
        raise IoError(f"cannot write {out_path}: {exc}") from exc
    return str(out_path)


def publish(
    target: GitLabTarget,
    title: str,
    body: str,
    screenshots: tuple[tuple[str, bytes], ...] = (),
    http=None,
    sleeper=time.sleep,
) -> IssueRef:
    """Upload screenshots, splice the returned markdown into the body, then
    create the issue. ``http`` is any object with requests.Session's post()
    signature; error strings are scrubbed so the token cannot leak.
    """
    session = http if http is not None else requests.Session()
    headers = {"PRIVATE-TOKEN": target.token}
    api = f"{target.base_url}/api/v4/projects/{target.project_id}"

    for file_name, data in screenshots:
        response = _post(
            session,
            f"{api}/uploads",
            target,
            sleeper,
            headers=headers,
            files={"file": (file_name, data)},
        )
        uploaded = _json_field(response, "markdown", target)
        placeholder = f"![{file_name}]({file_name})"
        if placeholder in body:
            body = body.replace(placeholder, uploaded, 1)
        else:
            body = f"{body}\n{uploaded}"

    response = _post(
        session,
        f"{api}/issues",
        target,
        sleeper,
        headers=headers,
        data={"title": title, "description": body},
    )
    payload = _json_payload(response, target)
    iid = payload.get("iid")
    if not isinstance(iid, int):
        raise RemoteError(_scrub("issue response carries no iid", target))
    url = payload.get("web_url")
    if not isinstance(url, str) or not url:
        url = f"{target.base_url}/projects/{target.project_id}/issues/{iid}"
    return IssueRef(url=url, iid=iid)


def _post(session, url, target, sleeper, retried=False, **kwargs):
    try:
        response = session.post(url, timeout=30, **kwargs)
    except requests.RequestException as exc:
        raise TransportError(_scrub(f"request to {url} failed: {exc}", target)) from None
    status = getattr(response, "status_code", 0)
    if status in (401, 403):
        raise AuthFailed(f"GitLab rejected the token (HTTP {status})")
    if status == 404:
        raise ProjectNotFound(f"project {target.project_id} not found (HTTP 404)")
    if 500 <= status <= 599:
        retry_after = getattr(response, "headers", {}).get("Retry-After")
        if retry_after is not None and not retried:
            try:
                sleeper(max(0.0, float(retry_after)))
            except (TypeError, ValueError):
                sleeper(0.0)
            return _post(session, url, target, sleeper, retried=True, **kwargs)
        raise RemoteError(f"GitLab returned HTTP {status} for {_scrub(url, target)}")
    if status < 200 or status >= 300:
        raise RemoteError(f"GitLab returned HTTP {status} for {_scrub(url, target)}")
    return response


def _json_payload(response, target) -> dict:
    try:
        payload = response.json()
    except ValueError as exc:
        raise RemoteError(_scrub(f"GitLab returned non-JSON body: {exc}", target)) from None
    if not isinstance(payload, dict):
        raise RemoteError("GitLab returned an unexpected JSON shape")
    return payload


def _json_field(response, key, target) -> str:
    payload = _json_payload(response, target)
    value = payload.get(key)
    if not isinstance(value, str) or not value:
        raise RemoteError(f"GitLab response misses field {key!r}")
    return value


def _scrub(text: str, target: GitLabTarget) -> str:
    return text.replace(target.token, "***") if target.token else text


# -- issue-draft v1 (wire form used by the server endpoint and the UI) --------

def parse_draft(doc) -> IssueDraft:
    if not isinstance(doc, dict):
        raise SchemaViolation("issue draft must be an object")
    title = doc.get("title")
    if not isinstance(title, str):
        raise SchemaViolation("draft title must be a string")
    raw_ids = doc.get("selectedEntryIds")
    if not isinstance(raw_ids, list) or not all(
        isinstance(i, int) and not isinstance(i, bool) for i in raw_ids
    ):
        raise SchemaViolation("selectedEntryIds must be an array of integers")
    comment = doc.get("comment")
    if comment is not None and not isinstance(comment, str):
        raise SchemaViolation("comment must be a string")
    mentions = doc.get("mentions", [])
    if not isinstance(mentions, list) or not all(isinstance(m, str) for m in mentions):
        raise SchemaViolation("mentions must be an array of strings")
    screenshots = []
    for shot in doc.get("screenshots", []):
        if not isinstance(shot, dict):
            raise SchemaViolation("screenshot must be an object")
        name = shot.get("fileName")
        encoded = shot.get("dataBase64")
        if not isinstance(name, str) or not isinstance(encoded, str):
            raise SchemaViolation("screenshot needs fileName and dataBase64 strings")
        try:
            data = base64.b64decode(encoded, validate=True)
        except (binascii.Error, ValueError) as exc:
            raise SchemaViolation(f"screenshot {name!r} is not valid base64") from exc
        screenshots.append((name, data))
    draft = IssueDraft(
        title=title,
        selected_entry_ids=tuple(raw_ids),
        comment=comment,
        screenshots=tuple(screenshots),
        mentions=tuple(mentions),
    )
    _validate_draft(draft)
    return draft
