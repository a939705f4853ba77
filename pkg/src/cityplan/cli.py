"""Pipeline-friendly command line: ingest, layout, serve, export-issue, replay.

Exit codes: 0 success, 1 domain error (single stderr line prefixed
``error:<Kind>:``), 2 usage error. stdout carries only artifacts and paths.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import ingest as ingest_mod
from .errors import CityPlanError, IoError
from .issues import GitLabTarget, IssueDraft, dry_run
from .layout import layout_landscape, serialize_layout
from .restructure import (
    apply_change,
    fresh_state,
    parse_op_script,
    serialize_changelog,
)


def _read(path: str, what: str) -> bytes:
    try:
        with open(path, "rb") as handle:
            return handle.read()
    except OSError as exc:
        raise IoError(f"cannot read {what} {path}: {exc}") from exc


def _write(path: str, content: str, what: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(content)
    except OSError as exc:
        raise IoError(f"cannot write {what} {path}: {exc}") from exc


def _cmd_ingest(args) -> int:
    structure = ingest_mod.parse_structure(_read(args.structure, "structure file"))
    traces = ingest_mod.parse_traces(_read(args.traces, "trace file"))
    result = ingest_mod.aggregate_traces(traces, structure)
    landscape = ingest_mod.annotate_metrics(structure, result.links)
    _write(args.out, ingest_mod.serialize_landscape(landscape), "landscape file")
    skipped = result.skipped_unresolved + result.skipped_orphans
    print(
        f"aggregated {len(result.links)} links, skipped {skipped} spans,"
        f" dropped {result.dropped_self_calls} self calls",
        file=sys.stderr,
    )
    print(args.out)
    return 0


def _cmd_layout(args) -> int:
    landscape = ingest_mod.parse_landscape(_read(args.infile, "landscape file"))
    layout = layout_landscape(landscape)
    _write(args.out, serialize_layout(layout), "layout file")
    print(args.out)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    landscape = ingest_mod.parse_landscape(_read(args.landscape, "landscape file"))
    gitlab = None
    if os.environ.get("GITLAB_TOKEN") and os.environ.get("GITLAB_URL"):
        gitlab = GitLabTarget.from_env(
            os.environ["GITLAB_URL"], os.environ.get("GITLAB_PROJECT", "")
        )
    app = create_app(base_landscape=landscape, gitlab=gitlab)
    print(f"serving on 127.0.0.1:{args.port}", file=sys.stderr)
    uvicorn.run(app, host="127.0.0.1", port=args.port, log_level="warning")
    return 0


def _cmd_export_issue(args) -> int:
    import json

    from .errors import MalformedDocument, SchemaViolation

    raw = _read(args.changelog, "changelog file")
    try:
        changelog = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"changelog is not valid JSON: {exc}") from exc
    if not isinstance(changelog, dict) or changelog.get("version") != 1:
        raise SchemaViolation("unsupported changelog version")
    draft = IssueDraft(title=args.title, selected_entry_ids=tuple(args.select))
    out = dry_run(draft, changelog, out_path=args.dry_run)
    print(out)
    return 0


def _cmd_replay(args) -> int:
    landscape = ingest_mod.parse_landscape(_read(args.landscape, "landscape file"))
    state = fresh_state(landscape)
    for author, op in parse_op_script(_read(args.ops, "op script")):
        state, _ = apply_change(state, op, author)
    sys.stdout.write(serialize_changelog(state))
    return 0


def _entry_ids(value: str) -> list[int]:
    try:
        return [int(part) for part in value.split(",") if part != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"--select expects comma-separated entry ids, got {value!r}"
        ) from None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cityplan",
        description="software-city planning pipeline",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    cmd = commands.add_parser("ingest", help="aggregate traces onto a structure model")
    cmd.add_argument("--structure", required=True)
    cmd.add_argument("--traces", required=True)
    cmd.add_argument("--out", required=True)
    cmd.set_defaults(func=_cmd_ingest)

    cmd = commands.add_parser("layout", help="compute the deterministic city layout")
    cmd.add_argument("--in", dest="infile", required=True)
    cmd.add_argument("--out", required=True)
    cmd.set_defaults(func=_cmd_layout)

    cmd = commands.add_parser("serve", help="run the collaboration server")
    cmd.add_argument("--landscape", required=True)
    cmd.add_argument("--port", type=int, required=True)
    cmd.set_defaults(func=_cmd_serve)

    cmd = commands.add_parser("export-issue", help="render selected entries to Markdown")
    cmd.add_argument("--changelog", required=True)
    cmd.add_argument("--select", type=_entry_ids, required=True)
    cmd.add_argument("--title", required=True)
    cmd.add_argument("--dry-run", dest="dry_run", required=True, metavar="OUT")
    cmd.set_defaults(func=_cmd_export_issue)

    cmd = commands.add_parser("replay", help="apply a scripted op file, print the changelog")
    cmd.add_argument("--landscape", required=True)
    cmd.add_argument("--ops", required=True)
    cmd.set_defaults(func=_cmd_replay)

    return parser


def run(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 2
    try:
        return args.func(args)
    except CityPlanError as exc:
        detail = " ".join(str(exc).split())
        print(f"error:{exc.kind}: {detail}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
