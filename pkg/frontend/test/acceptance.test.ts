// Headless end-to-end check: replay a recorded two-user session and
// verify the projected scene, the popup inventory, and the issue form
// gating. The transcript fixture is a capture of real server frames
// (regenerate with scripts/make_transcript.py at the repo root).

import { describe, expect, it } from "vitest";

import rawTranscript from "./fixtures/transcript.json";
import { canSubmit, emptyForm } from "../src/issueForm";
import { popupFor } from "../src/popup";
import { RoomProjection } from "../src/projection";
import type { LayoutDoc, MarkPair, ServerEvent, WelcomeEvent } from "../src/protocol";
import { buildScene } from "../src/scene";

type Transcript = {
  welcome: WelcomeEvent;
  events: ServerEvent[];
  layout: LayoutDoc;
  expected: {
    seq: number;
    entryIds: number[];
    createdEntityId: string;
    collaborator: { userId: string; color: string };
    marks: MarkPair[];
    selections: Record<string, string | null>;
    layoutHash: string;
  };
};

const transcript = rawTranscript as unknown as Transcript;

function replayed(): RoomProjection {
  const projection = new RoomProjection(transcript.welcome);
  for (const event of transcript.events) projection.apply(event);
  return projection;
}

describe("UI projection acceptance", () => {
  it("replays the transcript into the expected scene", () => {
    const projection = replayed();

    expect(projection.seq).toBe(transcript.expected.seq);
    expect(projection.entries().map((e) => e.id)).toEqual(transcript.expected.entryIds);
    expect(projection.marks()).toEqual(transcript.expected.marks);
    expect(projection.selections()).toEqual(transcript.expected.selections);
    expect(transcript.layout.hash).toBe(transcript.expected.layoutHash);

    const scene = buildScene(
      transcript.layout,
      projection.marks(),
      projection.selectionViews(),
      projection.kinds(),
    );

    // The created entity wears the plus texture in the scene.
    const created = transcript.expected.createdEntityId;
    expect(scene.textureOverlays[created]).toBe("plus");
    expect(scene.boxes[created]).toBeDefined();

    // The collaborator who selected it outlines it in their palette color.
    expect(transcript.expected.collaborator.color).toBe("#3cb44b");
    expect(scene.selectionOutlines[created]).toBe("#3cb44b");

    // The deleted class is still in the city, crossed out.
    const crossed = projection
      .marks()
      .filter(([, mark]) => mark === "x-cross")
      .map(([entityId]) => entityId);
    expect(crossed).toHaveLength(1);
    expect(scene.boxes[crossed[0]]).toBeDefined();
    expect(scene.textureOverlays[crossed[0]]).toBe("x-cross");

    console.log("CRITERION ui-projection (scene replay): PASS");
  });

  it("replays deterministically", () => {
    expect(replayed().snapshot()).toEqual(replayed().snapshot());
    console.log("CRITERION ui-projection (replay determinism): PASS");
  });

  it("matches the popup inventory table", () => {
    const labels = (kind: Parameters<typeof popupFor>[0]) =>
      popupFor(kind, false).map((b) => b.label);
    expect(labels("package")).toEqual([
      "Create subpackage",
      "Create class",
      "Rename",
      "Move",
      "Delete",
    ]);
    expect(labels("class")).toEqual(["Rename", "Move", "Delete", "Create communication"]);
    expect(labels("application")).toEqual(["Create package", "Rename", "Delete"]);
    expect(labels("link")).toEqual(["Cut"]);
    expect(popupFor("class", true)).toEqual([]);

    // and the kinds resolved from the replayed session feed that table
    const projection = replayed();
    expect(projection.kindOf(transcript.expected.createdEntityId)).toBe("class");
    const deleted = projection
      .marks()
      .filter(([, mark]) => mark === "x-cross")
      .map(([entityId]) => entityId)[0];
    expect(popupFor(projection.kindOf(deleted)!, projection.isDeleted(deleted))).toEqual([]);

    console.log("CRITERION ui-projection (popup inventory): PASS");
  });

  it("disables issue submission without a title", () => {
    const form = { ...emptyForm(), checkedEntryIds: transcript.expected.entryIds };
    expect(canSubmit(form)).toBe(false);
    expect(canSubmit({ ...form, title: "Split the visits service" })).toBe(true);
    console.log("CRITERION ui-projection (issue form gating): PASS");
  });
});
