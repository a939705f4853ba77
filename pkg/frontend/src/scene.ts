// Scene assembly: layout geometry + marks + selections -> one plain-data
// SceneModel the renderer draws. Pure; same inputs, same scene. Deleted
// entities arrive with geometry and an x-cross mark and stay visible.

import { DanglingReference } from "./errors";
import type { EntityKind, SelectionView } from "./projection";
import type { LayoutBox, LayoutDoc, LayoutLinkLine, Mark, MarkPair, Vec3 } from "./protocol";

export type SceneBox = { box: LayoutBox; color: string };

export type CameraState = { position: Vec3; target: Vec3 };

export type SceneModel = {
  boxes: Record<string, SceneBox>;
  links: Record<string, LayoutLinkLine>;
  textureOverlays: Record<string, Mark>;
  selectionOutlines: Record<string, string>;
  camera: CameraState;
};

const KIND_COLORS: Record<EntityKind, string> = {
  application: "#90a4ae",
  package: "#a1887f",
  class: "#64b5f6",
  link: "#78909c",
};

const FALLBACK_COLOR = "#b0bec5";

function frameCity(layout: LayoutDoc): CameraState {
  const boxes = Object.values(layout.boxes);
  if (boxes.length === 0) {
    return { position: [8, 8, 8], target: [0, 0, 0] };
  }
  let minX = Infinity, minY = Infinity, minZ = Infinity;
  let maxX = -Infinity, maxY = -Infinity, maxZ = -Infinity;
  for (const b of boxes) {
    minX = Math.min(minX, b.x); maxX = Math.max(maxX, b.x + b.width);
    minY = Math.min(minY, b.y); maxY = Math.max(maxY, b.y + b.height);
    minZ = Math.min(minZ, b.z); maxZ = Math.max(maxZ, b.z + b.depth);
  }
  const target: Vec3 = [(minX + maxX) / 2, (minY + maxY) / 2, (minZ + maxZ) / 2];
  const diagonal = Math.hypot(maxX - minX, maxY - minY, maxZ - minZ);
  const reach = Math.max(diagonal, 1);
  const position: Vec3 = [target[0] + reach * 0.8, target[1] + reach * 0.9, target[2] + reach * 0.8];
  return { position, target };
}

/**
 * Build the scene for one frame. Marks become texture overlays and
 * selections become colored outlines; both must reference geometry that
 * exists in the layout, otherwise the inputs disagree about what world
 * they describe and we fail loudly with DanglingReference.
 */
export function buildScene(
  layout: LayoutDoc,
  marks: readonly MarkPair[],
  selections: readonly SelectionView[],
  kinds?: ReadonlyMap<string, EntityKind>,
): SceneModel {
  const boxes: Record<string, SceneBox> = {};
  for (const [entityId, box] of Object.entries(layout.boxes)) {
    const kind = kinds?.get(entityId);
    boxes[entityId] = { box, color: kind ? KIND_COLORS[kind] : FALLBACK_COLOR };
  }

  const present = (entityId: string): boolean =>
    entityId in layout.boxes || entityId in layout.links;

  const textureOverlays: Record<string, Mark> = {};
  for (const [entityId, mark] of marks) {
    if (!present(entityId)) {
      throw new DanglingReference(`mark ${mark} on unknown entity ${entityId}`);
    }
    textureOverlays[entityId] = mark;
  }

  // Later selections win when two users highlight the same entity; the
  // input order is join order, so the newest collaborator shows.
  const selectionOutlines: Record<string, string> = {};
  for (const view of selections) {
    if (!present(view.entityId)) {
      throw new DanglingReference(
        `selection by ${view.userId} on unknown entity ${view.entityId}`,
      );
    }
    selectionOutlines[view.entityId] = view.color;
  }

  return {
    boxes,
    links: { ...layout.links },
    textureOverlays,
    selectionOutlines,
    camera: frameCity(layout),
  };
}
