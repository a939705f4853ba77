// Context-sensitive popup inventory. The button set depends only on the
// entity kind and whether the entity is already deleted or cut; deleted
// entities get a read-only popup with no buttons at all.

import type { EntityKind } from "./projection";
import type { OpKind } from "./protocol";

export type PopupButton = { label: string; opKind: OpKind };

export type PopupSpec = { entityId: string; title: string; buttons: PopupButton[] };

const BUTTONS: Record<EntityKind, readonly PopupButton[]> = {
  package: [
    { label: "Create subpackage", opKind: "CreatePackage" },
    { label: "Create class", opKind: "CreateClass" },
    { label: "Rename", opKind: "RenameEntity" },
    { label: "Move", opKind: "MoveEntity" },
    { label: "Delete", opKind: "DeleteEntity" },
  ],
  class: [
    { label: "Rename", opKind: "RenameEntity" },
    { label: "Move", opKind: "MoveEntity" },
    { label: "Delete", opKind: "DeleteEntity" },
    { label: "Create communication", opKind: "CreateCommunication" },
  ],
  application: [
    { label: "Create package", opKind: "CreatePackage" },
    { label: "Rename", opKind: "RenameEntity" },
    { label: "Delete", opKind: "DeleteEntity" },
  ],
  link: [{ label: "Cut", opKind: "CutCommunication" }],
};

export function popupFor(kind: EntityKind, deleted: boolean): PopupButton[] {
  if (deleted) return [];
  return BUTTONS[kind].map((button) => ({ ...button }));
}

/** Display title: base ids read as fqns once the minting prefix is gone. */
export function popupTitle(entityId: string): string {
  if (entityId.startsWith("base-link:")) return entityId.slice("base-link:".length);
  if (entityId.startsWith("base-")) return entityId.slice("base-".length);
  return entityId;
}

export function popupSpec(entityId: string, kind: EntityKind, deleted: boolean): PopupSpec {
  return { entityId, title: popupTitle(entityId), buttons: popupFor(kind, deleted) };
}
