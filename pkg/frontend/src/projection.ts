// Pure projection of a room session: welcome snapshot + events in seq
// order. Holds no transport and performs no folding of its own; entries,
// marks, and selections are exactly what the server said, so replaying
// the same frames always reproduces the same state.

import { ProtocolError, SequenceGap } from "./errors";
import type {
  EntryDoc,
  LandscapeDoc,
  Mark,
  MarkPair,
  PackageDoc,
  ServerEvent,
  UserInfo,
  WelcomeEvent,
} from "./protocol";

export type EntityKind = "application" | "package" | "class" | "link";

/** One user's highlight, ready for the scene builder. */
export type SelectionView = { userId: string; entityId: string; color: string };

export type ProjectionSnapshot = {
  seq: number;
  entries: EntryDoc[];
  marks: MarkPair[];
  users: UserInfo[];
  selections: Record<string, string | null>;
};

const CREATED_KIND: Partial<Record<string, EntityKind>> = {
  CreateApplication: "application",
  CreatePackage: "package",
  CreateClass: "class",
  CreateCommunication: "link",
};

// Op fields whose values are entity ids, in highlight order.
const ENTITY_FIELDS = [
  "entityId",
  "newParentId",
  "parentId",
  "parentPackageId",
  "sourceClassId",
  "targetClassId",
  "linkId",
] as const;

function indexPackage(pkg: PackageDoc, kinds: Map<string, EntityKind>): void {
  kinds.set(pkg.id, "package");
  for (const cls of pkg.classes) kinds.set(cls.id, "class");
  for (const sub of pkg.subPackages) indexPackage(sub, kinds);
}

function indexLandscape(landscape: LandscapeDoc): Map<string, EntityKind> {
  const kinds = new Map<string, EntityKind>();
  for (const app of landscape.applications) {
    kinds.set(app.id, "application");
    for (const pkg of app.packages) indexPackage(pkg, kinds);
  }
  for (const link of landscape.links) kinds.set(link.id, "link");
  return kinds;
}

export class RoomProjection {
  readonly roomId: string;
  readonly userId: string;
  readonly color: string;
  readonly landscape: LandscapeDoc;

  private seqNo: number;
  private entryMap = new Map<number, EntryDoc>();
  private markMap = new Map<string, Mark>();
  private userMap = new Map<string, UserInfo>();
  private selectionMap = new Map<string, string | null>();
  private kindMap: Map<string, EntityKind>;

  constructor(welcome: WelcomeEvent) {
    if (welcome.type !== "welcome") {
      throw new ProtocolError("projection starts from a welcome event");
    }
    this.roomId = welcome.roomId;
    this.userId = welcome.userId;
    this.color = welcome.color;
    this.landscape = welcome.landscape;
    this.seqNo = welcome.seq;
    this.kindMap = indexLandscape(welcome.landscape);
    for (const entry of welcome.entries) this.addEntry(entry);
    for (const [entityId, mark] of welcome.marks) this.markMap.set(entityId, mark);
    for (const user of welcome.users) this.userMap.set(user.userId, user);
    for (const [userId, entityId] of Object.entries(welcome.selections)) {
      this.selectionMap.set(userId, entityId);
    }
  }

  get seq(): number {
    return this.seqNo;
  }

  entries(): EntryDoc[] {
    return [...this.entryMap.values()].sort((a, b) => a.id - b.id);
  }

  entry(entryId: number): EntryDoc | undefined {
    return this.entryMap.get(entryId);
  }

  marks(): MarkPair[] {
    return [...this.markMap.entries()]
      .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
      .map(([entityId, mark]): MarkPair => [entityId, mark]);
  }

  markFor(entityId: string): Mark | undefined {
    return this.markMap.get(entityId);
  }

  /** Deleted and cut entities stay rendered but take no further changes. */
  isDeleted(entityId: string): boolean {
    const mark = this.markMap.get(entityId);
    return mark === "x-cross" || mark === "stripe";
  }

  users(): UserInfo[] {
    return [...this.userMap.values()];
  }

  selections(): Record<string, string | null> {
    return Object.fromEntries(this.selectionMap);
  }

  /** Non-empty selections with their owner's color, in join order. */
  selectionViews(): SelectionView[] {
    const views: SelectionView[] = [];
    for (const user of this.userMap.values()) {
      const entityId = this.selectionMap.get(user.userId);
      if (entityId != null) {
        views.push({ userId: user.userId, entityId, color: user.color });
      }
    }
    return views;
  }

  kindOf(entityId: string): EntityKind | undefined {
    return this.kindMap.get(entityId);
  }

  kinds(): ReadonlyMap<string, EntityKind> {
    return this.kindMap;
  }

  /** Entity ids an entry references, for click-to-highlight. */
  entitiesForEntry(entryId: number): string[] {
    const entry = this.entryMap.get(entryId);
    if (!entry) return [];
    const ids: string[] = [];
    if (entry.createdEntityId) ids.push(entry.createdEntityId);
    const op = entry.op as Record<string, string>;
    for (const field of ENTITY_FIELDS) {
      const value = op[field];
      if (value && !ids.includes(value)) ids.push(value);
    }
    return ids;
  }

  /**
   * Fold one server frame in. Returns true when state changed, false for
   * rejected frames and stale duplicates. A seq jump means frames were
   * lost; that throws SequenceGap and the caller must rejoin.
   */
  apply(event: ServerEvent): boolean {
    if (event.type === "rejected") return false;
    if (event.type === "welcome") {
      throw new ProtocolError("welcome arrives only on join; rejoin to resync");
    }
    if (event.seq <= this.seqNo) return false;
    if (event.seq !== this.seqNo + 1) {
      throw new SequenceGap(`expected seq ${this.seqNo + 1}, got ${event.seq}`);
    }
    this.seqNo = event.seq;

    switch (event.type) {
      case "user_joined":
        this.userMap.set(event.user.userId, event.user);
        this.selectionMap.set(event.user.userId, null);
        return true;
      case "user_left":
        this.userMap.delete(event.userId);
        this.selectionMap.delete(event.userId);
        return true;
      case "selection":
        if (this.userMap.has(event.userId)) {
          this.selectionMap.set(event.userId, event.entityId);
        }
        return true;
      case "applied":
        for (const entryId of event.removedEntryIds) {
          const removed = this.entryMap.get(entryId);
          if (removed?.createdEntityId) this.kindMap.delete(removed.createdEntityId);
          this.entryMap.delete(entryId);
        }
        for (const entry of event.addedEntries) this.addEntry(entry);
        this.markMap = new Map(event.marks);
        return true;
      default:
        throw new ProtocolError(`unknown event type ${(event as { type: string }).type}`);
    }
  }

  /** Plain-data view for equality checks; replayed sessions must match. */
  snapshot(): ProjectionSnapshot {
    return {
      seq: this.seqNo,
      entries: this.entries(),
      marks: this.marks(),
      users: this.users(),
      selections: this.selections(),
    };
  }

  private addEntry(entry: EntryDoc): void {
    this.entryMap.set(entry.id, entry);
    const createdKind = entry.createdEntityId && CREATED_KIND[entry.op.kind];
    if (entry.createdEntityId && createdKind) {
      this.kindMap.set(entry.createdEntityId, createdKind);
    }
  }
}
