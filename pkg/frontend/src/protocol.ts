// Wire types for the room protocol and the documents it carries. These
// mirror the server's JSON shapes one to one; the client never invents
// fields and treats every id as an opaque string.

export type MethodDoc = { name: string; hash: string };

export type ClassDoc = {
  id: string;
  name: string;
  totalCalls: number;
  methods: MethodDoc[];
};

export type PackageDoc = {
  id: string;
  name: string;
  subPackages: PackageDoc[];
  classes: ClassDoc[];
};

export type ApplicationDoc = {
  id: string;
  name: string;
  language: string;
  packages: PackageDoc[];
};

export type LinkDoc = {
  id: string;
  sourceClassId: string;
  targetClassId: string;
  methodName: string;
  callCount: number;
};

export type LandscapeDoc = {
  version: number;
  applications: ApplicationDoc[];
  links: LinkDoc[];
};

export type OpDoc =
  | { kind: "CreateApplication"; name: string; language: string }
  | { kind: "CreatePackage"; parentId: string; name: string }
  | { kind: "CreateClass"; parentPackageId: string; name: string }
  | { kind: "RenameEntity"; entityId: string; newName: string }
  | { kind: "MoveEntity"; entityId: string; newParentId: string }
  | { kind: "DeleteEntity"; entityId: string }
  | {
      kind: "CreateCommunication";
      sourceClassId: string;
      targetClassId: string;
      methodName: string;
    }
  | { kind: "CutCommunication"; linkId: string };

export type OpKind = OpDoc["kind"];

export type EntryDoc = {
  id: number;
  author: string;
  summary: string;
  op: OpDoc;
  groupId?: number;
  createdEntityId?: string;
};

export type UserInfo = { userId: string; name: string; color: string };

/** Entity marks; links use plus-dashed/stripe, everything else the rest. */
export type Mark = "plus" | "pencil" | "arrow" | "x-cross" | "plus-dashed" | "stripe";

export type MarkPair = [entityId: string, mark: Mark];

// Server -> client frames. Every broadcast carries a per-room monotone
// seq; "rejected" goes to the sender only and has none.

export type WelcomeEvent = {
  type: "welcome";
  seq: number;
  roomId: string;
  userId: string;
  color: string;
  landscape: LandscapeDoc;
  entries: EntryDoc[];
  marks: MarkPair[];
  users: UserInfo[];
  selections: Record<string, string | null>;
};

export type UserJoinedEvent = { type: "user_joined"; seq: number; user: UserInfo };

export type UserLeftEvent = { type: "user_left"; seq: number; userId: string };

export type AppliedEvent = {
  type: "applied";
  seq: number;
  addedEntries: EntryDoc[];
  removedEntryIds: number[];
  marks: MarkPair[];
};

export type SelectionEvent = {
  type: "selection";
  seq: number;
  userId: string;
  entityId: string | null;
};

export type RejectedEvent = { type: "rejected"; reason: string; detail: string };

export type ServerEvent =
  | WelcomeEvent
  | UserJoinedEvent
  | UserLeftEvent
  | AppliedEvent
  | SelectionEvent
  | RejectedEvent;

// Client -> server frames.

export type JoinMessage = { type: "join"; room: string; name: string };
export type OpMessage = { type: "op"; op: OpDoc };
export type UndoMessage = { type: "undo"; entryId: number };
export type SelectMessage = { type: "select"; entityId: string | null };

export type ClientMessage = JoinMessage | OpMessage | UndoMessage | SelectMessage;

// Layout documents served by GET /rooms/{id}/layout. Box coordinates are
// the minimum corner; links run between building top centers.

export type Vec3 = [number, number, number];

export type LayoutBox = {
  x: number;
  y: number;
  z: number;
  width: number;
  height: number;
  depth: number;
};

export type LayoutLinkLine = { from: Vec3; to: Vec3 };

export type LayoutDoc = {
  version: number;
  hash: string;
  boxes: Record<string, LayoutBox>;
  links: Record<string, LayoutLinkLine>;
};
