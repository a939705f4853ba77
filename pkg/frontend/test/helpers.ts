// Hand-built protocol documents for the unit tests. Shapes follow the
// wire format docs; the recorded transcript fixture covers the real
// server, these cover the edges.

import type {
  AppliedEvent,
  EntryDoc,
  LandscapeDoc,
  LayoutDoc,
  MarkPair,
  SelectionEvent,
  UserInfo,
  WelcomeEvent,
} from "../src/protocol";

export const SHOP = "base-shop";
export const ORG = "base-shop/org";
export const CART = "base-shop/org.Cart";
export const ORDER = "base-shop/org.Order";
export const CART_ORDER = "base-link:shop/org.Cart->shop/org.Order:create";

export const ANN: UserInfo = { userId: "u1", name: "ann", color: "#e6194b" };
export const BEN: UserInfo = { userId: "u2", name: "ben", color: "#3cb44b" };

export function miniLandscape(): LandscapeDoc {
  return {
    version: 1,
    applications: [
      {
        id: SHOP,
        name: "shop",
        language: "java",
        packages: [
          {
            id: ORG,
            name: "org",
            subPackages: [],
            classes: [
              {
                id: CART,
                name: "Cart",
                totalCalls: 2,
                methods: [{ name: "checkout", hash: "h1" }],
              },
              {
                id: ORDER,
                name: "Order",
                totalCalls: 2,
                methods: [{ name: "create", hash: "h2" }],
              },
            ],
          },
        ],
      },
    ],
    links: [
      {
        id: CART_ORDER,
        sourceClassId: CART,
        targetClassId: ORDER,
        methodName: "create",
        callCount: 2,
      },
    ],
  };
}

export function welcomeDoc(overrides: Partial<WelcomeEvent> = {}): WelcomeEvent {
  return {
    type: "welcome",
    seq: 1,
    roomId: "ab12cd34",
    userId: ANN.userId,
    color: ANN.color,
    landscape: miniLandscape(),
    entries: [],
    marks: [],
    users: [ANN],
    selections: { [ANN.userId]: null },
    ...overrides,
  };
}

export function appliedDoc(
  seq: number,
  addedEntries: EntryDoc[],
  removedEntryIds: number[] = [],
  marks: MarkPair[] = [],
): AppliedEvent {
  return { type: "applied", seq, addedEntries, removedEntryIds, marks };
}

export function selectionDoc(
  seq: number,
  userId: string,
  entityId: string | null,
): SelectionEvent {
  return { type: "selection", seq, userId, entityId };
}

export function createClassEntry(id: number, createdEntityId: string): EntryDoc {
  return {
    id,
    author: "ann",
    summary: `Created class \`Gateway\` in \`shop/org\``,
    op: { kind: "CreateClass", parentPackageId: ORG, name: "Gateway" },
    createdEntityId,
  };
}

function cube(x: number, y: number, z: number, side = 1, height = 1): LayoutDoc["boxes"][string] {
  return { x, y, z, width: side, height, depth: side };
}

/** Geometry for the mini landscape plus one created class "new-1". */
export function miniLayout(): LayoutDoc {
  return {
    version: 1,
    hash: "f".repeat(64),
    boxes: {
      [SHOP]: { x: 0, y: 0, z: 0, width: 6, height: 0.5, depth: 6 },
      [ORG]: { x: 1, y: 0.5, z: 1, width: 4.5, height: 0.5, depth: 4.5 },
      [CART]: cube(2, 1, 2, 1.5, 2.5),
      [ORDER]: cube(4, 1, 2, 1.5, 2.5),
      "new-1": cube(2, 1, 4),
    },
    links: {
      [CART_ORDER]: { from: [2.75, 3.5, 2.75], to: [4.75, 3.5, 2.75] },
    },
  };
}
