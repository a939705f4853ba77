export * from "./protocol";
export * from "./errors";
export { RoomProjection } from "./projection";
export type { EntityKind, ProjectionSnapshot, SelectionView } from "./projection";
export { buildScene } from "./scene";
export type { CameraState, SceneBox, SceneModel } from "./scene";
export { popupFor, popupSpec, popupTitle } from "./popup";
export type { PopupButton, PopupSpec } from "./popup";
export {
  buildDraft,
  canSubmit,
  emptyForm,
  submitIssue,
  toggleEntry,
} from "./issueForm";
export type {
  IssueDraftDoc,
  IssueFormState,
  IssueOutcome,
  PostJson,
  Screenshot,
} from "./issueForm";
export { RoomClient } from "./client";
export type { RoomClientOptions, SocketLike } from "./client";
export { applyCamera, buildCityGroup, captureScreenshot, disposeCityGroup } from "./render";
