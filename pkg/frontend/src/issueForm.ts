// Issue form state and the draft it submits. Form state is local to the
// browser and isolated from the scene; the draft document is the same
// schema the server's export endpoint consumes, with screenshots as
// base64 attachments. The GitLab token is the server's business.

import { ValidationError } from "./errors";

export type Screenshot = { fileName: string; dataBase64: string };

export type IssueFormState = {
  title: string;
  checkedEntryIds: number[];
  comment: string;
  screenshots: Screenshot[];
  mentions: string[];
};

export type IssueDraftDoc = {
  title: string;
  selectedEntryIds: number[];
  comment?: string;
  screenshots?: Screenshot[];
  mentions?: string[];
};

export type IssueOutcome =
  | { dryRun: true; title: string; body: string }
  | { dryRun: false; url: string; iid: number };

/** Minimal fetch-shaped transport so tests can inject a fake. */
export type PostJson = (
  path: string,
  body: unknown,
) => Promise<{ status: number; json(): Promise<unknown> }>;

export function emptyForm(): IssueFormState {
  return { title: "", checkedEntryIds: [], comment: "", screenshots: [], mentions: [] };
}

export function toggleEntry(form: IssueFormState, entryId: number): IssueFormState {
  const checked = form.checkedEntryIds.includes(entryId)
    ? form.checkedEntryIds.filter((id) => id !== entryId)
    : [...form.checkedEntryIds, entryId];
  return { ...form, checkedEntryIds: checked };
}

/** Submit is enabled only with a real title and at least one entry. */
export function canSubmit(form: IssueFormState): boolean {
  return form.title.trim().length > 0 && form.checkedEntryIds.length > 0;
}

export function buildDraft(form: IssueFormState): IssueDraftDoc {
  if (!canSubmit(form)) {
    throw new ValidationError("issue needs a title and at least one selected entry");
  }
  const ids = [...new Set(form.checkedEntryIds)].sort((a, b) => a - b);
  const draft: IssueDraftDoc = { title: form.title.trim(), selectedEntryIds: ids };
  if (form.comment.trim()) draft.comment = form.comment;
  if (form.screenshots.length > 0) draft.screenshots = [...form.screenshots];
  if (form.mentions.length > 0) draft.mentions = [...form.mentions];
  return draft;
}

export async function submitIssue(
  form: IssueFormState,
  opts: { roomId: string; post: PostJson; dryRun?: boolean },
): Promise<IssueOutcome> {
  const draft = buildDraft(form);
  const body = { room: opts.roomId, dryRun: opts.dryRun ?? false, ...draft };
  const response = await opts.post("/issues", body);
  const payload = (await response.json()) as Record<string, unknown>;
  if (response.status < 200 || response.status >= 300) {
    const detail =
      typeof payload?.detail === "string" ? payload.detail : `server said ${response.status}`;
    throw new ValidationError(detail);
  }
  return payload as IssueOutcome;
}
