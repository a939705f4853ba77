// Error taxonomy. Small on purpose: everything the UI can recover from
// locally is one of these.

/** A server frame that does not fit the protocol. */
export class ProtocolError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ProtocolError";
  }
}

/** Events arrived out of order; the session must resync via a fresh join. */
export class SequenceGap extends ProtocolError {
  constructor(message: string) {
    super(message);
    this.name = "SequenceGap";
  }
}

/** A mark or selection references geometry the layout does not have. */
export class DanglingReference extends Error {
  constructor(message: string) {
    super(message);
    this.name = "DanglingReference";
  }
}

/** The issue form cannot be submitted as-is; shown inline, never thrown away. */
export class ValidationError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ValidationError";
  }
}
