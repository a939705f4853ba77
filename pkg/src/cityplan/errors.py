"""Exception hierarchy shared by all cityplan modules.

Every error carries a stable ``kind`` string (its class name) that is used
verbatim in CLI error prefixes (``error:<Kind>:``) and in protocol
``rejected`` events, so renaming a class here is a wire-format change.
"""

from __future__ import annotations


class CityPlanError(Exception):
    """Base class for all domain errors."""

    @property
    def kind(self) -> str:
        return type(self).__name__


# -- model / ingestion ------------------------------------------------------

class MalformedDocument(CityPlanError):
    """Input document is not syntactically valid."""


class SchemaViolation(CityPlanError):
    """Document parsed but does not match the declared file schema."""


class InvalidModel(CityPlanError):
    """A landscape failed validation; the report travels with the error."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = list(report or [])


class DanglingLink(CityPlanError):
    """A communication link endpoint does not resolve to a class."""


# -- restructure ------------------------------------------------------------

class UnknownEntity(CityPlanError):
    """An entity id resolves to nothing."""


class EntityDeleted(CityPlanError):
    """The referenced entity is marked deleted and cannot be modified."""


class DuplicateName(CityPlanError):
    """The requested name collides with a sibling."""


class CyclicMove(CityPlanError):
    """Moving an entity into itself or one of its descendants."""


class SelfCommunication(CityPlanError):
    """Communication source and target are the same class."""


class InvalidTarget(CityPlanError):
    """The op targets an entity kind it cannot apply to."""


class UnknownEntry(CityPlanError):
    """A changelog entry id does not exist."""


class CorruptLedger(CityPlanError):
    """A changelog entry failed to apply during replay; signals a bug."""


# -- collaboration ----------------------------------------------------------

class UnknownRoom(CityPlanError):
    """Room id does not exist."""


class NotMember(CityPlanError):
    """The user is not a member of the room."""


class MalformedMessage(CityPlanError):
    """A protocol message does not fit any known shape."""


# -- issue export -----------------------------------------------------------

class EmptySelection(CityPlanError):
    """No changelog entries were selected for the issue."""


class AuthFailed(CityPlanError):
    """GitLab rejected the token (401/403) or no token was provided."""


class ProjectNotFound(CityPlanError):
    """GitLab project does not exist (404)."""


class RemoteError(CityPlanError):
    """GitLab returned a server-side error after the single retry."""


class TransportError(CityPlanError):
    """Network-level failure talking to GitLab."""


class IoError(CityPlanError):
    """Local file read/write failed."""
