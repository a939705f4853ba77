"""Collaborative software-city planning: trace ingestion, deterministic 3D
layout, a coalescing undoable changelog, room-based collaboration, and
GitLab issue export."""

from .errors import CityPlanError
from .model import (
    Application,
    Class,
    CommunicationLink,
    Landscape,
    LandscapeIndex,
    Method,
    Package,
    validate_landscape,
)
from .restructure import (
    ChangelogEntry,
    EffectiveModel,
    PlanState,
    apply_change,
    entry_summary,
    fresh_state,
    modification_marks,
    replay,
    undo_entry,
)

__all__ = [
    "Application",
    "ChangelogEntry",
    "CityPlanError",
    "Class",
    "CommunicationLink",
    "EffectiveModel",
    "Landscape",
    "LandscapeIndex",
    "Method",
    "Package",
    "PlanState",
    "apply_change",
    "entry_summary",
    "fresh_state",
    "modification_marks",
    "replay",
    "undo_entry",
    "validate_landscape",
]

__version__ = "0.1.0"
