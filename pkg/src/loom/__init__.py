"""Branching narrative orchestration engine."""

from .generation import BackendDescriptor, GenerationResult, MockBackend
from .memory import CharacterMemoryState, MemoryItem, PerceivedEvent, WorkingMemory
from .orchestrator import (
    Session,
    StirHint,
    WorldStateView,
    advance,
    export_transcript,
    novelty_score,
    replay,
    select,
    shape,
    state_at,
    stir,
    stir_hint,
)
from .scenario import (
    CharacterProfile,
    ReshapeDelta,
    Scenario,
    SimulationParams,
    WorldConfig,
    apply_deltas,
    diff_profiles,
    load_scenario_file,
    scenario_from_dict,
    scenario_to_dict,
    validate_scenario,
)
from .timeline import BranchTree, ComparisonView, TurnNode

__version__ = "0.1.0"

__all__ = [
    "BackendDescriptor",
    "BranchTree",
    "CharacterMemoryState",
    "CharacterProfile",
    "ComparisonView",
    "GenerationResult",
    "MemoryItem",
    "MockBackend",
    "PerceivedEvent",
    "ReshapeDelta",
    "Scenario",
    "Session",
    "SimulationParams",
    "StirHint",
    "TurnNode",
    "WorkingMemory",
    "WorldConfig",
    "WorldStateView",
    "advance",
    "apply_deltas",
    "diff_profiles",
    "export_transcript",
    "load_scenario_file",
    "novelty_score",
    "replay",
    "scenario_from_dict",
    "scenario_to_dict",
    "select",
    "shape",
    "state_at",
    "stir",
    "stir_hint",
    "validate_scenario",
]
