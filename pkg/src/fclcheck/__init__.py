"""Compliance checking of annotated process models against defeasible deontic rules."""

from .compliance import (
    ComplianceReport,
    Diagnosis,
    check_process,
    load_log,
    parse_log,
    replay_log,
)
from .fcl import (
    DeonticLiteral,
    Modality,
    ReparationChain,
    Rule,
    RuleParseError,
    RuleSet,
    load_rules,
    parse_rules,
    ruleset_stats,
    serialize_rules,
)
from .lifecycle import LifecycleConfig, ObligationInstance, Status, TraceResult, evaluate_trace
from .process_model import (
    Literal,
    ModelError,
    ProcessGraph,
    Task,
    TraceOverflow,
    enumerate_traces,
    load_model,
    parse_model,
    validate_graph,
)
from .reasoner import conclusions, force
from .state import cumulate, state_at

__version__ = "0.1.0"
