from .assessor import assessor_select, fallback_plan, route_domain
from .common import CallLedger
from .diagnostician import diagnose, resolve_severity
from .evaluator import Coverage, EvaluatorDirective, evaluator_rate, evaluator_turn
from .patient import (
    PatientDirective,
    appraise,
    patient_opening,
    patient_self_report,
    patient_turn,
)
from .state import (
    AgentState,
    Decision,
    PatientStrategy,
    SaturationStatus,
    StimulusAppraisal,
    SuspicionEvidence,
    SuspicionTracker,
    decide,
    select_patient_strategy,
    update_state,
    update_suspicion,
)

__all__ = [
    "AgentState", "CallLedger", "Coverage", "Decision", "EvaluatorDirective", "PatientDirective",
    "PatientStrategy", "SaturationStatus", "StimulusAppraisal", "SuspicionEvidence",
    "SuspicionTracker", "appraise", "assessor_select", "decide", "diagnose", "evaluator_rate",
    "evaluator_turn", "fallback_plan", "patient_opening", "patient_self_report", "patient_turn",
    "resolve_severity", "route_domain", "select_patient_strategy", "update_state",
    "update_suspicion",
]
