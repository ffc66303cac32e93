"""Honesty-aware multi-agent psychiatric intake simulation and its evaluation harness."""

from .config import AgentConfig, RunConfig, SessionConfig
from .profiles import PatientProfile, load_feature_bank, load_profile
from .records import CorpusRecord, DiagnosticReport, TurnRecord
from .scales import load_repository, score_scale
from .session import corpus_stats, run_batch, run_session, validate_record

__all__ = [
    "AgentConfig", "CorpusRecord", "DiagnosticReport", "PatientProfile", "RunConfig",
    "SessionConfig", "TurnRecord", "corpus_stats", "load_feature_bank", "load_profile",
    "load_repository", "run_batch", "run_session", "score_scale", "validate_record",
]
