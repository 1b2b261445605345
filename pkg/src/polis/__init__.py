"""Grid societies governed by explicit rulebooks.

Six agents on a 6x6 grid gather and deposit resources toward team
projects under partial observability, periodic elimination of the
lowest contributor, and optional conflict. Constitutions (prioritized
moral rules) compile to scripted policies or steer an LLM policy;
episodes are scored on progress, survival, and conflict; populations
of constitutions evolve by island search over a quality-diversity
archive. Logs are canonical JSON lines and replay byte-for-byte.
"""

__version__ = "0.1.0"

from .baselines import BASELINE_NAMES, baseline
from .constitution import (
    Constitution,
    ConstitutionError,
    Directive,
    MoralRule,
    complexity,
    load_constitution,
    parse_constitution,
    save_constitution,
    serialize_constitution,
    validate_constitution,
)
from .evolution import (
    Candidate,
    EliteMap,
    EvolutionConfig,
    EvolutionResult,
    Feedback,
    Island,
    LLMMutator,
    MockMutator,
    ScriptedEvaluator,
    evolve,
)
from .logio import LogFormatError, read_log, write_log
from .policies import ScriptedPolicy, ScriptedProfile, derive_profile
from .scoring import (
    Coefficients,
    classify_action,
    expected_score,
    stability_score,
    trajectory_metrics,
)
from .seeding import child_rng, child_seed
from .stats import (
    SampleSet,
    SensitivityGrid,
    cohens_d,
    describe,
    mann_whitney,
    mean_std_ci,
    sensitivity_grid,
    student_t_quantile,
    welch_t_test,
)
from .world import (
    Action,
    EngineError,
    GridWorld,
    Observation,
    TrajectoryLog,
    WorldConfig,
    apply_overseer,
    init_world,
    observe,
    replay_episode,
    resolve_turn,
    run_episode,
    state_hash,
)

__all__ = [
    "Action",
    "BASELINE_NAMES",
    "Candidate",
    "Coefficients",
    "Constitution",
    "ConstitutionError",
    "Directive",
    "EliteMap",
    "EngineError",
    "EvolutionConfig",
    "EvolutionResult",
    "Feedback",
    "GridWorld",
    "Island",
    "LLMMutator",
    "LogFormatError",
    "MockMutator",
    "MoralRule",
    "Observation",
    "SampleSet",
    "ScriptedEvaluator",
    "SensitivityGrid",
    "ScriptedPolicy",
    "ScriptedProfile",
    "TrajectoryLog",
    "WorldConfig",
    "__version__",
    "apply_overseer",
    "baseline",
    "child_rng",
    "child_seed",
    "classify_action",
    "cohens_d",
    "complexity",
    "describe",
    "derive_profile",
    "evolve",
    "expected_score",
    "init_world",
    "load_constitution",
    "mann_whitney",
    "mean_std_ci",
    "observe",
    "parse_constitution",
    "read_log",
    "replay_episode",
    "resolve_turn",
    "run_episode",
    "save_constitution",
    "sensitivity_grid",
    "serialize_constitution",
    "stability_score",
    "state_hash",
    "student_t_quantile",
    "trajectory_metrics",
    "validate_constitution",
    "welch_t_test",
    "write_log",
]
