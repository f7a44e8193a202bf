"""Scenario bundle analysis: stage-indexed assessment states, scenario
trees grown from them, distances between methodological variants, and
deterministic update dynamics with full provenance.

The subpackages split along the pipeline:

- ``model``       the assessment state and its carrier records
- ``validation``  structural checks and attitude coherence axioms
- ``actions``     option instantiation, preconditions, effects
- ``epistemics``  derived aims, perception, and affectedness
- ``aggregation`` coalition-level attributes, attitudes, ties, stability
- ``trees``       scenario trees, salience, generation
- ``solve``       backward induction, likelihood paths, bundle selection
- ``space``       descriptor encodings, distances, robustness sweeps
- ``evaluation``  utilities, frontiers, dominance, threshold analysis
- ``dynamics``    stage updates, cascades, history chains
- ``ingest``      record parsing, gating, changeset assembly
- ``sbafile``     canonical serialization and content digests
- ``cli``         the ``scenariokit`` command
"""

from .errors import (
    BindingError,
    ChainError,
    CycleError,
    EngineError,
    MissingDataError,
    NormalizationError,
    ReferenceError_,
    SchemaError,
    UsageError,
)
from .model import AssessmentState, ChangeSet, TypedRecord
from .trees import Bundle, GenerationParams, ScenarioTree, generate_tree
from .solve import backward_induct, mlp, mrp_under_uncertainty
from .space import DistanceSpec, EncodingSpec, tree_distance, bundle_distance
from .evaluation import (
    EvaluationConfig,
    ScenarioSet,
    evaluation_matrix,
    pareto_frontier,
)
from .dynamics import apply_update, history_trace, regenerate_bundle
from .ingest import build_changeset, gate_record, parse_record
from .validation import validate_assessment_state
from .sbafile import content_digest, load, save

__version__ = "0.1.0"

__all__ = [
    "AssessmentState",
    "BindingError",
    "Bundle",
    "ChainError",
    "ChangeSet",
    "CycleError",
    "DistanceSpec",
    "EncodingSpec",
    "EngineError",
    "EvaluationConfig",
    "GenerationParams",
    "MissingDataError",
    "NormalizationError",
    "ReferenceError_",
    "ScenarioSet",
    "ScenarioTree",
    "SchemaError",
    "TypedRecord",
    "UsageError",
    "apply_update",
    "backward_induct",
    "build_changeset",
    "bundle_distance",
    "content_digest",
    "evaluation_matrix",
    "gate_record",
    "generate_tree",
    "history_trace",
    "load",
    "mlp",
    "mrp_under_uncertainty",
    "pareto_frontier",
    "parse_record",
    "regenerate_bundle",
    "save",
    "tree_distance",
    "validate_assessment_state",
    "__version__",
]
