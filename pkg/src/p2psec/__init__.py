"""Domain-scoped security properties for peer-to-peer resource sharing.

The package covers the full pipeline: a small policy model whose
properties attach to named domains and the files inside them, an XML
exchange format, projection of properties onto mandatory access control
rules with audit-record verification, per-property trust negotiation
between peers, and a deterministic multi-peer simulator.
"""

from .errors import (
    AvcParseError,
    ChallengeError,
    DuplicateDomainError,
    EmptyEvaluationError,
    MacError,
    MissingTrustValueError,
    NegotiationError,
    NoDelegatesError,
    P2PSecError,
    PolicyError,
    PolicyValidationError,
    PrivacyViolationError,
    PropertyConflictError,
    PublicationForbiddenError,
    ScenarioError,
    TrustError,
    UnknownDomainError,
    UnknownPermissionError,
    UnknownResourceError,
    UnknownScopeError,
    XmlError,
    XmlSyntaxError,
    XmlValidationError,
)
from .policy import (
    CONFLICTING_KIND_PAIRS,
    Domain,
    KIND_ORDER,
    PeerPolicy,
    PROHIBITION_KINDS,
    PERMISSION_KINDS,
    PropertyKind,
    Resource,
    SecurityProperty,
    TARGETED_KINDS,
    confidentiality,
    conflicts,
    cooperation,
    integrity,
    nopublication,
    noshare,
    property_set_conflicts,
    render_properties,
    sort_properties,
    spread,
)
from .policy_xml import (
    DocDomain,
    DocFile,
    DocProperty,
    PolicyDocument,
    from_peer_policy,
    parse_policy,
    serialize_policy,
    to_peer_policy,
)
from .mac import (
    AvcRecord,
    Challenge,
    CompiledPolicy,
    Decision,
    DEFAULT_RULESET,
    DIR_PERMISSIONS,
    FILE_PERMISSIONS,
    KIND_NEVERALLOW,
    MacRuleSet,
    Permission,
    PermissionClass,
    SecurityContext,
    VerifyResult,
    check_access,
    compile_policy,
    emit_rules,
    kind_ruleset,
    make_challenge,
    object_context,
    parse_avc,
    parse_challenge,
    parse_rules,
    render_avc,
    render_challenge,
    render_contexts,
    sanitize_label,
    verify_challenge,
)
from .trust import (
    Band,
    ChallengeKind,
    ChallengeResult,
    HistoryRecord,
    HistoryScore,
    PeerId,
    TrustComputation,
    TrustConfig,
    TrustLedger,
    band,
    eval_hist_norm,
    eval_history,
    run_challenges,
    trust_value,
    update_reputation,
)
from .negotiation import (
    DecisionNotice,
    NegotiationSession,
    Outcome,
    PolicySlice,
    ResourceRequest,
    ResourceTransfer,
    SliceRequest,
    aggregate_eval,
    apply_transfer,
    decide,
    eval_property,
    open_session,
)
from .simnet import (
    BehaviorModel,
    ExperimentReport,
    NegotiationRecord,
    PeerAgent,
    PopulationParams,
    RunReport,
    Scenario,
    SimulationEngine,
    cross_reference_history,
    detection_experiment,
    parse_scenario,
    render_experiment,
    render_report,
    run_scenario,
)
from .bench import (
    BenchPoint,
    BenchReport,
    LinearFit,
    linear_fit,
    render_benchmark,
    run_benchmark,
    synthetic_policy,
)

__version__ = "0.1.0"
