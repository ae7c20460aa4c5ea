"""Model-based authoring, validation, and delivery of maintenance training."""

from .model import (
    VERIFY_TOLERANCE,
    AlreadyInStatus,
    Block,
    ChangeSet,
    Comparator,
    Connect,
    Connection,
    Disconnect,
    Discipline,
    MismatchedModels,
    ModelFault,
    ModelOp,
    ModelState,
    OpFault,
    PlantModel,
    Port,
    PortKind,
    SetObservable,
    Status,
    UnknownRef,
    Verify,
    VerifyFailed,
    apply_changeset,
    apply_op,
    check_model,
    contains,
    diff_states,
    initial_state,
)
from .procedure import (
    MAX_ENUMERATION_STEPS,
    Annotation,
    Constraint,
    EnumerationResult,
    Lesson,
    LessonError,
    NoReversePairs,
    OpFaultRecord,
    Precedence,
    ReversalCheck,
    Step,
    StepFault,
    TooManySteps,
    ValidationReport,
    VerifyBetween,
    Violation,
    check_reversal,
    enumerate_valid_orders,
    order_is_valid,
    state_at,
    step_annotation,
    validate_lesson,
)
from .textformat import (
    FaultCode,
    InvalidModel,
    ParseError,
    ParseFault,
    SourceSpan,
    parse_lesson,
    parse_model,
    serialize_model,
)
from .render import DEFAULT_PALETTE, InvalidState, RenderSpec, render_dot, render_svg
from .protocol import Message, ProtocolFault, decode, encode
from .session import (
    HandleResult,
    LogEvent,
    SessionActive,
    SessionReport,
    SessionState,
    expire,
    handle,
    new_session,
    replay_events,
    session_report,
)
from .evaluation import (
    DEFAULT_TOLERANCES,
    FeasibilityVerdict,
    GroupScore,
    QuestionnaireResponse,
    RecallRecord,
    StatTriple,
    TableRow,
    Tolerances,
    audit_as_json,
    audit_row,
    audit_tables,
    compare_reported_means,
    descriptive_stats,
    load_recall_records,
    load_responses,
    load_table_rows,
    render_audit_lines,
    score_recall,
)
from .server import replay_log, serve

__all__ = [name for name in dir() if not name.startswith("_")]
