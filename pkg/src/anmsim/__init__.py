"""Fast grid simulation and RL-style environments for distribution-network
operation studies."""

from .errors import (
    AnmError,
    ArityMismatch,
    BadField,
    Closed,
    DivergedState,
    InitStateInfeasible,
    InvalidConfig,
    MalformedDocument,
    MissingSection,
    NotReset,
    PowerFlowDiverged,
    ProfileArityMismatch,
    ProfileChecksumMismatch,
    ProfileFileMissing,
    SingularBranch,
)
from .network import (
    BranchSpec,
    BusKind,
    BusSpec,
    DeviceKind,
    DeviceSpec,
    Issue,
    NetworkSpec,
    Severity,
    ValidationReport,
    load_network,
    parse_network,
    serialize_network,
    validate,
)
from .powerflow import (
    AdmittanceMatrix,
    BranchFlowSet,
    BranchModel,
    PowerFlowSolution,
    PowerFlowSolver,
    SolverOptions,
    branch_flows,
    build_admittance,
    solve,
    total_losses,
)
from .simulation import (
    GridState,
    SimulationEngine,
    StochasticVars,
    TransitionOutcome,
    clip_action,
    energy_loss,
    next_state,
    penalty,
    reward,
    storage_transition,
)
from .env import (
    FULL_STATE,
    EnvConfig,
    Environment,
    EnvironmentHooks,
    ObservationSelector,
    StepResult,
    build_env,
    selector_of,
)
from .snapshot import (
    StateSnapshot,
    read_snapshots,
    snapshot_from_json,
    snapshot_to_json,
)
from .anm6 import (
    DailyProfileSet,
    anm6_init_state,
    anm6_network,
    anm6_next_vars,
    build_anm6,
    load_profiles,
)

__version__ = "0.1.0"
