"""horolab: numerical experiments on iterates of nonexpansive maps.

Iterate maps on R^d, truncated l2 and l1 model spaces; estimate escape
rates; diagnose convergence in direction; fit orbit limits against the full
catalogs of metric functionals; and extract and verify invariant directions
and half-space containments.
"""

__version__ = "0.1.0"

from .spaces import (  # noqa: F401
    L1_SEQ,
    L2_SEQ,
    SeqVector,
    Space,
    SpaceMismatchError,
    add,
    basis,
    euclidean,
    from_array,
    inner,
    l1_norm,
    l2_norm,
    norm,
    scale,
    sub,
    to_array,
    zero,
)
from .functionals import (  # noqa: F401
    AuditReport,
    CoordSpec,
    HilbertFunctional,
    L1Functional,
    LimitFit,
    LinearFunctional,
    PointFunctional,
    axis_probes,
    center,
    eps,
    evaluate,
    fit_limit,
    functional_from_json,
    functional_to_json,
    linear_minorant,
    lipschitz_audit,
    point_functional,
)
from .maps import (  # noqa: F401
    DEFAULT_SUPPORT_WINDOW,
    DEFAULT_T_GRID,
    AffineMap,
    AveragedMap,
    DenseOperator,
    DiagonalOperator,
    EdelsteinIsometry,
    ExpansionReport,
    FirmnessReport,
    PluginMap,
    RotationOperator,
    ShiftMap,
    ShiftOperator,
    SupportWindowError,
    check_firm,
    check_nonexpansive,
    get_plugin,
    map_from_json,
    map_to_json,
    operator_norm_estimate,
    register_plugin,
    unregister_plugin,
)
from .dynamics import (  # noqa: F401
    CosmicReport,
    EscapeReport,
    MeanErgodicReport,
    MonotoneReport,
    StepNormReport,
    Trajectory,
    cosmic_diagnose,
    escape_rate,
    iterate,
    log_checkpoints,
    mean_ergodic,
    monotone_functional_check,
    step_monotone_defect,
    step_norm_check,
)
from .invariant import (  # noqa: F401
    HalfSpaceReport,
    InvarianceReport,
    extract_functional,
    half_space,
    hypothesis_test,
)
from .config import (  # noqa: F401
    EXPERIMENTS,
    ConfigError,
    ExperimentConfig,
    bundled_config_names,
    bundled_config_path,
    load_config,
    validate_config,
)
from .runner import (  # noqa: F401
    available_series,
    emit_series,
    report_json,
    run_experiment,
    series_csv,
)
