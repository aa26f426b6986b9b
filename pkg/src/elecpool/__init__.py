"""Electricity pooling market laboratory for inelastic demand.

Library layers, bottom to top:

* ``costs`` / ``scenario``: producer cost curves and validated market instances.
* ``dispatch``: the operator's least-cost dispatch with first-order optimality
  certificates, plus an independent enumeration oracle.
* ``mechanism``: the message game (cyclic successor pricing, price-disagreement
  and imbalance taxes), allocations, utilities, welfare, and the budget ledger.
* ``equilibrium``: the two known equilibria, search-based epsilon certification,
  and audits of the mechanism's advertised properties.
* ``dynamics``: exploratory best-response iteration.
* ``fileio`` / ``report`` / ``cli``: JSON schemas, reports, figures, driver.
"""

__version__ = "0.1.0"

from .costs import (  # noqa: F401
    CostFunction,
    CostValidation,
    Producer,
    require_valid_cost,
    validate_cost,
)
from .dispatch import (  # noqa: F401
    DispatchResult,
    KKTCertificate,
    KKTResiduals,
    aggregate_supply,
    brute_force_dispatch,
    kkt_residuals,
    price_ceiling,
    production_cost,
    solve_dispatch,
)
from .dynamics import (  # noqa: F401
    Trajectory,
    random_profile,
    run_best_response_dynamics,
)
from .equilibrium import (  # noqa: F401
    BestResponse,
    EquilibriumReport,
    FeatureAudit,
    FeatureCheck,
    IdentityResiduals,
    SearchConfig,
    audit_features,
    audit_identities,
    best_response,
    construct_equilibrium,
    deviation_gains,
    trivial_equilibrium,
    trivial_equilibrium_report,
    verify_epsilon,
)
from .errors import (  # noqa: F401
    DispatchError,
    EquilibriumError,
    FileFormatError,
    InvalidCostError,
    InvalidScenarioError,
    MechanismError,
    OracleBudgetError,
    PoolError,
    ValidationIssue,
)
from .fileio import (  # noqa: F401
    load_messages,
    load_scenario,
    save_messages,
    save_scenario,
)
from .mechanism import (  # noqa: F401
    Allocation,
    BudgetLedger,
    Message,
    MessageProfile,
    budget_ledger,
    consumer_utility,
    imbalance,
    normalize_profile,
    outcome,
    producer_utilities,
    producer_utility,
    social_welfare,
)
from .scenario import (  # noqa: F401
    ProductionProfile,
    Scenario,
    require_valid_scenario,
    validate_scenario,
)
