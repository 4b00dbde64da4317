"""Expected first-return times of iterated quantum channels under stroboscopic monitoring."""
from .asymptotics import (
    decaying_subspace,
    kac_hypothesis,
    recurrence_certificate,
    relevant_subspace,
    steady_state,
)
from .channel import (
    ChannelValidationError,
    QuantumChannel,
    apply,
    basis_state,
    projector,
    pure_state,
    superoperator,
    validate_cptp,
)
from .constructions import (
    ClassicalChain,
    SiteCoupling,
    from_classical_chain,
    from_unitary,
    hitting_time_channel,
    monitored_site_channel,
    random_channel,
)
from .monitor import (
    chi_M,
    expected_return_time,
    project_out,
    rho_cond_sum,
    sample_return_time,
    survival_curve,
)
from .numerics import NonConvergenceError

__version__ = "0.1.0"
