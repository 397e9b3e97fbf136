"""Special-relativistic Kepler dynamics and its energy-dependent Newtonian twin."""
from .analytic import (
    ConicOrbit,
    apsidal_precession,
    binet_parameters,
    conic_from_state,
    orbit_radius,
    precession_ell4,
    precession_schwarzschild_leading,
    precession_sr_leading,
    state_at_pericenter,
)
from .dynamics import (
    FlowField,
    ForceModel,
    central_force_field,
    classical_kepler_field,
    explicit_acceleration,
    relativistic_field,
    transformed_field,
)
from .errors import (
    AsymptoteError,
    ConfigError,
    DomainError,
    DomainExit,
    EnergyMismatch,
    InsufficientEvents,
    IntegrationError,
    MaxStepsExceeded,
    NonMonotoneClock,
    RegionError,
    RelKeplerError,
    SpiralRegime,
    StepUnderflow,
)
from .integrate import (
    IntegratorConfig,
    RunReport,
    Trajectory,
    detect_perihelion,
    integrate,
    integrate_orbits,
    measure_precession,
    precession_estimate,
)
from .model import (
    Family,
    PhaseState,
    PhysicalParams,
    PowerLawPotential,
    Region,
    TransformedPotential,
    classify_region,
    coefficients_for,
    kepler,
    relativistic_apsis_state,
    relativistic_energy,
    transformed_potential,
)
from .reparam import (
    EquivalenceReport,
    integrate_with_forward_clock,
    integrate_with_inverse_clock,
    sigma_branch_check,
    transport_backward,
    transport_forward,
    verify_equivalence,
)

__version__ = "0.1.0"

__all__ = [
    "AsymptoteError",
    "ConfigError",
    "ConicOrbit",
    "DomainError",
    "DomainExit",
    "EnergyMismatch",
    "EquivalenceReport",
    "Family",
    "FlowField",
    "ForceModel",
    "InsufficientEvents",
    "IntegrationError",
    "IntegratorConfig",
    "MaxStepsExceeded",
    "NonMonotoneClock",
    "PhaseState",
    "PhysicalParams",
    "PowerLawPotential",
    "Region",
    "RegionError",
    "RelKeplerError",
    "RunReport",
    "SpiralRegime",
    "StepUnderflow",
    "Trajectory",
    "TransformedPotential",
    "apsidal_precession",
    "binet_parameters",
    "central_force_field",
    "classical_kepler_field",
    "classify_region",
    "coefficients_for",
    "conic_from_state",
    "detect_perihelion",
    "explicit_acceleration",
    "integrate",
    "integrate_orbits",
    "integrate_with_forward_clock",
    "integrate_with_inverse_clock",
    "kepler",
    "measure_precession",
    "orbit_radius",
    "precession_ell4",
    "precession_estimate",
    "precession_schwarzschild_leading",
    "precession_sr_leading",
    "relativistic_apsis_state",
    "relativistic_energy",
    "relativistic_field",
    "sigma_branch_check",
    "state_at_pericenter",
    "transformed_field",
    "transformed_potential",
    "transport_backward",
    "transport_forward",
    "verify_equivalence",
]
