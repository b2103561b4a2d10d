"""Two-qutrit OAM entanglement decay through single-phase-screen turbulence.

Library layout:

* lgmodes       Laguerre-Gaussian basis modes and their generating function
* turbulence    Kolmogorov statistics and phase-screen synthesis
* spdc          down-conversion source model and the projected pure state
* channel       analytic and Monte Carlo single-phase-screen channel
* entanglement  partial transpose, negativity, closed-form expressions
* tomography    simulated projective coincidence tomography
* experiment    sweep driver and report emission (CSV / JSON / SVG)
"""

__version__ = "0.1.0"

from .lgmodes import (FieldGrid, GridSpec, LGIndex, QutritBasis, ResolutionError,
                      lg_amplitude, lg_generating_derivative, lg_generating_value,
                      lg_normalization, sample_mode)
from .turbulence import (PhaseScreen, TurbulenceParams, estimate_structure_fn,
                         fried_parameter, generate_screen, generate_tilt_screen,
                         load_screen, phase_psd, save_screen,
                         structure_fn_kolmogorov, structure_fn_quadratic,
                         tilt_variance)
from .spdc import (PureProjectedState, SpdcParams, beta_parameter,
                   effective_pump_width, initial_state, spdc_amplitude_fourier,
                   spdc_amplitude_position)
from .channel import (BipartiteDensityMatrix, ChannelParams, analytic_density_matrix,
                      eta_from_xi, generating_coefficient, monte_carlo_density_matrix,
                      screen_coincidence_amplitudes, xi_from_eta,
                      xi_from_scintillation)
from .entanglement import (ClosedFormParams, NegativityResult, negativity,
                           negativity_closed_form, partial_transpose,
                           eta_from_scintillation, verify_closed_form_mapping)
from .tomography import (CountRecord, MeasurementMap, Projector, counts_to_csv,
                         reconstruct, reconstruct_from_rates, simulate_counts,
                         standard_pairs, standard_projector_set, trace_distance)
from .experiment import SweepConfig, SweepPoint, SweepResult, emit_outputs, run_sweep
