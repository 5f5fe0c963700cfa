"""isochron: numerical laboratory for forced isochronous oscillators.

Builds the action-angle geometry of x'' + V'(x) + g(x) = f(t), measures its
stroboscopic and angle-return maps against their first-order asymptotics,
evaluates the resonant/non-resonant boundedness conditions, and runs
long-horizon boundedness sweeps.
"""

from . import (action_angle, criteria, diagnostics, errors, flow, model,
               numerics, poincare)
from .action_angle import (ActionAngle, EnergyLevel, from_action_angle,
                           reference_C, to_action_angle)
from .criteria import (ConditionReport, IrrationalFrequency,
                       RationalFrequency, classify_frequency, phi_f)
from .diagnostics import OrbitVerdict, SweepConfig, growth_fit, sweep
from .flow import FlowSpec, PhaseState, angle_return, integrate_to, strobe_orbit
from .model import (ArctanPerturbation, AsymmetricLinear, BonheureFabry,
                    BoundedCustom, CustomPotential, ForcingSpec, Harmonic,
                    OscillatorSystem, ZeroPerturbation, check_hypotheses)
from .numerics import (QuadratureSpec, RootSpec, fd_derivative, find_root,
                       integrate, integrate_turning)
from .poincare import (ConvergenceTable, ReturnRecord, ScaledCoords,
                       asymptotic_l1l2, averaged_twist, nonresonant_sigma,
                       resonant_return, verify_map_asymptotics)

__version__ = "0.1.0"
