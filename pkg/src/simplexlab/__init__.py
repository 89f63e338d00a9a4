"""Monte Carlo and exact tools for products of simplex configurations in dense sets."""
from .errors import (BadDelta, BadScale, BadSpec, BadWindow, ConfigError, DegeneratePrior,
                     DegenerateSimplex, DimensionMismatch, InfeasibleDensity, ResolutionTooCoarse,
                     ScaleTooLarge, SimplexLabError)
from .rng import Stream
from .simplex import (ProductShape, SimplexData, equilateral_simplex, preset, product_shape,
                      right_simplex, validate_simplex)
from .sampling import (Configuration, MollifiedConfiguration, gram_residual, mollify,
                       sample_conditional_sphere, sample_configuration, sample_rotation_oracle)
from .sets import GridSet, membership
from .forms import (FormEstimate, Witness, check_uniform_decay, estimate_N, find_witnesses,
                    fit_decay_exponent)
from .structured import JensenChain, decompose, jensen_chain, structured_floor
from .singular import (ThetaSpec, check_telescoping, check_triangle, estimate_theta,
                       estimate_theta_tilde, estimate_xi, growth_probe)
from .identities import check_conv_identities, check_heat_identity, scale_split
from .scan import Schedule, ScanReport, scan_lambda, schedule, witness_oracle

__version__ = "0.1.0"
