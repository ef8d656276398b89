from .basis import RadialGrid, DKBBasis
from .spectrum import (
    DiracSpectrum,
    RadialOrbital,
    BoundState,
    PointOneS,
    build_spectrum,
    bound_state,
    bound_1s,
    exclusion_set,
    reduced_green_apply,
    sommerfeld_energy,
    point_1s,
    orbital_angular_momentum
)
from .cache import SpectrumCache
