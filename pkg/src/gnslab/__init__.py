"""Finite-dimensional GNS constructions over exact rationals or floats."""

from .algebra import (
    Element,
    StarAlgebra,
    StarHomomorphism,
    StarLinearMap,
    check_homomorphism,
    generated_subalgebra,
    make_function_algebra,
    make_group_algebra,
    make_matrix_algebra,
    tensor_algebra,
)
from .gns import (
    GnsSpace,
    PhysMorphism,
    State,
    cyclic_isomorphism,
    gns,
    gns_c,
    gns_map,
    make_morphism,
    make_state,
    monoidal_iso,
    phys_morphism,
    vectorial_state,
)
from .markov import (
    MarkovMorphism,
    conditioning,
    gns_m,
    gns_mc,
    is_completely_positive,
    kraus_map,
    markov_morphism,
    scattering,
    stinespring,
)
from .numeric import DEFAULT_TOL, EXACT, FLOAT, ToleranceConfig
from .probability import (
    FiniteProbSpace,
    MarkovKernel,
    born_distribution,
    c_of,
    ee_link_check,
    kernel_to_cp,
    kleisli_compose,
)
from .symmetry import GroupAction, equivariant_gns, time_reversal

__version__ = "0.1.0"
