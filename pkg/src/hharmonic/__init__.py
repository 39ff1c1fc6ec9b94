"""H-harmonic Szegő and weighted Bergman kernels on the real unit ball."""

from .errors import DomainError, NonConvergence
from .geometry import BallPoint, KernelParams
from .hypergeom import (DEFAULT_CONFIG, EvalResult, HypergeomParams, SeriesConfig, appell_f1,
                        exton_x9, gauss_2f1, gegenbauer, pfq, pochhammer, s_m, zonal)
from .kernels import (ExtonArgs, ImTable, bergman, bergman_coeff, bergman_triple_series,
                      bergman_zonal_series, compute_im_table, pair_integral_x9, poisson_h, szego,
                      szego_diagonal, szego_finite_sum, szego_radial_f1, szego_x9)
from .oracle import (QuadratureSpec, SphereFunction, hharmonicity_residual, i_m_quadrature,
                     pair_integral_quadrature, sphere_quadrature, szego_quadrature,
                     zonal_reproducing_check)

__all__ = [
    "DomainError", "NonConvergence", "BallPoint", "KernelParams",
    "DEFAULT_CONFIG", "EvalResult", "HypergeomParams", "SeriesConfig", "appell_f1", "exton_x9",
    "gauss_2f1", "gegenbauer", "pfq", "pochhammer", "s_m", "zonal",
    "ExtonArgs", "ImTable", "bergman", "bergman_coeff", "bergman_triple_series",
    "bergman_zonal_series", "compute_im_table", "pair_integral_x9", "poisson_h", "szego",
    "szego_diagonal", "szego_finite_sum", "szego_radial_f1", "szego_x9",
    "QuadratureSpec", "SphereFunction", "hharmonicity_residual", "i_m_quadrature",
    "pair_integral_quadrature", "sphere_quadrature", "szego_quadrature", "zonal_reproducing_check",
]
