"""Flat (dual bounded-Lipschitz) and Fortet-Mourier norms of discrete signed measures."""

from .flat_norm import (NormError, NormResult, SupportSizeError, bl_distance, bl_dual_norm,
                        brute_force_norm, dual_norm, fm_distance, fm_dual_norm, h,
                        witness_extension, witness_violation)
from .lipschitz import (LipFunction, LipschitzError, LipschitzMap, affine_map, constant,
                        dictionary, disjoint_sum, extend_with_compact_support,
                        function_from_json, hat_function, mcshane_extend, piecewise_linear_1d,
                        sup_family, tent_family_function)
from .markov import (IFS, MarkovError, MarkovOperator, PushForward, StochasticKernel,
                     dirac_continuity_check, dual_apply, dual_iterate, eproperty_probe,
                     ifs_from_affine, ifs_operator, iterate, kernel_operator,
                     measure_equicontinuity_probe, operator_from_json, pushforward_operator)
from .measures import (DensityMeasure1D, DiscreteSignedMeasure, MeasureError, consolidate, dirac,
                       jordan, mass_outside_neighborhood, measure, measure_from_json,
                       measure_to_json, pair, pair_density, sawtooth_g, sinusoid_density,
                       subtract, tv_norm)
from .metric_space import (MetricSpace, PointSet, SpaceError, distance, euclidean,
                           hausdorff_distance, hausdorff_semidistance, matrix_space, metric_from_function,
                           metric_join, naturals, point_set, space_from_json, unit_interval,
                           validate_metric)

__version__ = "0.1.0"
