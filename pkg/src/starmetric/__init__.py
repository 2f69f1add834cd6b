"""Star-metric spaces over t-definers: axioms, constructions, covers, sequences and exact search."""

__version__ = "0.1.0"

from .definer import (TDefiner, check_laws, composed, evaluate, fold, joint_zero_radius, kfold_radius,
                      lukasiewicz, maximum, power, star_inverse_lower)
from .space import (StarSpace, ball, check_axioms, closed_ball, dist, from_matrix, from_points,
                    halfline_sqrt_diff, interval_lukasiewicz)
from .construct import disjoint_union, product, truncate
from .cover import (ball_cover, chain_metric, covering_number, diameter, greedy_net, set_distance,
                    star_refines, verify_dense, verify_uniformity_base)
from .analysis import (ModulusSchedule, NestedFamily, SequenceTrace, baire_point, cantor_intersection,
                       converges_to, extract_cauchy_subsequence, is_cauchy_prefix)
from .neighbors import build_index, nn_linear, nn_pruned
