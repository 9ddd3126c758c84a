"""Deterministic non-monotone submodular maximization toolkit.

Solvers for matroid and knapsack constraints built on an exactly
evaluable fractional relaxation with subset-indexed coordinates, plus a
verification layer that replays every per-step guarantee against
brute-force oracles at desk scale.
"""

from .errors import (BudgetError, ConfigError, ContractViolation,
                     InstanceError, SubmaxError, UndefinedDerivative)
from .extension import (UnionDistribution, coordinate_derivative,
                        expected_value, join, marginal, marginals, prob_sum,
                        relax, union_evaluator)
from .ground import GroundSet, bit, ids_of, iter_bits, mask_of, popcount
from .kernel import BACKEND as KERNEL_BACKEND
from .knapsack_solver import (KnapsackInstance, knapsack_dmcg, knapsack_round,
                              knapsack_split, solve_knapsack)
from .matroid import (AugmentedMatroid, GraphicMatroid, PartitionMatroid,
                      UniformMatroid, complete_to_basis, make_graphic,
                      make_partition, make_uniform)
from .matroid_solver import (AlgoConfig, continuous_greedy, local_search,
                             make_config, pipage_round, solve_matroid, split)
from .setfn import (CoverageFunction, CutFunction, QueryCounter, SetFunction,
                    ShiftedFunction, TableFunction, augment_with_dummies,
                    make_coverage, make_cut, make_table, restrict_translate,
                    shift_out)
from .verify import (BruteForceResult, brute_force_opt, check_stationarity,
                     check_trace, is_submodular, lovasz, matroid_axioms_ok,
                     mc_estimate)

__version__ = "0.1.0"
