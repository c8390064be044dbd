"""Ancestral branching and cut-and-paste Markov chains on set partitions,
fragmentation trees, mass fragmentations and weighted trees."""
from .combinatorics import (
    FragmentationTree, GenealogicalIndex, SetPartition, apply_injection, bell_number,
    canonical_partition, enumerate_partitions, enumerate_trees, fiber, one_block,
    restrict, restricted_root_partition, root_partition, tree_distance)
from .paintbox import (
    FiniteSupport, LabelMeasure, MixtureMeasure, RankedMassPartition, SymmetricDirichlet,
    load_nu, nu_from_dict, paintbox_prob, paintbox_sample, rho_nu_prob, rho_nu_sample)
from .cp_kernel import (
    CPDriver, PartitionKernelFamily, StateSpaceTooLarge, StochasticMatrix, cp_apply,
    cp_family, cp_matrix, cp_prob, cp_sample, general_cp_sample)
from .drivers import Driver, KeyedDrivers, SequentialDrivers, draw_driver
from .ab_kernel import (
    ABKernel, CTChainConfig, DegenerateKernelError, RejectionLimitError, ab_chain,
    ab_matrix, ab_prob, ab_prob_recursive, ab_sample, cp_ab_kernel, ct_simulate,
    genealogical_map, genealogical_sample, poisson_simulate)
from .mass_frag import (
    MassFragmentation, asymptotic_frequency, mass_chain, mass_ct_simulate, mass_of_tree,
    mass_step)
from .weighted_trees import (
    WeightedTree, from_newick, to_newick, weighted_chain, weighted_log_density,
    weighted_restrict, weighted_sample)
from .analysis import (
    PropertyReport, ab2_alpha_prob, ab2_comparison, alpha_permanent, meet,
    partition_matrix, property_report, stationary)
from ._random import UniformStream, derive_rng

__version__ = "0.1.0"
