"""Structure and parameter learning for binary and general-alphabet
Markov random fields from i.i.d. samples, built on a multiplicative-
weights learner for sparse generalized linear models, with exact
samplers and brute-force verification of every recovery guarantee at
enumeration scale."""

from .polynomials import MultilinearPoly, enumerate_monomials, sigmoid
from .sparsitron import (
    SampleShortfallError,
    SparsitronConfig,
    SparsitronResult,
    SparsitronState,
    double_features,
    empirical_risk,
    hedge_update,
    signed_from_doubled,
    sparsitron_learn,
    sparsitron_step,
)
from .ising import (
    IsingEstimate,
    IsingModel,
    OnlineIsingLearner,
    edge_precision_recall,
    structure_edges,
)
from .ising import learn_model as learn_ising
from .ising import learn_row as learn_ising_row
from .mrf import MrfConfig, MrfModel, expand_example, median_coefficient
from .mrf import learn_parameters as learn_mrf_parameters
from .mrf import learn_structure as learn_mrf_structure
from .nonbinary import NonBinaryConfig, NonBinaryIsing, PairEstimate, one_hot
from .nonbinary import learn_structure as learn_nonbinary_structure
from .samplers import (
    ExactDistribution,
    SampleBatch,
    delta_unbiasedness,
    exact_distribution,
    exact_sample,
    gibbs_sample,
    parity_mrf,
)
from .oracle import (
    VerificationReport,
    exact_risk,
    verify_anticoncentration,
    verify_l1_recovery,
    verify_linf_recovery,
    verify_maximal_monomial_tail,
    verify_median_claim,
    verify_sigmoid_gap,
)

__version__ = "0.1.0"
