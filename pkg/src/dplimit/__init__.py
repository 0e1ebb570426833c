"""Differentially private language generation and identification in the limit.

Simulation library: integer-coded language families with exact closure
arithmetic, pure-DP mechanisms with replayable randomness, the continual
release generators and identifiers, adversarial stream sources, and privacy
auditors (exact and Monte-Carlo).
"""

from .languages import (AugmentedCollection, ClosureDescriptor, Collection,
                        DyadicCollection, Language, NoTelltaleError,
                        PairSubsetCollection, SpernerCollection, TellTale,
                        ThresholdCollection, UndecidedClosureError,
                        collection_from_spec, collection_from_token,
                        make_disjoint_union_collection, make_dyadic_collection,
                        make_pair_subset_collection, make_sperner_collection,
                        make_threshold_collection)
from .mechanisms import (BudgetSchedule, DpCheckResult, ExpMechSpec,
                         MechanismTranscript, RejectionCapError,
                         budget_partial_sum, dp_audit_empirical, dp_check_exact,
                         exp_mechanism_countable, exp_mechanism_finite,
                         rng_from_seed, sample_laplace)
from .generation import (IntersectionGenerator, generate_once,
                         intersection_privacy_ledger,
                         run_subset_generator_continual, sample_unseen,
                         subset_mechanism_probabilities, subset_score)
from .identification import (active_cap, epoch_error_bound,
                             epoch_release_probabilities, run_epoch_identifier,
                             run_telltale_identifier, utility_sensitivity_probe)
from .streams import (StreamSpec, canonical_stream, iid_stream, materialize,
                      neighbor_pair, swap_stream)
from .experiments import (RunConfig, RunMetrics, run_experiment,
                          sample_complexity_sweep)

__version__ = "0.1.0"
