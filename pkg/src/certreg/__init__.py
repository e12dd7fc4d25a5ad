"""Certified regression: per-prediction robustness of median-based regressors
against training-set insertions and deletions."""
from .costs import (DeletionFamily, compute_deletion_cost, cost_profiles, deletion_family,
                    ensemble_families)
from .ensemble import (CostProfile, EnsembleModel, cert_pcr, cert_pcr_two_sided, cert_wpcr,
                       cert_wpcr_two_sided, ensemble_predict, train_ensemble, train_overlapping,
                       train_partitioned)
from .harness import (CertCurve, Dataset, ExperimentConfig, ThresholdSpec, emit_results,
                      load_csv, load_results, run_experiment)
from .ibl import (NeighborModel, cert_knn, cert_neighbors_two_sided, cert_rnn, default_k,
                  fit_neighbor_model, neighborhood)
from .median import (Certificate, Paradigm, Provenance, Side, Status, ThreatModel, VoteSet,
                     WeightedVoteSet, binarize, cert_insert_delete, cert_lower_side, cert_swap,
                     cert_two_sided, cert_upper_side, cert_weighted_swap, combine_two_sided,
                     median, naive_weighted_swap_bound)
from .overlap import (CoverInstance, CoverSolution, NotRobustError, build_cover_instance,
                      cert_ocr, cert_overlap_two_sided, cert_wocr, certify_overlap,
                      cover_instance_from_predictions, greedy_partial_cover, psmc_factor,
                      read_instance, solve_ilp_bb, write_instance)
from .partition import BlockMapping, PartitionAssignment, build_block_mapping, partition_train
from .submodels import Constant, Ridge, train_ridge

__version__ = "0.1.0"
