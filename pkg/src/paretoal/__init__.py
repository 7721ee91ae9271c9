"""Pool-based active learning under OOD contamination.

Query batches are chosen by Monte-Carlo Pareto optimization over two
objectives — summed querying density (informativeness) and summed ID
confidence (distribution fit) — with classical single-score baselines and a
reproducible evaluation harness alongside.
"""

__version__ = "0.1.0"

from .acquisition import (ScoreTable, build_score_table, entropy_scores,
                          margin_scores, querying_density)
from .config import (DatasetConfig, ExperimentConfig, config_from_dict,
                     load_config, load_synthetic_spec)
from .data import (Dataset, PoolState, SyntheticSpec, gen_synthetic, init_pool,
                   load_csv, make_ood_split, oracle_query, parse_libsvm,
                   serialize_libsvm)
from .errors import ConfigError, ParseError
from .harness import (ExperimentResult, RoundRecord, aubc, read_records,
                      run_experiment, run_trial, write_report)
from .idscore import (GmmConfig, GmmModel, TiedGaussModel, fit_gmm_per_class,
                      fit_tied_gaussians, id_confidence_gmm, id_confidence_tied,
                      mahalanobis_sq, normalize_scores)
from .learner import (ClassifierModel, TrainConfig, fit, loss_and_grad,
                      predict, predict_proba)
from .pareto import (CandidateSubset, Dominance, ParetoArchive, PoalConfig,
                     archive_insert, compare, early_stop_check, final_select,
                     mc_poal, mmd, objectives, pre_select, random_subset,
                     strictly_dominates, weakly_dominates)
from .strategies import (select, select_ideal_ent, select_poal, select_topk,
                         select_two_stage, select_weighted_sum, weights_from_eta)
