"""Metric-regularized classifier training at desk scale.

A small numpy stack: a tape-based autodiff tensor core, four batch distance
losses plus cross-entropy under a weighted-sum objective, a PCA-compressed
cluster-shaping loss with scheduled compactness/separation weights, latent
structure metrics, and a seeded multi-trial training harness.
"""

from .boost import (EPS, ClusterStats, PcaProjection, ScheduleState,
                    alpha_schedule, beta_schedule, cluster_variance,
                    compute_cluster_stats, fit_pca, latent_boost_loss, project)
from .data import (DatasetSplit, IdxFormatError, SyntheticBlobSpec,
                   generate_blobs, load_idx, random_blob_means)
from .losses import (Batch, MarginConfig, contrastive_loss, cross_entropy,
                     magnet_loss, npair_loss, triplet_loss, weighted_total)
from .metrics import (ConfusionCounts, SilhouetteReport, accuracy, micro_f1,
                      silhouette_score)
from .model import MlpModel
from .tensor import (AdamState, NonFiniteError, ShapeMismatchError, Tape,
                     Tensor, adam_step, backward, check_gradient, grad_wrt)
from .training import (EarlyStopper, PlateauScheduler, TrainConfig,
                       TrialResult, run_training, run_trials,
                       summarize_trials, train_epoch)

__version__ = "0.1.0"
