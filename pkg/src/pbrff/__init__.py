"""Pseudo-Bayesian learning over random Fourier features."""

from pbrff.data import LabeledDataset, SplitSpec, label_agreement, load_csv, split, standardize
from pbrff.fourier import (
    FrequencySet,
    GaussianPrior,
    compact_rff_map,
    expected_kernel,
    hypothesis_eval,
    rbf_kernel,
    rff_map,
    sample_frequencies,
)
from pbrff.alignment import (
    LossVector,
    empirical_loss_fast,
    empirical_loss_naive,
    landmark_loss,
    linear_loss,
)
from pbrff.posterior import PseudoPosterior, compute_posterior, f_divergence, kl_to_uniform, resample
from pbrff.bounds import (
    BoundReport,
    bound_cor1,
    bound_cor_chi2,
    bound_thm1,
    bound_thm2,
    bound_thm3,
)
from pbrff.landmarks import (
    LandmarkModel,
    fit_landmark_model,
    landmark_bound_report,
    psi_map,
    rbf_landmark_map,
    select_landmarks_kmeans,
    select_landmarks_random,
)
from pbrff.linear_model import LinearClassifier, error_rate, predict, train_linear_svm

__version__ = "0.1.0"
