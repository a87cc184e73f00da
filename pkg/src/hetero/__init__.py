"""이분산 triplet 임베딩 수치 코어"""
from .losses import (
    BatchOutput,
    EmbeddingOutput,
    LossGradients,
    LossTerms,
    batch_loss,
    hetero_regression_loss,
    hetero_triplet_loss,
    ktuple_loss,
    loss_gradients,
    softplus,
    triplet_loss,
    triplet_regression_value,
)
from .mining import DistanceMatrix, Triplet, batch_hard_triplets, mine, pairwise_distances, semi_hard_triplets
from .sampler import BatchSampler, class_balanced_batch, pk_batch
from .encoder import (
    EncoderParams,
    TrainingState,
    clip_gradient_norm,
    embed,
    forward,
    forward_batch,
    init_params,
    load_model,
    lr_schedule,
    save_model,
    sgd_momentum_step,
)
from .trainer import TrainResult, train
from .evaluation import EmbeddedSplit, average_precision, evaluate, leave_one_out_evaluate, retrieval_examples
from .uncertainty import (
    ap_uncertainty_correlation,
    bin_by_uncertainty,
    class_diagnostics,
    clean_gallery,
    drop_query_experiment,
    principal_components,
    project_split,
    rank_training_noise,
)
from .data import SyntheticDataset, export_csv, generate, import_csv, load_features, save_features

__all__ = [
    # Losses
    'BatchOutput', 'EmbeddingOutput', 'LossGradients', 'LossTerms', 'batch_loss',
    'hetero_regression_loss', 'hetero_triplet_loss', 'ktuple_loss', 'loss_gradients',
    'softplus', 'triplet_loss', 'triplet_regression_value',
    # Mining / sampling
    'DistanceMatrix', 'Triplet', 'batch_hard_triplets', 'mine', 'pairwise_distances',
    'semi_hard_triplets', 'BatchSampler', 'class_balanced_batch', 'pk_batch',
    # Encoder / training
    'EncoderParams', 'TrainingState', 'clip_gradient_norm', 'embed', 'forward', 'forward_batch', 'init_params',
    'load_model', 'lr_schedule', 'save_model', 'sgd_momentum_step', 'TrainResult', 'train',
    # Evaluation / uncertainty
    'EmbeddedSplit', 'average_precision', 'evaluate', 'leave_one_out_evaluate',
    'retrieval_examples', 'ap_uncertainty_correlation', 'bin_by_uncertainty',
    'class_diagnostics', 'clean_gallery', 'drop_query_experiment', 'principal_components',
    'project_split', 'rank_training_noise',
    # Data
    'SyntheticDataset', 'export_csv', 'generate', 'import_csv', 'load_features', 'save_features',
]
