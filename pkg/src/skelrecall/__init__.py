"""Tubed-skeleton recall loss for thin structures, with exact topology metrics."""

from .grid import Connectivity, LabelGrid, ProbGrid, argmax_labels, binarize, neighbors, one_hot
from .io import FormatError, read_grid, read_pgm, read_skt, write_grid, write_pgm, write_skt
from .losses import (
    ConnectivityKind,
    LossConfig,
    LossReport,
    combined_loss,
    cross_entropy_loss,
    skeleton_recall_loss,
    soft_cldice_loss,
    soft_dice_loss,
)
from .skeleton import TubedSkeleton, dilate_l1, soft_skeleton, thin, tubed_skeleton
from .topology import BettiSignature, MetricsReport, betti, cl_dice, dice, euler_characteristic, evaluate

__version__ = "0.1.0"
