"""Denoising trainers: DCF and the Normal / T-CE baselines."""

from dcfrec.denoise.config import DenoiseConfig
from dcfrec.denoise.hard_samples import HardSampleExport
from dcfrec.denoise.hard_samples import export_hard_samples
from dcfrec.denoise.hard_samples import hard_sample_set
from dcfrec.denoise.relabel import RelabelEvent
from dcfrec.denoise.relabel import apply_relabel
from dcfrec.denoise.schedules import drop_fraction
from dcfrec.denoise.schedules import relabel_ratio
from dcfrec.denoise.schedules import relabel_threshold
from dcfrec.denoise.schedules import select_retained
from dcfrec.denoise.trainers import METHODS
from dcfrec.denoise.trainers import EpochReport
from dcfrec.denoise.trainers import RunLogs
from dcfrec.denoise.trainers import TrainingResult
from dcfrec.denoise.trainers import train_baseline
from dcfrec.denoise.trainers import train_dcf
from dcfrec.denoise.trainers import train_method


__all__ = [
    "METHODS",
    "DenoiseConfig",
    "EpochReport",
    "HardSampleExport",
    "RelabelEvent",
    "RunLogs",
    "TrainingResult",
    "apply_relabel",
    "drop_fraction",
    "export_hard_samples",
    "hard_sample_set",
    "relabel_ratio",
    "relabel_threshold",
    "select_retained",
    "train_baseline",
    "train_dcf",
    "train_method",
]
