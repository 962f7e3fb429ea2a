"""
Synthetic datasets for training toy score models.
"""

from .toy import DATASET_KINDS, gen_bars, gen_blobs, gen_gmm_draws, make_dataset, write_dataset
