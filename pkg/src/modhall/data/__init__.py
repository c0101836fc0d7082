from .jet import encode_depth_jet, encode_depth_clip
from .noise import NoiseSpec, speckle_noise
from .sampling import sample_frames
from .synthetic import SyntheticTaskSpec, SyntheticDataset, generate_synthetic
from .io import save_dataset, load_dataset, load_directory_dataset, iter_batches, ClipBatch

__all__ = [
    "encode_depth_jet", "encode_depth_clip",
    "NoiseSpec", "speckle_noise",
    "sample_frames",
    "SyntheticTaskSpec", "SyntheticDataset", "generate_synthetic",
    "save_dataset", "load_dataset", "load_directory_dataset",
    "iter_batches", "ClipBatch",
]
