from .encoder import (
    EncoderConfig, StreamEncoder, StreamOutput, build_encoder,
    build_bottleneck, build_trunk, init_temporal_identity, temporal_layers,
)
from .discriminator import DiscConfig, Discriminator, build_discriminator, discriminator_forward
from .checkpoint import (
    save_encoder, load_encoder, save_discriminator, load_discriminator,
    params_hash, copy_params,
)

__all__ = [
    "EncoderConfig", "StreamEncoder", "StreamOutput", "build_encoder",
    "build_bottleneck", "build_trunk", "init_temporal_identity", "temporal_layers",
    "DiscConfig", "Discriminator", "build_discriminator", "discriminator_forward",
    "save_encoder", "load_encoder", "save_discriminator", "load_discriminator",
    "params_hash", "copy_params",
]
