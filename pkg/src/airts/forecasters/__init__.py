"""TSMixer-, TCN- and iTransformer-style forecasters in vanilla, routed and TimeMMD modes."""

from .checkpoint import load_checkpoint, save_checkpoint
from .config import ARCHITECTURES, MODEL_IDS, MODES, VARIANTS, ModelConfig, config_for_model_id, parse_model_id
from .model import Forecast, ForecastModel, ForwardResult, forward_batch, model_forward, predict
from .nets import (
    ChannelFusion,
    ITransformerNet,
    TCNNet,
    TimeMMDFusion,
    TSMixerNet,
    fuse_channel_descriptions,
    itransformer_forward,
    tcn_features,
    tcn_forward,
    timemmd_fuse,
    tsmixer_forward,
)

__all__ = [
    "ARCHITECTURES", "ChannelFusion", "Forecast", "ForecastModel", "ForwardResult", "ITransformerNet",
    "MODES", "ModelConfig", "TCNNet", "TSMixerNet", "TimeMMDFusion", "VARIANTS", "config_for_model_id",
    "forward_batch", "fuse_channel_descriptions", "itransformer_forward", "load_checkpoint",
    "MODEL_IDS", "model_forward", "parse_model_id", "predict", "save_checkpoint", "tcn_features", "tcn_forward",
    "timemmd_fuse", "tsmixer_forward",
]
