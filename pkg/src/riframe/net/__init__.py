"""Network: encoders, rotation-aware attention, registration loss, classifier."""
from .attention import afi, angular_embedding, attention_weights, iac, ias, offset_attention
from .encoder import Batch, EncoderInputs, collate, encode, prepare_inputs
from .layers import ParamStore
from .model import (
    SGD,
    NetConfig,
    classify,
    cosine_lr,
    forward,
    init_params,
    load_checkpoint,
    losses,
    save_checkpoint,
)
from .registration import correspondence_map, registration_logits, registration_loss

__all__ = [
    "SGD",
    "Batch",
    "EncoderInputs",
    "NetConfig",
    "ParamStore",
    "afi",
    "angular_embedding",
    "attention_weights",
    "classify",
    "collate",
    "correspondence_map",
    "cosine_lr",
    "encode",
    "forward",
    "iac",
    "ias",
    "init_params",
    "load_checkpoint",
    "losses",
    "offset_attention",
    "prepare_inputs",
    "registration_logits",
    "registration_loss",
    "save_checkpoint",
]
