from .ctc import ctc_item_loss, ctc_loss, min_frames_for_labels
from .encoder import PreVQEncoder
from .features import (
    FRAME_RATE,
    MelConvBackbone,
    PretrainedEncoderBackbone,
    batch_extract,
    build_backbone,
    length_mask,
    parameter_checksum,
)
from .model import ContentTokenizer, ContentTokenSequence, read_token_dump, write_token_dump
from .vq import EmaVectorQuantizer

__all__ = [
    "FRAME_RATE",
    "ContentTokenSequence",
    "ContentTokenizer",
    "EmaVectorQuantizer",
    "MelConvBackbone",
    "PretrainedEncoderBackbone",
    "PreVQEncoder",
    "batch_extract",
    "build_backbone",
    "ctc_item_loss",
    "ctc_loss",
    "length_mask",
    "min_frames_for_labels",
    "parameter_checksum",
    "read_token_dump",
    "write_token_dump",
]
