"""accentconv: foreign accent conversion on discrete speech content tokens.

A desk-scale library covering the full pipeline: a CTC-regularized
vector-quantized content tokenizer, a variational reconstruction stack
with a prosody adapter and adversarial decoder, a multitask decoder-only
token language model for accent conversion and TTS, a bidirectional token
restorer, and the token-quality metric suite.
"""

__version__ = "0.1.0"

from .errors import AccentConvError, ConfigError, DataError, NumericalAbort

__all__ = ["AccentConvError", "ConfigError", "DataError", "NumericalAbort", "__version__"]
