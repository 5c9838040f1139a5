from .base_encoder import Encoder, EncoderConfig, LayerNorm, RMSNorm
from .encoder_factory import EncoderFactory
from .mlp import MlpEncoder
from .ssm import SsmEncoder, recurrent_scan, selective_scan, zoh_discretize
from .transformer import (MultiHeadAttention, TransformerEncoder, positional_encoding,
                          scaled_dot_product_attention, self_attention)

__all__ = ['Encoder', 'EncoderConfig', 'LayerNorm', 'RMSNorm', 'EncoderFactory', 'MlpEncoder',
           'SsmEncoder', 'recurrent_scan', 'selective_scan', 'zoh_discretize',
           'MultiHeadAttention', 'TransformerEncoder', 'positional_encoding',
           'scaled_dot_product_attention', 'self_attention']
