"""
anchorkit: multi-user semantic communication simulator.

A base-station encoder is trained once with its mirror decoder, frozen as an
anchor, and heterogeneous user decoders are then trained against it. The
package also runs the iterative and simultaneous baselines, the catastrophic
forgetting protocol, and PSNR / MS-SSIM reporting over AWGN and Rayleigh
channels.
"""

__version__ = "0.1.0"

# Import key components for easier access
from .config import ExperimentConfig, load_config
from .models import ModelParams, build_encoder, build_symmetric_decoder, build_user_decoder, decode, encode
from .training import forgetting_eval, train_iterative, train_simultaneous, train_two_stage

__all__ = [
    'ExperimentConfig',
    'ModelParams',
    'build_encoder',
    'build_symmetric_decoder',
    'build_user_decoder',
    'decode',
    'encode',
    'forgetting_eval',
    'load_config',
    'train_iterative',
    'train_simultaneous',
    'train_two_stage',
]
