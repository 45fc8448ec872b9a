"""Joint iterative decoding of LDPC-coded MPSK over Wiener phase noise."""

from .channel import ChannelParams, Frame, apply_channel, modulate, symbol_likelihood
from .directional import (CircularMoments, Tikhonov, TikhonovMixture,
                          bessel_ratio, circular_moments, cmvm,
                          gaussian_smooth, kl_divergence, log_bessel_i0,
                          tikhonov_kl, tikhonov_product)
from .harness import ResultRecord, SimConfig, run_sweep
from .joint import DecoderSchedule, DecodeResult, decode_frame
from .ldpc import (BpResult, LdpcCode, SymbolDistribution, decode_bp,
                   llr_to_symbol_dist, parse_alist, symbol_dist_to_llr,
                   write_alist)
from .trackers import (CanonicalMessage, OpCounter, TrackerConfig, barb_pass,
                       backward_pass, build_mixture_m1, build_mixture_m2,
                       compute_pu, dp_pass, forward_pass,
                       predicted_operation_counts, proposed_pass,
                       run_tracker, select_and_cluster)

__version__ = "0.1.0"
