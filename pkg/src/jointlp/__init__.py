"""Iterative joint LP decoding of LDPC codes over finite-state channels."""

__version__ = "0.1.0"

from .channels import (BranchMetrics, ChannelSpec, TrellisSequence, branch_metrics,  # noqa: E402
                       build_trellis, channel_by_name, channel_simulate, dicode_spec, pr2_spec,
                       sigma_from_snr_db)
from .codes import (TannerGraph, fixed_weight_codeword, generate_regular_code, load_alist,  # noqa: E402
                    save_alist, single_parity_check, small_random_code, syndrome_ok)
from .decoder import (DecodeReport, DecoderConfig, MessageState, decode, decode_cyclic,  # noqa: E402
                      decode_flooding, dual_objective, extract_primal, softmin)
from .estimator import JointLPDecoder  # noqa: E402

__all__ = [
    "__version__",
    "BranchMetrics", "ChannelSpec", "TrellisSequence", "branch_metrics", "build_trellis",
    "channel_by_name", "channel_simulate", "dicode_spec", "pr2_spec", "sigma_from_snr_db",
    "TannerGraph", "fixed_weight_codeword", "generate_regular_code", "load_alist", "save_alist",
    "single_parity_check", "small_random_code", "syndrome_ok",
    "DecodeReport", "DecoderConfig", "MessageState", "decode", "decode_cyclic",
    "decode_flooding", "dual_objective", "extract_primal", "softmin",
    "JointLPDecoder",
]
