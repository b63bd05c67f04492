"""coopcast: information-theoretic limits of broadcasting a source to
receivers with side information and rate-limited helper links, plus Monte
Carlo validation of the matching random-coding schemes."""

__version__ = "0.1.0"

from .info import (  # noqa: F401
    Bits,
    JointPmf,
    binary_convolution,
    binary_entropy,
    binary_entropy_inv,
    conditional_entropy,
    entropy,
    mgl_bound,
    mutual_information,
    mutual_information_given,
)
from .model import (  # noqa: F401
    AuxiliaryChannel,
    BandwidthConfig,
    BroadcastChannel,
    Model,
    Quantizer,
    SourceModel,
    attach_auxiliary,
    channel_joint,
    load_model,
    min_support,
    push_quantizer,
    sample_iid,
    save_model,
    transmit,
)
from .optimize import OptOptions, maximize_simplex, maximize_stochastic  # noqa: F401
from .regions import (  # noqa: F401
    RegionVerdict,
    TradeoffCurve,
    bidirectional_region,
    binary_example_curve,
    check_list_region,
    check_list_unique,
    check_mixed,
    check_mode1,
    check_mode2,
    check_tuncel,
    helper_capacity,
    helper_tradeoff,
)
from .typicality import (  # noqa: F401
    BoundBracket,
    MembershipTest,
    TypicalityContext,
    TypicalityParams,
    conditional_typical_bracket,
    is_cond_typical,
    is_jointly_typical,
    is_typical,
    sequence_prob_bracket,
    symbol_count,
)
