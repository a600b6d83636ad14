from pebkit.channels import (
    ChoiMatrix,
    DensityMatrix,
    KrausSet,
    StinespringIsometry,
    apply_kraus,
    choi_apply,
    choi_to_kraus,
    kraus_to_choi,
    kraus_to_stinespring,
    verify_cptp,
)
from pebkit.errors import InputError, PebkitError, PreconditionError, VerificationError
from pebkit.protocol import (
    make_resource,
    protocol_choi,
    simulate_locc_exact,
    simulate_locc_sampled,
    verify_theorem,
)
from pebkit.registry import generator, make_channel
from pebkit.schmidt import (
    minimize_kraus_rank,
    rank_k_representation,
    sn_bounds,
    sn_lower_bound_fidelity,
    sn_upper_search,
)
# importing zoo registers the channel generators
from pebkit.zoo import ChannelSpec, load_corpus

__all__ = [
    'ChoiMatrix',
    'DensityMatrix',
    'KrausSet',
    'StinespringIsometry',
    'apply_kraus',
    'choi_apply',
    'choi_to_kraus',
    'kraus_to_choi',
    'kraus_to_stinespring',
    'verify_cptp',
    # errors (mapped to CLI exit codes)
    'PebkitError',
    'InputError',
    'PreconditionError',
    'VerificationError',
    # protocol
    'make_resource',
    'protocol_choi',
    'simulate_locc_exact',
    'simulate_locc_sampled',
    'verify_theorem',
    # Schmidt number analysis
    'minimize_kraus_rank',
    'rank_k_representation',
    'sn_bounds',
    'sn_lower_bound_fidelity',
    'sn_upper_search',
    # channel zoo
    'generator',
    'make_channel',
    'ChannelSpec',
    'load_corpus',
]
