"""SumCheck proving for high-degree custom gates and an analytical model of
the accelerator datapath that executes them."""

from .catalog import ALL_GATE_IDS, builtin_gate, catalog_entry
from .field import MODULUS, batch_inverse, inverse
from .gates import (
    CompositePoly,
    MleRef,
    Term,
    degree,
    distinct_mles,
    evaluate_composite,
    parse_gate,
    print_gate,
)
from .mle import Mle, SparseMle, build_eq_mle, extend_pair, sparsify
from .permcheck import (
    PermInstance,
    build_fraction,
    build_num_den,
    build_product_tree,
    permcheck_prove,
    permcheck_verify,
)
from .perfmodel import (
    Calibration,
    HwConfig,
    PerfReport,
    dse,
    model_permcheck_gen,
    model_sumcheck,
    model_utilization,
    sweep_gate,
)
from .scheduler import HwShape, LanePlan, Schedule, build_lane_plan, build_schedule
from .sumcheck import (
    OpCounters,
    RoundPolynomial,
    SumcheckProof,
    Transcript,
    derive_challenge,
    evaluate_round_poly,
    prove,
    prove_statement,
    verify,
    zerocheck_prove,
    zerocheck_verify,
)

__version__ = "0.1.0"
