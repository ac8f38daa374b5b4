"""Simulation and analysis toolkit for limited-backhaul cooperation on the
three-user Gaussian interference channel.

The package couples an exact integer model of the monomial-lattice physical
layer with two message-passing cooperation protocols (receiver side and
transmitter side), backhaul load accounting, converse bound evaluators and
baseline schemes, all driven by a reproducible experiment harness.
"""

__version__ = "0.1.0"

from .backhaul import BackhaulLedger, BackhaulMessage
from .errors import (ConfigError, CoopAlignError, GenericityError,
                     MLBudgetError, ParameterError, PowerTooLowError,
                     ProtocolError, SingularChannelError, SymbolRangeError)
from .indices import AXIS, COORD_NAMES, IndexVector, embed_shifted, gather_block
from .lattice import (ChannelMatrix, ObservationTable, SchemeParams,
                      SubstreamTable, channel_is_generic, derive_params,
                      exact_observations, monomial_table, monomial_value,
                      require_generic)
from .rx_protocol import run_rx_protocol, run_rx_slots
from .tradeoff import (TradeoffPoint, centralized_baseline, centralized_report,
                       illustrating_example, lemma1_check,
                       normalized_bound_slope, optimal_tradeoff,
                       rx_scheme_report, rx_sum_upper_bound, tdma_baseline,
                       tdma_report, timeshare, tx_scheme_report,
                       tx_sum_upper_bound)
from .tx_protocol import (InverseChannel, run_tx_backhaul,
                          verify_diagonalization)

__all__ = [
    "__version__",
    "AXIS", "COORD_NAMES", "IndexVector", "embed_shifted", "gather_block",
    "BackhaulLedger", "BackhaulMessage",
    "ChannelMatrix", "ObservationTable", "SchemeParams", "SubstreamTable",
    "channel_is_generic", "derive_params", "exact_observations",
    "monomial_table", "monomial_value", "require_generic",
    "run_rx_protocol", "run_rx_slots",
    "InverseChannel", "run_tx_backhaul", "verify_diagonalization",
    "TradeoffPoint", "centralized_baseline", "centralized_report",
    "illustrating_example", "lemma1_check", "normalized_bound_slope",
    "optimal_tradeoff", "rx_scheme_report", "rx_sum_upper_bound",
    "tdma_baseline", "tdma_report", "timeshare", "tx_scheme_report",
    "tx_sum_upper_bound",
    "CoopAlignError", "ConfigError", "GenericityError", "MLBudgetError",
    "ParameterError", "PowerTooLowError", "ProtocolError",
    "SingularChannelError", "SymbolRangeError",
]
