"""
Privacy accounting: mechanism costs, the BDP estimator, ledgers and the
parallel MA/BDP accountant.
"""
from .accountant import (DEFAULT_LAMBDA_GRID, Ledger, LedgerMode, PrivacyReport, attack_success_probability,
                         find_noise_multiplier)
from .estimator import EstimatorConfig
from .manager import ParallelAccountant
from .mechanisms import MechanismConfig
