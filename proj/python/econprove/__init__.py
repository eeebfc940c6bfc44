"""Economical test-time scaling engine for LLM theorem provers."""

from ._econ import (
    BackendError,
    ConfigError,
    DomainError,
    TokenOverflowError,
    allocate_budget,
    attempt_cost,
    dpo_grad,
    dpo_loss,
    partition_bins,
    pass_at_k,
    pdc_curve,
    reproduce_table2,
    run_cli,
    total_sampling_cost,
)

__all__ = [
    "BackendError",
    "ConfigError",
    "DomainError",
    "TokenOverflowError",
    "allocate_budget",
    "attempt_cost",
    "dpo_grad",
    "dpo_loss",
    "partition_bins",
    "pass_at_k",
    "pdc_curve",
    "reproduce_table2",
    "run_cli",
    "total_sampling_cost",
]
