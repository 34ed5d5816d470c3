"""Pluggable homomorphic-evaluation backends."""

from .base import (
    Backend,
    BackendError,
    CipherHandle,
    DepthBudgetExceeded,
    ModeMismatch,
    Plain,
)
from .params import (
    MODE_BATCHED,
    MODE_POLY,
    BackendParams,
    default_batched_params,
    default_poly_params,
    folklore_params,
    params_digest,
    rcc_params,
    toy_params,
)
from .simulator import SimBackend


def get_backend(name: str, params: BackendParams, **kwargs) -> Backend:
    if name == "sim":
        return SimBackend(params)
    if name == "rlwe":
        from .rlwe import RlweBackend

        return RlweBackend(params, **kwargs)
    raise ValueError(f"unknown backend {name!r} (expected 'sim' or 'rlwe')")


__all__ = [
    "Backend",
    "BackendError",
    "BackendParams",
    "CipherHandle",
    "DepthBudgetExceeded",
    "ModeMismatch",
    "Plain",
    "SimBackend",
    "MODE_BATCHED",
    "MODE_POLY",
    "default_batched_params",
    "default_poly_params",
    "folklore_params",
    "params_digest",
    "rcc_params",
    "toy_params",
    "get_backend",
]
