"""Sequential layer-by-layer learning of quantum states on a statevector simulator."""
from .baseline import train_global_qnn
from .qstate import DensityMatrix, StateVector, fidelity_pure, hs_cost, partial_trace_keep_prefix, rank_sequence
from .sequential import ScatteringModel, TrainConfig, run_qssm
from .targets import TargetSpec, make_target

__all__ = [
    "DensityMatrix",
    "ScatteringModel",
    "StateVector",
    "TargetSpec",
    "TrainConfig",
    "fidelity_pure",
    "hs_cost",
    "make_target",
    "partial_trace_keep_prefix",
    "rank_sequence",
    "run_qssm",
    "train_global_qnn",
]
