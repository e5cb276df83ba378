"""Position-aware warp prediction and compensation for powder-bed printing."""

from ._core import (
    DeviationReport,
    Engine,
    IsoGraph,
    PipelineError,
    chamfer_loss,
    deviation_report,
    forward,
    icp_align,
    improvement_percent,
    l2_loss,
    load_model,
    make_bar_dataset,
    remesh,
    run_cli,
    save_model,
    simulate_print,
    train_compensator,
    train_predictor,
)

__all__ = [
    "DeviationReport",
    "Engine",
    "IsoGraph",
    "PipelineError",
    "chamfer_loss",
    "deviation_report",
    "forward",
    "icp_align",
    "improvement_percent",
    "l2_loss",
    "load_model",
    "make_bar_dataset",
    "remesh",
    "run_cli",
    "save_model",
    "simulate_print",
    "train_compensator",
    "train_predictor",
]
