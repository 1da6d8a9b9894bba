from .runner import (
    COMMANDS,
    TRAJECTORY_HEADER,
    RunArtifacts,
    SweepRow,
    SweepTable,
    run,
    sweep,
    write_artifacts,
    write_sweep,
)

__all__ = [
    "COMMANDS",
    "TRAJECTORY_HEADER",
    "RunArtifacts",
    "SweepRow",
    "SweepTable",
    "run",
    "sweep",
    "write_artifacts",
    "write_sweep",
]
