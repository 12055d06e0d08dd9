"""
Command-line tools: subcommand implementations, replicate runner and file I/O.
"""

from .commands import (
    cmd_adapt,
    cmd_diagnose,
    cmd_estimate,
    cmd_ggm_chain,
    cmd_run,
    cmd_smc,
    cmd_synth_ggm,
)
from .runner import ReplicateSettings, run_replicates

__all__ = [
    "cmd_adapt",
    "cmd_run",
    "cmd_estimate",
    "cmd_diagnose",
    "cmd_synth_ggm",
    "cmd_smc",
    "cmd_ggm_chain",
    "ReplicateSettings",
    "run_replicates",
]
