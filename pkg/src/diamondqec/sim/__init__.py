"""Circuit execution: symbolic tableau simulation and Pauli-frame sampling."""

from .frame import (
    BLOCK_SHOTS,
    CompiledSampler,
    SampleBatch,
    default_threads,
    detection_fraction,
    read_batch,
    sample,
    write_batch,
)
from .tableau import Tableau, TableauReport, reference_sample, tableau_run

__all__ = [
    "BLOCK_SHOTS",
    "CompiledSampler",
    "SampleBatch",
    "Tableau",
    "TableauReport",
    "default_threads",
    "detection_fraction",
    "read_batch",
    "reference_sample",
    "sample",
    "tableau_run",
    "write_batch",
]
