from ltfbgan.synthdata.generator import (
    GeneratorSpec,
    SampleRecord,
    generate_dataset,
    iter_dataset,
    stack_records,
    sweep_params,
    synth_sample,
)

__all__ = [
    "GeneratorSpec",
    "SampleRecord",
    "generate_dataset",
    "iter_dataset",
    "stack_records",
    "sweep_params",
    "synth_sample",
]
