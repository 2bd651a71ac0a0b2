from .dataset import (
    RECORD_KEYS,
    SCHEMA_VERSION,
    GenerationParams,
    GeneratorSelfCheckError,
    RecordError,
    TaskInstance,
    annotate_instance,
    assemble_instance,
    instance_id,
    parse_instance_id,
    read_jsonl,
    select_depth_bins,
    write_jsonl,
)
