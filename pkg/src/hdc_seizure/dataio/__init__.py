"""Ingestion, synthesis, and dataset assembly for windowed recordings."""

from .dataset import (
    SeizureFile,
    SubjectDataset,
    build_dataset,
    load_subject,
    read_feature_csv,
    write_feature_csv,
    write_subject,
)
from .edf import BIPOLAR_CHANNELS, parse_chb_summary, read_edf
from .recordings import (
    Annotation,
    Recording,
    annotations_for,
    read_annotations,
    read_csv_recording,
    write_annotations,
    write_csv_recording,
)
from .synth import StateSpec, SynthSpec, synth_generate

__all__ = [
    "Annotation",
    "BIPOLAR_CHANNELS",
    "Recording",
    "SeizureFile",
    "StateSpec",
    "SubjectDataset",
    "SynthSpec",
    "annotations_for",
    "build_dataset",
    "load_subject",
    "parse_chb_summary",
    "read_annotations",
    "read_csv_recording",
    "read_edf",
    "read_feature_csv",
    "synth_generate",
    "write_annotations",
    "write_csv_recording",
    "write_feature_csv",
    "write_subject",
]
