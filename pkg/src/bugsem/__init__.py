"""Bug-semantic features for C/C++ and alignment against model internals."""

from .astcore import Ast, AstToken, SourceFunction, normalize_whitespace, parse, tokens_on_lines
from .annotate import AnnotatedExample, emit_training_corpus, mark_annotate, prepend_annotate
from .corpusio import ModelDump, load_corpus, load_dump, read_report, write_dump, write_report
from .features import BugFeatureSet, PvsRuleSet, extract_buggy_paths, extract_pvs, pvs_statistics
from .interaction import (
    InteractionMatrix,
    alignment_im,
    build_interaction_matrix,
    induced_components,
    longest_chain,
    path_joint_probability,
)
from .metrics import (
    AlignmentRecord,
    aggregate_records,
    alignment_attention,
    alignment_interpret,
    iou,
    pair_proportion,
    top_k_incident_tokens,
    top_k_tokens,
)
from .tokenalign import InputToken, TokenAlignment, aggregate_attention, aggregate_attribution, build_alignment

__version__ = "0.1.0"
