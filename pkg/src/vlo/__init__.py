"""Narrative-camouflaged ListOps benchmarks: generation, validation, evaluation."""

__version__ = "0.1.0"

from .ast_core import (  # noqa: F401
    Atom,
    AstNode,
    NumericOp,
    OpNode,
    TreeShapeConfig,
    count_ops,
    eval_node,
    parse_prefix,
    sample_ast,
    to_prefix,
)
