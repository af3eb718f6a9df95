"""SPKI/SDSI certificate calculus: certificates, tuple reduction and a model-theoretic oracle."""

from .algebra import (
    ALWAYS,
    EMPTY,
    INF,
    NO_ACTIONS,
    ActionExpr,
    Literal,
    Prefix,
    Range,
    action_intersect,
    action_member,
    action_subset,
    action_union,
    actions_cover,
    interval,
    interval_contains,
    interval_intersect,
    interval_subset,
    intervals_cover,
    point,
)
from .errors import SpkiError
from .model import (
    And,
    Auth,
    Auth5,
    Bind3,
    Bound,
    Crl,
    Del,
    Dot,
    Issued,
    Key,
    LocalName,
    Name4,
    Naming,
    Not,
    NowIn,
    Perm,
    Valid,
    dot,
    formula_of_cert,
    formula_of_tuple,
    implies,
    subsumes,
    tuple_of_cert,
)
from .reduction import (
    Closure,
    ClosureConfig,
    Derivation,
    RuleSet,
    apply_rule,
    closure,
    crl_set_consistent,
    decide_concrete,
    derivable,
    result_certificates,
    tuples_of,
)
from .semantics import (
    Interpretation,
    Run,
    Universe,
    applicable,
    entailment,
    entails_closed,
    eval_formula,
    intension,
    interp_leq,
    is_consistent,
    make_run,
    minimal_interpretation,
)
from .sexpr import (
    decode_bundle,
    decode_certificate,
    encode_certificate,
    parse_sexpr,
)
from .witness import build_completeness_witness, build_witness

__version__ = "0.1.0"

__all__ = [
    "ALWAYS",
    "ActionExpr",
    "And",
    "Auth",
    "Auth5",
    "Bind3",
    "Bound",
    "Closure",
    "ClosureConfig",
    "Crl",
    "Del",
    "Derivation",
    "Dot",
    "EMPTY",
    "INF",
    "Interpretation",
    "Issued",
    "Key",
    "Literal",
    "LocalName",
    "NO_ACTIONS",
    "Name4",
    "Naming",
    "Not",
    "NowIn",
    "Perm",
    "Prefix",
    "Range",
    "RuleSet",
    "Run",
    "SpkiError",
    "Universe",
    "Valid",
    "action_intersect",
    "action_member",
    "action_subset",
    "action_union",
    "actions_cover",
    "applicable",
    "apply_rule",
    "build_completeness_witness",
    "build_witness",
    "closure",
    "crl_set_consistent",
    "decide_concrete",
    "decode_bundle",
    "decode_certificate",
    "derivable",
    "dot",
    "encode_certificate",
    "entailment",
    "entails_closed",
    "eval_formula",
    "formula_of_cert",
    "formula_of_tuple",
    "implies",
    "intension",
    "interp_leq",
    "interval",
    "interval_contains",
    "interval_intersect",
    "interval_subset",
    "intervals_cover",
    "is_consistent",
    "make_run",
    "minimal_interpretation",
    "parse_sexpr",
    "point",
    "result_certificates",
    "subsumes",
    "tuple_of_cert",
    "tuples_of",
    "__version__",
]
