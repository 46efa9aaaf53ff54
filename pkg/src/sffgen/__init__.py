"""Safety-register merge optimization and formal property generation."""

from .ecc import ProtectionMethod, code_rate, error_state_count, redundant_bits
from .optimizer import MergePlan, crosscheck_plans, optimize, pack_bfd, pack_ilp, plan_area
from .propgen import PropertyIR, emit_sva, generate_properties
from .refmodel import CheckBudget, check_property, elaborate, inject_mutation
from .spec_model import ModelOfThings, parse_spec, validate_mot

__version__ = "0.1.0"

__all__ = [
    "CheckBudget", "MergePlan", "ModelOfThings", "PropertyIR", "ProtectionMethod",
    "check_property", "code_rate", "crosscheck_plans", "elaborate", "emit_sva",
    "error_state_count", "generate_properties", "inject_mutation", "optimize", "pack_bfd",
    "pack_ilp", "parse_spec", "plan_area", "redundant_bits", "validate_mot",
]
