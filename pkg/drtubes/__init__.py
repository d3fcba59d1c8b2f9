from drtubes.benchmark import emax_power_curve, run_benchmark
from drtubes.contrasts import ContrastMatrix, max_t_contrast_test, optimal_contrast
from drtubes.lrtest import fit_model, profile_sup_correlation, run_lr_test
from drtubes.models import CandidateModel, CandidateSet, Design
from drtubes.shapes import make_family
from drtubes.tubes import (
    Alternative,
    critical_value,
    estimate_tube_integral,
    estimate_tube_probability,
    power,
    sample_size,
)

__all__ = [
    "Alternative",
    "CandidateModel",
    "CandidateSet",
    "ContrastMatrix",
    "Design",
    "critical_value",
    "emax_power_curve",
    "estimate_tube_integral",
    "estimate_tube_probability",
    "fit_model",
    "make_family",
    "max_t_contrast_test",
    "optimal_contrast",
    "power",
    "profile_sup_correlation",
    "run_benchmark",
    "run_lr_test",
    "sample_size",
]
