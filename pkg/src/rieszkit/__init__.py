"""Numerical checks of the dilation inequality for analytic functions and its torus versions."""

__version__ = "0.1.0"

from .circle import AnalyticPoly, CircleGrid, DilatedSamples, dilate, evaluate, norm_l1, norm_l1_diff, norm_l2
from .lemma import LemmaReport, check_adjusted_lemma, check_main_lemma, negative_control_poisson, radial_mean_profile
from .blaschke import BlaschkeProduct, FactorizationTrace, factorize, find_zeros, trace_inequality_chain
from .extremal import SearchConfig, SearchResult, maximize, objective
from .torus import TorusSampler, TrigPoly, abschnitt, check_h1_abschnitt_lemma, norm_lp
from .measures import CircleMeasure, PolydiscPoint, fm_riesz_demo, poisson_chain

__all__ = [
    "AnalyticPoly", "CircleGrid", "DilatedSamples", "dilate", "evaluate", "norm_l1", "norm_l1_diff",
    "norm_l2", "LemmaReport", "check_adjusted_lemma", "check_main_lemma", "negative_control_poisson",
    "radial_mean_profile", "BlaschkeProduct", "FactorizationTrace", "factorize", "find_zeros",
    "trace_inequality_chain", "SearchConfig", "SearchResult", "maximize", "objective", "TorusSampler",
    "TrigPoly", "abschnitt", "check_h1_abschnitt_lemma", "norm_lp", "CircleMeasure", "PolydiscPoint",
    "fm_riesz_demo", "poisson_chain",
]
