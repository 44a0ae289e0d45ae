"""Twisted Kloosterman sums modulo odd prime powers."""

__version__ = "0.1.0"

from .characters import Character, RationalAngle, TChi, char_eval, char_t, enumerate_characters, in_S, subgroup_C
from .counting import CountingSpec, build_F, count_Yprime_char, enum_Y0, enum_Yprime
from .kloosterman import (
    KloostermanValue,
    family_values,
    gauss_factor,
    ksum_brute,
    ksum_closed,
    normalized_twisted,
    salie_values,
    untwisted_closed,
)
from .measure import LimitMeasure, MomentSpec, joint_moment, ks_distance, mu_cdf, mu_moment, mu_sample
from .modular import PrimePowerModulus, build_dlog, get_dlog, lift_quadratic_roots, primitive_root, sqrt_mod_prime
