"""Frozen reference values, each computed independently of the package
(mpmath at 30 digits, or by hand) and pasted here."""

# 1 / (8 zeta(alpha - 1))
NORMALIZED_C = {5.0: 0.11549230036519877, 4.5: 0.11094012847740707, 6.0: 0.12054841755365781}

# -4 / pi: first cosine coefficient of the periodised |x|
ABS_K1 = -1.2732395447351627

# abar profile, delta = 0.1, R = 3, vertex on L_1: 0.1 * (1/2 + 1/3)
ABAR_L1_R3 = 0.08333333333333333

# exp(-3 (2 log 2 - 1))
CHERNOFF_MU3_EPS1 = 0.31383651442480731

# sum_{l=1}^{3} (4-l)^-2 l^-2 and 2^3 zeta(2) / 4^2
CONV_K4_A2 = 0.2847222222222222
CONV_K4_A2_RHS = 0.82246703342411322
# k = 2: one term, and 8 zeta(2) / 4
CONV_K2_A2_RHS = 3.2898681336964529

# P(Bin(10, 0.3) >= 6)
BINOM_10_03_GE6 = 0.0473489874

# XY on the normalised alpha = 5 family: the two constants of the bound
C_MULT_ALPHA5 = 259.38223012438469
C_ADD_ALPHA5 = 437.70751333489917
# closed form at delta = 0.01, R = 1024
CLOSED_FORM_D001_R1024 = 437.81798867834125

# sum over u in L_1, v in L_2 of |u - v|^-5 (c = 1), by enumeration
LAYER_PAIR_1_1 = 33.480452674897119
