"""Reference values from tests/oracles/make_oracles.py (independent model, do not edit)."""
VOLUME_N3_R0_HALF = 0.15309310892394862
EDGE_HEIGHT_OVERLAP_N5 = 0.4
SRM_INFO_N3_R0_0_1 = 1.085626695907086
MUD_REFINED_INFO_N4_R0_0_1 = 1.4
IMS_INFO_N10_R0_HALF = 1.9812031259014453
ACUTE_T_N10_R0_HALF = 0.75
OBTUSE_T_N3_NR0_0_05 = 1.9640164132154552
OBTUSE_IMS_N3_NR0_0_05 = 0.6723901274224794
RATIO_N3_NR0_1E_6 = 1.7491760833567114
THRESHOLD_N3 = 0.18410067065159674
THRESHOLD_N4 = 0.08726336287056856
THRESHOLD_N5 = 0.028694987744589767
THRESHOLD_N6 = 0.0027413557741709314
THRESHOLD_N7 = None
