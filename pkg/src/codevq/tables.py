"""Published reference values used by the ``tables`` command and the acceptance suite."""

from __future__ import annotations

# q -> (R0, G_opt, G at Rc = 1/2)
BOUNDS = {
    2: (0.4144, 0.0598, 0.0631),
    3: (0.4633, 0.0587, 0.0592),
    5: (0.5000, 0.0586, 0.0586),
    7: (0.5000, 0.0585, 0.0585),
}

# q -> [(states, label, G, gain dB)]
OPTIMAL_CODES = {
    2: [
        (2, "[3;1]", 0.0733, 0.5571),
        (4, "[7;5]", 0.0665, 0.9800),
        (8, "[17;13]", 0.0652, 1.0657),
        (16, "[31;23]", 0.0643, 1.1261),
        (32, "[61;57]", 0.0634, 1.1873),
        (64, "[165;127]", 0.0628, 1.2286),
        (128, "[357;251]", 0.0623, 1.2633),
        (256, "[625;467]", 0.0620, 1.2843),
        (512, "[1207;1171]", 0.0618, 1.2983),
    ],
    3: [
        (3, "[12;11]", 0.0720, 0.6349),
        (9, "[121;111]", 0.0663, 0.9931),
        (27, "[1211;1112]", 0.0641, 1.1396),
        (81, "[11222;10121]", 0.0626, 1.2424),
        (243, "[110221;101211]", 0.0617, 1.3053),
        (729, "[1000112;112122]", 0.0614, 1.3265),
    ],
    5: [
        (5, "[14;13]", 0.0716, 0.6591),
        (25, "[131;102]", 0.0642, 1.1328),
        (125, "[1323;1031]", 0.0622, 1.2703),
        (625, "[10314;10133]", 0.0613, 1.3336),
    ],
}

BINARY_CODE_BY_STATES = {states: label for states, label, _, _ in OPTIMAL_CODES[2]}

STATES = (2, 4, 8, 16, 32, 64, 128, 256, 512)

# SNR tables: source -> {(rate, delta): {states: dB}}, plus per-rate H(D) and ECSQ columns.
SNR = {
    "gaussian": {
        (0.5, 0.0): dict(zip(STATES, (2.29, 2.50, 2.55, 2.61, 2.64, 2.69, 2.69, 2.76, 2.76))),
        (1.0, 0.0): dict(zip(STATES, (5.06, 5.53, 5.61, 5.66, 5.71, 5.74, 5.74, 5.85, 5.85))),
        (2.0, 0.0): dict(zip(STATES, (11.08, 11.50, 11.63, 11.69, 11.72, 11.77, 11.77, 11.82, 11.84))),
        (3.0, 0.0): dict(zip(STATES, (17.11, 17.55, 17.64, 17.70, 17.74, 17.80, 17.80, 17.85, 17.87))),
    },
    "laplacian": {
        (0.5, 0.0): dict(zip(STATES, (2.92, 3.03, 3.06, 3.09, 3.11, 3.14, 3.17, 3.18, 3.21))),
        (0.5, 0.25): dict(zip(STATES, (3.06, 3.15, 3.17, 3.18, 3.20, 3.22, 3.23))),
        (1.0, 0.0): dict(zip(STATES, (5.69, 6.05, 6.14, 6.18, 6.23, 6.29, 6.30, 6.33, 6.33))),
        (1.0, 0.25): dict(zip(STATES, (5.87, 6.14, 6.20, 6.27, 6.33, 6.40, 6.42))),
        (2.0, 0.0): dict(zip(STATES, (11.68, 12.15, 12.22, 12.29, 12.32, 12.38, 12.41, 12.43, 12.44))),
        (2.0, 0.125): dict(zip(STATES, (11.74, 12.15, 12.24))),
        (3.0, 0.0): dict(zip(STATES, (17.74, 18.15, 18.23, 18.29, 18.33, 18.39, 18.41, 18.44, 18.44))),
    },
    "ggd0.5": {
        (0.5, 0.0): dict(zip(STATES, (4.74, 4.81, 4.83, 4.83, 4.84))),
        (0.5, 0.5): dict(zip(STATES, (5.19, 5.22, 5.23, 5.23, 5.24))),
        (1.0, 0.0): dict(zip(STATES, (8.00, 8.13, 8.18, 8.22, 8.22))),
        (1.0, 0.5): dict(zip(STATES, (8.53, 8.53, 8.62, 8.64, 8.64))),
        (2.0, 0.0): dict(zip(STATES, (14.31, 14.71, 14.80, 14.90, 14.94))),
        (2.0, 0.25): dict(zip(STATES, (14.56, 14.90, 15.03, 15.10, 15.14))),
        (3.0, 0.0): dict(zip(STATES, (20.54, 20.96, 21.04, 21.10, 21.16))),
        (3.0, 0.25): dict(zip(STATES, (20.62, 21.06, 21.14, 21.20, 21.26))),
    },
}

# rate -> (H(D), ECSQ) in dB
REFERENCE_COLUMNS = {
    "gaussian": {0.5: (3.01, 2.10), 1.0: (6.02, 4.64), 2.0: (12.04, 10.55), 3.0: (18.06, 16.56)},
    "laplacian": {0.5: (3.54, 3.11), 1.0: (6.62, 5.76), 2.0: (12.66, 11.31), 3.0: (18.68, 17.20)},
    "ggd0.5": {0.5: (5.62, 5.37), 1.0: (9.21, 8.61), 2.0: (15.60, 14.58), 3.0: (21.70, 20.49)},
}


def published_snr(source: str, rate: float, delta: float, states: int) -> float | None:
    return SNR.get(source, {}).get((float(rate), float(delta)), {}).get(states)
