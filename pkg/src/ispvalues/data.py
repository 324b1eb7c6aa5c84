"""Embedded datasets and reference parameters."""

import numpy as np

# Darwin's finches: 13 species (rows) by 17 Galapagos islands (columns).
# Island order: Seymour, Baltra, Isabela, Fernandina, Santiago, Rabida, Pinzon,
# Santa Cruz, Santa Fe, San Cristobal, Espanola, Floreana, Genovesa, Marchena,
# Pinta, Darwin, Wolf. Source: Sanderson (2000) as tabulated by Chen, Diaconis,
# Holmes and Liu (2005).
FINCH_SPECIES = (
    "Large ground finch",
    "Medium ground finch",
    "Small ground finch",
    "Sharp-beaked ground finch",
    "Cactus ground finch",
    "Large cactus ground finch",
    "Large tree finch",
    "Medium tree finch",
    "Small tree finch",
    "Vegetarian finch",
    "Woodpecker finch",
    "Mangrove finch",
    "Warbler finch",
)

FINCH_MATRIX = np.array(
    [
        [0, 0, 1, 1, 1, 1, 1, 1, 1, 1, 0, 1, 1, 1, 1, 1, 1],
        [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 1, 0, 1, 1, 0, 0],
        [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 1, 1, 0, 0],
        [0, 0, 1, 1, 1, 0, 0, 1, 0, 1, 0, 1, 1, 0, 1, 1, 1],
        [1, 1, 1, 0, 1, 1, 1, 1, 1, 1, 0, 1, 0, 1, 1, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0],
        [0, 0, 1, 1, 1, 1, 1, 1, 1, 0, 0, 1, 0, 1, 1, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0],
        [0, 0, 1, 1, 1, 1, 1, 1, 1, 1, 0, 1, 0, 0, 1, 0, 0],
        [0, 0, 1, 1, 1, 1, 1, 1, 1, 1, 0, 1, 0, 1, 1, 0, 0],
        [0, 0, 1, 1, 1, 0, 1, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0],
        [0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
        [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
    ],
    dtype=np.int8,
)

# sorted margins as published alongside the data
FINCH_ROW_SUMS_SORTED = (17, 14, 14, 13, 12, 11, 10, 10, 10, 6, 2, 2, 1)
FINCH_COL_SUMS_SORTED = (11, 10, 10, 10, 10, 9, 9, 9, 8, 8, 7, 4, 4, 4, 3, 3, 3)

# First-row column indices (1-based) of two observed 52 x 102 matrices, both
# with column-index sum 2813.
STRUCTURED_OBSERVED_INDICES = (
    (1, 7, 8, 10, 11, 15, 16, 17, 20, 21, 28, 29, 30, 36, 37, 40, 41, 42, 48, 49, 51, 54, 55, 56, 57, 58,
     60, 61, 62, 63, 65, 67, 68, 69, 70, 73, 75, 77, 80, 81, 82, 85, 86, 87, 91, 92, 94, 95, 96, 97, 100),
    (1, 2, 6, 8, 10, 14, 16, 18, 19, 20, 21, 23, 25, 29, 32, 33, 36, 38, 42, 44, 46, 49, 50, 53, 54, 57,
     60, 62, 63, 67, 68, 69, 70, 72, 73, 76, 78, 81, 82, 88, 89, 92, 93, 94, 95, 96, 97, 99, 100, 101, 102),
)

# Logistic model coefficients for a 200 x 10 design; the last row and column
# effects are pinned to zero for identifiability.
RASCH_KAPPA = -1.628
RASCH_BETA = (0.210, -0.066, 0.576, -0.197, 0.231, 0.184, -0.034, -0.279, -0.396, 0.000)
RASCH_ALPHA = (
    -0.183, -0.735, -0.144, -0.756, -0.749, -0.226, -0.538, -0.213, -0.118, -0.284, -0.127, -0.632, -0.132,
    0.104, 0.000, -0.781, -0.500, -0.498, -0.182, -0.269, -0.077, -0.499, -0.661, -0.780, -0.095, -0.661,
    -0.478, -0.315, -0.638, -0.225, -0.382, -0.715, -0.085, -0.766, -0.573, -0.629, -0.336, -0.775, -0.461,
    -0.762, -0.754, -0.082, -0.575, -0.263, 0.098, -0.434, -0.172, -0.109, -0.434, -0.211, -0.757, 0.067,
    -0.679, -0.601, -0.069, -0.379, -0.098, -0.471, -0.594, -0.830, -0.193, -0.437, -0.415, -0.257, -0.807,
    -0.551, -0.094, -0.170, -0.741, -0.737, -0.774, -0.859, -0.444, -0.211, -0.144, -0.336, -0.758, -0.235,
    -0.740, -0.732, -0.768, -0.725, -0.698, -0.671, -0.549, -0.550, -0.649, -0.616, 0.026, -0.164, -0.311,
    -0.682, -0.655, -0.789, 0.047, -0.160, -0.309, -0.553, -0.701, -0.244, 0.121, -0.696, -0.609, -0.470,
    -0.793, -0.183, -0.464, 0.116, -0.465, -0.246, -0.712, -0.485, -0.706, -0.109, 0.004, -0.516, -0.181,
    -0.573, -0.336, -0.034, -0.269, -0.531, -0.568, -0.414, -0.444, -0.507, -0.308, -0.124, -0.442, -0.437,
    -0.742, -0.842, -0.577, -0.549, -0.213, 0.090, 0.069, -0.409, -0.626, -0.103, -0.107, -0.126, -0.123,
    -0.761, -0.185, -0.403, -0.655, -0.768, -0.043, -0.692, -0.703, -0.201, 0.028, -0.350, -0.164, -0.713,
    0.087, -0.326, -0.187, -0.830, -0.058, -0.118, -0.747, -0.342, -0.541, -0.320, -0.468, -0.452, -0.686,
    -0.611, -0.846, 0.057, -0.213, 0.066, -0.703, 0.054, -0.072, -0.289, -0.427, -0.609, -0.115, -0.638,
    -0.803, -0.099, -0.196, -0.152, -0.225, -0.448, -0.476, -0.051, -0.549, -0.052, -0.078, -0.014, -0.361,
    -0.231, 0.084, -0.423, -0.807, 0.000,
)
