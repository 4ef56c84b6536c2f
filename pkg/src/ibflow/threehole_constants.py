"""Constants of the 2D three-hole potential, recorded once and shared by the
simulator, the evaluation code, and every test oracle.

    V(x, y) = sum_k A_k exp(-(x - X_k)^2 - (y - Y_k)^2)
              + Q * x^4 + Q * (y - YQ)^4

Two deep wells sit near (+-1, 0); the upper channel between them holds a
shallow local minimum near (0, 5/3); the barrier Gaussian at (0, 1/3)
separates the lower channel. Mirror symmetric in x.
"""

CONSTANTS_VERSION = 1

# (amplitude, x center, y center)
GAUSSIANS = (
    (3.0, 0.0, 1.0 / 3.0),
    (-3.0, 0.0, 5.0 / 3.0),
    (-5.0, 1.0, 0.0),
    (-5.0, -1.0, 0.0),
)

QUARTIC_COEFF = 0.2
QUARTIC_Y_OFFSET = 1.0 / 3.0
