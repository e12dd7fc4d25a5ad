"""Small hand-built datasets shared by several test modules."""
import numpy as np

# five neighbours of the origin carrying targets 2..6, then distant padding
NEIGHBOR_NEAR = [(-1.1, 0.9, 2.0), (0.89, 0.62, 3.0), (0.4, -0.5, 4.0), (-0.48, -0.4, 5.0),
             (0.55, 0.15, 6.0)]
NEIGHBOR_FAR = [(-1.5, -1.0, 9.0), (-1.2, -1.2, 1.0), (-1.25, 1.3, 8.0), (1.3, 1.0, 0.0),
            (1.5, -0.7, 7.0), (1.2, -1.2, 10.0), (-1.6, 0.0, -3.0)]
NEIGHBOR_X = np.array([p[:2] for p in NEIGHBOR_NEAR + NEIGHBOR_FAR])
NEIGHBOR_Y = np.array([p[2] for p in NEIGHBOR_NEAR + NEIGHBOR_FAR])
NEIGHBOR_QUERY = np.zeros(2)
NEIGHBOR_RADIUS = 0.51  # in normalised units; the sixth-nearest point sits at 0.516


def linear_data(n, d=3, noise=0.1, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    w = np.arange(1, d + 1, dtype=float)
    return X, X @ w + 0.5 + noise * rng.normal(size=n)
