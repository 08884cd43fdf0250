import numpy as np

from knightian import freestate


def random_density(rng: np.random.Generator, dim: int) -> freestate.DensityMatrix:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = a @ a.conj().T
    return freestate.DensityMatrix(dim, m / np.trace(m))


def random_effect(rng: np.random.Generator, dim: int) -> freestate.Effect:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    herm = (a + a.conj().T) / 2
    eigs, vecs = np.linalg.eigh(herm)
    squashed = (eigs - eigs.min()) / (eigs.max() - eigs.min() + 1e-12)
    return freestate.Effect(dim, vecs @ np.diag(squashed) @ vecs.conj().T)


def random_freestate(
    rng: np.random.Generator, dim: int, n_generators: int
) -> freestate.Freestate:
    gens = tuple(random_density(rng, dim) for _ in range(n_generators))
    return freestate.Freestate(dim, gens)
