"""Semi-discrete velocity models ``du/dt = f(u)``.

Every model exposes the same small interface so that the time marcher, the
window residual assembler and the sampled (hyper-reduced) evaluators can be
written once:

``n_space``
    number of spatial degrees of freedom.
``velocity(U)``
    f applied column-wise to a state vector or an ``(n_space, n)`` block.
``jacobian(u)``
    ``df/du`` at a single state as a scipy sparse matrix.
``support(cells)``
    sorted cells whose values influence f at `cells` (always contains `cells`).
``velocity_local(Us, cells, support)``
    f at `cells` given only the state rows on `support`; ``Us`` is
    ``(len(support), n)`` and the result ``(len(cells), n)``.
``jacobian_local(Us, cells, support)``
    the matching derivative, shape ``(n, len(cells), len(support))``.
"""

import numpy as np
from scipy import sparse


class LinearModel:
    """Affine velocity ``f(u) = M u + c``.

    Used for closed-form checks (scalar decay, zero velocity) and as the
    well-conditioned test problem for the error bounds.
    """

    def __init__(self, M, c=None):
        M = np.atleast_2d(np.asarray(M, dtype=float))
        if M.shape[0] != M.shape[1]:
            raise ValueError("M must be square")
        self.M = M
        self.c = np.zeros(M.shape[0]) if c is None else np.asarray(c, dtype=float)
        self._sparse = sparse.csr_matrix(M)

    @property
    def n_space(self):
        return self.M.shape[0]

    def velocity(self, U):
        U = np.asarray(U, dtype=float)
        if U.ndim == 1:
            return self.M @ U + self.c
        return self.M @ U + self.c[:, None]

    def jacobian(self, u):
        return self._sparse

    def support(self, cells):
        cells = np.asarray(cells, dtype=int)
        cols = np.flatnonzero(np.any(self.M[cells] != 0.0, axis=0))
        return np.union1d(cols, cells)

    def velocity_local(self, Us, cells, support):
        return self.M[np.ix_(cells, support)] @ Us + self.c[cells][:, None]

    def jacobian_local(self, Us, cells, support):
        block = self.M[np.ix_(cells, support)]
        return np.broadcast_to(block, (Us.shape[1],) + block.shape)


def zero_model(n_space):
    """Velocity identically zero; every constant state is a solution."""
    return LinearModel(np.zeros((n_space, n_space)))


def scalar_decay(rate=1.0):
    """The scalar ODE ``du/dt = -rate * u``."""
    return LinearModel([[-rate]])
