from collections import deque

import numpy as np
import scipy.linalg

from sparse_proxqn.core.logging import get_logger
from sparse_proxqn.domains.sparse_data.models import SparseVector

log = get_logger("lbfgs")


class LbfgsState:
    """
    Compact limited-memory BFGS matrix ``B = gamma*I - Q R Q^T`` with
    ``Q = [gamma*S, Y]`` and ``R`` the inverse of the middle matrix
    ``[[gamma*S^T S, L], [L^T, -D]]``.

    Histories are stored row-wise in (dim, memory) slot arrays; rows of
    coordinates that were never in a working set stay zero. Pairs are kept
    oldest-first in ``gram_ss``, ``lower`` (L) and ``diag_sy`` (D).

    Usage:
        state = LbfgsState(dim=4, memory=10)
        state.push_pair(s, y)
        a_j = state.b_diag(j)
    """

    def __init__(
        self,
        dim: int,
        memory: int = 10,
        *,
        curvature_floor: float = 1e-12,
        track_access: bool = False,
    ):
        if memory < 1:
            raise ValueError("memory must be >= 1")
        self.dim = dim
        self.memory = memory
        self.curvature_floor = curvature_floor
        self.track_access = track_access
        self._s_rows = np.zeros((dim, memory))
        self._y_rows = np.zeros((dim, memory))
        self.row_reads = 0
        self.touched_rows: set[int] = set()
        self.reset()

    # -------------------------
    # state
    # -------------------------
    def reset(self) -> None:
        self._pairs: deque[tuple[SparseVector, SparseVector, int]] = deque()
        self._free_slots = list(range(self.memory))
        self._s_rows.fill(0.0)
        self._y_rows.fill(0.0)
        self.gamma = 1.0
        self.gram_ss = np.zeros((0, 0))
        self.lower = np.zeros((0, 0))
        self.diag_sy = np.zeros(0)
        self.middle_inverse = np.zeros((0, 0))

    @property
    def size(self) -> int:
        return len(self._pairs)

    @property
    def _slots(self) -> list[int]:
        return [slot for _, _, slot in self._pairs]

    @property
    def pairs(self) -> list[tuple[SparseVector, SparseVector]]:
        return [(s, y) for s, y, _ in self._pairs]

    def push_pair(self, s: SparseVector, y: SparseVector) -> bool:
        """
        Append (s, y) if ``s^T y > curvature_floor * |s| |y|``; otherwise leave
        the state untouched. Inner products run over the support of ``s``.
        """
        s_norm = s.norm()
        if s_norm == 0.0:
            return False
        sy = s.dot(y)
        if not sy > self.curvature_floor * s_norm * y.norm():
            log.warning("skipping pair with s^T y = {:.3e}", sy)
            return False

        evict = self.size == self.memory
        keep = 1 if evict else 0
        retained = self._slots[keep:]

        # s_new against the retained s's and y's, over supp(s_new) only
        ss_row = np.append(self._s_rows[np.ix_(s.indices, retained)].T @ s.values, s.values @ s.values)
        sy_row = self._y_rows[np.ix_(s.indices, retained)].T @ s.values

        k = len(retained) + 1
        gram = np.zeros((k, k))
        gram[:-1, :-1] = self.gram_ss[keep:, keep:]
        gram[-1, :] = ss_row
        gram[:, -1] = ss_row
        lower = np.zeros((k, k))
        lower[:-1, :-1] = self.lower[keep:, keep:]
        lower[-1, :-1] = sy_row
        diag_sy = np.append(self.diag_sy[keep:], sy)
        gamma = sy / ss_row[-1]
        try:
            middle_inverse = self._invert_middle(gamma, gram, lower, diag_sy)
        except scipy.linalg.LinAlgError:
            log.warning("skipping pair: singular middle matrix")
            return False

        if evict:
            old_s, old_y, slot = self._pairs.popleft()
            self._s_rows[old_s.indices, slot] = 0.0
            self._y_rows[old_y.indices, slot] = 0.0
            self._free_slots.append(slot)
        slot = self._free_slots.pop(0)
        self._s_rows[s.indices, slot] = s.values
        self._y_rows[y.indices, slot] = y.values
        self._pairs.append((s, y, slot))
        self.gram_ss, self.lower, self.diag_sy = gram, lower, diag_sy
        self.gamma = gamma
        self.middle_inverse = middle_inverse
        return True

    @staticmethod
    def _invert_middle(
        gamma: float, gram: np.ndarray, lower: np.ndarray, diag_sy: np.ndarray
    ) -> np.ndarray:
        middle = np.block([[gamma * gram, lower], [lower.T, -np.diag(diag_sy)]])
        inverse = scipy.linalg.inv(middle)
        if not np.all(np.isfinite(inverse)):
            raise scipy.linalg.LinAlgError("non-finite middle inverse")
        return inverse

    # -------------------------
    # per-coordinate queries
    # -------------------------
    def q_row(self, j: int) -> np.ndarray:
        """Row ``j`` of Q: (gamma * S[j, :], Y[j, :]) in oldest-first order."""
        self.row_reads += 1
        if self.track_access:
            self.touched_rows.add(int(j))
        slots = self._slots
        return np.concatenate((self.gamma * self._s_rows[j, slots], self._y_rows[j, slots]))

    def qhat_column(self, j: int) -> np.ndarray:
        if self.size == 0:
            return np.zeros(0)
        return self.middle_inverse @ self.q_row(j)

    def b_diag(self, j: int) -> float:
        if self.size == 0:
            return self.gamma
        q = self.q_row(j)
        return float(self.gamma - q @ self.middle_inverse @ q)

    def b_times_d_entry(self, j: int, d_j: float, d_hat: np.ndarray) -> float:
        if self.size == 0:
            return self.gamma * d_j
        return float(self.gamma * d_j - self.q_row(j) @ d_hat)

    def rows(self, coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(Q_A, Qhat_A^T) for the working set ``coords``: shape (|A|, 2k) each."""
        coords = np.asarray(coords, dtype=np.int64)
        self.row_reads += coords.size
        if self.track_access:
            self.touched_rows.update(int(j) for j in coords)
        slots = self._slots
        q = np.hstack(
            (self.gamma * self._s_rows[np.ix_(coords, slots)], self._y_rows[np.ix_(coords, slots)])
        )
        return q, q @ self.middle_inverse

    def implied_dense(self) -> np.ndarray:
        """Materialized B over all ``dim`` coordinates, for diagnostics only."""
        b = self.gamma * np.eye(self.dim)
        if self.size == 0:
            return b
        slots = self._slots
        q = np.hstack((self.gamma * self._s_rows[:, slots], self._y_rows[:, slots]))
        return b - q @ self.middle_inverse @ q.T
