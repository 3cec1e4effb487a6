# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled round loop; mirrors ``mgkit._kernel.simulate_python``."""

import numpy as np

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.stdint cimport int8_t, int64_t, uint64_t
from numpy.random cimport bitgen_t


def simulate(const int64_t[:, ::1] groups, const int64_t[::1] group_size,
             const int64_t[::1] agent_group, const int8_t[:, ::1] actions,
             const int64_t[::1] u0, long history0, long steps, int payoff_code,
             int64_t scale, int64_t N, object bit_generator):
    """Agents are given as ``groups`` (distinct ordered strategy-index rows)
    with ``agent_group[n]`` naming agent ``n``'s row."""
    cdef Py_ssize_t n_groups = groups.shape[0]
    cdef Py_ssize_t S = groups.shape[1]
    cdef Py_ssize_t n_agents = agent_group.shape[0]
    cdef Py_ssize_t K = actions.shape[0]
    cdef Py_ssize_t P = actions.shape[1]
    cdef long mask = P - 1

    utilities_arr = np.array(u0, dtype=np.int64, copy=True)
    scores_arr = np.zeros(P, dtype=np.int64)
    demand_arr = np.empty(steps, dtype=np.int64)
    minority_arr = np.empty(steps, dtype=np.int8)
    history_arr = np.empty(steps, dtype=np.int64)
    score_trace_arr = np.empty((steps, P), dtype=np.int64)
    ties_arr = np.empty(n_groups, dtype=np.int64)
    best_arr = np.empty(n_groups, dtype=np.int64)
    gact_arr = np.empty(n_groups, dtype=np.int64)

    cdef int64_t[::1] U = utilities_arr
    cdef int64_t[::1] G = scores_arr
    cdef int64_t[::1] demand = demand_arr
    cdef int8_t[::1] minority = minority_arr
    cdef int64_t[::1] history = history_arr
    cdef int64_t[:, ::1] score_trace = score_trace_arr
    cdef int64_t[::1] gties = ties_arr
    cdef int64_t[::1] gbest = best_arr
    cdef int64_t[::1] gact = gact_arr
    cdef int64_t first_id
    cdef bint mixed

    cdef bitgen_t *rng = <bitgen_t *> PyCapsule_GetPointer(bit_generator.capsule, "BitGenerator")

    cdef long mu = history0
    cdef Py_ssize_t t, n, s, k, h, gi
    cdef int64_t best, u, A, g
    cdef Py_ssize_t ties, pick, slot, seen
    cdef bint any_tie
    cdef int a_star
    cdef uint64_t raw

    with bit_generator.lock, nogil:
        for t in range(steps):
            history[t] = mu
            A = 0
            any_tie = False
            for gi in range(n_groups):
                best = U[groups[gi, 0]]
                ties = 1
                slot = 0
                for s in range(1, S):
                    u = U[groups[gi, s]]
                    if u > best:
                        best = u
                        ties = 1
                        slot = s
                    elif u == best:
                        ties += 1
                gbest[gi] = best
                gact[gi] = actions[groups[gi, slot], mu]
                mixed = False
                if ties > 1:
                    # a draw is needed only if the tied slots hold different ids
                    first_id = groups[gi, slot]
                    for s in range(slot + 1, S):
                        if U[groups[gi, s]] == best and groups[gi, s] != first_id:
                            mixed = True
                            break
                if mixed:
                    gties[gi] = ties
                    any_tie = True
                else:
                    gties[gi] = 1
                    A += group_size[gi] * gact[gi]
            if any_tie:
                # tie-break draws are taken in agent order
                for n in range(n_agents):
                    gi = agent_group[n]
                    ties = gties[gi]
                    if ties == 1:
                        continue
                    raw = rng.next_raw(rng.state)
                    if ties == 2:
                        pick = <Py_ssize_t> (raw & 1)
                    else:
                        pick = <Py_ssize_t> (raw % <uint64_t> ties)
                    if ties == S:
                        A += actions[groups[gi, pick], mu]
                        continue
                    seen = 0
                    slot = 0
                    for s in range(S):
                        if U[groups[gi, s]] == gbest[gi]:
                            if seen == pick:
                                slot = s
                                break
                            seen += 1
                    A += actions[groups[gi, slot], mu]
            if A > 0:
                a_star = -1
            elif A < 0:
                a_star = 1
            else:
                raw = rng.next_raw(rng.state)
                a_star = 1 if (raw & 1) else -1
            if payoff_code == 0:
                g = ((A > 0) - (A < 0)) * scale
            elif payoff_code == 1:
                g = A * scale
            else:
                g = A * scale / N
            if g != 0:
                for k in range(K):
                    U[k] -= actions[k, mu] * g
                G[mu] += g
            demand[t] = A
            minority[t] = a_star
            for h in range(P):
                score_trace[t, h] = G[h]
            mu = ((mu << 1) | (1 if a_star > 0 else 0)) & mask
    return demand_arr, minority_arr, history_arr, score_trace_arr
