"""Pure-Python layered value iteration (fallback backend).

Same contract as the compiled kernel: finite-horizon bounded-reachability
values over a time-unfolded MDP whose actions carry integer durations
(0 for commands, n for collapsed idle runs).  Within one time layer states
are processed in an order where duration-0 successors come first.
"""

from array import array


def layered_curve(
    n_states,
    initial,
    target_mask,
    topo,
    act_ptr,
    act_dur,
    act_br_ptr,
    br_prob,
    br_dest,
    horizon,
    maximize,
):
    """Return curve[k] = optimal P(reach target within k ticks) for k = 0..horizon."""
    max_dur = 1
    for a in range(len(act_dur)):
        if act_dur[a] > max_dur:
            max_dur = act_dur[a]
    ring = max_dur + 1
    rows = [array("d", [0.0]) * n_states for _ in range(ring)]
    curve = array("d", [0.0]) * (horizon + 1)

    for k in range(horizon + 1):
        row = rows[k % ring]
        for s in topo:
            if target_mask[s]:
                row[s] = 1.0
                continue
            a0, a1 = act_ptr[s], act_ptr[s + 1]
            if a0 == a1:
                row[s] = 0.0
                continue
            best = -1.0 if maximize else 2.0
            for a in range(a0, a1):
                d = act_dur[a]
                if d > k:
                    val = 0.0
                else:
                    src = rows[(k - d) % ring]
                    val = 0.0
                    for b in range(act_br_ptr[a], act_br_ptr[a + 1]):
                        val += br_prob[b] * src[br_dest[b]]
                if maximize:
                    if val > best:
                        best = val
                else:
                    if val < best:
                        best = val
            row[s] = best
        curve[k] = row[initial]
    return curve
