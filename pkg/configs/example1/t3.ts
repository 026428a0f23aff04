# Loosened abstraction: q0's successor set covers both abstract states, so a
# uniform witness exists for every q in the preimage.  Also robust against the
# overlay {(x2, a, x1)} on t1.
states q0 q1
actions 1 2 3
props Initial Goal
q0 1 q0
q0 1 q1
q1 3 q0
q1 3 q1
q0 : Initial
q1 : Goal
