"""Constants shared by both kernel backends."""

# columns of the per-tick event counter matrix (n_firms, N_EVENTS)
RECEIVED = 0
REJECTED = 1  # order rate above total capacity
QUEUED = 2
STARTED = 3
FAILED = 4
COMPLETED = 5
DROPPED = 6  # queued order no longer fits total capacity when it reaches the head
OVERFLOW = 7  # queue full on arrival
N_EVENTS = 8

EVENT_NAMES = ("received", "rejected", "queued", "started", "failed", "completed", "dropped", "overflow")

# relative slack on factor comparisons, so a process sized exactly at capacity fits
TOL = 1e-12
