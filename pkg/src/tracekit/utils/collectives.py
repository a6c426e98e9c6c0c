"""
Ring algorithm factors for collectives.

The factor converts a message size into the bytes each rank moves on the wire
under a ring algorithm. Bandwidth metrics multiply by it to report bus bandwidth,
and the simulator's communication model uses the same numbers.
"""

from tracekit.trace.model import CollectiveKind


def bandwidth_factor(kind: CollectiveKind | str, group_size: int) -> float:
    """
    Algorithm factor used for bus bandwidth.

    AllReduce moves 2(N-1)/N of the message, AllGather and ReduceScatter (N-1)/N,
    every other kind 1. A single-member group moves nothing for the first three.

        Example:
            >>> bandwidth_factor("AllReduce", 8)
            1.75
            >>> bandwidth_factor("AllGather", 1)
            0.0
    """
    kind = CollectiveKind(kind)
    n = int(group_size)
    if kind == CollectiveKind.ALL_REDUCE:
        return 2 * (n - 1) / n if n > 1 else 0.0
    if kind in (CollectiveKind.ALL_GATHER, CollectiveKind.REDUCE_SCATTER):
        return (n - 1) / n if n > 1 else 0.0
    return 1.0


def ring_factor(kind: CollectiveKind | str, group_size: int) -> float:
    """
    Wire-traffic factor for the communication time model.

    Same as ``bandwidth_factor`` except AllToAll, where each rank exchanges the
    (N-1)/N share of its buffer that belongs to other ranks.
    """
    kind = CollectiveKind(kind)
    n = int(group_size)
    if n <= 1:
        return 0.0
    if kind == CollectiveKind.ALL_TO_ALL:
        return (n - 1) / n
    return bandwidth_factor(kind, n)
