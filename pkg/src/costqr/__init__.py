"""Cost-constrained greedy sensor placement via column-pivoted QR."""
