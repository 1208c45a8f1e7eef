"""Workload generator constants, frozen for cross-implementation use.

A hardware port of the self-checking workload must embed exactly these
values; any firmware that reproduces them bit-for-bit will agree with the
host on every golden value.  Bump GENERATOR_SPEC_VERSION on any change and
treat old recorded campaigns as incomparable across versions.

The generator is the xorshift64-star family: three xor-shift steps on a
64-bit state followed by a multiplicative output scramble.  The state
update is linear over GF(2) and bijective, which is what makes single-bit
corruption provably detectable at the final output (see workloads).
"""

from __future__ import annotations

GENERATOR_SPEC_VERSION = "1"

# Package version as stamped into output provenance lines.
TOOL_VERSION = "0.1.0"

# xorshift64-star shift triple and output multiplier.  The multiplier is
# odd, so the output map is a bijection of the 64-bit state.
XSHIFT_A = 12  # first stage:  x ^= x >> 12
XSHIFT_B = 25  # second stage: x ^= x << 25
XSHIFT_C = 27  # third stage:  x ^= x >> 27
OUTPUT_MULTIPLIER = 0x2545F4914F6CDD1D

MASK64 = (1 << 64) - 1

# All-zero state is the one fixed point of the state update; seeds must
# avoid it.
FORBIDDEN_SEED = 0

# Cost model for one generate-and-accumulate loop iteration on a cluster
# core, in clock cycles.  Chosen so the 50_000-item workload takes about
# 35 ms at 200 MHz.
DEFAULT_CYCLES_PER_ITEM = 140

# Default workload stream seed used by campaign configs.
DEFAULT_WORKLOAD_SEED = 1
