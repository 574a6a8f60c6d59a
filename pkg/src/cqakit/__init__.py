"""cqakit: consistent query answering over inconsistent databases.

Computes database repairs and consistent answers three independent ways
(brute-force repair enumeration, cautious reasoning over disjunctive repair
programs under the stable-model semantics, and first-order rewriting for
functional dependencies), and emits the corresponding classical-logic
theories with bounded model checks tying them together.
"""

__version__ = "0.1.0"
